#include <doctest.h>

#include <cmath>

#include "controlgan/losses.hpp"
#include "controlgan/model.hpp"

using namespace controlgan;

namespace {

Tensor rand_batch(Rng& rng, const Shape& s, real_t lo = -1, real_t hi = 1) {
  std::vector<real_t> v(static_cast<size_t>(s.numel()));
  for (auto& e : v) e = rng.uniform_open(lo, hi);
  return Tensor(s, std::move(v));
}

bool bit_identical(const ParamSet& a, const ParamSet& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a.entries[i].first != b.entries[i].first) return false;
    if (a.entries[i].second.values() != b.entries[i].second.values()) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("head widths: discriminator 1, classifier label_dim") {
  ModelSpec d = ModelSpec::for_role(Role::discriminator, DataKind::vector);
  ModelSpec c = ModelSpec::for_role(Role::classifier, DataKind::vector);
  c.label_dim = 40;
  const ParamSet pd = build_model(d, 1);
  const ParamSet pc = build_model(c, 1);
  CHECK(pd.at("head.w").shape() == Shape{128, 1});
  CHECK(pc.at("head.w").shape() == Shape{128, 40});
}

TEST_CASE("full-scale generator produces 128x128x3 samples") {
  ModelSpec g = ModelSpec::for_role(Role::generator, DataKind::image);
  g.z_dim = 500;
  g.label_dim = 40;
  g.spatial_scale = 128;
  g.base_channels = 64;
  g.sample_channels = 3;
  const ParamSet params = build_model(g, 3);
  CHECK(params.total_params() == expected_param_count(g));

  Rng rng(5);
  const Tensor z = rand_batch(rng, Shape{1, 500});
  const Tensor l = rand_batch(rng, Shape{1, 40}, 0, 1);
  const Tensor out = generator_forward(g, params, z, l);
  CHECK(out.shape() == Shape{1, 3, 128, 128});
  for (real_t v : out.values()) REQUIRE(std::isfinite(v));
}

TEST_CASE("parameter sets are a pure function of spec and seed") {
  const ModelSpec g = ModelSpec::for_role(Role::generator, DataKind::vector);
  CHECK(bit_identical(build_model(g, 77), build_model(g, 77)));
  CHECK(!bit_identical(build_model(g, 77), build_model(g, 78)));
}

TEST_CASE("parameter count formula matches the builder") {
  for (DataKind kind : {DataKind::vector, DataKind::image}) {
    for (Role role : {Role::generator, Role::discriminator, Role::classifier}) {
      ModelSpec s = ModelSpec::for_role(role, kind);
      s.label_dim = 3;
      if (kind == DataKind::vector) s.spatial_scale = 2;
      CHECK(build_model(s, 9).total_params() == expected_param_count(s));
    }
  }
  ModelSpec cond = ModelSpec::for_role(Role::discriminator, DataKind::vector);
  cond.conditional = true;
  CHECK(build_model(cond, 9).total_params() == expected_param_count(cond));
  ModelSpec img = ModelSpec::for_role(Role::discriminator, DataKind::image);
  img.spatial_scale = 8;  // pooling bottoms out at side 1
  CHECK(build_model(img, 9).total_params() == expected_param_count(img));
}

TEST_CASE("generator: finiteness, determinism, batch shape, output range") {
  ModelSpec g = ModelSpec::for_role(Role::generator, DataKind::image);
  g.spatial_scale = 32;
  g.base_channels = 4;
  g.z_dim = 8;
  g.label_dim = 2;
  const ParamSet params = build_model(g, 21);

  const Tensor z0 = Tensor::zeros(Shape{1, 8});
  const Tensor l(Shape{1, 2}, {1, 0});
  const Tensor out = generator_forward(g, params, z0, l);
  for (real_t v : out.values()) {
    REQUIRE(std::isfinite(v));
    REQUIRE(v > -1);
    REQUIRE(v < 1);
  }

  const Tensor again = generator_forward(g, params, z0, l);
  CHECK(out.values() == again.values());

  Rng rng(3);
  const Tensor z16 = rand_batch(rng, Shape{16, 8});
  const Tensor l16 = rand_batch(rng, Shape{16, 2}, 0, 1);
  CHECK(generator_forward(g, params, z16, l16).shape() == Shape{16, 1, 32, 32});

  CHECK_THROWS_AS(generator_forward(g, params, Tensor::zeros(Shape{1, 9}), l), shape_error);
}

TEST_CASE("discriminator scores one sigmoid per sample") {
  ModelSpec d = ModelSpec::for_role(Role::discriminator, DataKind::vector);
  d.spatial_scale = 2;
  const ParamSet params = build_model(d, 4);
  Rng rng(8);
  Tensor x = rand_batch(rng, Shape{8, 2});
  const Tensor scores = discriminator_forward(d, params, x);
  CHECK(scores.shape() == Shape{8, 1});
  for (real_t s : scores.values()) {
    CHECK(s > 0);
    CHECK(s < 1);
  }

  // Duplicated sample -> duplicated score.
  auto vals = x.values();
  std::copy(vals.begin(), vals.begin() + 2, vals.begin() + 2);
  const Tensor dup(Shape{8, 2}, vals);
  const auto dup_scores = discriminator_forward(d, params, dup).values();
  CHECK(dup_scores[0] == dup_scores[1]);
}

TEST_CASE("classifier: head width and per-sample independence") {
  ModelSpec c = ModelSpec::for_role(Role::classifier, DataKind::vector);
  c.spatial_scale = 2;
  c.label_dim = 4;
  const ParamSet params = build_model(c, 10);
  Rng rng(2);
  const Tensor x = rand_batch(rng, Shape{5, 2});
  const Tensor probs = classifier_forward(c, params, x);
  CHECK(probs.shape() == Shape{5, 4});
  for (real_t p : probs.values()) {
    CHECK(p > 0);
    CHECK(p < 1);
  }

  // Reversing the batch reverses the rows.
  std::vector<real_t> rev;
  for (int i = 4; i >= 0; --i) {
    rev.insert(rev.end(), x.values().begin() + i * 2, x.values().begin() + (i + 1) * 2);
  }
  const auto p_rev = classifier_forward(c, params, Tensor(Shape{5, 2}, rev)).values();
  const auto& p = probs.values();
  for (int i = 0; i < 5; ++i) {
    for (int k = 0; k < 4; ++k) {
      CHECK(p_rev[static_cast<size_t>((4 - i) * 4 + k)] == p[static_cast<size_t>(i * 4 + k)]);
    }
  }
}

TEST_CASE("invalid specs are rejected with the violated invariant named") {
  ModelSpec s = ModelSpec::for_role(Role::generator, DataKind::image);
  s.spatial_scale = 12;
  CHECK_THROWS_WITH_AS(build_model(s, 1), doctest::Contains("power of two"), shape_error);
  s = ModelSpec::for_role(Role::generator, DataKind::vector);
  s.residual_counts = {2, 0, 2};
  CHECK_THROWS_WITH_AS(build_model(s, 1), doctest::Contains("residual_counts"), shape_error);
  s = ModelSpec::for_role(Role::generator, DataKind::vector);
  s.z_dim = 0;
  CHECK_THROWS_AS(build_model(s, 1), shape_error);
}

TEST_CASE("gradient reaches every trainable parameter") {
  // Vector mode, all three models chained the way a generator step is.
  ModelSpec g = ModelSpec::for_role(Role::generator, DataKind::vector);
  ModelSpec d = ModelSpec::for_role(Role::discriminator, DataKind::vector);
  ModelSpec c = ModelSpec::for_role(Role::classifier, DataKind::vector);
  ParamSet pg = build_model(g, 31);
  ParamSet pd = build_model(d, 32);
  ParamSet pc = build_model(c, 33);

  Rng rng(17);
  const Tensor z = rand_batch(rng, Shape{6, g.z_dim});
  const Tensor l(Shape{6, 2}, {0, 1, 1, 0, 1, 1, 0, 0, 1, 0, 0, 1});

  Tape tape;
  {
    Tape::Scope scope(tape);
    const Tensor fake = generator_forward(g, pg, z, l);
    const Tensor obj = add(add(binary_cross_entropy(1, discriminator_forward(d, pd, fake)),
                               multilabel_cross_entropy(l, classifier_forward(c, pc, fake))),
                           scale(mean_all(mul(fake, fake)), 1));
    pg.zero_grads();
    pd.zero_grads();
    pc.zero_grads();
    backward(obj);
  }
  for (const ParamSet* ps : {&pg, &pd, &pc}) {
    for (const auto& [name, t] : ps->entries) {
      REQUIRE(t.has_grad());
      bool any = false;
      for (real_t v : t.grad()) any = any || v != 0;
      INFO("parameter ", name);
      CHECK(any);
    }
  }
}

TEST_CASE("image-mode encoder handles scale 8 (pooling bottoms out)") {
  ModelSpec d = ModelSpec::for_role(Role::discriminator, DataKind::image);
  d.spatial_scale = 8;
  d.base_channels = 4;
  const ParamSet params = build_model(d, 12);
  Rng rng(9);
  const Tensor x = rand_batch(rng, Shape{2, 1, 8, 8});
  CHECK(discriminator_forward(d, params, x).shape() == Shape{2, 1});
}

#include <doctest.h>

#include <cmath>

#include "controlgan/losses.hpp"
#include "controlgan/trainer.hpp"

using namespace controlgan;

namespace {

struct Rig {
  ModelSpec spec_g, spec_d, spec_c;
  TrainConfig config;
  LabeledDataset data;

  explicit Rig(TrainMode mode = TrainMode::controlgan, uint64_t seed = 1) {
    SyntheticSpec s = SyntheticSpec::axes(2, 2);
    s.samples_per_combo = 64;
    s.noise_sigma = static_cast<real_t>(0.15);
    s.seed = 7;
    data = make_synthetic(s);

    config.mode = mode;
    config.seed = seed;
    config.batch_size = 16;
    config.iterations = 0;
    config.pretrain_epochs = 2;
    config.log_interval = 0;

    spec_g = ModelSpec::for_role(Role::generator, DataKind::vector);
    spec_d = ModelSpec::for_role(Role::discriminator, DataKind::vector);
    spec_c = ModelSpec::for_role(Role::classifier, DataKind::vector);
    for (ModelSpec* m : {&spec_g, &spec_d, &spec_c}) {
      m->spatial_scale = 2;
      m->base_channels = 8;
      m->z_dim = 8;
      m->label_dim = 2;
    }
    spec_d.conditional = mode == TrainMode::cgan;
  }

  TrainState fresh_state() const {
    if (config.mode == TrainMode::controlgan) {
      const ParamSet theta_c = pretrain_classifier(config, spec_c, data);
      return init_train_state(config, spec_g, spec_d, spec_c, &theta_c);
    }
    return init_train_state(config, spec_g, spec_d, ModelSpec{}, nullptr);
  }

  BatchStream::Batch batch() const {
    BatchStream stream(data, config.batch_size, 5);
    return stream.next();
  }
};

// Forces D(x) = sigmoid(0) = 0.5 for every input.
void zero_head(ParamSet& ps) {
  for (const char* name : {"head.w", "head.b"}) {
    for (auto& v : ps.at(name).values_mut()) v = 0;
  }
}

}  // namespace

TEST_CASE("update_gamma: arithmetic, fixed point, clamp at zero") {
  GammaState gs;
  gs.gamma = 1.0;
  gs.r = static_cast<real_t>(0.01);
  gs.e_target = static_cast<real_t>(0.5);
  gs = update_gamma(gs, static_cast<real_t>(0.7), 1.0);
  CHECK(gs.gamma == doctest::Approx(1.002).epsilon(1e-12));

  // lc_gen == E * lc_real is a fixed point.
  GammaState fp = gs;
  fp = update_gamma(fp, static_cast<real_t>(0.5) * static_cast<real_t>(0.8), static_cast<real_t>(0.8));
  CHECK(fp.gamma == gs.gamma);

  GammaState lo;
  lo.gamma = 0;
  lo.r = static_cast<real_t>(0.01);
  lo.e_target = 1.0;
  lo = update_gamma(lo, static_cast<real_t>(0.1), static_cast<real_t>(0.5));
  CHECK(lo.gamma == 0.0);  // raw update -0.004 clamps to 0

  CHECK_THROWS_AS(update_gamma(lo, -1, 0), std::invalid_argument);
}

TEST_CASE("measured_e_ratio over the history window") {
  GammaState gs;
  for (int i = 0; i < 10; ++i) gs = update_gamma(gs, static_cast<real_t>(0.4), static_cast<real_t>(0.4));
  CHECK(*measured_e_ratio(gs, 10) == doctest::Approx(1.0));

  GammaState half;
  for (int i = 0; i < 4; ++i) half = update_gamma(half, static_cast<real_t>(0.2), static_cast<real_t>(0.4));
  CHECK(*measured_e_ratio(half, 4) == doctest::Approx(0.5));

  CHECK_THROWS_WITH_AS(measured_e_ratio(half, 5), doctest::Contains("window"), std::invalid_argument);

  GammaState zero;
  zero = update_gamma(zero, 0, 0);
  CHECK(!measured_e_ratio(zero, 1).has_value());
}

TEST_CASE("gamma responds monotonically to persistent excess loss") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    GammaState gs;
    gs.gamma = rng.uniform_open(0, 2);
    gs.e_target = rng.uniform_open(static_cast<real_t>(0.05), 1);
    const real_t before = gs.gamma;
    for (int k = 0; k < 10; ++k) {
      const real_t lc_real = rng.uniform_open(static_cast<real_t>(0.1), 1);
      const real_t lc_gen = gs.e_target * lc_real + rng.uniform_open(0, 1);  // persistent excess
      gs = update_gamma(gs, lc_gen, lc_real);
    }
    CHECK(gs.gamma >= before);
  }
}

TEST_CASE("discriminator at score 0.5 yields total loss ln 2") {
  Rig rig;
  TrainState st = rig.fresh_state();
  zero_head(st.params_d);
  const auto batch = rig.batch();
  const auto losses = discriminator_step(st, rig.config, batch.samples, batch.labels);
  CHECK(losses.real_part == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(losses.fake_part == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(losses.total == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("alpha = 1 removes the fake term exactly") {
  Rig rig;
  TrainState st = rig.fresh_state();
  rig.config.alpha = 1.0;  // boundary case of the objective, past the config's open interval
  const auto batch = rig.batch();
  const auto losses = discriminator_step(st, rig.config, batch.samples, batch.labels);
  CHECK(losses.total == losses.real_part);
}

TEST_CASE("discriminator steps are deterministic") {
  Rig rig;
  TrainState a = rig.fresh_state();
  TrainState b = rig.fresh_state();
  const auto batch = rig.batch();
  for (int i = 0; i < 2; ++i) {
    discriminator_step(a, rig.config, batch.samples, batch.labels);
    discriminator_step(b, rig.config, batch.samples, batch.labels);
  }
  CHECK(a.params_d.value_checksum() == b.params_d.value_checksum());
}

TEST_CASE("step isolation: D steps leave G and C alone, G steps leave D and C alone") {
  Rig rig;
  TrainState st = rig.fresh_state();
  const auto batch = rig.batch();

  const uint64_t g0 = st.params_g.value_checksum();
  const uint64_t c0 = st.params_c.value_checksum();
  discriminator_step(st, rig.config, batch.samples, batch.labels);
  CHECK(st.params_g.value_checksum() == g0);
  CHECK(st.params_c.value_checksum() == c0);

  const uint64_t d0 = st.params_d.value_checksum();
  generator_step(st, rig.config, batch.labels);
  CHECK(st.params_d.value_checksum() == d0);
  CHECK(st.params_c.value_checksum() == c0);
}

TEST_CASE("generator step with gamma 0 equals a plain adversarial step") {
  Rig rig;
  TrainState a = rig.fresh_state();
  TrainState b = rig.fresh_state();
  a.gamma_state.gamma = 0;
  const auto batch = rig.batch();

  generator_step(a, rig.config, batch.labels);

  // Hand-rolled vanilla step on b with the same noise stream.
  {
    const Tensor z = sample_noise(b.rng, rig.config.batch_size, b.spec_g.z_dim);
    Tape tape;
    {
      Tape::Scope scope(tape);
      const Tensor fake = generator_forward(b.spec_g, b.params_g, z, batch.labels);
      const Tensor adv = binary_cross_entropy(rig.config.t_d,
                                              discriminator_forward(b.spec_d, b.params_d, fake));
      b.params_g.zero_grads();
      const auto only = b.params_g.tensors();
      backward(adv, only);
    }
    b.adam_g.apply(b.params_g);
  }
  CHECK(a.params_g.value_checksum() == b.params_g.value_checksum());
}

TEST_CASE("generator step returns nonnegative components") {
  Rig rig;
  TrainState st = rig.fresh_state();
  const auto batch = rig.batch();
  const auto losses = generator_step(st, rig.config, batch.labels);
  CHECK(losses.cls_part >= 0);
  CHECK(losses.adv_part >= 0);
}

TEST_CASE("generator objective decomposes into gamma-scaled parts") {
  Rig rig;
  TrainState st = rig.fresh_state();
  st.gamma_state.gamma = static_cast<real_t>(0.37);
  const auto batch = rig.batch();
  const Tensor z = sample_noise(st.rng, rig.config.batch_size, st.spec_g.z_dim);
  const Tensor& probe = st.params_g.at("fc.w");

  auto grad_of = [&](int which) {  // 0 combined, 1 cls, 2 adv
    Tape tape;
    Tape::Scope scope(tape);
    const Tensor fake = generator_forward(st.spec_g, st.params_g, z, batch.labels);
    const Tensor adv =
        binary_cross_entropy(rig.config.t_d, discriminator_forward(st.spec_d, st.params_d, fake));
    const Tensor cls =
        multilabel_cross_entropy(batch.labels, classifier_forward(st.spec_c, st.params_c, fake));
    const Tensor obj = which == 0 ? add(scale(cls, st.gamma_state.gamma), adv)
                                  : (which == 1 ? cls : adv);
    st.params_g.zero_grads();
    const auto only = st.params_g.tensors();
    backward(obj, only);
    return probe.grad();
  };

  const auto combined = grad_of(0);
  const auto cls = grad_of(1);
  const auto adv = grad_of(2);
  for (size_t i = 0; i < combined.size(); ++i) {
    CHECK(std::abs(combined[i] - (st.gamma_state.gamma * cls[i] + adv[i])) <= 1e-6);
  }
}

TEST_CASE("pretraining: separable task reaches low loss; zero epochs is identity") {
  Rig rig;
  const ParamSet trained = pretrain_classifier(rig.config, rig.spec_c, rig.data);
  // Training loss over the whole set after two epochs.
  const Tensor all_x = rig.data.sample_batch([&] {
    std::vector<int64_t> idx(static_cast<size_t>(rig.data.size()));
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int64_t>(i);
    return idx;
  }());
  std::vector<int64_t> idx(static_cast<size_t>(rig.data.size()));
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int64_t>(i);
  const Tensor all_l = rig.data.label_batch(idx);
  const real_t loss =
      multilabel_cross_entropy(all_l, classifier_forward(rig.spec_c, trained, all_x)).item();
  CHECK(loss < 0.1);

  TrainConfig zero = rig.config;
  zero.pretrain_epochs = 0;
  const ParamSet untouched = pretrain_classifier(zero, rig.spec_c, rig.data);
  const ParamSet reference = build_model(rig.spec_c, untouched.init_seed);
  CHECK(untouched.value_checksum() == reference.value_checksum());

  const ParamSet again = pretrain_classifier(rig.config, rig.spec_c, rig.data);
  CHECK(again.value_checksum() == trained.value_checksum());

  CHECK_THROWS_AS(pretrain_classifier(rig.config, rig.spec_c, LabeledDataset{}),
                  std::invalid_argument);
}

TEST_CASE("train: zero iterations returns the initial state unchanged") {
  Rig rig;
  const ParamSet theta_c = pretrain_classifier(rig.config, rig.spec_c, rig.data);
  TrainState st =
      train(rig.config, rig.data, theta_c, {}, rig.spec_g, rig.spec_d, rig.spec_c);
  const TrainState fresh = init_train_state(rig.config, rig.spec_g, rig.spec_d, rig.spec_c, &theta_c);
  CHECK(st.iteration == 0);
  CHECK(st.params_g.value_checksum() == fresh.params_g.value_checksum());
  CHECK(st.params_d.value_checksum() == fresh.params_d.value_checksum());
}

TEST_CASE("train: deterministic, classifier frozen, metrics emitted (100-iteration smoke)") {
  Rig rig;
  rig.config.iterations = 100;
  rig.config.log_interval = 10;
  const ParamSet theta_c = pretrain_classifier(rig.config, rig.spec_c, rig.data);
  const uint64_t c_before = theta_c.value_checksum();

  std::vector<MetricsRecord> records;
  TrainCallbacks cb;
  cb.on_metrics = [&](const MetricsRecord& r) { records.push_back(r); };

  TrainState a = train(rig.config, rig.data, theta_c, cb, rig.spec_g, rig.spec_d, rig.spec_c);
  TrainState b = train(rig.config, rig.data, theta_c, {}, rig.spec_g, rig.spec_d, rig.spec_c);

  CHECK(a.params_g.value_checksum() == b.params_g.value_checksum());
  CHECK(a.params_d.value_checksum() == b.params_d.value_checksum());
  CHECK(a.params_c.value_checksum() == c_before);   // frozen
  CHECK(theta_c.value_checksum() == c_before);      // caller copy untouched
  CHECK(a.iteration == 100);
  CHECK(records.size() == 10);
  CHECK(records.back().iteration == 100);
  CHECK(records.back().measured_e.has_value());
  CHECK(a.gamma_state.history.size() == 100);
}

TEST_CASE("cgan baseline: no classifier evaluations, same metric schema") {
  Rig rig(TrainMode::cgan);
  rig.config.iterations = 30;
  rig.config.log_interval = 10;
  std::vector<MetricsRecord> records;
  TrainCallbacks cb;
  cb.on_metrics = [&](const MetricsRecord& r) { records.push_back(r); };
  TrainState st = train_cgan_baseline(rig.config, rig.data, cb, rig.spec_g, rig.spec_d);
  CHECK(st.classifier_evals == 0);
  CHECK(st.iteration == 30);
  REQUIRE(records.size() == 3);
  CHECK(records[0].loss_g_cls == 0.0);
  CHECK(records[0].gamma == 0.0);
  CHECK(std::isnan(records[0].lc_real));
  CHECK(!records[0].measured_e.has_value());

  TrainState again = train_cgan_baseline(rig.config, rig.data, {}, rig.spec_g, rig.spec_d);
  CHECK(st.params_g.value_checksum() == again.params_g.value_checksum());
}

TEST_CASE("train aborts with a checkpoint callback on non-finite losses") {
  Rig rig;
  rig.config.iterations = 5;
  const ParamSet theta_c = pretrain_classifier(rig.config, rig.spec_c, rig.data);
  TrainState st = init_train_state(rig.config, rig.spec_g, rig.spec_d, rig.spec_c, &theta_c);
  st.params_d.at("fc1.w").values_mut()[0] = std::numeric_limits<real_t>::quiet_NaN();

  bool checkpointed = false;
  TrainCallbacks cb;
  cb.on_checkpoint = [&](const TrainState&) { checkpointed = true; };
  CHECK_THROWS_AS(train_loop(st, rig.config, rig.data, cb), numeric_abort);
  CHECK(checkpointed);
}

TEST_CASE("config validation rejects out-of-range fields") {
  TrainConfig c;
  c.alpha = 0;
  CHECK_THROWS_AS(c.validate(), config_error);
  c = TrainConfig{};
  c.e_target = 0;
  CHECK_THROWS_AS(c.validate(), config_error);
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), config_error);
}

// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Several criteria train full models; the whole suite is minutes
// of CPU time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "controlgan/checkpoint.hpp"
#include "controlgan/cli.hpp"
#include "controlgan/evaluate.hpp"
#include "controlgan/gradcheck.hpp"
#include "controlgan/losses.hpp"

using namespace controlgan;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
  std::printf("%-3s %s  %s\n", id.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---- the shared synthetic task ----
// 2-D features, 2 binary labels along orthogonal unit directions,
// noise_sigma 0.15, 2000 samples per label combination (8000 total).

constexpr real_t kNoiseSigma = static_cast<real_t>(0.15);
constexpr int kSamplesPerCombo = 2000;
constexpr uint64_t kDataSeed = 99;
constexpr int64_t kA2Iterations = 5000;
constexpr int64_t kBudgetIterations = 2500;  // A3/A4 comparison budget
constexpr uint64_t kOracleSeed = 7777;
const std::vector<uint64_t> kSeeds{101, 102, 103};

LabeledDataset the_task() {
  SyntheticSpec spec = SyntheticSpec::axes(2, 2);
  spec.noise_sigma = kNoiseSigma;
  spec.samples_per_combo = kSamplesPerCombo;
  spec.seed = kDataSeed;
  return make_synthetic(spec);
}

struct Specs {
  ModelSpec g, d, c;
};

Specs specs_for(TrainMode mode) {
  Specs s;
  s.g = ModelSpec::for_role(Role::generator, DataKind::vector);
  s.d = ModelSpec::for_role(Role::discriminator, DataKind::vector);
  s.c = ModelSpec::for_role(Role::classifier, DataKind::vector);
  for (ModelSpec* m : {&s.g, &s.d, &s.c}) {
    m->spatial_scale = 2;
    m->base_channels = 16;
    m->z_dim = 32;
    m->label_dim = 2;
  }
  s.d.conditional = mode == TrainMode::cgan;
  return s;
}

TrainConfig base_config(TrainMode mode, uint64_t seed, real_t e_target, int64_t iterations) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.seed = seed;
  cfg.e_target = e_target;
  cfg.batch_size = 64;
  cfg.iterations = iterations;
  cfg.pretrain_epochs = 2;
  cfg.log_interval = 0;
  return cfg;
}

struct RunResult {
  TrainState state;
  double seconds = 0;
};

RunResult run_training(TrainMode mode, uint64_t seed, real_t e_target, int64_t iterations,
                       const LabeledDataset& data) {
  const Specs sp = specs_for(mode);
  const TrainConfig cfg = base_config(mode, seed, e_target, iterations);
  const auto t0 = std::chrono::steady_clock::now();
  RunResult out;
  if (mode == TrainMode::controlgan) {
    const ParamSet theta_c = pretrain_classifier(cfg, sp.c, data);
    out.state = train(cfg, data, theta_c, {}, sp.g, sp.d, sp.c);
  } else {
    out.state = train_cgan_baseline(cfg, data, {}, sp.g, sp.d);
  }
  out.seconds = seconds_since(t0);
  return out;
}

std::vector<LabelVector> all_combos() {
  return {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
}

}  // namespace

// A1: every primitive and both losses pass central finite-difference checks
// at 64-bit, 20 random trials each, within 1e-4 relative (1e-7 floor).
void criterion_a1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = run_gradient_checks(20260810, 20);
  double worst = 0;
  bool pass = sizeof(real_t) == 8;
  std::string worst_name;
  for (const auto& r : rows) {
    if (r.max_rel_err > worst) {
      worst = r.max_rel_err;
      worst_name = r.name;
    }
    pass = pass && r.pass;
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < 60.0;
  report("A1", pass,
         std::to_string(rows.size()) + " rows, worst rel err " + fmt(worst) + " (" + worst_name +
             "), runtime " + fmt(secs) + "s (< 60s)");
}

// A2: measured E over the final 500 iterations lands in the stated bands.
void criterion_a2(const LabeledDataset& data, TrainState& e005_state_out) {
  const auto r050 = run_training(TrainMode::controlgan, kSeeds[0], static_cast<real_t>(0.5),
                                 kA2Iterations, data);
  const auto e050 = measured_e_ratio(r050.state.gamma_state, 500);
  const bool p050 = e050 && *e050 >= 0.4 && *e050 <= 0.6 && r050.seconds < 600;

  const auto r005 = run_training(TrainMode::controlgan, kSeeds[0], static_cast<real_t>(0.05),
                                 kA2Iterations, data);
  const auto e005 = measured_e_ratio(r005.state.gamma_state, 500);
  const bool p005 = e005 && *e005 >= 0.03 && *e005 <= 0.10 && r005.seconds < 600;

  e005_state_out = r005.state;
  report("A2", p050 && p005,
         "E=0.5 -> measured " + (e050 ? fmt(*e050) : "undef") + " in [0.4,0.6] (" +
             fmt(r050.seconds) + "s); E=0.05 -> measured " + (e005 ? fmt(*e005) : "undef") +
             " in [0.03,0.10] (" + fmt(r005.seconds) + "s)");
}

// A3 + A4 share one grid of runs: per seed, ControlGAN at E in
// {1.0, 0.5, 0.05} plus the cGAN baseline, identical budget.
void criteria_a3_a4(const LabeledDataset& data) {
  const ModelSpec oracle_spec = specs_for(TrainMode::controlgan).c;
  const OracleResult oracle = train_oracle(data, oracle_spec, kOracleSeed);

  int a3_hits = 0, a4_hits = 0;
  std::string a3_detail, a4_detail;
  for (uint64_t seed : kSeeds) {
    std::map<double, FidelityResult> by_e;
    for (real_t e : {static_cast<real_t>(1.0), static_cast<real_t>(0.5), static_cast<real_t>(0.05)}) {
      const auto run = run_training(TrainMode::controlgan, seed, e, kBudgetIterations, data);
      by_e[e] = label_fidelity(specs_for(TrainMode::controlgan).g, run.state.params_g,
                               oracle_spec, oracle.params, all_combos(), 250, seed + 13);
    }
    const auto cgan = run_training(TrainMode::cgan, seed, static_cast<real_t>(0.5),
                                   kBudgetIterations, data);
    const FidelityResult cg_fid =
        label_fidelity(specs_for(TrainMode::cgan).g, cgan.state.params_g, oracle_spec,
                       oracle.params, all_combos(), 250, seed + 13);

    const FidelityResult& focused = by_e[0.05];
    const bool a3 = focused.oracle_accuracy >= 0.90 && focused.oracle_accuracy > cg_fid.oracle_accuracy;
    const bool a4 = by_e[1.0].oracle_loss >= by_e[0.5].oracle_loss &&
                    by_e[0.5].oracle_loss >= by_e[0.05].oracle_loss;
    a3_hits += a3 ? 1 : 0;
    a4_hits += a4 ? 1 : 0;
    a3_detail += " s" + std::to_string(seed) + ": cg=" + fmt(focused.oracle_accuracy) +
                 " cgan=" + fmt(cg_fid.oracle_accuracy) + (a3 ? " ok" : " MISS") + ";";
    a4_detail += " s" + std::to_string(seed) + ": " + fmt(by_e[1.0].oracle_loss) + ">=" +
                 fmt(by_e[0.5].oracle_loss) + ">=" + fmt(by_e[0.05].oracle_loss) +
                 (a4 ? " ok" : " MISS") + ";";
  }
  report("A3", a3_hits >= 2, std::to_string(a3_hits) + "/3 seeds:" + a3_detail);
  report("A4", a4_hits >= 2, std::to_string(a4_hits) + "/3 seeds:" + a4_detail);
}

// A5: sweep after A2's E=0.05 run; Spearman(value, projection) >= 0.9 and
// the projection at -1 lies strictly below the projection at 0.
void criterion_a5(const LabeledDataset& data, const TrainState& e005_state) {
  SweepSpec sw;
  sw.label_index = 0;
  sw.values = {-1, -0.5, 0, 0.5, 1, 2, 3};
  sw.n_z = 256;
  sw.seed = 404;
  const auto points = sweep(e005_state.spec_g, e005_state.params_g, sw, &*data.synthetic);
  std::vector<real_t> vals, projs;
  real_t at_m1 = 0, at_0 = 0;
  for (const auto& pt : points) {
    vals.push_back(pt.value);
    projs.push_back(*pt.mean_projection);
    if (pt.value == -1) at_m1 = *pt.mean_projection;
    if (pt.value == 0) at_0 = *pt.mean_projection;
  }
  const double rho = spearman_rank_correlation(vals, projs);
  const bool pass = rho >= 0.9 && at_m1 < at_0;
  std::string detail = "spearman=" + fmt(rho) + ", proj(-1)=" + fmt(at_m1) +
                       " < proj(0)=" + fmt(at_0) + "; projections:";
  for (size_t i = 0; i < vals.size(); ++i) {
    detail += " " + fmt(vals[i]) + "->" + fmt(projs[i]);
  }
  report("A5", pass, detail);
}

// A6: exact-arithmetic unit values for the controller, both losses, and the
// first Adam step.
void criterion_a6() {
  bool pass = true;
  std::string detail;

  GammaState gs;
  gs.gamma = 1.0;
  gs.r = static_cast<real_t>(0.01);
  gs.e_target = static_cast<real_t>(0.5);
  gs = update_gamma(gs, static_cast<real_t>(0.7), 1.0);
  pass = pass && std::abs(gs.gamma - 1.002) <= 1e-6;

  GammaState clampcase;
  clampcase.gamma = 0;
  clampcase.r = static_cast<real_t>(0.01);
  clampcase.e_target = 1.0;
  clampcase = update_gamma(clampcase, static_cast<real_t>(0.1), static_cast<real_t>(0.5));
  pass = pass && clampcase.gamma == 0.0;

  pass = pass && std::abs(binary_cross_entropy(1, Tensor::scalar(0.5)).item() - std::log(2.0)) <= 1e-6;
  const Tensor batch(Shape{2, 1}, {static_cast<real_t>(0.9), static_cast<real_t>(0.8)});
  pass = pass && std::abs(binary_cross_entropy(1, batch).item() - 0.16425203) <= 1e-6;

  const Tensor l(Shape{1, 2}, {1, 0});
  const Tensor p(Shape{1, 2}, {static_cast<real_t>(0.5), static_cast<real_t>(0.5)});
  pass = pass && std::abs(multilabel_cross_entropy(l, p).item() - std::log(2.0)) <= 1e-6;
  const Tensor l4(Shape{1, 4}, {1, 1, 0, 0});
  const Tensor p4(Shape{1, 4}, {static_cast<real_t>(0.9), static_cast<real_t>(0.9),
                                static_cast<real_t>(0.1), static_cast<real_t>(0.1)});
  pass = pass && std::abs(multilabel_cross_entropy(l4, p4).item() + std::log(0.9)) <= 1e-6;

  ParamSet ps;
  ps.add("w", Tensor::scalar(1.0));
  AdamState adam = AdamState::init(ps, static_cast<real_t>(1e-3));
  ps.at("w").grad_accum()[0] = 1.0;
  adam.apply(ps);
  const double expected = 1.0 - 1e-3 / (1.0 + 1e-8);
  pass = pass && std::abs(ps.at("w").values()[0] - expected) <= 1e-6;

  report("A6", pass, "gamma update, clamp, both losses, Adam first step all within 1e-6");
}

// A7: byte-identical checkpoints and metrics across identical runs and
// across an interrupt/resume split.
void criterion_a7() {
  const fs::path dir = fs::temp_directory_path() / "cg_acceptance_a7";
  fs::remove_all(dir);
  fs::create_directories(dir);

  std::ostringstream cfg;
  cfg << "mode=controlgan\nseed=11\nbatch_size=32\niterations=600\npretrain_epochs=1\n"
      << "log_interval=50\ncheckpoint_interval=0\nmodel.kind=vector\nmodel.base_channels=8\n"
      << "model.z_dim=16\ndata.kind=synthetic\ndata.dim=2\ndata.label_dim=2\n"
      << "data.samples_per_combo=200\ndata.seed=5\n";
  const std::string cfg_path = (dir / "run.cfg").string();
  {
    std::ofstream f(cfg_path);
    f << cfg.str();
  }

  auto file_bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  PretrainOptions pre;
  pre.config_path = cfg_path;
  pre.out_path = (dir / "c.ckpt").string();
  bool pass = cmd_pretrain(pre) == kExitOk;

  auto run = [&](const std::string& out, std::optional<int64_t> iters, bool resume) {
    TrainOptions t;
    t.config_path = cfg_path;
    t.classifier_path = pre.out_path;
    t.out_dir = (dir / out).string();
    t.iterations = iters;
    t.resume = resume;
    return cmd_train(t) == kExitOk;
  };

  pass = pass && run("a", std::nullopt, false);
  pass = pass && run("b", std::nullopt, false);
  const bool ckpt_equal =
      file_bytes(dir / "a" / "final.ckpt") == file_bytes(dir / "b" / "final.ckpt");
  const bool metrics_equal =
      file_bytes(dir / "a" / "metrics.csv") == file_bytes(dir / "b" / "metrics.csv");

  pass = pass && run("c", 300, false);
  pass = pass && run("c", 600, true);
  const bool resume_ckpt =
      file_bytes(dir / "a" / "final.ckpt") == file_bytes(dir / "c" / "final.ckpt");
  const bool resume_metrics =
      file_bytes(dir / "a" / "metrics.csv") == file_bytes(dir / "c" / "metrics.csv");

  pass = pass && ckpt_equal && metrics_equal && resume_ckpt && resume_metrics;
  report("A7", pass,
         std::string("repeat: ckpt ") + (ckpt_equal ? "ok" : "DIFF") + ", metrics " +
             (metrics_equal ? "ok" : "DIFF") + "; resume: ckpt " + (resume_ckpt ? "ok" : "DIFF") +
             ", metrics " + (resume_metrics ? "ok" : "DIFF"));
  fs::remove_all(dir);
}

// A8: frozen-classifier and step-isolation structural checks on a
// 100-iteration smoke run.
void criterion_a8(const LabeledDataset& data) {
  const Specs sp = specs_for(TrainMode::controlgan);
  TrainConfig cfg = base_config(TrainMode::controlgan, 5, static_cast<real_t>(0.5), 100);
  const ParamSet theta_c = pretrain_classifier(cfg, sp.c, data);
  const uint64_t c_before = theta_c.value_checksum();

  TrainState st = init_train_state(cfg, sp.g, sp.d, sp.c, &theta_c);
  BatchStream stream(data, cfg.batch_size, 1);

  // Step isolation checked directly on single steps.
  const auto batch = stream.next();
  const uint64_t g0 = st.params_g.value_checksum();
  discriminator_step(st, cfg, batch.samples, batch.labels);
  const bool d_isolated = st.params_g.value_checksum() == g0 &&
                          st.params_c.value_checksum() == c_before;
  const uint64_t d0 = st.params_d.value_checksum();
  generator_step(st, cfg, batch.labels);
  const bool g_isolated = st.params_d.value_checksum() == d0 &&
                          st.params_c.value_checksum() == c_before;

  TrainState full = train(cfg, data, theta_c, {}, sp.g, sp.d, sp.c);
  const bool frozen = full.params_c.value_checksum() == c_before &&
                      theta_c.value_checksum() == c_before;
  report("A8", d_isolated && g_isolated && frozen,
         std::string("D-step isolation ") + (d_isolated ? "ok" : "FAIL") + ", G-step isolation " +
             (g_isolated ? "ok" : "FAIL") + ", classifier frozen over 100 iterations " +
             (frozen ? "ok" : "FAIL"));
}

int main() {
  std::printf("acceptance suite (scalar width %zu bytes)\n", sizeof(real_t));
  const auto t0 = std::chrono::steady_clock::now();
  const LabeledDataset data = the_task();

  criterion_a1();
  criterion_a6();
  criterion_a7();
  criterion_a8(data);

  TrainState e005_state;
  criterion_a2(data, e005_state);
  criterion_a5(data, e005_state);
  criteria_a3_a4(data);

  std::printf("total runtime %.1fs, %d failure(s)\n", seconds_since(t0), g_failures);
  return g_failures == 0 ? 0 : 1;
}

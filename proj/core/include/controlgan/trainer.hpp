#pragma once

#include <deque>
#include <functional>
#include <optional>

#include "controlgan/adam.hpp"
#include "controlgan/dataset.hpp"
#include "controlgan/model.hpp"

namespace controlgan {

enum class TrainMode : uint8_t { controlgan, cgan };

// State of the equilibrium controller. gamma weights the generator's
// classification term and is adapted each generator step:
//   gamma <- max(0, gamma + r * (lc_gen - e_target * lc_real))
// The target ratio e_target is the knob deciding how label-focused the
// generator is forced to be; small targets mean strong label pressure.
struct GammaState {
  real_t gamma = 0;
  real_t r = static_cast<real_t>(0.01);
  real_t e_target = static_cast<real_t>(0.5);
  size_t history_capacity = 4096;
  std::deque<std::pair<real_t, real_t>> history;  // (lc_gen, lc_real)
};

GammaState update_gamma(GammaState gs, real_t lc_gen, real_t lc_real);

// Windowed estimate of the achieved ratio: mean(lc_gen) / mean(lc_real)
// over the last `window` updates. Empty optional when the denominator
// vanishes; throws when the history is shorter than the window.
std::optional<real_t> measured_e_ratio(const GammaState& gs, int window);

struct TrainConfig {
  TrainMode mode = TrainMode::controlgan;
  uint64_t seed = 1;
  real_t alpha = static_cast<real_t>(0.5);  // real-vs-fake weight in the D objective
  real_t t_d = 1;                           // discriminator target for real samples
  real_t e_target = static_cast<real_t>(0.5);
  real_t r = static_cast<real_t>(0.01);
  real_t lr_main = static_cast<real_t>(2e-4);
  real_t lr_late = static_cast<real_t>(5e-5);
  int epochs_before_decay = 30;
  int64_t batch_size = 64;
  int64_t iterations = 5000;
  double pretrain_epochs = 2;  // fractional epochs allowed
  // Off by default: keep taking classifier steps on real batches during the
  // main loop instead of freezing after pre-training.
  bool simultaneous_classifier = false;
  int64_t log_interval = 50;
  int64_t checkpoint_interval = 0;  // 0 = no periodic checkpoints
  int metrics_window = 100;

  void validate() const;
};

struct TrainState {
  ModelSpec spec_g, spec_d, spec_c;
  ParamSet params_g, params_d, params_c;
  AdamState adam_g, adam_d, adam_c;
  GammaState gamma_state;
  int64_t iteration = 0;
  Rng rng;  // noise sampling stream
  // Diagnostics (not checkpointed).
  int64_t classifier_evals = 0;
};

// One row of the metrics stream.
struct MetricsRecord {
  int64_t iteration = 0;
  real_t loss_d_real = 0;
  real_t loss_d_fake = 0;
  real_t loss_g_adv = 0;
  real_t loss_g_cls = 0;
  real_t gamma = 0;
  real_t lc_real = 0;
  std::optional<real_t> measured_e;
};

struct TrainCallbacks {
  std::function<void(const MetricsRecord&)> on_metrics;
  std::function<void(const TrainState&)> on_checkpoint;
};

// Minimizes the classification loss on real data for
// config.pretrain_epochs; the returned parameters are what the main loop
// uses as the frozen classifier.
ParamSet pretrain_classifier(const TrainConfig& config, const ModelSpec& spec_c,
                             const LabeledDataset& data);

struct DiscStepLosses {
  real_t real_part = 0;
  real_t fake_part = 0;
  real_t total = 0;
};

// One Adam step on the discriminator against
// alpha * BCE(t_d, D(x)) + (1-alpha) * BCE(1-t_d, D(G(z,l))), with the
// generator output treated as a constant.
DiscStepLosses discriminator_step(TrainState& st, const TrainConfig& config,
                                  const Tensor& real_batch, const Tensor& labels);

struct GenStepLosses {
  real_t cls_part = 0;  // unweighted classification term
  real_t adv_part = 0;
};

// One Adam step on the generator against
// gamma * L_C(l, G(z,l)) + BCE(t_d, D(G(z,l))); discriminator and
// classifier parameters are left untouched.
GenStepLosses generator_step(TrainState& st, const TrainConfig& config,
                             const Tensor& labels);

// Fresh state with models built from (spec, seed)-derived seeds. theta_c is
// adopted as the frozen classifier in controlgan mode.
TrainState init_train_state(const TrainConfig& config, const ModelSpec& spec_g,
                            const ModelSpec& spec_d, const ModelSpec& spec_c,
                            const ParamSet* theta_c);

// Alternates one discriminator step and one generator step per batch,
// updating gamma after each generator step, until config.iterations.
// Resumable: continues from state.iteration.
void train_loop(TrainState& st, const TrainConfig& config, const LabeledDataset& data,
                const TrainCallbacks& callbacks);

TrainState train(const TrainConfig& config, const LabeledDataset& data,
                 const ParamSet& theta_c, const TrainCallbacks& callbacks,
                 const ModelSpec& spec_g, const ModelSpec& spec_d,
                 const ModelSpec& spec_c);

// Same loop without a classifier and without gamma; labels condition the
// discriminator head directly.
TrainState train_cgan_baseline(const TrainConfig& config, const LabeledDataset& data,
                               const TrainCallbacks& callbacks, const ModelSpec& spec_g,
                               const ModelSpec& spec_d);

}  // namespace controlgan

#include "controlgan/trainer.hpp"

#include <cmath>
#include <limits>

#include "controlgan/losses.hpp"

namespace controlgan {

namespace {

// Substream ids for everything derived from the run seed.
enum : uint64_t {
  kStreamParamsG = 1,
  kStreamParamsD = 2,
  kStreamParamsC = 3,
  kStreamPretrainBatches = 10,
  kStreamTrainBatches = 11,
  kStreamNoise = 12,
};

uint32_t derived_seed(uint64_t seed, uint64_t stream) {
  return static_cast<uint32_t>(Rng(seed).fork(stream).next_u64());
}

void check_finite(real_t v, const char* what, int64_t iteration) {
  if (!std::isfinite(v)) {
    throw numeric_abort(std::string(what) + " is not finite at iteration " +
                            std::to_string(iteration),
                        iteration);
  }
}

// Non-finite scores mean the run diverged; that is a numerical abort
// (checkpoint + exit 2), not a contract violation. Saturated-but-finite
// scores are left to the losses' clamp.
void check_scores(const Tensor& scores, const char* what, int64_t iteration) {
  for (real_t v : scores.values()) {
    if (!std::isfinite(v)) {
      throw numeric_abort(std::string(what) + " is not finite at iteration " +
                              std::to_string(iteration),
                          iteration);
    }
  }
}

real_t lr_for_iteration(const TrainConfig& cfg, int64_t iteration, int64_t per_epoch) {
  const int64_t epoch = iteration / per_epoch;
  return epoch < cfg.epochs_before_decay ? cfg.lr_main : cfg.lr_late;
}

}  // namespace

GammaState update_gamma(GammaState gs, real_t lc_gen, real_t lc_real) {
  if (lc_gen < 0 || lc_real < 0) {
    throw std::invalid_argument("update_gamma: losses must be nonnegative");
  }
  gs.gamma = std::max(real_t{0}, gs.gamma + gs.r * (lc_gen - gs.e_target * lc_real));
  gs.history.emplace_back(lc_gen, lc_real);
  while (gs.history.size() > gs.history_capacity) gs.history.pop_front();
  return gs;
}

std::optional<real_t> measured_e_ratio(const GammaState& gs, int window) {
  if (window < 1) throw std::invalid_argument("measured_e_ratio: window must be >= 1");
  if (static_cast<size_t>(window) > gs.history.size()) {
    throw std::invalid_argument("measured_e_ratio: window " + std::to_string(window) +
                                " exceeds history length " + std::to_string(gs.history.size()));
  }
  real_t gen = 0, real_sum = 0;
  const size_t start = gs.history.size() - static_cast<size_t>(window);
  for (size_t i = start; i < gs.history.size(); ++i) {
    gen += gs.history[i].first;
    real_sum += gs.history[i].second;
  }
  if (real_sum == 0) return std::nullopt;
  return gen / real_sum;
}

void TrainConfig::validate() const {
  if (!(alpha > 0 && alpha < 1)) throw config_error("train config: alpha must lie in (0,1)");
  if (!(t_d >= 0 && t_d <= 1)) throw config_error("train config: t_d must lie in [0,1]");
  if (e_target <= 0) throw config_error("train config: e_target must be > 0");
  if (r <= 0) throw config_error("train config: r must be > 0");
  if (lr_main <= 0 || lr_late <= 0) throw config_error("train config: learning rates must be > 0");
  if (epochs_before_decay < 0) throw config_error("train config: epochs_before_decay must be >= 0");
  if (batch_size < 1) throw config_error("train config: batch_size must be >= 1");
  if (iterations < 0) throw config_error("train config: iterations must be >= 0");
  if (pretrain_epochs < 0) throw config_error("train config: pretrain_epochs must be >= 0");
  if (log_interval < 0 || checkpoint_interval < 0) {
    throw config_error("train config: intervals must be >= 0");
  }
  if (metrics_window < 1) throw config_error("train config: metrics_window must be >= 1");
}

ParamSet pretrain_classifier(const TrainConfig& config, const ModelSpec& spec_c,
                             const LabeledDataset& data) {
  config.validate();
  if (data.size() == 0) throw std::invalid_argument("pretrain_classifier: empty dataset");
  for (const auto& l : data.labels) {
    for (real_t b : l) {
      if (b != 0 && b != 1) {
        throw std::invalid_argument("pretrain_classifier: training labels must be binary");
      }
    }
  }

  ParamSet params = build_model(spec_c, derived_seed(config.seed, kStreamParamsC));
  BatchStream stream(data, config.batch_size, Rng(config.seed).fork(kStreamPretrainBatches).next_u64());
  const int64_t iters =
      static_cast<int64_t>(std::llround(config.pretrain_epochs * static_cast<double>(stream.batches_per_epoch())));
  AdamState adam = AdamState::init(params, config.lr_main);
  const auto restrict_set = params.tensors();

  for (int64_t it = 0; it < iters; ++it) {
    const auto batch = stream.next();
    Tape tape;
    Tape::Scope scope(tape);
    const Tensor probs = classifier_forward(spec_c, params, batch.samples);
    check_scores(probs, "classifier probabilities (pre-training)", it);
    const Tensor loss = multilabel_cross_entropy(batch.labels, probs);
    check_finite(loss.item(), "classifier pre-training loss", it);
    params.zero_grads();
    backward(loss, restrict_set);
    adam.apply(params);
  }
  return params;
}

DiscStepLosses discriminator_step(TrainState& st, const TrainConfig& config,
                                  const Tensor& real_batch, const Tensor& labels) {
  const int64_t batch = real_batch.shape()[0];
  if (batch < 1) throw std::invalid_argument("discriminator_step: empty batch");

  // Generator output is a constant for this objective: forward untaped.
  const Tensor z = sample_noise(st.rng, batch, st.spec_g.z_dim);
  const Tensor fake = generator_forward(st.spec_g, st.params_g, z, labels);

  const bool conditional = st.spec_d.conditional;
  DiscStepLosses out;
  Tape tape;
  {
    Tape::Scope scope(tape);
    const Tensor p_real =
        discriminator_forward(st.spec_d, st.params_d, real_batch, conditional ? labels : Tensor{});
    const Tensor p_fake =
        discriminator_forward(st.spec_d, st.params_d, fake, conditional ? labels : Tensor{});
    check_scores(p_real, "discriminator score (real)", st.iteration);
    check_scores(p_fake, "discriminator score (fake)", st.iteration);
    const Tensor loss_real = binary_cross_entropy(config.t_d, p_real);
    const Tensor loss_fake = binary_cross_entropy(1 - config.t_d, p_fake);
    const Tensor total = add(scale(loss_real, config.alpha), scale(loss_fake, 1 - config.alpha));
    out.real_part = loss_real.item();
    out.fake_part = loss_fake.item();
    out.total = total.item();
    check_finite(out.total, "discriminator loss", st.iteration);

    st.params_d.zero_grads();
    const auto restrict_set = st.params_d.tensors();
    backward(total, restrict_set);
  }
  st.adam_d.apply(st.params_d);
  return out;
}

GenStepLosses generator_step(TrainState& st, const TrainConfig& config, const Tensor& labels) {
  const int64_t batch = labels.shape()[0];
  if (batch < 1) throw std::invalid_argument("generator_step: empty batch");

  const Tensor z = sample_noise(st.rng, batch, st.spec_g.z_dim);
  const bool conditional = st.spec_d.conditional;

  GenStepLosses out;
  Tape tape;
  {
    Tape::Scope scope(tape);
    const Tensor fake = generator_forward(st.spec_g, st.params_g, z, labels);
    const Tensor p_adv =
        discriminator_forward(st.spec_d, st.params_d, fake, conditional ? labels : Tensor{});
    check_scores(p_adv, "discriminator score (generator step)", st.iteration);
    const Tensor adv = binary_cross_entropy(config.t_d, p_adv);
    Tensor objective = adv;
    if (config.mode == TrainMode::controlgan) {
      const Tensor probs = classifier_forward(st.spec_c, st.params_c, fake);
      check_scores(probs, "classifier probabilities (generator step)", st.iteration);
      ++st.classifier_evals;
      const Tensor cls = multilabel_cross_entropy(labels, probs);
      out.cls_part = cls.item();
      objective = add(scale(cls, st.gamma_state.gamma), adv);
    }
    out.adv_part = adv.item();
    check_finite(out.adv_part, "generator adversarial loss", st.iteration);
    check_finite(out.cls_part, "generator classification loss", st.iteration);

    st.params_g.zero_grads();
    const auto restrict_set = st.params_g.tensors();
    backward(objective, restrict_set);
  }
  st.adam_g.apply(st.params_g);
  return out;
}

TrainState init_train_state(const TrainConfig& config, const ModelSpec& spec_g,
                            const ModelSpec& spec_d, const ModelSpec& spec_c,
                            const ParamSet* theta_c) {
  config.validate();
  TrainState st;
  st.spec_g = spec_g;
  st.spec_d = spec_d;
  st.spec_c = spec_c;
  st.params_g = build_model(spec_g, derived_seed(config.seed, kStreamParamsG));
  st.params_d = build_model(spec_d, derived_seed(config.seed, kStreamParamsD));
  if (config.mode == TrainMode::controlgan) {
    if (!theta_c) {
      throw std::invalid_argument("init_train_state: controlgan mode needs a pretrained classifier");
    }
    // Private copy: the caller keeps ownership of its tensors.
    st.params_c.init_seed = theta_c->init_seed;
    for (const auto& [name, t] : theta_c->entries) {
      st.params_c.entries.emplace_back(name, t.clone().set_trainable(true));
    }
    st.adam_c = AdamState::init(st.params_c, config.lr_main);
  }
  st.adam_g = AdamState::init(st.params_g, config.lr_main);
  st.adam_d = AdamState::init(st.params_d, config.lr_main);
  st.gamma_state.gamma = 0;  // controller starts as a plain GAN
  st.gamma_state.r = config.r;
  st.gamma_state.e_target = config.e_target;
  st.rng = Rng(config.seed).fork(kStreamNoise);
  return st;
}

void train_loop(TrainState& st, const TrainConfig& config, const LabeledDataset& data,
                const TrainCallbacks& callbacks) {
  config.validate();
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");

  BatchStream stream(data, config.batch_size, Rng(config.seed).fork(kStreamTrainBatches).next_u64());
  stream.seek(st.iteration);
  const int64_t per_epoch = stream.batches_per_epoch();

  try {
    while (st.iteration < config.iterations) {
      const real_t lr = lr_for_iteration(config, st.iteration, per_epoch);
      st.adam_g.lr = lr;
      st.adam_d.lr = lr;
      st.adam_c.lr = lr;

      const auto batch = stream.next();
      const DiscStepLosses dl = discriminator_step(st, config, batch.samples, batch.labels);
      const GenStepLosses gl = generator_step(st, config, batch.labels);

      real_t lc_real = std::numeric_limits<real_t>::quiet_NaN();
      if (config.mode == TrainMode::controlgan) {
        // Classification loss of the same real batch through the frozen
        // classifier; drives the controller's reference level.
        if (config.simultaneous_classifier) {
          Tape tape;
          Tape::Scope scope(tape);
          const Tensor probs = classifier_forward(st.spec_c, st.params_c, batch.samples);
          check_scores(probs, "classifier probabilities (real batch)", st.iteration);
          ++st.classifier_evals;
          const Tensor loss_c = multilabel_cross_entropy(batch.labels, probs);
          lc_real = loss_c.item();
          st.params_c.zero_grads();
          const auto restrict_set = st.params_c.tensors();
          backward(loss_c, restrict_set);
          st.adam_c.apply(st.params_c);
        } else {
          const Tensor probs = classifier_forward(st.spec_c, st.params_c, batch.samples);
          check_scores(probs, "classifier probabilities (real batch)", st.iteration);
          ++st.classifier_evals;
          lc_real = multilabel_cross_entropy(batch.labels, probs).item();
        }
        check_finite(lc_real, "real-batch classification loss", st.iteration);
        st.gamma_state = update_gamma(st.gamma_state, gl.cls_part, lc_real);
      }

      ++st.iteration;

      if (config.log_interval > 0 && st.iteration % config.log_interval == 0 &&
          callbacks.on_metrics) {
        MetricsRecord rec;
        rec.iteration = st.iteration;
        rec.loss_d_real = dl.real_part;
        rec.loss_d_fake = dl.fake_part;
        rec.loss_g_adv = gl.adv_part;
        rec.loss_g_cls = gl.cls_part;
        rec.gamma = st.gamma_state.gamma;
        rec.lc_real = lc_real;
        const int window = static_cast<int>(std::min<size_t>(
            static_cast<size_t>(config.metrics_window), st.gamma_state.history.size()));
        rec.measured_e = window > 0 ? measured_e_ratio(st.gamma_state, window) : std::nullopt;
        callbacks.on_metrics(rec);
      }
      if (config.checkpoint_interval > 0 && st.iteration % config.checkpoint_interval == 0 &&
          st.iteration < config.iterations && callbacks.on_checkpoint) {
        callbacks.on_checkpoint(st);
      }
    }
  } catch (const numeric_abort&) {
    if (callbacks.on_checkpoint) callbacks.on_checkpoint(st);
    throw;
  }
}

TrainState train(const TrainConfig& config, const LabeledDataset& data,
                 const ParamSet& theta_c, const TrainCallbacks& callbacks,
                 const ModelSpec& spec_g, const ModelSpec& spec_d, const ModelSpec& spec_c) {
  if (config.mode != TrainMode::controlgan) {
    throw config_error("train: config mode must be controlgan");
  }
  TrainState st = init_train_state(config, spec_g, spec_d, spec_c, &theta_c);
  train_loop(st, config, data, callbacks);
  return st;
}

TrainState train_cgan_baseline(const TrainConfig& config, const LabeledDataset& data,
                               const TrainCallbacks& callbacks, const ModelSpec& spec_g,
                               const ModelSpec& spec_d) {
  if (config.mode != TrainMode::cgan) {
    throw config_error("train_cgan_baseline: config mode must be cgan");
  }
  if (!spec_d.conditional) {
    throw config_error("train_cgan_baseline: discriminator spec must be conditional");
  }
  TrainState st = init_train_state(config, spec_g, spec_d, ModelSpec{}, nullptr);
  train_loop(st, config, data, callbacks);
  return st;
}

}  // namespace controlgan

#include "controlgan/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "controlgan/checkpoint.hpp"
#include "controlgan/evaluate.hpp"
#include "controlgan/gradcheck.hpp"
#include "controlgan/losses.hpp"

namespace controlgan {

namespace fs = std::filesystem;

namespace {

std::string fmt(real_t v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", static_cast<double>(v));
  return buf;
}

std::vector<real_t> parse_reals(const std::string& csv) {
  std::vector<real_t> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(static_cast<real_t>(std::stod(cell)));
  return out;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const numeric_abort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const io_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

constexpr char kMetricsHeader[] =
    "iteration,loss_d_real,loss_d_fake,loss_g_adv,loss_g_cls,gamma,lc_real,measured_e";

std::string metrics_row(const MetricsRecord& r) {
  std::string row = std::to_string(r.iteration);
  for (real_t v : {r.loss_d_real, r.loss_d_fake, r.loss_g_adv, r.loss_g_cls, r.gamma, r.lc_real}) {
    row += ",";
    row += fmt(v);
  }
  row += ",";
  row += r.measured_e ? fmt(*r.measured_e) : "nan";
  return row;
}

// On resume, drop metric rows past the checkpoint so the appended stream
// reproduces an uninterrupted run byte for byte.
void truncate_metrics(const std::string& path, int64_t keep_up_to) {
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  std::vector<std::string> kept;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      kept.push_back(line);
      first = false;
      continue;
    }
    if (line.empty()) continue;
    const int64_t iter = std::stoll(line.substr(0, line.find(',')));
    if (iter <= keep_up_to) kept.push_back(line);
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : kept) out << l << "\n";
}

std::string checkpoint_name(int64_t iteration) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ckpt_%08lld.ckpt", static_cast<long long>(iteration));
  return buf;
}

// final.ckpt when present, otherwise the highest-numbered periodic one.
std::optional<std::string> latest_checkpoint(const std::string& dir) {
  const fs::path final_path = fs::path(dir) / "final.ckpt";
  if (fs::exists(final_path)) return final_path.string();
  std::optional<std::string> best;
  int64_t best_iter = -1;
  if (!fs::is_directory(dir)) return std::nullopt;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    long long iter = -1;
    if (std::sscanf(name.c_str(), "ckpt_%lld.ckpt", &iter) == 1 && iter > best_iter) {
      best_iter = iter;
      best = entry.path().string();
    }
  }
  return best;
}

void check_classifier_matches(const ModelSpec& spec_c, const ParamSet& theta_c) {
  const ParamSet ref = build_model(spec_c, 0);
  if (ref.size() != theta_c.size()) {
    throw config_error("classifier checkpoint does not match the configured classifier (" +
                       std::to_string(theta_c.size()) + " tensors, expected " +
                       std::to_string(ref.size()) + ")");
  }
  for (size_t i = 0; i < ref.size(); ++i) {
    if (ref.entries[i].first != theta_c.entries[i].first ||
        !(ref.entries[i].second.shape() == theta_c.entries[i].second.shape())) {
      throw config_error("classifier checkpoint mismatch at parameter '" +
                         theta_c.entries[i].first + "'");
    }
  }
}

void write_samples_csv(const Tensor& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write samples: " + path);
  const int64_t n = samples.shape()[0];
  const int64_t dim = samples.numel() / n;
  for (int64_t d = 0; d < dim; ++d) out << (d ? "," : "") << "x" << d;
  out << "\n";
  const auto& v = samples.values();
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t d = 0; d < dim; ++d) {
      out << (d ? "," : "") << fmt(v[static_cast<size_t>(i * dim + d)]);
    }
    out << "\n";
  }
}

std::pair<int, int> grid_layout(int64_t n) {
  int rows = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  while (rows > 1 && n % rows != 0) --rows;
  return {rows, static_cast<int>(n / rows)};
}

}  // namespace

int cmd_pretrain(const PretrainOptions& opts) {
  return guarded([&] {
    FullConfig cfg = FullConfig::parse_file(opts.config_path);
    if (opts.seed) cfg.train.seed = *opts.seed;
    cfg.validate();
    const LabeledDataset data = cfg.load_dataset();
    const ModelSpec spec_c = cfg.spec_for(Role::classifier);
    const ParamSet theta_c = pretrain_classifier(cfg.train, spec_c, data);
    if (!opts.out_path.empty()) {
      save_classifier_checkpoint(opts.out_path, cfg, theta_c);
    }
    const auto [acc, loss] = classifier_score(spec_c, theta_c, data);
    std::cout << "pretrain: loss_c=" << fmt(loss) << " accuracy=" << fmt(acc) << "\n";
    return kExitOk;
  });
}

int cmd_train(const TrainOptions& opts) {
  return guarded([&] {
    FullConfig cfg = FullConfig::parse_file(opts.config_path);
    if (opts.seed) cfg.train.seed = *opts.seed;
    if (opts.iterations) cfg.train.iterations = *opts.iterations;
    if (opts.mode) {
      if (*opts.mode == "controlgan") cfg.train.mode = TrainMode::controlgan;
      else if (*opts.mode == "cgan") cfg.train.mode = TrainMode::cgan;
      else throw config_error("unknown --mode '" + *opts.mode + "'");
    }
    cfg.validate();

    const LabeledDataset data = cfg.load_dataset();
    const ModelSpec spec_g = cfg.spec_for(Role::generator);
    const ModelSpec spec_d = cfg.spec_for(Role::discriminator);
    const ModelSpec spec_c = cfg.spec_for(Role::classifier);

    fs::create_directories(opts.out_dir);
    const std::string metrics_path = (fs::path(opts.out_dir) / "metrics.csv").string();

    TrainState st;
    bool resumed = false;
    if (opts.resume) {
      const auto latest = latest_checkpoint(opts.out_dir);
      if (latest) {
        LoadedCheckpoint loaded = load_checkpoint(*latest);
        if (loaded.kind != CheckpointKind::full) {
          throw config_error("cannot resume from a classifier-only checkpoint: " + *latest);
        }
        st = std::move(loaded.state);
        resumed = true;
        std::cout << "resuming from " << *latest << " at iteration " << st.iteration << "\n";
      }
    }
    if (!resumed) {
      if (cfg.train.mode == TrainMode::controlgan) {
        if (opts.classifier_path.empty()) {
          throw config_error("mode=controlgan requires --classifier <checkpoint>");
        }
        LoadedCheckpoint loaded = load_checkpoint(opts.classifier_path);
        ParamSet theta_c = loaded.kind == CheckpointKind::classifier
                               ? std::move(loaded.classifier)
                               : std::move(loaded.state.params_c);
        check_classifier_matches(spec_c, theta_c);
        st = init_train_state(cfg.train, spec_g, spec_d, spec_c, &theta_c);
      } else {
        if (!opts.classifier_path.empty()) {
          std::cerr << "warning: --classifier is ignored in cgan mode\n";
        }
        st = init_train_state(cfg.train, spec_g, spec_d, ModelSpec{}, nullptr);
      }
    }

    if (resumed) {
      truncate_metrics(metrics_path, st.iteration);
    } else {
      std::ofstream m(metrics_path, std::ios::trunc);
      m << kMetricsHeader << "\n";
    }
    std::ofstream metrics(metrics_path, std::ios::app);
    if (!metrics) throw io_error("cannot write metrics: " + metrics_path);

    TrainCallbacks callbacks;
    callbacks.on_metrics = [&](const MetricsRecord& r) { metrics << metrics_row(r) << "\n"; };
    callbacks.on_checkpoint = [&](const TrainState& s) {
      save_checkpoint((fs::path(opts.out_dir) / checkpoint_name(s.iteration)).string(), cfg, s);
    };

    try {
      train_loop(st, cfg.train, data, callbacks);
    } catch (const numeric_abort&) {
      metrics.flush();
      throw;
    }

    metrics.flush();
    save_checkpoint((fs::path(opts.out_dir) / "final.ckpt").string(), cfg, st);
    std::cout << "trained to iteration " << st.iteration << "; final checkpoint in "
              << opts.out_dir << "\n";
    return kExitOk;
  });
}

int cmd_generate(const GenerateOptions& opts) {
  return guarded([&] {
    LoadedCheckpoint loaded = load_checkpoint(opts.checkpoint_path);
    if (loaded.kind != CheckpointKind::full) {
      throw config_error("generate needs a full training checkpoint");
    }
    const FullConfig& cfg = loaded.config;
    const ModelSpec spec_g = cfg.spec_for(Role::generator);

    const std::vector<real_t> label = parse_reals(opts.labels);
    if (static_cast<int>(label.size()) != spec_g.label_dim) {
      throw config_error("--labels has " + std::to_string(label.size()) +
                         " entries, expected label_dim=" + std::to_string(spec_g.label_dim));
    }
    if (opts.count < 1) throw config_error("--count must be >= 1");

    Rng rng(opts.seed);
    const Tensor z = sample_noise(rng, opts.count, spec_g.z_dim);
    std::vector<real_t> lv;
    for (int64_t i = 0; i < opts.count; ++i) lv.insert(lv.end(), label.begin(), label.end());
    const Tensor lb = Tensor(Shape{opts.count, spec_g.label_dim}, std::move(lv));
    const Tensor samples = generator_forward(spec_g, loaded.state.params_g, z, lb);

    if (spec_g.kind == DataKind::image) {
      const auto [rows, cols] = grid_layout(opts.count);
      emit_grid(samples, rows, cols, opts.out_path);
    } else {
      write_samples_csv(samples, opts.out_path);
    }
    std::cout << "wrote " << opts.count << " samples to " << opts.out_path << "\n";
    return kExitOk;
  });
}

int cmd_sweep(const SweepOptions& opts) {
  return guarded([&] {
    LoadedCheckpoint loaded = load_checkpoint(opts.checkpoint_path);
    if (loaded.kind != CheckpointKind::full) {
      throw config_error("sweep needs a full training checkpoint");
    }
    const FullConfig& cfg = loaded.config;
    const ModelSpec spec_g = cfg.spec_for(Role::generator);

    SweepSpec sw;
    sw.label_index = opts.label_index;
    if (!opts.values.empty()) sw.values = parse_reals(opts.values);
    sw.n_z = opts.n_z > 0 ? opts.n_z : (spec_g.kind == DataKind::image ? 8 : 64);
    sw.seed = opts.seed;
    sw.validate(spec_g.label_dim);

    std::optional<SyntheticDescriptor> desc;
    if (cfg.data.kind == DataConfig::Kind::synthetic) {
      desc = make_synthetic(cfg.synthetic_spec()).synthetic;
    }
    const auto points = sweep(spec_g, loaded.state.params_g, sw, desc ? &*desc : nullptr);

    fs::create_directories(opts.out_dir);
    if (desc) {
      std::ofstream proj((fs::path(opts.out_dir) / "sweep_projections.csv").string());
      proj << "value,mean_projection\n";
      for (const auto& pt : points) {
        proj << fmt(pt.value) << "," << fmt(*pt.mean_projection) << "\n";
      }
      // Wide layout: one column per swept value, one row per noise draw.
      std::ofstream wide((fs::path(opts.out_dir) / "sweep_samples.csv").string());
      for (size_t j = 0; j < points.size(); ++j) wide << (j ? "," : "") << "v_" << fmt(points[j].value);
      wide << "\n";
      for (int i = 0; i < sw.n_z; ++i) {
        for (size_t j = 0; j < points.size(); ++j) {
          wide << (j ? "," : "") << fmt(points[j].projections[static_cast<size_t>(i)]);
        }
        wide << "\n";
      }
    }
    if (spec_g.kind == DataKind::image) {
      // One column per value, same z along each row.
      const int rows = sw.n_z;
      const int cols = static_cast<int>(points.size());
      const Shape one = points[0].samples.shape();
      std::vector<real_t> tiles;
      tiles.reserve(static_cast<size_t>(rows * cols) * static_cast<size_t>(one.numel() / one[0]));
      const int64_t per = one.numel() / one[0];
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
          const auto& v = points[static_cast<size_t>(j)].samples.values();
          tiles.insert(tiles.end(), v.begin() + i * per, v.begin() + (i + 1) * per);
        }
      }
      Shape grid_shape = one;
      grid_shape.d[0] = static_cast<int64_t>(rows) * cols;
      const std::string ext = spec_g.sample_channels == 3 ? ".ppm" : ".pgm";
      emit_grid(Tensor(grid_shape, std::move(tiles)), rows, cols,
                (fs::path(opts.out_dir) / ("sweep_grid" + ext)).string());
    }
    std::cout << "sweep over " << points.size() << " values written to " << opts.out_dir << "\n";
    return kExitOk;
  });
}

int cmd_gradcheck(uint64_t seed) {
  return guarded([&] {
    const auto rows = run_gradient_checks(seed);
    std::printf("%-26s %8s %14s %6s\n", "primitive", "trials", "max_rel_err", "status");
    for (const auto& r : rows) {
      std::printf("%-26s %8d %14.3e %6s\n", r.name.c_str(), r.trials, r.max_rel_err,
                  r.pass ? "ok" : "FAIL");
    }
    if (!all_passed(rows)) {
      std::cerr << "gradient check failed\n";
      return kExitNumeric;
    }
    return kExitOk;
  });
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"three-player GAN trainer with an equilibrium-controlled classification weight"};
  app.require_subcommand(1);

  PretrainOptions pre;
  auto* sub_pre = app.add_subcommand("pretrain", "train and freeze the classifier");
  sub_pre->add_option("--config", pre.config_path, "config file")->required();
  sub_pre->add_option("--out", pre.out_path, "classifier checkpoint path")->required();
  uint64_t pre_seed = 0;
  auto* pre_seed_opt = sub_pre->add_option("--seed", pre_seed, "override config seed");

  TrainOptions tr;
  auto* sub_tr = app.add_subcommand("train", "run the adversarial training loop");
  sub_tr->add_option("--config", tr.config_path, "config file")->required();
  sub_tr->add_option("--classifier", tr.classifier_path, "pretrained classifier checkpoint");
  sub_tr->add_option("--out", tr.out_dir, "output directory")->required();
  sub_tr->add_flag("--resume", tr.resume, "resume from the latest checkpoint in --out");
  int64_t tr_iters = 0;
  auto* tr_iters_opt = sub_tr->add_option("--iterations", tr_iters, "override config iterations");
  uint64_t tr_seed = 0;
  auto* tr_seed_opt = sub_tr->add_option("--seed", tr_seed, "override config seed");
  std::string tr_mode;
  auto* tr_mode_opt = sub_tr->add_option("--mode", tr_mode, "override config mode");

  GenerateOptions gen;
  auto* sub_gen = app.add_subcommand("generate", "generate samples with fixed labels");
  sub_gen->add_option("checkpoint", gen.checkpoint_path, "training checkpoint")->required();
  sub_gen->add_option("--labels", gen.labels, "comma-separated label vector")->required();
  sub_gen->add_option("--count", gen.count, "number of samples");
  sub_gen->add_option("--seed", gen.seed, "noise seed");
  sub_gen->add_option("--out", gen.out_path, "output file")->required();

  SweepOptions sw;
  auto* sub_sw = app.add_subcommand("sweep", "interpolate/extrapolate one label");
  sub_sw->add_option("checkpoint", sw.checkpoint_path, "training checkpoint")->required();
  sub_sw->add_option("--label-index", sw.label_index, "label to sweep");
  sub_sw->add_option("--values", sw.values, "comma-separated increasing values");
  sub_sw->add_option("--count", sw.n_z, "noise draws per value");
  sub_sw->add_option("--seed", sw.seed, "noise seed");
  sub_sw->add_option("--out", sw.out_dir, "output directory")->required();

  uint64_t gc_seed = 1;
  auto* sub_gc = app.add_subcommand("gradcheck", "finite-difference check of all primitives");
  sub_gc->add_option("--seed", gc_seed, "trial seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  if (sub_pre->parsed()) {
    if (pre_seed_opt->count()) pre.seed = pre_seed;
    return cmd_pretrain(pre);
  }
  if (sub_tr->parsed()) {
    if (tr_iters_opt->count()) tr.iterations = tr_iters;
    if (tr_seed_opt->count()) tr.seed = tr_seed;
    if (tr_mode_opt->count()) tr.mode = tr_mode;
    return cmd_train(tr);
  }
  if (sub_gen->parsed()) return cmd_generate(gen);
  if (sub_sw->parsed()) return cmd_sweep(sw);
  if (sub_gc->parsed()) return cmd_gradcheck(gc_seed);
  return kExitUsage;
}

}  // namespace controlgan

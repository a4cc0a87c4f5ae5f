#include "controlgan/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "controlgan/adam.hpp"
#include "controlgan/losses.hpp"

namespace controlgan {

namespace {

LabeledDataset subset(const LabeledDataset& data, const std::vector<int64_t>& idx) {
  LabeledDataset out;
  out.samples = data.sample_batch(idx);
  out.labels.reserve(idx.size());
  for (int64_t i : idx) out.labels.push_back(data.labels[static_cast<size_t>(i)]);
  out.source = data.source;
  out.synthetic = data.synthetic;
  return out;
}

Tensor tile_label(const LabelVector& l, int64_t rows) {
  std::vector<real_t> v;
  v.reserve(static_cast<size_t>(rows) * l.size());
  for (int64_t r = 0; r < rows; ++r) v.insert(v.end(), l.begin(), l.end());
  return Tensor(Shape{rows, static_cast<int64_t>(l.size())}, std::move(v));
}

}  // namespace

OracleResult train_oracle(const LabeledDataset& data, const ModelSpec& spec_c,
                          uint64_t seed, int epochs, int64_t batch_size) {
  if (data.size() == 0) throw std::invalid_argument("train_oracle: empty dataset");

  // Seed-derived split: 3/4 oracle training, 1/4 held out for its score.
  std::vector<int64_t> perm(static_cast<size_t>(data.size()));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = Rng(seed).fork(1);
  for (size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[static_cast<size_t>(rng.bounded(i))]);
  }
  const size_t cut = perm.size() - perm.size() / 4;
  const std::vector<int64_t> train_idx(perm.begin(), perm.begin() + static_cast<int64_t>(cut));
  const std::vector<int64_t> held_idx(perm.begin() + static_cast<int64_t>(cut), perm.end());
  const LabeledDataset train_part = subset(data, train_idx);
  const LabeledDataset held_out = subset(data, held_idx);

  ParamSet params = build_model(spec_c, static_cast<uint32_t>(Rng(seed).fork(2).next_u64()));
  AdamState adam = AdamState::init(params, static_cast<real_t>(2e-4));
  BatchStream stream(train_part, std::min<int64_t>(batch_size, train_part.size()),
                     Rng(seed).fork(3).next_u64());
  const int64_t iters = stream.batches_per_epoch() * epochs;
  const auto restrict_set = params.tensors();
  for (int64_t it = 0; it < iters; ++it) {
    const auto batch = stream.next();
    Tape tape;
    Tape::Scope scope(tape);
    const Tensor probs = classifier_forward(spec_c, params, batch.samples);
    const Tensor loss = multilabel_cross_entropy(batch.labels, probs);
    params.zero_grads();
    backward(loss, restrict_set);
    adam.apply(params);
  }

  OracleResult out;
  const auto [acc, loss] = classifier_score(spec_c, params, held_out);
  out.params = std::move(params);
  out.holdout_accuracy = acc;
  out.holdout_loss = loss;
  return out;
}

std::pair<real_t, real_t> classifier_score(const ModelSpec& spec_c, const ParamSet& params,
                                           const LabeledDataset& data) {
  const int64_t n = data.size();
  if (n == 0) throw std::invalid_argument("classifier_score: empty dataset");
  const int64_t chunk = 256;
  double correct = 0, total = 0, loss_sum = 0;
  for (int64_t start = 0; start < n; start += chunk) {
    std::vector<int64_t> idx;
    for (int64_t i = start; i < std::min(n, start + chunk); ++i) idx.push_back(i);
    const Tensor xb = data.sample_batch(idx);
    const Tensor lb = data.label_batch(idx);
    const Tensor probs = classifier_forward(spec_c, params, xb);
    const auto& p = probs.values();
    const auto& l = lb.values();
    for (size_t i = 0; i < p.size(); ++i) {
      correct += ((p[i] > static_cast<real_t>(0.5)) == (l[i] > static_cast<real_t>(0.5))) ? 1 : 0;
      total += 1;
    }
    loss_sum += static_cast<double>(multilabel_cross_entropy(lb, probs).item()) *
                static_cast<double>(idx.size());
  }
  return {static_cast<real_t>(correct / total), static_cast<real_t>(loss_sum / static_cast<double>(n))};
}

FidelityResult label_fidelity(const ModelSpec& spec_g, const ParamSet& gen,
                              const ModelSpec& spec_oracle, const ParamSet& oracle,
                              const std::vector<LabelVector>& labels, int n_z,
                              uint64_t seed) {
  if (labels.empty()) throw std::invalid_argument("label_fidelity: no label vectors");
  if (n_z < 1) throw std::invalid_argument("label_fidelity: n_z must be >= 1");
  Rng rng(seed);
  double loss_sum = 0, acc_sum = 0;
  for (const auto& l : labels) {
    const Tensor z = sample_noise(rng, n_z, spec_g.z_dim);
    const Tensor lb = tile_label(l, n_z);
    const Tensor samples = generator_forward(spec_g, gen, z, lb);
    const Tensor probs = classifier_forward(spec_oracle, oracle, samples);
    loss_sum += static_cast<double>(multilabel_cross_entropy(lb, probs).item());
    const auto& p = probs.values();
    const auto& lv = lb.values();
    double correct = 0;
    for (size_t i = 0; i < p.size(); ++i) {
      correct += ((p[i] > static_cast<real_t>(0.5)) == (lv[i] > static_cast<real_t>(0.5))) ? 1 : 0;
    }
    acc_sum += correct / static_cast<double>(p.size());
  }
  FidelityResult out;
  out.oracle_loss = static_cast<real_t>(loss_sum / static_cast<double>(labels.size()));
  out.oracle_accuracy = static_cast<real_t>(acc_sum / static_cast<double>(labels.size()));
  return out;
}

void SweepSpec::validate(int label_dim) const {
  if (label_index < 0 || label_index >= label_dim) {
    throw std::invalid_argument("sweep: label_index " + std::to_string(label_index) +
                                " out of range for label_dim " + std::to_string(label_dim));
  }
  if (values.empty()) throw std::invalid_argument("sweep: empty value list");
  for (size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) {
      throw std::invalid_argument("sweep: values must be strictly increasing");
    }
  }
  if (n_z < 1) throw std::invalid_argument("sweep: n_z must be >= 1");
  if (!fixed_labels.empty() && static_cast<int>(fixed_labels.size()) != label_dim) {
    throw std::invalid_argument("sweep: fixed_labels length != label_dim");
  }
}

std::vector<SweepPoint> sweep(const ModelSpec& spec_g, const ParamSet& gen,
                              const SweepSpec& spec, const SyntheticDescriptor* synthetic) {
  spec.validate(spec_g.label_dim);
  LabelVector tmpl = spec.fixed_labels;
  if (tmpl.empty()) tmpl.assign(static_cast<size_t>(spec_g.label_dim), 0);

  // One fixed set of noise draws shared by every value in the sweep.
  Rng rng(spec.seed);
  const Tensor z = sample_noise(rng, spec.n_z, spec_g.z_dim);

  std::vector<SweepPoint> points;
  points.reserve(spec.values.size());
  for (real_t v : spec.values) {
    LabelVector l = tmpl;
    l[static_cast<size_t>(spec.label_index)] = v;
    SweepPoint pt;
    pt.value = v;
    pt.samples = generator_forward(spec_g, gen, z, tile_label(l, spec.n_z));
    if (synthetic) {
      const auto& mu = synthetic->direction(spec.label_index);
      const auto base = synthetic->scaled_center();
      const auto& s = pt.samples.values();
      const size_t dim = mu.size();
      double mean = 0;
      for (int i = 0; i < spec.n_z; ++i) {
        double proj = 0;
        for (size_t dIdx = 0; dIdx < dim; ++dIdx) {
          proj += (s[static_cast<size_t>(i) * dim + dIdx] - base[dIdx]) * mu[dIdx];
        }
        pt.projections.push_back(static_cast<real_t>(proj));
        mean += proj;
      }
      pt.mean_projection = static_cast<real_t>(mean / spec.n_z);
    }
    points.push_back(std::move(pt));
  }
  return points;
}

void emit_grid(const Tensor& samples, int rows, int cols, const std::string& path) {
  const Shape& s = samples.shape();
  if (s.rank() != 4 || (s[1] != 1 && s[1] != 3)) {
    throw shape_error("emit_grid: samples must be (N,1,H,W) or (N,3,H,W), got " + s.str());
  }
  if (static_cast<int64_t>(rows) * cols != s[0]) {
    throw std::invalid_argument("emit_grid: rows*cols = " + std::to_string(rows * cols) +
                                " but sample count is " + std::to_string(s[0]));
  }
  const int ch = static_cast<int>(s[1]);
  const int h = static_cast<int>(s[2]);
  const int w = static_cast<int>(s[3]);
  Image img;
  img.width = cols * w;
  img.height = rows * h;
  img.channels = ch;
  img.pixels.assign(static_cast<size_t>(img.width) * img.height * ch, 0);
  const auto& v = samples.values();
  for (int n = 0; n < s[0]; ++n) {
    const int gy = n / cols;
    const int gx = n % cols;
    for (int c = 0; c < ch; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const real_t raw = v[((static_cast<size_t>(n) * ch + c) * h + y) * w + x];
          const double level = (static_cast<double>(raw) + 1.0) * 127.5;
          img.pixels[img.index(gy * h + y, gx * w + x, c)] =
              static_cast<uint8_t>(std::lround(std::min(255.0, std::max(0.0, level))));
        }
      }
    }
  }
  write_image(img, path);
}

void EvalReport::add(const std::string& config, const std::string& metric, real_t value) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument("eval report: metric " + metric + " is not finite");
  }
  rows.push_back({config, metric, value});
}

void emit_report(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write report: " + path);
  out << "config,metric,value\n";
  char buf[64];
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%.6g", static_cast<double>(row.value));
    out << row.config << "," << row.metric << "," << buf << "\n";
  }
  if (!out) throw io_error("failed writing report: " + path);
}

EvalReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read report: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "config,metric,value") {
    throw io_error("report header mismatch: " + path);
  }
  EvalReport rep;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string config, metric, value;
    if (!std::getline(ss, config, ',') || !std::getline(ss, metric, ',') ||
        !std::getline(ss, value)) {
      throw io_error("malformed report row: " + line);
    }
    rep.rows.push_back({config, metric, static_cast<real_t>(std::stod(value))});
  }
  return rep;
}

double spearman_rank_correlation(const std::vector<real_t>& xs, const std::vector<real_t>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("spearman: need two sequences of equal length >= 2");
  }
  auto ranks = [](const std::vector<real_t>& v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(xs);
  const auto ry = ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double num = 0, dx = 0, dy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  if (dx == 0 || dy == 0) return 0;
  return num / std::sqrt(dx * dy);
}

}  // namespace controlgan

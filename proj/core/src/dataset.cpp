#include "controlgan/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace controlgan {

namespace {

std::string format_real(real_t v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(v));
  return buf;
}

std::string join_vectors(const std::vector<std::vector<real_t>>& rows) {
  std::string out;
  for (size_t r = 0; r < rows.size(); ++r) {
    if (r) out += ';';
    for (size_t c = 0; c < rows[r].size(); ++c) {
      if (c) out += ',';
      out += format_real(rows[r][c]);
    }
  }
  return out;
}

std::vector<std::vector<real_t>> parse_vectors(const std::string& text) {
  std::vector<std::vector<real_t>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) {
    std::vector<real_t> v;
    std::stringstream rs(row);
    std::string cell;
    while (std::getline(rs, cell, ',')) v.push_back(static_cast<real_t>(std::stod(cell)));
    rows.push_back(std::move(v));
  }
  return rows;
}

}  // namespace

SyntheticSpec SyntheticSpec::axes(int dim, int label_dim) {
  SyntheticSpec s;
  s.dim = dim;
  s.label_dim = label_dim;
  for (int k = 0; k < label_dim; ++k) {
    std::vector<real_t> mu(static_cast<size_t>(dim), 0);
    mu[static_cast<size_t>(k % dim)] = 1;
    s.label_directions.push_back(std::move(mu));
  }
  s.base_centers = {std::vector<real_t>(static_cast<size_t>(dim), 0)};
  return s;
}

void SyntheticSpec::validate() const {
  if (dim < 1) throw std::invalid_argument("synthetic spec: dim must be >= 1");
  if (label_dim < 1) throw std::invalid_argument("synthetic spec: label_dim must be >= 1");
  if (label_dim > 20) throw std::invalid_argument("synthetic spec: label_dim too large to enumerate combos");
  if (samples_per_combo < 1) throw std::invalid_argument("synthetic spec: samples_per_combo must be >= 1");
  if (noise_sigma < 0) throw std::invalid_argument("synthetic spec: noise_sigma must be >= 0");
  if (static_cast<int>(label_directions.size()) != label_dim) {
    throw std::invalid_argument("synthetic spec: need one direction per label");
  }
  for (const auto& mu : label_directions) {
    if (static_cast<int>(mu.size()) != dim) {
      throw std::invalid_argument("synthetic spec: direction length != dim");
    }
    real_t norm2 = 0;
    for (real_t c : mu) norm2 += c * c;
    if (std::abs(norm2 - 1) > static_cast<real_t>(1e-6)) {
      throw std::invalid_argument("synthetic spec: directions must have unit norm");
    }
  }
  if (base_centers.empty()) throw std::invalid_argument("synthetic spec: need at least one base center");
  for (const auto& c : base_centers) {
    if (static_cast<int>(c.size()) != dim) {
      throw std::invalid_argument("synthetic spec: base center length != dim");
    }
  }
}

const std::vector<real_t>& SyntheticDescriptor::direction(int k) const {
  return spec.label_directions.at(static_cast<size_t>(k));
}

std::vector<real_t> SyntheticDescriptor::scaled_center(size_t i) const {
  std::vector<real_t> c = spec.base_centers.at(i);
  for (auto& v : c) v *= scale;
  return c;
}

std::string SyntheticDescriptor::to_text() const {
  std::string out;
  out += "dim=" + std::to_string(spec.dim) + "\n";
  out += "label_dim=" + std::to_string(spec.label_dim) + "\n";
  out += "noise_sigma=" + format_real(spec.noise_sigma) + "\n";
  out += "samples_per_combo=" + std::to_string(spec.samples_per_combo) + "\n";
  out += "seed=" + std::to_string(spec.seed) + "\n";
  out += "directions=" + join_vectors(spec.label_directions) + "\n";
  out += "centers=" + join_vectors(spec.base_centers) + "\n";
  out += "scale=" + format_real(scale) + "\n";
  return out;
}

SyntheticDescriptor SyntheticDescriptor::from_text(const std::string& text) {
  SyntheticDescriptor d;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw io_error("synthetic descriptor: malformed line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "dim") d.spec.dim = std::stoi(val);
    else if (key == "label_dim") d.spec.label_dim = std::stoi(val);
    else if (key == "noise_sigma") d.spec.noise_sigma = static_cast<real_t>(std::stod(val));
    else if (key == "samples_per_combo") d.spec.samples_per_combo = std::stoi(val);
    else if (key == "seed") d.spec.seed = std::stoull(val);
    else if (key == "directions") d.spec.label_directions = parse_vectors(val);
    else if (key == "centers") d.spec.base_centers = parse_vectors(val);
    else if (key == "scale") d.scale = static_cast<real_t>(std::stod(val));
    else throw io_error("synthetic descriptor: unknown key: " + key);
  }
  d.spec.validate();
  return d;
}

Tensor LabeledDataset::label_batch(const std::vector<int64_t>& idx) const {
  const int ld = label_dim();
  std::vector<real_t> v;
  v.reserve(idx.size() * static_cast<size_t>(ld));
  for (int64_t i : idx) {
    const auto& l = labels.at(static_cast<size_t>(i));
    v.insert(v.end(), l.begin(), l.end());
  }
  return Tensor(Shape{static_cast<int64_t>(idx.size()), ld}, std::move(v));
}

Tensor LabeledDataset::sample_batch(const std::vector<int64_t>& idx) const {
  Shape row_shape = samples.shape();
  const int64_t row = row_shape.numel() / row_shape[0];
  std::vector<real_t> v;
  v.reserve(idx.size() * static_cast<size_t>(row));
  const auto& src = samples.values();
  for (int64_t i : idx) {
    const auto* p = src.data() + i * row;
    v.insert(v.end(), p, p + row);
  }
  row_shape.d[0] = static_cast<int64_t>(idx.size());
  return Tensor(row_shape, std::move(v));
}

LabeledDataset make_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int64_t combos = int64_t{1} << spec.label_dim;
  const int64_t n = combos * spec.samples_per_combo;
  Rng rng(spec.seed);

  std::vector<real_t> raw;
  raw.reserve(static_cast<size_t>(n * spec.dim));
  std::vector<LabelVector> labels;
  labels.reserve(static_cast<size_t>(n));

  int64_t sample_idx = 0;
  for (int64_t c = 0; c < combos; ++c) {
    LabelVector l(static_cast<size_t>(spec.label_dim));
    for (int k = 0; k < spec.label_dim; ++k) l[static_cast<size_t>(k)] = static_cast<real_t>((c >> k) & 1);
    for (int s = 0; s < spec.samples_per_combo; ++s, ++sample_idx) {
      const auto& center = spec.base_centers[static_cast<size_t>(sample_idx) % spec.base_centers.size()];
      for (int dIdx = 0; dIdx < spec.dim; ++dIdx) {
        real_t v = center[static_cast<size_t>(dIdx)];
        for (int k = 0; k < spec.label_dim; ++k) {
          v += l[static_cast<size_t>(k)] * spec.label_directions[static_cast<size_t>(k)][static_cast<size_t>(dIdx)];
        }
        v += rng.gaussian(spec.noise_sigma);
        raw.push_back(v);
      }
      labels.push_back(l);
    }
  }

  // Rescale only when the raw geometry leaves [-1, 1]; otherwise the
  // analytic label->offset map stays exact.
  real_t maxabs = 0;
  for (real_t v : raw) maxabs = std::max(maxabs, std::abs(v));
  const real_t scale = maxabs > 1 ? 1 / maxabs : real_t{1};
  if (scale != 1) {
    for (auto& v : raw) v *= scale;
  }

  LabeledDataset ds;
  ds.samples = Tensor(Shape{n, spec.dim}, std::move(raw));
  ds.labels = std::move(labels);
  ds.source = "synthetic";
  ds.synthetic = SyntheticDescriptor{spec, scale};
  return ds;
}

Tensor sample_noise(Rng& rng, int64_t batch, int64_t z_dim) {
  if (batch < 1 || z_dim < 1) {
    throw std::invalid_argument("sample_noise: batch and z_dim must be positive");
  }
  std::vector<real_t> v(static_cast<size_t>(batch * z_dim));
  for (auto& e : v) e = rng.uniform_open(-1, 1);
  return Tensor(Shape{batch, z_dim}, std::move(v));
}

BatchStream::BatchStream(const LabeledDataset& data, int64_t batch_size, uint64_t seed)
    : data_(&data), batch_size_(batch_size), seed_(seed) {
  if (batch_size < 1) throw std::invalid_argument("batches: batch_size must be >= 1");
  if (batch_size > data.size()) {
    throw std::invalid_argument("batches: batch_size " + std::to_string(batch_size) +
                                " exceeds dataset size " + std::to_string(data.size()));
  }
  per_epoch_ = data.size() / batch_size;
  order_.resize(static_cast<size_t>(data.size()));
  reshuffle();
}

void BatchStream::reshuffle() {
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int64_t>(i);
  Rng rng = Rng(seed_).fork(static_cast<uint64_t>(epoch_));
  for (size_t i = order_.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.bounded(i));
    std::swap(order_[i - 1], order_[j]);
  }
}

BatchStream::Batch BatchStream::next() {
  if (cursor_ == per_epoch_) {
    ++epoch_;
    cursor_ = 0;
    reshuffle();
  }
  const auto* base = order_.data() + cursor_ * batch_size_;
  std::vector<int64_t> idx(base, base + batch_size_);
  ++cursor_;
  return {data_->sample_batch(idx), data_->label_batch(idx)};
}

void BatchStream::seek(int64_t iterations) {
  if (iterations < 0) throw std::invalid_argument("batches: cannot seek backwards past zero");
  epoch_ = iterations / per_epoch_;
  cursor_ = iterations % per_epoch_;
  reshuffle();
}

}  // namespace controlgan

#include "controlgan/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace controlgan {

namespace {

constexpr char kMagic[4] = {'C', 'G', 'C', 'K'};

class Writer {
 public:
  void u8(uint8_t v) { raw(&v, 1); }
  void u16(uint16_t v) { raw(&v, 2); }
  void u32(uint32_t v) { raw(&v, 4); }
  void u64(uint64_t v) { raw(&v, 8); }
  void i64(int64_t v) { raw(&v, 8); }
  void real(real_t v) { raw(&v, sizeof(real_t)); }
  void reals(const std::vector<real_t>& v) {
    u64(v.size());
    raw(v.data(), v.size() * sizeof(real_t));
  }
  void str(const std::string& s) {
    u16(static_cast<uint16_t>(s.size()));
    raw(s.data(), s.size());
  }
  void raw(const void* p, size_t n) {
    const auto* b = static_cast<const char*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& data, const std::string& path) : data_(data), path_(path) {}

  uint8_t u8() { return take<uint8_t>(); }
  uint16_t u16() { return take<uint16_t>(); }
  uint32_t u32() { return take<uint32_t>(); }
  uint64_t u64() { return take<uint64_t>(); }
  int64_t i64() { return take<int64_t>(); }
  real_t real() { return take<real_t>(); }
  std::vector<real_t> reals() {
    const uint64_t n = u64();
    std::vector<real_t> v(n);
    raw(v.data(), n * sizeof(real_t));
    return v;
  }
  std::string str() {
    const uint16_t n = u16();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  void raw(void* p, size_t n) {
    if (pos_ + n > data_.size()) throw io_error("truncated checkpoint: " + path_);
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  template <typename T>
  T take() {
    T v;
    raw(&v, sizeof(T));
    return v;
  }
  const std::string& data_;
  std::string path_;
  size_t pos_ = 0;
};

void write_params(Writer& w, const ParamSet& ps) {
  w.u32(ps.init_seed);
  w.u32(static_cast<uint32_t>(ps.entries.size()));
  for (const auto& [name, t] : ps.entries) {
    w.str(name);
    w.u8(static_cast<uint8_t>(t.shape().rank()));
    for (int64_t e : t.shape().d) w.i64(e);
    w.reals(t.values());
  }
}

ParamSet read_params(Reader& r) {
  ParamSet ps;
  ps.init_seed = r.u32();
  const uint32_t n = r.u32();
  for (uint32_t i = 0; i < n; ++i) {
    std::string name = r.str();
    const uint8_t rank = r.u8();
    Shape shape;
    for (uint8_t d = 0; d < rank; ++d) shape.d.push_back(r.i64());
    std::vector<real_t> values = r.reals();
    ps.add(std::move(name), Tensor(shape, std::move(values)));
  }
  return ps;
}

void write_adam(Writer& w, const AdamState& a) {
  w.u64(a.step_count);
  w.real(a.lr);
  w.real(a.beta1);
  w.real(a.beta2);
  w.real(a.eps_hat);
  w.u32(static_cast<uint32_t>(a.slots.size()));
  for (const auto& s : a.slots) {
    w.reals(s.m);
    w.reals(s.v);
  }
}

AdamState read_adam(Reader& r) {
  AdamState a;
  a.step_count = r.u64();
  a.lr = r.real();
  a.beta1 = r.real();
  a.beta2 = r.real();
  a.eps_hat = r.real();
  const uint32_t n = r.u32();
  a.slots.resize(n);
  for (auto& s : a.slots) {
    s.m = r.reals();
    s.v = r.reals();
  }
  return a;
}

void write_gamma(Writer& w, const GammaState& g) {
  w.real(g.gamma);
  w.real(g.r);
  w.real(g.e_target);
  w.u64(g.history_capacity);
  w.u32(static_cast<uint32_t>(g.history.size()));
  for (const auto& [gen, real_part] : g.history) {
    w.real(gen);
    w.real(real_part);
  }
}

GammaState read_gamma(Reader& r) {
  GammaState g;
  g.gamma = r.real();
  g.r = r.real();
  g.e_target = r.real();
  g.history_capacity = r.u64();
  const uint32_t n = r.u32();
  for (uint32_t i = 0; i < n; ++i) {
    const real_t gen = r.real();
    const real_t real_part = r.real();
    g.history.emplace_back(gen, real_part);
  }
  return g;
}

void write_file(const std::string& path, CheckpointKind kind,
                const std::vector<std::pair<std::string, std::string>>& sections) {
  Writer out;
  out.raw(kMagic, 4);
  out.u32(kCheckpointVersion);
  out.u8(static_cast<uint8_t>(kind));
  out.u8(static_cast<uint8_t>(sizeof(real_t)));
  out.u32(static_cast<uint32_t>(sections.size()));
  for (const auto& [name, payload] : sections) {
    out.str(name);
    out.u64(payload.size());
    out.raw(payload.data(), payload.size());
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot write checkpoint: " + path);
  f.write(out.data().data(), static_cast<std::streamsize>(out.data().size()));
  if (!f) throw io_error("failed writing checkpoint: " + path);
}

}  // namespace

void save_checkpoint(const std::string& path, const FullConfig& config,
                     const TrainState& state) {
  std::vector<std::pair<std::string, std::string>> sections;
  {
    Writer w;
    const std::string text = config.to_text();
    w.u64(text.size());
    w.raw(text.data(), text.size());
    sections.emplace_back("config", w.data());
  }
  {
    Writer w;
    w.i64(state.iteration);
    sections.emplace_back("iteration", w.data());
  }
  {
    Writer w;
    write_params(w, state.params_g);
    sections.emplace_back("params_g", w.data());
  }
  {
    Writer w;
    write_params(w, state.params_d);
    sections.emplace_back("params_d", w.data());
  }
  {
    Writer w;
    write_adam(w, state.adam_g);
    sections.emplace_back("adam_g", w.data());
  }
  {
    Writer w;
    write_adam(w, state.adam_d);
    sections.emplace_back("adam_d", w.data());
  }
  if (config.train.mode == TrainMode::controlgan) {
    {
      Writer w;
      write_params(w, state.params_c);
      sections.emplace_back("params_c", w.data());
    }
    {
      Writer w;
      write_adam(w, state.adam_c);
      sections.emplace_back("adam_c", w.data());
    }
  }
  {
    Writer w;
    write_gamma(w, state.gamma_state);
    sections.emplace_back("gamma", w.data());
  }
  {
    Writer w;
    for (uint64_t word : state.rng.state()) w.u64(word);
    sections.emplace_back("rng", w.data());
  }
  write_file(path, CheckpointKind::full, sections);
}

void save_classifier_checkpoint(const std::string& path, const FullConfig& config,
                                const ParamSet& theta_c) {
  std::vector<std::pair<std::string, std::string>> sections;
  {
    Writer w;
    const std::string text = config.to_text();
    w.u64(text.size());
    w.raw(text.data(), text.size());
    sections.emplace_back("config", w.data());
  }
  {
    Writer w;
    write_params(w, theta_c);
    sections.emplace_back("params_c", w.data());
  }
  write_file(path, CheckpointKind::classifier, sections);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open checkpoint: " + path);
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(data, path);

  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw io_error("not a checkpoint file: " + path);
  const uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw io_error("unsupported checkpoint version " + std::to_string(version) + " (want " +
                   std::to_string(kCheckpointVersion) + "): " + path);
  }
  LoadedCheckpoint out;
  out.kind = static_cast<CheckpointKind>(r.u8());
  const uint8_t width = r.u8();
  if (width != sizeof(real_t)) {
    throw io_error("checkpoint scalar width " + std::to_string(width) +
                   " does not match this build (" + std::to_string(sizeof(real_t)) +
                   "): " + path);
  }

  const uint32_t n_sections = r.u32();
  std::array<uint64_t, 4> rng_state{};
  for (uint32_t s = 0; s < n_sections; ++s) {
    const std::string name = r.str();
    const uint64_t len = r.u64();
    std::string payload(len, '\0');
    r.raw(payload.data(), len);
    Reader pr(payload, path);
    if (name == "config") {
      const uint64_t text_len = pr.u64();
      std::string text(text_len, '\0');
      pr.raw(text.data(), text_len);
      out.config = FullConfig::parse_text(text, path + "#config");
    } else if (name == "iteration") {
      out.state.iteration = pr.i64();
    } else if (name == "params_g") {
      out.state.params_g = read_params(pr);
    } else if (name == "params_d") {
      out.state.params_d = read_params(pr);
    } else if (name == "params_c") {
      out.state.params_c = read_params(pr);
    } else if (name == "adam_g") {
      out.state.adam_g = read_adam(pr);
    } else if (name == "adam_d") {
      out.state.adam_d = read_adam(pr);
    } else if (name == "adam_c") {
      out.state.adam_c = read_adam(pr);
    } else if (name == "gamma") {
      out.state.gamma_state = read_gamma(pr);
    } else if (name == "rng") {
      for (auto& word : rng_state) word = pr.u64();
      out.state.rng.set_state(rng_state);
    } else {
      throw io_error("unknown checkpoint section '" + name + "': " + path);
    }
  }

  if (out.kind == CheckpointKind::classifier) {
    out.classifier = std::move(out.state.params_c);
    out.state = TrainState{};
  } else {
    out.state.spec_g = out.config.spec_for(Role::generator);
    out.state.spec_d = out.config.spec_for(Role::discriminator);
    out.state.spec_c = out.config.spec_for(Role::classifier);
  }
  return out;
}

}  // namespace controlgan

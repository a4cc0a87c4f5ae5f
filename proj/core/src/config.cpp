#include "controlgan/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "controlgan/image_io.hpp"

namespace controlgan {

namespace {

std::string fmt_real(real_t v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(v));
  return buf;
}

std::string fmt_triple(const std::array<int, 3>& a) {
  return std::to_string(a[0]) + "," + std::to_string(a[1]) + "," + std::to_string(a[2]);
}

std::array<int, 3> parse_triple(const std::string& v, const std::string& key) {
  std::array<int, 3> out{};
  std::stringstream ss(v);
  std::string cell;
  int i = 0;
  while (std::getline(ss, cell, ',')) {
    if (i >= 3) throw config_error(key + ": expected three comma-separated ints");
    out[static_cast<size_t>(i++)] = std::stoi(cell);
  }
  if (i != 3) throw config_error(key + ": expected three comma-separated ints");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::vector<real_t>> parse_vector_rows(const std::string& text) {
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

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw config_error(key + ": expected true/false, got '" + v + "'");
}

}  // namespace

FullConfig FullConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

FullConfig FullConfig::parse_text(const std::string& text, const std::string& origin) {
  FullConfig c;
  std::stringstream ss(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw config_error(origin + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "mode") {
        if (val == "controlgan") c.train.mode = TrainMode::controlgan;
        else if (val == "cgan") c.train.mode = TrainMode::cgan;
        else throw config_error("mode must be controlgan or cgan, got '" + val + "'");
      } else if (key == "seed") c.train.seed = std::stoull(val);
      else if (key == "alpha") c.train.alpha = static_cast<real_t>(std::stod(val));
      else if (key == "t_d") c.train.t_d = static_cast<real_t>(std::stod(val));
      else if (key == "e_target") c.train.e_target = static_cast<real_t>(std::stod(val));
      else if (key == "r") c.train.r = static_cast<real_t>(std::stod(val));
      else if (key == "lr_main") c.train.lr_main = static_cast<real_t>(std::stod(val));
      else if (key == "lr_late") c.train.lr_late = static_cast<real_t>(std::stod(val));
      else if (key == "epochs_before_decay") c.train.epochs_before_decay = std::stoi(val);
      else if (key == "batch_size") c.train.batch_size = std::stoll(val);
      else if (key == "iterations") c.train.iterations = std::stoll(val);
      else if (key == "pretrain_epochs") c.train.pretrain_epochs = std::stod(val);
      else if (key == "simultaneous_classifier") c.train.simultaneous_classifier = parse_bool(val, key);
      else if (key == "log_interval") c.train.log_interval = std::stoll(val);
      else if (key == "checkpoint_interval") c.train.checkpoint_interval = std::stoll(val);
      else if (key == "metrics_window") c.train.metrics_window = std::stoi(val);
      else if (key == "model.kind") {
        if (val == "vector") c.model.kind = DataKind::vector;
        else if (val == "image") c.model.kind = DataKind::image;
        else throw config_error("model.kind must be vector or image, got '" + val + "'");
      } else if (key == "model.base_channels") c.model.base_channels = std::stoi(val);
      else if (key == "model.spatial_scale") c.model.spatial_scale = std::stoi(val);
      else if (key == "model.sample_channels") c.model.sample_channels = std::stoi(val);
      else if (key == "model.gen_res") c.model.gen_res = parse_triple(val, key);
      else if (key == "model.enc_res") c.model.enc_res = parse_triple(val, key);
      else if (key == "model.z_dim") c.model.z_dim = std::stoi(val);
      else if (key == "model.conv_kernel_strided") c.model.conv_kernel_strided = std::stoi(val);
      else if (key == "model.conv_kernel_res") c.model.conv_kernel_res = std::stoi(val);
      else if (key == "data.kind") {
        if (val == "synthetic") c.data.kind = DataConfig::Kind::synthetic;
        else if (val == "image_dir") c.data.kind = DataConfig::Kind::image_dir;
        else throw config_error("data.kind must be synthetic or image_dir, got '" + val + "'");
      } else if (key == "data.dim") c.data.dim = std::stoi(val);
      else if (key == "data.label_dim") c.data.label_dim = std::stoi(val);
      else if (key == "data.noise_sigma") c.data.noise_sigma = static_cast<real_t>(std::stod(val));
      else if (key == "data.samples_per_combo") c.data.samples_per_combo = std::stoi(val);
      else if (key == "data.seed") c.data.seed = std::stoull(val);
      else if (key == "data.directions") c.data.directions = val;
      else if (key == "data.centers") c.data.centers = val;
      else if (key == "data.image_dir") c.data.image_dir = val;
      else if (key == "data.label_file") c.data.label_file = val;
      else {
        throw config_error("unknown key '" + key + "'");
      }
    } catch (const config_error&) {
      throw;
    } catch (const std::exception& e) {
      throw config_error(origin + ":" + std::to_string(line_no) + ": bad value for " + key +
                         ": " + e.what());
    }
  }
  return c;
}

std::string FullConfig::to_text() const {
  std::string out;
  out += "mode=" + std::string(train.mode == TrainMode::controlgan ? "controlgan" : "cgan") + "\n";
  out += "seed=" + std::to_string(train.seed) + "\n";
  out += "alpha=" + fmt_real(train.alpha) + "\n";
  out += "t_d=" + fmt_real(train.t_d) + "\n";
  out += "e_target=" + fmt_real(train.e_target) + "\n";
  out += "r=" + fmt_real(train.r) + "\n";
  out += "lr_main=" + fmt_real(train.lr_main) + "\n";
  out += "lr_late=" + fmt_real(train.lr_late) + "\n";
  out += "epochs_before_decay=" + std::to_string(train.epochs_before_decay) + "\n";
  out += "batch_size=" + std::to_string(train.batch_size) + "\n";
  out += "iterations=" + std::to_string(train.iterations) + "\n";
  out += "pretrain_epochs=" + fmt_real(static_cast<real_t>(train.pretrain_epochs)) + "\n";
  out += "simultaneous_classifier=" + std::string(train.simultaneous_classifier ? "true" : "false") + "\n";
  out += "log_interval=" + std::to_string(train.log_interval) + "\n";
  out += "checkpoint_interval=" + std::to_string(train.checkpoint_interval) + "\n";
  out += "metrics_window=" + std::to_string(train.metrics_window) + "\n";
  out += "model.kind=" + std::string(model.kind == DataKind::vector ? "vector" : "image") + "\n";
  out += "model.base_channels=" + std::to_string(model.base_channels) + "\n";
  out += "model.spatial_scale=" + std::to_string(model.spatial_scale) + "\n";
  out += "model.sample_channels=" + std::to_string(model.sample_channels) + "\n";
  out += "model.gen_res=" + fmt_triple(model.gen_res) + "\n";
  out += "model.enc_res=" + fmt_triple(model.enc_res) + "\n";
  out += "model.z_dim=" + std::to_string(model.z_dim) + "\n";
  out += "model.conv_kernel_strided=" + std::to_string(model.conv_kernel_strided) + "\n";
  out += "model.conv_kernel_res=" + std::to_string(model.conv_kernel_res) + "\n";
  out += "data.kind=" + std::string(data.kind == DataConfig::Kind::synthetic ? "synthetic" : "image_dir") + "\n";
  out += "data.dim=" + std::to_string(data.dim) + "\n";
  out += "data.label_dim=" + std::to_string(data.label_dim) + "\n";
  out += "data.noise_sigma=" + fmt_real(data.noise_sigma) + "\n";
  out += "data.samples_per_combo=" + std::to_string(data.samples_per_combo) + "\n";
  out += "data.seed=" + std::to_string(data.seed) + "\n";
  out += "data.directions=" + data.directions + "\n";
  out += "data.centers=" + data.centers + "\n";
  out += "data.image_dir=" + data.image_dir + "\n";
  out += "data.label_file=" + data.label_file + "\n";
  return out;
}

ModelSpec FullConfig::spec_for(Role role) const {
  ModelSpec s = ModelSpec::for_role(role, model.kind);
  s.base_channels = model.base_channels;
  s.spatial_scale = model.kind == DataKind::vector ? data.dim : model.spatial_scale;
  s.sample_channels = model.sample_channels;
  s.residual_counts = role == Role::generator ? model.gen_res : model.enc_res;
  s.z_dim = model.z_dim;
  s.label_dim = data.label_dim;
  s.conv_kernel_strided = model.conv_kernel_strided;
  s.conv_kernel_res = model.conv_kernel_res;
  s.conditional = role == Role::discriminator && train.mode == TrainMode::cgan;
  return s;
}

SyntheticSpec FullConfig::synthetic_spec() const {
  SyntheticSpec s = SyntheticSpec::axes(data.dim, data.label_dim);
  if (!data.directions.empty()) s.label_directions = parse_vector_rows(data.directions);
  if (!data.centers.empty()) s.base_centers = parse_vector_rows(data.centers);
  s.noise_sigma = data.noise_sigma;
  s.samples_per_combo = data.samples_per_combo;
  s.seed = data.seed;
  return s;
}

LabeledDataset FullConfig::load_dataset() const {
  if (data.kind == DataConfig::Kind::synthetic) {
    return make_synthetic(synthetic_spec());
  }
  if (data.image_dir.empty()) throw config_error("data.image_dir is required for image datasets");
  if (data.label_file.empty()) throw config_error("data.label_file is required for image datasets");
  LabeledDataset ds =
      load_image_dataset(data.image_dir, data.label_file, model.spatial_scale, model.sample_channels);
  if (ds.label_dim() != data.label_dim) {
    throw config_error("data.label_dim=" + std::to_string(data.label_dim) +
                       " but label file has " + std::to_string(ds.label_dim()) + " labels");
  }
  return ds;
}

void FullConfig::validate() const {
  train.validate();
  spec_for(Role::generator).validate();
  spec_for(Role::discriminator).validate();
  spec_for(Role::classifier).validate();
  if (data.kind == DataConfig::Kind::synthetic) synthetic_spec().validate();
}

}  // namespace controlgan

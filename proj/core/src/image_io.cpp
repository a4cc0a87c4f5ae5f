#include "controlgan/image_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace controlgan {

namespace {

int read_pnm_token(std::istream& in, const std::string& path) {
  // Whitespace-separated integer, '#' starts a comment to end of line.
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string junk;
      std::getline(in, junk);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = -1;
  in >> v;
  if (!in || v < 0) throw io_error("malformed PNM header: " + path);
  return v;
}

}  // namespace

Image read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open image: " + path);
  char m0 = 0, m1 = 0;
  in.get(m0).get(m1);
  if (m0 != 'P' || (m1 != '5' && m1 != '6')) {
    throw io_error("unsupported image format (want binary PGM/PPM): " + path);
  }
  Image img;
  img.channels = m1 == '5' ? 1 : 3;
  img.width = read_pnm_token(in, path);
  img.height = read_pnm_token(in, path);
  const int maxval = read_pnm_token(in, path);
  if (maxval != 255) throw io_error("unsupported PNM maxval (want 255): " + path);
  in.get();  // single whitespace before payload
  const size_t n = static_cast<size_t>(img.width) * static_cast<size_t>(img.height) *
                   static_cast<size_t>(img.channels);
  img.pixels.resize(n);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw io_error("truncated image payload: " + path);
  }
  return img;
}

void write_image(const Image& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3) {
    throw io_error("write_image: images must have 1 or 3 channels");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write image: " + path);
  out << (img.channels == 1 ? "P5" : "P6") << "\n"
      << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw io_error("failed writing image: " + path);
}

Image resize_area(const Image& img, int side) {
  if (side < 1) throw std::invalid_argument("resize_area: side must be >= 1");
  if (img.width == side && img.height == side) return img;
  Image out;
  out.width = side;
  out.height = side;
  out.channels = img.channels;
  out.pixels.resize(static_cast<size_t>(side) * static_cast<size_t>(side) *
                    static_cast<size_t>(img.channels));
  const double sy = static_cast<double>(img.height) / side;
  const double sx = static_cast<double>(img.width) / side;
  std::vector<double> acc(static_cast<size_t>(img.channels));
  for (int ty = 0; ty < side; ++ty) {
    const double y0 = ty * sy, y1 = (ty + 1) * sy;
    for (int tx = 0; tx < side; ++tx) {
      const double x0 = tx * sx, x1 = (tx + 1) * sx;
      std::fill(acc.begin(), acc.end(), 0.0);
      double area = 0;
      for (int yy = static_cast<int>(std::floor(y0)); yy < static_cast<int>(std::ceil(y1)); ++yy) {
        const double hy = std::min<double>(y1, yy + 1) - std::max<double>(y0, yy);
        if (hy <= 0 || yy < 0 || yy >= img.height) continue;
        for (int xx = static_cast<int>(std::floor(x0)); xx < static_cast<int>(std::ceil(x1)); ++xx) {
          const double wx = std::min<double>(x1, xx + 1) - std::max<double>(x0, xx);
          if (wx <= 0 || xx < 0 || xx >= img.width) continue;
          const double w = hy * wx;
          for (int c = 0; c < img.channels; ++c) acc[static_cast<size_t>(c)] += w * img.pixels[img.index(yy, xx, c)];
          area += w;
        }
      }
      for (int c = 0; c < img.channels; ++c) {
        const double v = acc[static_cast<size_t>(c)] / area;
        out.pixels[out.index(ty, tx, c)] = static_cast<uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
      }
    }
  }
  return out;
}

LabeledDataset load_image_dataset(const std::string& dir, const std::string& label_file,
                                  int side, int channels) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw io_error("image directory not found: " + dir);
  std::ifstream in(label_file);
  if (!in) throw io_error("cannot open label file: " + label_file);

  std::string line;
  if (!std::getline(in, line)) throw io_error("label file is empty: " + label_file);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "filename") {
    throw io_error("label file header must be 'filename,<label names...>': " + label_file);
  }
  const int label_dim = static_cast<int>(header.size()) - 1;

  std::vector<real_t> values;
  std::vector<LabelVector> labels;
  int64_t count = 0;
  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != label_dim + 1) {
      throw io_error(label_file + ": row " + std::to_string(row_no) + ": expected " +
                     std::to_string(label_dim + 1) + " fields, got " +
                     std::to_string(cells.size()));
    }
    LabelVector l(static_cast<size_t>(label_dim));
    for (int k = 0; k < label_dim; ++k) {
      const std::string& b = cells[static_cast<size_t>(k) + 1];
      if (b == "0") {
        l[static_cast<size_t>(k)] = 0;
      } else if (b == "1") {
        l[static_cast<size_t>(k)] = 1;
      } else {
        throw io_error(label_file + ": row " + std::to_string(row_no) +
                       ": non-binary label '" + b + "'");
      }
    }
    const fs::path img_path = fs::path(dir) / cells[0];
    if (!fs::exists(img_path)) {
      throw io_error(label_file + ": row " + std::to_string(row_no) + ": missing image " +
                     img_path.string());
    }
    Image img = resize_area(read_image(img_path.string()), side);
    // Planar (C,H,W) layout, normalized so 0 -> -1 and 255 -> +1.
    for (int c = 0; c < channels; ++c) {
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          double v;
          if (img.channels == channels) {
            v = img.pixels[img.index(y, x, c)];
          } else if (img.channels == 1) {
            v = img.pixels[img.index(y, x, 0)];
          } else {
            v = (img.pixels[img.index(y, x, 0)] + img.pixels[img.index(y, x, 1)] +
                 img.pixels[img.index(y, x, 2)]) /
                3.0;
          }
          values.push_back(static_cast<real_t>(v / 127.5 - 1.0));
        }
      }
    }
    labels.push_back(std::move(l));
    ++count;
  }
  if (count == 0) throw io_error("label file lists no samples: " + label_file);

  LabeledDataset ds;
  ds.samples = Tensor(Shape{count, channels, side, side}, std::move(values));
  ds.labels = std::move(labels);
  ds.source = dir;
  return ds;
}

}  // namespace controlgan

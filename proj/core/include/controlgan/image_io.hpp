#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "controlgan/dataset.hpp"

namespace controlgan {

// 8-bit raster image, row-major, interleaved channels (1 = gray, 3 = RGB).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<uint8_t> pixels;

  size_t index(int y, int x, int c) const {
    return (static_cast<size_t>(y) * static_cast<size_t>(width) + static_cast<size_t>(x)) *
               static_cast<size_t>(channels) +
           static_cast<size_t>(c);
  }
};

// Binary PGM (P5) and PPM (P6), maxval 255.
Image read_image(const std::string& path);
void write_image(const Image& img, const std::string& path);

// Box-filter resample to side x side (exact area averaging).
Image resize_area(const Image& img, int side);

// Loads "filename,b1,...,bk" rows against an image directory. The label
// file's header row names the columns; its first field must be `filename`.
// Images are resized to `side` and normalized into [-1, 1]; channel count
// is adapted to `channels` (gray replicated, RGB averaged).
LabeledDataset load_image_dataset(const std::string& dir, const std::string& label_file,
                                  int side, int channels);

}  // namespace controlgan

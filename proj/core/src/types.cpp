#include "controlgan/types.hpp"

namespace controlgan {

int64_t Shape::numel() const {
  int64_t n = 1;
  for (int64_t e : d) n *= e;
  return n;
}

std::string Shape::str() const {
  if (d.empty()) return "scalar";
  std::string s;
  for (size_t i = 0; i < d.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(d[i]);
  }
  return s;
}

}  // namespace controlgan

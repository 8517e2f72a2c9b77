#include "stadyn/pairgen/style.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stadyn::pairgen {

StyleMap StyleMap::builtin(int id) {
  StyleMap s;
  s.id = id;
  switch (id) {
    case 0:
      break;
    case 1:  // r' = g, g' = b, b' = r
      s.matrix = {0, 1, 0, 0, 0, 1, 1, 0, 0};
      break;
    case 2:
      s.matrix = {-1, 0, 0, 0, -1, 0, 0, 0, -1};
      s.offset = {1, 1, 1};
      break;
    case 3:  // circulant, rows and columns sum to 1
      s.matrix = {0.6, 0.3, 0.1, 0.1, 0.6, 0.3, 0.3, 0.1, 0.6};
      break;
    default:
      throw std::invalid_argument("unknown style id " + std::to_string(id));
  }
  return s;
}

StyleMap StyleMap::inverse() const {
  const auto& m = matrix;
  const double det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
                     m[2] * (m[3] * m[7] - m[4] * m[6]);
  if (std::abs(det) < 1e-12) throw std::domain_error("StyleMap::inverse: singular matrix");
  StyleMap inv;
  inv.id = -1;
  auto& r = inv.matrix;
  r[0] = (m[4] * m[8] - m[5] * m[7]) / det;
  r[1] = (m[2] * m[7] - m[1] * m[8]) / det;
  r[2] = (m[1] * m[5] - m[2] * m[4]) / det;
  r[3] = (m[5] * m[6] - m[3] * m[8]) / det;
  r[4] = (m[0] * m[8] - m[2] * m[6]) / det;
  r[5] = (m[2] * m[3] - m[0] * m[5]) / det;
  r[6] = (m[3] * m[7] - m[4] * m[6]) / det;
  r[7] = (m[1] * m[6] - m[0] * m[7]) / det;
  r[8] = (m[0] * m[4] - m[1] * m[3]) / det;
  for (int i = 0; i < 3; ++i) {
    inv.offset[i] = -(r[i * 3] * offset[0] + r[i * 3 + 1] * offset[1] + r[i * 3 + 2] * offset[2]);
  }
  return inv;
}

StyleMap StyleMap::compose(const StyleMap& other) const {
  StyleMap out;
  out.id = -1;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += matrix[i * 3 + k] * other.matrix[k * 3 + j];
      out.matrix[i * 3 + j] = s;
    }
    double o = offset[i];
    for (int k = 0; k < 3; ++k) o += matrix[i * 3 + k] * other.offset[k];
    out.offset[i] = o;
  }
  return out;
}

std::array<float, 3> StyleMap::apply(const float* rgb) const {
  std::array<float, 3> out{};
  for (int i = 0; i < 3; ++i) {
    const double v = offset[i] + matrix[i * 3] * rgb[0] + matrix[i * 3 + 1] * rgb[1] + matrix[i * 3 + 2] * rgb[2];
    out[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

Tensor<float> StyleMap::apply(const Tensor<float>& frames) const {
  if (frames.rank() != 4 || frames.extent(3) != 3) {
    throw std::invalid_argument("StyleMap::apply: expected (T, H, W, 3) frames");
  }
  Tensor<float> out(frames.shape());
  for (std::size_t i = 0; i < frames.size(); i += 3) {
    const auto px = apply(frames.raw() + i);
    std::copy(px.begin(), px.end(), out.raw() + i);
  }
  return out;
}

Video apply_style(const Video& v, int style) {
  return Video{StyleMap::builtin(style).apply(v.frames), v.flow};
}

}  // namespace stadyn::pairgen

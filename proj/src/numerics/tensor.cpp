#include "stadyn/numerics/tensor.hpp"

namespace stadyn {

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

template <typename T>
std::vector<double> gap_pool(const Tensor<T>& t, std::ptrdiff_t channel_axis) {
  const auto rank = static_cast<std::ptrdiff_t>(t.rank());
  if (rank == 0) throw std::invalid_argument("gap_pool: rank-0 tensor");
  if (channel_axis < 0) channel_axis += rank;
  if (channel_axis < 0 || channel_axis >= rank) {
    throw std::invalid_argument("gap_pool: channel axis out of range");
  }
  const auto& shape = t.shape();
  const std::size_t channels = shape[static_cast<std::size_t>(channel_axis)];
  std::size_t inner = 1;
  for (auto a = channel_axis + 1; a < rank; ++a) inner *= shape[static_cast<std::size_t>(a)];
  const std::size_t outer = t.size() / (channels * inner);
  if (channels == 0 || t.size() == 0) {
    throw std::invalid_argument("gap_pool: empty tensor");
  }

  std::vector<double> sums(channels, 0.0);
  const T* p = t.raw();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t c = 0; c < channels; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < inner; ++i) s += static_cast<double>(*p++);
      sums[c] += s;
    }
  }
  const double n = static_cast<double>(outer * inner);
  for (auto& s : sums) s /= n;
  return sums;
}

template std::vector<double> gap_pool(const Tensor<float>&, std::ptrdiff_t);
template std::vector<double> gap_pool(const Tensor<double>&, std::ptrdiff_t);

}  // namespace stadyn

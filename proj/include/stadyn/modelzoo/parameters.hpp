#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stadyn/numerics/tensor.hpp"

namespace stadyn::zoo {

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> value;
};

/// Ordered named tensors; declaration order is the serialization order.
template <typename T>
class ParameterSet {
 public:
  void add(std::string name, Tensor<T> value) {
    if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
    entries_.push_back({std::move(name), std::move(value)});
  }

  bool contains(std::string_view name) const {
    for (const auto& e : entries_) {
      if (e.name == name) return true;
    }
    return false;
  }

  Tensor<T>& operator[](std::string_view name) {
    for (auto& e : entries_) {
      if (e.name == name) return e.value;
    }
    throw std::out_of_range("no parameter '" + std::string(name) + "'");
  }
  const Tensor<T>& operator[](std::string_view name) const {
    return const_cast<ParameterSet&>(*this)[name];
  }

  std::vector<NamedTensor<T>>& entries() { return entries_; }
  const std::vector<NamedTensor<T>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t total_values() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  ParameterSet zeros_like() const {
    ParameterSet out;
    for (const auto& e : entries_) out.add(e.name, Tensor<T>(e.value.shape()));
    return out;
  }

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>());
    return out;
  }

  bool bitwise_equal(const ParameterSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].name != other.entries_[i].name ||
          !entries_[i].value.bitwise_equal(other.entries_[i].value)) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<NamedTensor<T>> entries_;
};

}  // namespace stadyn::zoo

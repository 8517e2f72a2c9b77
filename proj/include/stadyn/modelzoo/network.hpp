#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "stadyn/modelzoo/descriptor.hpp"
#include "stadyn/modelzoo/parameters.hpp"
#include "stadyn/pairgen/video.hpp"

namespace stadyn::zoo {

/// Per-layer channel multipliers applied to a block output before capture
/// and before the nonlinearity. Used for removal masks and dropout.
template <typename T>
using ChannelScales = std::map<std::string, std::vector<T>>;

/// Layer name -> captured block output (pre-nonlinearity).
template <typename T>
using LayerActivations = std::map<std::string, Tensor<T>>;

template <typename T>
struct ForwardPass {
  /// Class logits (num_classes) or key-frame mask logits (H * W, row-major).
  std::vector<T> output;
  LayerActivations<T> captured;
};

/// Small spatiotemporal network described by an ArchitectureDescriptor.
/// T = float for training, double for gradient verification.
template <typename T>
class Network {
 public:
  /// Fan-in uniform initialization from `seed`; biases start at zero.
  Network(ArchitectureDescriptor desc, std::uint64_t seed);
  /// Adopts existing parameters; names and shapes must match the layout.
  Network(ArchitectureDescriptor desc, ParameterSet<T> params);

  const ArchitectureDescriptor& descriptor() const { return desc_; }
  const ParameterSet<T>& parameters() const { return params_; }
  ParameterSet<T>& parameters() { return params_; }

  ForwardPass<T> forward(const pairgen::Video& video, bool capture = false,
                         const ChannelScales<T>* scales = nullptr) const;

  /// Global-average-pooled captures for the requested layers.
  std::map<std::string, std::vector<double>> pooled(const pairgen::Video& video,
                                                    const std::vector<std::string>& layers,
                                                    const ChannelScales<T>* scales = nullptr) const;

  /// Predicted class, or -1 for segmenters.
  int predict(const pairgen::Video& video) const;

  /// Mean loss over the batch (cross-entropy or per-pixel binary
  /// cross-entropy). `grads` is overwritten with loss_scale * d(mean loss).
  /// `per_sample`, when non-empty, gives one ChannelScales per item.
  T loss_and_gradients(std::span<const pairgen::LabeledVideo* const> batch, ParameterSet<T>& grads,
                       T loss_scale = T{1}, std::span<const ChannelScales<T>> per_sample = {}) const;

  T loss(std::span<const pairgen::LabeledVideo* const> batch,
         std::span<const ChannelScales<T>> per_sample = {}) const;

  /// Persistent removal: zeroes `channels` of `layer`. Masks compose by union.
  void remove_channels(const std::string& layer, const std::vector<std::size_t>& channels);
  void clear_removals() { masks_.clear(); }
  const ChannelScales<T>& removal_masks() const { return masks_; }

  template <typename U>
  Network<U> cast() const {
    Network<U> out(desc_, params_.template cast<U>());
    for (const auto& [layer, m] : masks_) {
      std::vector<std::size_t> removed;
      for (std::size_t c = 0; c < m.size(); ++c) {
        if (m[c] == T{0}) removed.push_back(c);
      }
      out.remove_channels(layer, removed);
    }
    return out;
  }

 private:
  struct Cache;
  ForwardPass<T> run(const pairgen::Video& video, bool capture, const ChannelScales<T>* scales, Cache* cache) const;
  T sample_gradient(const pairgen::LabeledVideo& item, T weight, const ChannelScales<T>* scales,
                    ParameterSet<T>& grads) const;
  T sample_loss(const pairgen::LabeledVideo& item, const std::vector<T>& output) const;

  ArchitectureDescriptor desc_;
  ParameterSet<T> params_;
  ChannelScales<T> masks_;
};

/// Parameter names and shapes in declaration order, randomly initialized.
template <typename T>
ParameterSet<T> initial_parameters(const ArchitectureDescriptor& desc, std::uint64_t seed);

extern template class Network<float>;
extern template class Network<double>;

}  // namespace stadyn::zoo

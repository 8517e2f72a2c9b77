#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "stadyn/numerics/rng.hpp"
#include "stadyn/numerics/tensor.hpp"

namespace stadyn::pairgen {

/// Per-frame appearance: what a single frame reveals.
struct StaticFactor {
  int palette = 0;
  int texture = 0;
  int shape = 0;
  bool operator==(const StaticFactor&) const = default;
};

/// Multi-frame behavior: direction is one of 8 compass bins (0 = east,
/// counter-clockwise in 45 degree steps), speed in px/frame, flicker period
/// in frames (0 = none).
struct DynamicFactor {
  int direction = 0;
  int speed = 1;
  int flicker_period = 0;
  bool operator==(const DynamicFactor&) const = default;
};

struct VideoFactors {
  StaticFactor statics;
  DynamicFactor dynamics;
  bool operator==(const VideoFactors&) const = default;
};

/// RGB frames (T, H, W, 3) in [0, 1] plus the frame-difference flow analog
/// (T, H, W, 2) holding per-pixel (u, v) vectors.
struct Video {
  Tensor<float> frames;
  Tensor<float> flow;

  std::size_t num_frames() const { return frames.extent(0); }
  std::size_t height() const { return frames.extent(1); }
  std::size_t width() const { return frames.extent(2); }
  bool has_flow() const { return !flow.empty(); }
};

enum class TaskMode { StaticOnly, DynamicOnly, Mixed, Camouflage };

std::string_view to_string(TaskMode mode);
TaskMode task_mode_from_string(std::string_view text);

struct VideoSpec {
  std::size_t frames = 8;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t channels = 3;
  int palettes = 4;  // at most kMaxPalettes
  int textures = 4;
  int shapes = 4;
  int styles = 4;
};

inline constexpr int kMaxPalettes = 8;
inline constexpr int kDirections = 8;
inline constexpr int kSpeeds[] = {1, 2};
inline constexpr int kFlickerPeriods[] = {0, 2, 4};

struct LabeledVideo {
  Video video;
  int label = 0;
  VideoFactors factors;
  /// Ground-truth foreground per frame, (T, H, W) in {0, 1}; camouflage only.
  Tensor<float> mask;
};

struct Dataset {
  VideoSpec spec;
  TaskMode mode = TaskMode::Mixed;
  std::vector<LabeledVideo> items;

  std::size_t size() const { return items.size(); }
  int num_classes() const;
};

int num_classes(TaskMode mode, const VideoSpec& spec);

/// Class label implied by the factors under a task mode.
int label_for(TaskMode mode, const VideoSpec& spec, const VideoFactors& factors);

/// Renders one video. `rng` supplies nuisance parameters (start position,
/// background and texture noise).
LabeledVideo render_video(const VideoSpec& spec, TaskMode mode, const VideoFactors& factors, Rng& rng);

/// Samples factors uniformly and renders `n` videos. Video i uses substream
/// rng.derive(i), so output is independent of generation order.
Dataset generate_dataset(TaskMode mode, std::size_t n, const VideoSpec& spec, const Rng& rng);

/// Normal-flow analog of the luminance sequence: for each frame t < T-1,
/// (u, v) = -I_t * grad(I) / (|grad(I)|^2 + eps), clipped to [-kFlowClip,
/// kFlowClip]; the last frame repeats frame T-2. Zero wherever the frame
/// difference is zero.
Tensor<float> flow_analog(const Tensor<float>& frames);
inline constexpr float kFlowClip = 4.0f;

/// Reorders frames: out[t] = in[perm[t]].
Tensor<float> permute_frames(const Tensor<float>& frames, const std::vector<std::size_t>& perm);

/// Applies one non-identity frame permutation per video and recomputes flow.
Dataset shuffle_dataset_frames(const Dataset& data, const Rng& rng);

}  // namespace stadyn::pairgen

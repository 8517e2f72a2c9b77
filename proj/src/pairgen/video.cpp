#include "stadyn/pairgen/video.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace stadyn::pairgen {

namespace {

struct Palette {
  std::array<float, 3> object;
  std::array<float, 3> background;
};

constexpr std::array<Palette, kMaxPalettes> kPalettes{{
    {{0.90f, 0.20f, 0.20f}, {0.20f, 0.30f, 0.60f}},
    {{0.20f, 0.85f, 0.30f}, {0.60f, 0.20f, 0.50f}},
    {{0.25f, 0.35f, 0.90f}, {0.70f, 0.60f, 0.20f}},
    {{0.90f, 0.80f, 0.25f}, {0.25f, 0.55f, 0.30f}},
    {{0.85f, 0.45f, 0.85f}, {0.15f, 0.45f, 0.25f}},
    {{0.30f, 0.85f, 0.85f}, {0.55f, 0.25f, 0.20f}},
    {{0.95f, 0.60f, 0.20f}, {0.20f, 0.20f, 0.45f}},
    {{0.60f, 0.60f, 0.60f}, {0.35f, 0.15f, 0.40f}},
}};

// Compass unit steps, y grows downward.
constexpr std::array<std::array<int, 2>, kDirections> kSteps{{
    {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1},
}};

// Deterministic value noise in [0, 1) keyed by integer coordinates.
float hash_noise(std::uint64_t seed, std::int64_t x, std::int64_t y) {
  const std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(x) * 0x9E3779B97F4A7C15ULL +
                                             static_cast<std::uint64_t>(y)));
  return static_cast<float>(h >> 40) * 0x1.0p-24f;
}

double wrap_offset(double d, double extent) {
  d = std::fmod(d, extent);
  if (d < -extent / 2) d += extent;
  if (d >= extent / 2) d -= extent;
  return d;
}

bool inside_shape(int shape, double dx, double dy) {
  const double size = (shape % 2 == 0) ? 2.5 : 3.5;
  if (shape < 2) return std::abs(dx) <= size - 0.5 && std::abs(dy) <= size - 0.5;
  return dx * dx + dy * dy <= size * size;
}

float texture_gain(int texture, std::int64_t lx, std::int64_t ly, std::uint64_t seed) {
  switch (texture) {
    case 1: return (((ly % 2) + 2) % 2) ? 0.7f : 1.0f;
    case 2: return ((((lx + ly) % 2) + 2) % 2) ? 0.7f : 1.0f;
    case 3: return 0.7f + 0.3f * hash_noise(seed, lx, ly);
    default: return 1.0f;
  }
}

}  // namespace

std::string_view to_string(TaskMode mode) {
  switch (mode) {
    case TaskMode::StaticOnly: return "StaticOnly";
    case TaskMode::DynamicOnly: return "DynamicOnly";
    case TaskMode::Mixed: return "Mixed";
    case TaskMode::Camouflage: return "Camouflage";
  }
  return "?";
}

TaskMode task_mode_from_string(std::string_view text) {
  for (auto m : {TaskMode::StaticOnly, TaskMode::DynamicOnly, TaskMode::Mixed, TaskMode::Camouflage}) {
    if (to_string(m) == text) return m;
  }
  throw std::invalid_argument("unknown task mode '" + std::string(text) + "'");
}

int num_classes(TaskMode mode, const VideoSpec& spec) {
  switch (mode) {
    case TaskMode::StaticOnly: return spec.palettes;
    case TaskMode::DynamicOnly: return kDirections;
    case TaskMode::Mixed: return spec.palettes * kDirections;
    case TaskMode::Camouflage: return 1;
  }
  return 0;
}

int Dataset::num_classes() const { return pairgen::num_classes(mode, spec); }

int label_for(TaskMode mode, const VideoSpec&, const VideoFactors& f) {
  switch (mode) {
    case TaskMode::StaticOnly: return f.statics.palette;
    case TaskMode::DynamicOnly: return f.dynamics.direction;
    case TaskMode::Mixed: return f.statics.palette * kDirections + f.dynamics.direction;
    case TaskMode::Camouflage: return 0;
  }
  return 0;
}

LabeledVideo render_video(const VideoSpec& spec, TaskMode mode, const VideoFactors& f, Rng& rng) {
  if (spec.channels != 3) throw std::invalid_argument("render_video: only 3 color channels supported");
  if (spec.frames < 1 || spec.height < 4 || spec.width < 4) {
    throw std::invalid_argument("render_video: video must be at least 1x4x4");
  }
  if (spec.palettes < 1 || spec.palettes > kMaxPalettes) {
    throw std::invalid_argument("render_video: palettes must be in [1, 8]");
  }
  const auto T = spec.frames, H = spec.height, W = spec.width;
  const double cx0 = rng.uniform(0.0, static_cast<double>(W));
  const double cy0 = rng.uniform(0.0, static_cast<double>(H));
  const std::uint64_t bg_seed = rng.next_u64();
  const std::uint64_t tex_seed = rng.next_u64();
  const auto step = kSteps.at(static_cast<std::size_t>(f.dynamics.direction));
  const bool camouflage = mode == TaskMode::Camouflage;
  const Palette& pal = kPalettes.at(static_cast<std::size_t>(f.statics.palette));

  LabeledVideo out;
  out.factors = f;
  out.label = label_for(mode, spec, f);
  out.video.frames = Tensor<float>({T, H, W, 3});
  if (camouflage) out.mask = Tensor<float>({T, H, W});

  for (std::size_t t = 0; t < T; ++t) {
    const double shift = static_cast<double>(t) * f.dynamics.speed;
    const double cx = cx0 + shift * step[0];
    const double cy = cy0 + shift * step[1];
    const int period = f.dynamics.flicker_period;
    const float brightness =
        (period > 0 && static_cast<int>(t % static_cast<std::size_t>(period)) >= period / 2) ? 0.5f : 1.0f;
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x) {
        const double dx = wrap_offset(static_cast<double>(x) + 0.5 - cx, static_cast<double>(W));
        const double dy = wrap_offset(static_cast<double>(y) + 0.5 - cy, static_cast<double>(H));
        const bool inside = inside_shape(f.statics.shape, dx, dy);
        // Object-local integer coordinates anchor the texture to the object.
        const auto lx = static_cast<std::int64_t>(std::floor(dx + 8.0));
        const auto ly = static_cast<std::int64_t>(std::floor(dy + 8.0));
        float* px = &out.video.frames.at(t, y, x, 0);
        if (camouflage) {
          // Object and background share one noise distribution; only motion
          // separates them.
          const float n = inside ? hash_noise(tex_seed, lx, ly)
                                 : hash_noise(bg_seed, static_cast<std::int64_t>(x), static_cast<std::int64_t>(y));
          const float g = 0.15f + 0.7f * n;
          for (int c = 0; c < 3; ++c) px[c] = g * (0.8f + 0.2f * pal.object[static_cast<std::size_t>(c)]);
          out.mask[(t * H + y) * W + x] = inside ? 1.0f : 0.0f;
        } else if (inside) {
          const float gain = texture_gain(f.statics.texture, lx, ly, tex_seed) * brightness;
          for (int c = 0; c < 3; ++c) px[c] = std::clamp(pal.object[static_cast<std::size_t>(c)] * gain, 0.0f, 1.0f);
        } else {
          const float n = 0.12f * (hash_noise(bg_seed, static_cast<std::int64_t>(x), static_cast<std::int64_t>(y)) - 0.5f);
          for (int c = 0; c < 3; ++c) px[c] = std::clamp(pal.background[static_cast<std::size_t>(c)] + n, 0.0f, 1.0f);
        }
      }
    }
  }
  out.video.flow = flow_analog(out.video.frames);
  return out;
}

Dataset generate_dataset(TaskMode mode, std::size_t n, const VideoSpec& spec, const Rng& rng) {
  if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");
  Dataset data;
  data.spec = spec;
  data.mode = mode;
  data.items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng sub = rng.derive(static_cast<std::uint64_t>(i));
    VideoFactors f;
    f.statics.palette = static_cast<int>(sub.uniform_int(static_cast<std::uint64_t>(spec.palettes)));
    f.statics.texture = static_cast<int>(sub.uniform_int(static_cast<std::uint64_t>(spec.textures)));
    f.statics.shape = static_cast<int>(sub.uniform_int(static_cast<std::uint64_t>(spec.shapes)));
    f.dynamics.direction = static_cast<int>(sub.uniform_int(kDirections));
    f.dynamics.speed = kSpeeds[sub.uniform_int(std::size(kSpeeds))];
    f.dynamics.flicker_period = kFlickerPeriods[sub.uniform_int(std::size(kFlickerPeriods))];
    if (mode == TaskMode::Camouflage) {
      f.statics.shape = 1 + 2 * static_cast<int>(sub.uniform_int(2));  // large shapes only
      f.statics.texture = 0;
      f.dynamics.flicker_period = 0;
    }
    data.items.push_back(render_video(spec, mode, f, sub));
  }
  return data;
}

Tensor<float> flow_analog(const Tensor<float>& frames) {
  if (frames.rank() != 4 || frames.extent(3) != 3) {
    throw std::invalid_argument("flow_analog: expected (T, H, W, 3) frames, got " + shape_to_string(frames.shape()));
  }
  const auto T = frames.extent(0), H = frames.extent(1), W = frames.extent(2);
  Tensor<float> flow({T, H, W, 2});
  if (T < 2) return flow;
  constexpr double kEps = 0.01;
  auto lum = [&](std::size_t t, std::size_t y, std::size_t x) {
    const float* p = &frames.at(t, y, x, 0);
    return (static_cast<double>(p[0]) + p[1] + p[2]) / 3.0;
  };
  for (std::size_t t = 0; t + 1 < T; ++t) {
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x) {
        const double it = lum(t + 1, y, x) - lum(t, y, x);
        if (it == 0.0) continue;
        const std::size_t xl = x ? x - 1 : x, xr = x + 1 < W ? x + 1 : x;
        const std::size_t yu = y ? y - 1 : y, yd = y + 1 < H ? y + 1 : y;
        const double ix = (lum(t, y, xr) - lum(t, y, xl)) / static_cast<double>(xr - xl);
        const double iy = (lum(t, yd, x) - lum(t, yu, x)) / static_cast<double>(yd - yu);
        const double denom = ix * ix + iy * iy + kEps;
        const double clip = kFlowClip;
        flow.at(t, y, x, 0) = static_cast<float>(std::clamp(-it * ix / denom, -clip, clip));
        flow.at(t, y, x, 1) = static_cast<float>(std::clamp(-it * iy / denom, -clip, clip));
      }
    }
  }
  const std::size_t frame = H * W * 2;
  std::copy_n(flow.raw() + (T - 2) * frame, frame, flow.raw() + (T - 1) * frame);
  return flow;
}

Tensor<float> permute_frames(const Tensor<float>& frames, const std::vector<std::size_t>& perm) {
  const auto T = frames.extent(0);
  if (perm.size() != T) throw std::invalid_argument("permute_frames: permutation length != frame count");
  std::vector<bool> seen(T, false);
  for (auto p : perm) {
    if (p >= T || seen[p]) throw std::invalid_argument("permute_frames: not a permutation");
    seen[p] = true;
  }
  const std::size_t frame = frames.size() / T;
  Tensor<float> out(frames.shape());
  for (std::size_t t = 0; t < T; ++t) {
    std::copy_n(frames.raw() + perm[t] * frame, frame, out.raw() + t * frame);
  }
  return out;
}

Dataset shuffle_dataset_frames(const Dataset& data, const Rng& rng) {
  Dataset out = data;
  for (std::size_t i = 0; i < out.items.size(); ++i) {
    auto& item = out.items[i];
    Rng sub = rng.derive(static_cast<std::uint64_t>(i));
    const auto perm = sub.non_identity_permutation(item.video.num_frames());
    item.video.frames = permute_frames(item.video.frames, perm);
    item.video.flow = flow_analog(item.video.frames);
    if (!item.mask.empty()) {
      item.mask = permute_frames(item.mask.reshaped({item.mask.extent(0), item.mask.extent(1), item.mask.extent(2), 1}),
                                 perm)
                      .reshaped(item.mask.shape());
    }
  }
  return out;
}

}  // namespace stadyn::pairgen

#include "stadyn/modelzoo/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "stadyn/modelzoo/fusion.hpp"
#include "stadyn/modelzoo/layers.hpp"

namespace stadyn::zoo {

namespace {

template <typename T>
void add_conv(ParameterSet<T>& p, const std::string& name, Shape shape, Rng& rng) {
  const std::size_t fan_in = shape[0] * shape[1] * shape[2] * shape[3];
  const std::size_t out = shape[4];
  p.add(name + ".w", fan_in_uniform<T>(std::move(shape), fan_in, rng, kReluGain));
  p.add(name + ".b", Tensor<T>({out}));
}

// RGB inputs are shifted to zero mid-gray before the first convolution.
constexpr double kInputCenter = 0.5;

template <typename T>
Tensor<T> key_frame(const Tensor<float>& src, std::size_t key, double shift) {
  const std::size_t H = src.extent(1), W = src.extent(2), C = src.extent(3);
  Tensor<T> out({1, H, W, C});
  const float* base = src.raw() + key * H * W * C;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(base[i]) - static_cast<T>(shift);
  return out;
}

template <typename T>
Tensor<T> centered(const Tensor<float>& src) {
  Tensor<T> out = src.template cast<T>();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= static_cast<T>(kInputCenter);
  return out;
}

}  // namespace

template <typename T>
ParameterSet<T> initial_parameters(const ArchitectureDescriptor& desc, std::uint64_t seed) {
  desc.validate();
  Rng rng = Rng(seed).derive("init");
  ParameterSet<T> p;
  const std::size_t c1 = desc.widths[0], c2 = desc.widths[1];
  std::size_t head_in = c2;
  if (desc.kind == ModelKind::SingleStream3D) {
    add_conv(p, "block1", {3, 3, 3, 3, c1}, rng);
    add_conv(p, "block2", {3, 3, 3, c1, c2}, rng);
  } else {
    add_conv(p, "app1", {1, 3, 3, 3, c1}, rng);
    add_conv(p, "mot1", {1, 3, 3, 2, c1}, rng);
    add_cross_parameters(p, "cross", desc.cross_connection, c1, rng);
    add_conv(p, "app2", {1, 3, 3, c1, c2}, rng);
    add_conv(p, "mot2", {1, 3, 3, c1, c2}, rng);
    add_fusion_parameters(p, "fusion", desc.fusion, c2, desc.se_hidden(), rng);
    head_in = 2 * c2;
  }
  if (desc.head == Head::Classifier) {
    const auto K = static_cast<std::size_t>(desc.num_classes);
    p.add("head.w", fan_in_uniform<T>({head_in, K}, head_in, rng, kReluGain));
    p.add("head.b", Tensor<T>({K}));
  } else {
    p.add("head.w", fan_in_uniform<T>({1, 1, 1, head_in, 1}, head_in, rng, kReluGain));
    p.add("head.b", Tensor<T>({1}));
  }
  return p;
}

template <typename T>
struct Network<T>::Cache {
  // Inputs and pre-activation (scaled) block outputs.
  Tensor<T> x0, m0;
  Tensor<T> p1, p2, pm1, pm2;
  std::vector<T> s1, s2, sm1, sm2, sf;  // applied channel multipliers (empty = none)
  Tensor<T> pooled_in;                  // SingleStream: pooled block-1 activation
  CrossResult<T> cross;
  CcgChannelResult<T> ccg;
  GatedChannelResult<T> gated;
  Tensor<T> ua, um;
  SpatialResult<T> spatial;
  Tensor<T> z;  // fusion output (scaled)
  std::vector<T> head_in;
};

template <typename T>
Network<T>::Network(ArchitectureDescriptor desc, std::uint64_t seed)
    : desc_(std::move(desc)), params_(initial_parameters<T>(desc_, seed)) {}

template <typename T>
Network<T>::Network(ArchitectureDescriptor desc, ParameterSet<T> params)
    : desc_(std::move(desc)), params_(std::move(params)) {
  const ParameterSet<T> layout = initial_parameters<T>(desc_, 0);
  if (layout.size() != params_.size()) {
    throw std::invalid_argument("parameter count " + std::to_string(params_.size()) + " does not match layout (" +
                                std::to_string(layout.size()) + ")");
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& want = layout.entries()[i];
    const auto& got = params_.entries()[i];
    if (want.name != got.name || want.value.shape() != got.value.shape()) {
      throw std::invalid_argument("parameter " + std::to_string(i) + ": expected " + want.name + " " +
                                  shape_to_string(want.value.shape()) + ", got " + got.name + " " +
                                  shape_to_string(got.value.shape()));
    }
  }
}

template <typename T>
void Network<T>::remove_channels(const std::string& layer, const std::vector<std::size_t>& channels) {
  const std::size_t n = desc_.layer_channels(layer);
  const auto layers = desc_.probe_layers();
  if (std::find(layers.begin(), layers.end(), layer) == layers.end()) {
    throw std::invalid_argument("layer '" + layer + "' is not a block output of this model");
  }
  auto& m = masks_.try_emplace(layer, std::vector<T>(n, T{1})).first->second;
  for (std::size_t c : channels) {
    if (c >= n) {
      throw std::invalid_argument("channel " + std::to_string(c) + " out of range for layer '" + layer + "' (" +
                                  std::to_string(n) + " channels)");
    }
    m[c] = T{0};
  }
}

template <typename T>
ForwardPass<T> Network<T>::run(const pairgen::Video& video, bool capture, const ChannelScales<T>* scales,
                               Cache* cache) const {
  const auto& d = desc_;
  if (video.num_frames() != d.frames || video.height() != d.height || video.width() != d.width ||
      video.frames.extent(3) != 3) {
    throw std::invalid_argument("input " + shape_to_string(video.frames.shape()) + " does not match descriptor (" +
                                std::to_string(d.frames) + "," + std::to_string(d.height) + "," +
                                std::to_string(d.width) + ",3)");
  }
  Cache local;
  Cache& c = cache ? *cache : local;
  ForwardPass<T> out;

  // Multiplies persistent masks and per-call scales into the block output.
  const auto apply = [&](Tensor<T>& t, const std::string& layer, std::vector<T>& used) {
    used.clear();
    const std::size_t n = t.extent(3);
    const auto merge = [&](const ChannelScales<T>& src) {
      const auto it = src.find(layer);
      if (it == src.end()) return;
      if (it->second.size() != n) throw std::invalid_argument("channel scales for '" + layer + "' have wrong width");
      if (used.empty()) used.assign(n, T{1});
      for (std::size_t i = 0; i < n; ++i) used[i] *= it->second[i];
    };
    merge(masks_);
    if (scales) merge(*scales);
    if (!used.empty()) scale_channels<T>(t, used);
    if (capture) out.captured.emplace(layer, t);
  };

  const auto& p = params_;
  if (d.kind == ModelKind::SingleStream3D) {
    c.x0 = centered<T>(video.frames);
    c.p1 = conv(c.x0, p["block1.w"], &p["block1.b"]);
    apply(c.p1, "block1", c.s1);
    c.pooled_in = avg_pool2(relu(c.p1));
    c.p2 = conv(c.pooled_in, p["block2.w"], &p["block2.b"]);
    apply(c.p2, "block2", c.s2);
    c.head_in = channel_mean(relu(c.p2));
    out.output = linear<T>(c.head_in, p["head.w"], p["head.b"]);
    return out;
  }

  if (!video.has_flow()) throw std::invalid_argument("two-stream model needs the flow analog");
  c.x0 = key_frame<T>(video.frames, d.key_frame, kInputCenter);
  c.m0 = key_frame<T>(video.flow, d.key_frame, 0.0);
  c.p1 = conv(c.x0, p["app1.w"], &p["app1.b"]);
  apply(c.p1, "app1", c.s1);
  c.pm1 = conv(c.m0, p["mot1.w"], &p["mot1.b"]);
  apply(c.pm1, "mot1", c.sm1);
  c.cross = cross_connect(relu(c.p1), relu(c.pm1), d.cross_connection, p, "cross");
  c.p2 = conv(c.cross.appearance, p["app2.w"], &p["app2.b"]);
  apply(c.p2, "app2", c.s2);
  c.pm2 = conv(c.cross.motion, p["mot2.w"], &p["mot2.b"]);
  apply(c.pm2, "mot2", c.sm2);
  c.ua = relu(c.p2);
  c.um = relu(c.pm2);
  if (d.fusion == Fusion::ConvexCombinationGated) {
    c.ccg = ccg_channel_attention(c.ua, c.um, p, "fusion");
    c.spatial = ccg_spatial_attention(c.ccg.za, c.ccg.zm, p, "fusion");
  } else {
    c.gated = gated_channel_attention(c.ua, c.um, p, "fusion");
    c.spatial = gated_spatial_attention(c.gated.z, p, "fusion");
  }
  c.z = c.spatial.z;
  apply(c.z, "fusion", c.sf);
  if (d.head == Head::Classifier) {
    c.head_in = channel_mean(c.z);
    out.output = linear<T>(c.head_in, p["head.w"], p["head.b"]);
  } else {
    const Tensor<T> logits = conv(c.z, p["head.w"], &p["head.b"]);
    out.output.assign(logits.data().begin(), logits.data().end());
  }
  return out;
}

template <typename T>
ForwardPass<T> Network<T>::forward(const pairgen::Video& video, bool capture, const ChannelScales<T>* scales) const {
  return run(video, capture, scales, nullptr);
}

template <typename T>
std::map<std::string, std::vector<double>> Network<T>::pooled(const pairgen::Video& video,
                                                              const std::vector<std::string>& layers,
                                                              const ChannelScales<T>* scales) const {
  const auto pass = run(video, true, scales, nullptr);
  std::map<std::string, std::vector<double>> out;
  for (const auto& layer : layers) {
    const auto it = pass.captured.find(layer);
    if (it == pass.captured.end()) throw std::invalid_argument("model has no layer '" + layer + "'");
    out.emplace(layer, gap_pool(it->second));
  }
  return out;
}

template <typename T>
int Network<T>::predict(const pairgen::Video& video) const {
  if (desc_.head != Head::Classifier) return -1;
  const auto logits = forward(video).output;
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

namespace {

template <typename T>
T softplus(T x) {
  return std::max(x, T{0}) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

template <typename T>
T Network<T>::sample_loss(const pairgen::LabeledVideo& item, const std::vector<T>& output) const {
  if (desc_.head == Head::Classifier) {
    if (item.label < 0 || item.label >= desc_.num_classes) {
      throw std::invalid_argument("label " + std::to_string(item.label) + " out of range [0, " +
                                  std::to_string(desc_.num_classes) + ")");
    }
    const T mx = *std::max_element(output.begin(), output.end());
    T sum = 0;
    for (T v : output) sum += std::exp(v - mx);
    return mx + std::log(sum) - output[static_cast<std::size_t>(item.label)];
  }
  const std::size_t P = desc_.height * desc_.width;
  if (item.mask.size() != desc_.frames * P) throw std::invalid_argument("segmentation target needs a mask");
  const float* t = item.mask.raw() + desc_.key_frame * P;
  T total = 0;
  for (std::size_t i = 0; i < P; ++i) total += softplus(output[i]) - static_cast<T>(t[i]) * output[i];
  return total / static_cast<T>(P);
}

template <typename T>
T Network<T>::sample_gradient(const pairgen::LabeledVideo& item, T weight, const ChannelScales<T>* scales,
                              ParameterSet<T>& g) const {
  const auto& d = desc_;
  const auto& p = params_;
  Cache c;
  const auto pass = run(item.video, false, scales, &c);
  const T loss = sample_loss(item, pass.output);

  std::vector<T> dout(pass.output.size());
  if (d.head == Head::Classifier) {
    const T mx = *std::max_element(pass.output.begin(), pass.output.end());
    T sum = 0;
    for (std::size_t k = 0; k < dout.size(); ++k) sum += (dout[k] = std::exp(pass.output[k] - mx));
    for (std::size_t k = 0; k < dout.size(); ++k) {
      dout[k] = weight * (dout[k] / sum - (static_cast<int>(k) == item.label ? T{1} : T{0}));
    }
  } else {
    const std::size_t P = dout.size();
    const float* t = item.mask.raw() + d.key_frame * P;
    for (std::size_t i = 0; i < P; ++i) {
      dout[i] = weight * (sigmoid(pass.output[i]) - static_cast<T>(t[i])) / static_cast<T>(P);
    }
  }

  // Gradient w.r.t. a scaled pre-activation -> gradient w.r.t. the raw conv output.
  const auto unscale = [](Tensor<T>& dt, const std::vector<T>& s) {
    if (!s.empty()) scale_channels<T>(dt, s);
  };

  if (d.kind == ModelKind::SingleStream3D) {
    const auto dh = linear_backward<T>(c.head_in, p["head.w"], dout, g["head.w"], g["head.b"]);
    Tensor<T> dh2(c.p2.shape());
    channel_mean_backward<T>(dh, dh2);
    Tensor<T> dp2 = relu_backward(c.p2, dh2);
    unscale(dp2, c.s2);
    Tensor<T> dq;
    conv_backward(c.pooled_in, p["block2.w"], dp2, g["block2.w"], &g["block2.b"], &dq);
    Tensor<T> dp1 = relu_backward(c.p1, avg_pool2_backward(c.p1.shape(), dq));
    unscale(dp1, c.s1);
    conv_backward(c.x0, p["block1.w"], dp1, g["block1.w"], &g["block1.b"], static_cast<Tensor<T>*>(nullptr));
    return loss;
  }

  Tensor<T> dz(c.z.shape());
  if (d.head == Head::Classifier) {
    const auto dh = linear_backward<T>(c.head_in, p["head.w"], dout, g["head.w"], g["head.b"]);
    channel_mean_backward<T>(dh, dz);
  } else {
    const Tensor<T> dlog({1, d.height, d.width, 1}, dout);
    conv_backward(c.z, p["head.w"], dlog, g["head.w"], &g["head.b"], &dz);
  }
  unscale(dz, c.sf);

  Tensor<T> dua, dum;
  if (d.fusion == Fusion::ConvexCombinationGated) {
    auto [dza, dzm] = ccg_spatial_attention_backward(c.ccg.za, c.ccg.zm, p, "fusion", c.spatial, dz, g);
    std::tie(dua, dum) = ccg_channel_attention_backward(c.ua, c.um, p, "fusion", c.ccg, dza, dzm, g);
  } else {
    Tensor<T> dzc = gated_spatial_attention_backward(c.gated.z, p, "fusion", c.spatial, dz, g);
    std::tie(dua, dum) = gated_channel_attention_backward(c.ua, c.um, p, "fusion", c.gated, dzc, g);
  }
  Tensor<T> dp2 = relu_backward(c.p2, dua);
  unscale(dp2, c.s2);
  Tensor<T> dpm2 = relu_backward(c.pm2, dum);
  unscale(dpm2, c.sm2);
  Tensor<T> dca, dcm;
  conv_backward(c.cross.appearance, p["app2.w"], dp2, g["app2.w"], &g["app2.b"], &dca);
  conv_backward(c.cross.motion, p["mot2.w"], dpm2, g["mot2.w"], &g["mot2.b"], &dcm);
  const Tensor<T> ha1 = relu(c.p1), hm1 = relu(c.pm1);
  auto [dha1, dhm1] = cross_connect_backward(ha1, hm1, d.cross_connection, p, "cross", c.cross, dca, dcm, g);
  Tensor<T> dp1 = relu_backward(c.p1, dha1);
  unscale(dp1, c.s1);
  Tensor<T> dpm1 = relu_backward(c.pm1, dhm1);
  unscale(dpm1, c.sm1);
  conv_backward(c.x0, p["app1.w"], dp1, g["app1.w"], &g["app1.b"], static_cast<Tensor<T>*>(nullptr));
  conv_backward(c.m0, p["mot1.w"], dpm1, g["mot1.w"], &g["mot1.b"], static_cast<Tensor<T>*>(nullptr));
  return loss;
}

template <typename T>
T Network<T>::loss_and_gradients(std::span<const pairgen::LabeledVideo* const> batch, ParameterSet<T>& grads,
                                 T loss_scale, std::span<const ChannelScales<T>> per_sample) const {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (!per_sample.empty() && per_sample.size() != batch.size()) {
    throw std::invalid_argument("per-sample scales do not match batch size");
  }
  grads = params_.zeros_like();
  const T weight = loss_scale / static_cast<T>(batch.size());
  T total = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total += sample_gradient(*batch[i], weight, per_sample.empty() ? nullptr : &per_sample[i], grads);
  }
  return total / static_cast<T>(batch.size());
}

template <typename T>
T Network<T>::loss(std::span<const pairgen::LabeledVideo* const> batch,
                   std::span<const ChannelScales<T>> per_sample) const {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  T total = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto pass = run(batch[i]->video, false, per_sample.empty() ? nullptr : &per_sample[i], nullptr);
    total += sample_loss(*batch[i], pass.output);
  }
  return total / static_cast<T>(batch.size());
}

template ParameterSet<float> initial_parameters(const ArchitectureDescriptor&, std::uint64_t);
template ParameterSet<double> initial_parameters(const ArchitectureDescriptor&, std::uint64_t);
template class Network<float>;
template class Network<double>;

}  // namespace stadyn::zoo

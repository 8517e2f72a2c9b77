#include "stadyn/modelzoo/fusion.hpp"

#include <cmath>
#include <stdexcept>

#include "stadyn/modelzoo/layers.hpp"

namespace stadyn::zoo {

namespace {

template <typename T>
ExcitationCache<T> excite(const Tensor<T>& ua, const Tensor<T>& um, const ParameterSet<T>& p,
                          const std::string& prefix) {
  ExcitationCache<T> c;
  c.squeezed = channel_mean(ua);
  const auto sm = channel_mean(um);
  c.squeezed.insert(c.squeezed.end(), sm.begin(), sm.end());
  c.hidden_pre = linear<T>(c.squeezed, p[prefix + ".se.w1"], p[prefix + ".se.b1"]);
  std::vector<T> hidden(c.hidden_pre.size());
  for (std::size_t i = 0; i < hidden.size(); ++i) hidden[i] = c.hidden_pre[i] > T{0} ? c.hidden_pre[i] : T{0};
  c.gate = linear<T>(hidden, p[prefix + ".se.w2"], p[prefix + ".se.b2"]);
  for (auto& g : c.gate) g = sigmoid(g);
  return c;
}

/// Propagates dL/dgate through the excitation MLP into dua/dum (accumulated).
template <typename T>
void excite_backward(const ParameterSet<T>& p, const std::string& prefix, const ExcitationCache<T>& c,
                     std::span<const T> dgate, Tensor<T>& dua, Tensor<T>& dum, ParameterSet<T>& grads) {
  std::vector<T> dpre(dgate.size());
  for (std::size_t i = 0; i < dpre.size(); ++i) dpre[i] = dgate[i] * c.gate[i] * (T{1} - c.gate[i]);
  std::vector<T> hidden(c.hidden_pre.size());
  for (std::size_t i = 0; i < hidden.size(); ++i) hidden[i] = c.hidden_pre[i] > T{0} ? c.hidden_pre[i] : T{0};
  auto dh = linear_backward<T>(hidden, p[prefix + ".se.w2"], dpre, grads[prefix + ".se.w2"],
                               grads[prefix + ".se.b2"]);
  for (std::size_t i = 0; i < dh.size(); ++i) {
    if (c.hidden_pre[i] <= T{0}) dh[i] = T{0};
  }
  const auto ds = linear_backward<T>(c.squeezed, p[prefix + ".se.w1"], dh, grads[prefix + ".se.w1"],
                                     grads[prefix + ".se.b1"]);
  const std::size_t ca = dua.extent(3);
  channel_mean_backward<T>(std::span<const T>(ds).first(ca), dua);
  channel_mean_backward<T>(std::span<const T>(ds).subspan(ca), dum);
}

template <typename T>
Tensor<T> spatial_gate(const Tensor<T>& x, const ParameterSet<T>& p, const std::string& prefix) {
  Tensor<T> g = conv(x, p[prefix + ".sp.w"], &p[prefix + ".sp.b"]);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = sigmoid(g[i]);
  return g;
}

/// Backward through A = sigmoid(conv(x)); returns dx.
template <typename T>
Tensor<T> spatial_gate_backward(const Tensor<T>& x, const Tensor<T>& gate, const Tensor<T>& dgate,
                                const ParameterSet<T>& p, const std::string& prefix, ParameterSet<T>& grads) {
  Tensor<T> dpre(gate.shape());
  for (std::size_t i = 0; i < gate.size(); ++i) dpre[i] = dgate[i] * gate[i] * (T{1} - gate[i]);
  Tensor<T> dx;
  conv_backward(x, p[prefix + ".sp.w"], dpre, grads[prefix + ".sp.w"], &grads[prefix + ".sp.b"], &dx);
  return dx;
}

void check_same(const Shape& a, const Shape& b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": stream shapes differ");
}

}  // namespace

template <typename T>
CcgChannelResult<T> ccg_channel_attention(const Tensor<T>& ua, const Tensor<T>& um, const ParameterSet<T>& p,
                                          const std::string& prefix) {
  check_same(ua.shape(), um.shape(), "ccg_channel_attention");
  CcgChannelResult<T> r;
  r.cache = excite(ua, um, p, prefix);
  const std::size_t C = ua.extent(3);
  if (r.cache.gate.size() != C) throw std::invalid_argument("ccg_channel_attention: excitation width mismatch");
  r.motion_weight = convex_complement<T>(r.cache.gate);
  r.za = Tensor<T>(ua.shape());
  r.zm = Tensor<T>(um.shape());
  for (std::size_t i = 0; i < ua.size(); ++i) {
    r.za[i] = r.cache.gate[i % C] * ua[i];
    r.zm[i] = r.motion_weight[i % C] * um[i];
  }
  return r;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> ccg_channel_attention_backward(const Tensor<T>& ua, const Tensor<T>& um,
                                                               const ParameterSet<T>& p, const std::string& prefix,
                                                               const CcgChannelResult<T>& fwd, const Tensor<T>& dza,
                                                               const Tensor<T>& dzm, ParameterSet<T>& grads) {
  const std::size_t C = ua.extent(3);
  Tensor<T> dua(ua.shape()), dum(um.shape());
  std::vector<T> dgate(C, T{0});
  for (std::size_t i = 0; i < ua.size(); ++i) {
    const std::size_t c = i % C;
    dua[i] = fwd.cache.gate[c] * dza[i];
    dum[i] = fwd.motion_weight[c] * dzm[i];
    dgate[c] += dza[i] * ua[i] - dzm[i] * um[i];
  }
  excite_backward<T>(p, prefix, fwd.cache, dgate, dua, dum, grads);
  return {std::move(dua), std::move(dum)};
}

template <typename T>
GatedChannelResult<T> gated_channel_attention(const Tensor<T>& ua, const Tensor<T>& um, const ParameterSet<T>& p,
                                              const std::string& prefix) {
  check_same(ua.shape(), um.shape(), "gated_channel_attention");
  GatedChannelResult<T> r;
  r.cache = excite(ua, um, p, prefix);
  r.z = concat_channels(ua, um);
  const std::size_t C2 = r.z.extent(3);
  if (r.cache.gate.size() != C2) throw std::invalid_argument("gated_channel_attention: excitation width mismatch");
  scale_channels<T>(r.z, r.cache.gate);
  return r;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> gated_channel_attention_backward(const Tensor<T>& ua, const Tensor<T>& um,
                                                                 const ParameterSet<T>& p, const std::string& prefix,
                                                                 const GatedChannelResult<T>& fwd,
                                                                 const Tensor<T>& dz, ParameterSet<T>& grads) {
  const Tensor<T> u = concat_channels(ua, um);
  const std::size_t C2 = u.extent(3);
  Tensor<T> du(u.shape());
  std::vector<T> dgate(C2, T{0});
  for (std::size_t i = 0; i < u.size(); ++i) {
    const std::size_t c = i % C2;
    du[i] = fwd.cache.gate[c] * dz[i];
    dgate[c] += dz[i] * u[i];
  }
  auto [dua, dum] = split_channels(du, ua.extent(3));
  excite_backward<T>(p, prefix, fwd.cache, dgate, dua, dum, grads);
  return {std::move(dua), std::move(dum)};
}

template <typename T>
SpatialResult<T> ccg_spatial_attention(const Tensor<T>& za, const Tensor<T>& zm, const ParameterSet<T>& p,
                                       const std::string& prefix) {
  check_same(za.shape(), zm.shape(), "ccg_spatial_attention");
  SpatialResult<T> r;
  r.gate = spatial_gate(concat_channels(za, zm), p, prefix);
  r.complement = Tensor<T>(r.gate.shape(), convex_complement<T>(r.gate.data()));
  Tensor<T> a = za, m = zm;
  const std::size_t C = za.extent(3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] *= r.gate[i / C];
    m[i] *= r.complement[i / C];
  }
  r.z = concat_channels(a, m);
  return r;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> ccg_spatial_attention_backward(const Tensor<T>& za, const Tensor<T>& zm,
                                                               const ParameterSet<T>& p, const std::string& prefix,
                                                               const SpatialResult<T>& fwd, const Tensor<T>& dz,
                                                               ParameterSet<T>& grads) {
  const std::size_t C = za.extent(3);
  auto [dza_out, dzm_out] = split_channels(dz, C);
  Tensor<T> dza(za.shape()), dzm(zm.shape()), dgate(fwd.gate.shape());
  for (std::size_t i = 0; i < za.size(); ++i) {
    const std::size_t pos = i / C;
    dza[i] = fwd.gate[pos] * dza_out[i];
    dzm[i] = fwd.complement[pos] * dzm_out[i];
    dgate[pos] += dza_out[i] * za[i] - dzm_out[i] * zm[i];
  }
  const Tensor<T> dx = spatial_gate_backward(concat_channels(za, zm), fwd.gate, dgate, p, prefix, grads);
  auto [dxa, dxm] = split_channels(dx, C);
  for (std::size_t i = 0; i < dza.size(); ++i) {
    dza[i] += dxa[i];
    dzm[i] += dxm[i];
  }
  return {std::move(dza), std::move(dzm)};
}

template <typename T>
SpatialResult<T> gated_spatial_attention(const Tensor<T>& z, const ParameterSet<T>& p, const std::string& prefix) {
  SpatialResult<T> r;
  r.gate = spatial_gate(z, p, prefix);
  r.z = z;
  const std::size_t C = z.extent(3);
  for (std::size_t i = 0; i < z.size(); ++i) r.z[i] = (r.gate[i / C] + T{1}) * z[i];
  return r;
}

template <typename T>
Tensor<T> gated_spatial_attention_backward(const Tensor<T>& z, const ParameterSet<T>& p, const std::string& prefix,
                                           const SpatialResult<T>& fwd, const Tensor<T>& dz_out,
                                           ParameterSet<T>& grads) {
  const std::size_t C = z.extent(3);
  Tensor<T> dz(z.shape()), dgate(fwd.gate.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const std::size_t pos = i / C;
    dz[i] = (fwd.gate[pos] + T{1}) * dz_out[i];
    dgate[pos] += dz_out[i] * z[i];
  }
  const Tensor<T> dx = spatial_gate_backward(z, fwd.gate, dgate, p, prefix, grads);
  for (std::size_t i = 0; i < dz.size(); ++i) dz[i] += dx[i];
  return dz;
}

template <typename T>
CrossResult<T> cross_connect(const Tensor<T>& a, const Tensor<T>& m, CrossConnection topology,
                             const ParameterSet<T>& p, const std::string& prefix) {
  check_same(a.shape(), m.shape(), "cross_connect");
  CrossResult<T> r{a, m, {}, {}};
  if (topology == CrossConnection::None) return r;
  const std::size_t C = a.extent(3);
  const auto add_gated = [&](Tensor<T>& dst, const Tensor<T>& src, const std::string& name, Tensor<T>& conv_out) {
    conv_out = conv(src, p[name + ".w"], &p[name + ".b"]);
    const Tensor<T>& g = p[name + ".gate"];
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += sigmoid(g[i % C]) * conv_out[i];
  };
  add_gated(r.appearance, m, prefix + ".m2a", r.m2a_conv);
  if (topology == CrossConnection::Bidirectional) add_gated(r.motion, a, prefix + ".a2m", r.a2m_conv);
  return r;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> cross_connect_backward(const Tensor<T>& a, const Tensor<T>& m,
                                                       CrossConnection topology, const ParameterSet<T>& p,
                                                       const std::string& prefix, const CrossResult<T>& fwd,
                                                       const Tensor<T>& da_out, const Tensor<T>& dm_out,
                                                       ParameterSet<T>& grads) {
  Tensor<T> da = da_out, dm = dm_out;
  if (topology == CrossConnection::None) return {std::move(da), std::move(dm)};
  const std::size_t C = a.extent(3);
  // dst = dst + sigmoid(g) * conv(src); accumulates into dsrc.
  const auto back = [&](const Tensor<T>& src, const Tensor<T>& ddst, const Tensor<T>& conv_out,
                        const std::string& name, Tensor<T>& dsrc) {
    const Tensor<T>& g = p[name + ".gate"];
    Tensor<T>& dg = grads[name + ".gate"];
    Tensor<T> dconv(ddst.shape());
    for (std::size_t i = 0; i < ddst.size(); ++i) {
      const std::size_t c = i % C;
      const T s = sigmoid(g[c]);
      dconv[i] = s * ddst[i];
      dg[c] += ddst[i] * conv_out[i] * s * (T{1} - s);
    }
    Tensor<T> dx;
    conv_backward(src, p[name + ".w"], dconv, grads[name + ".w"], &grads[name + ".b"], &dx);
    for (std::size_t i = 0; i < dsrc.size(); ++i) dsrc[i] += dx[i];
  };
  back(m, da_out, fwd.m2a_conv, prefix + ".m2a", dm);
  if (topology == CrossConnection::Bidirectional) back(a, dm_out, fwd.a2m_conv, prefix + ".a2m", da);
  return {std::move(da), std::move(dm)};
}

template <typename T>
Tensor<T> fan_in_uniform(Shape shape, std::size_t fan_in, Rng& rng, double gain) {
  Tensor<T> t(std::move(shape));
  const double bound = gain / std::sqrt(static_cast<double>(fan_in));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <typename T>
void add_fusion_parameters(ParameterSet<T>& p, const std::string& prefix, Fusion fusion, std::size_t channels,
                           std::size_t hidden, Rng& rng) {
  const std::size_t in = 2 * channels;
  const std::size_t out = fusion == Fusion::ConvexCombinationGated ? channels : 2 * channels;
  p.add(prefix + ".se.w1", fan_in_uniform<T>({in, hidden}, in, rng));
  p.add(prefix + ".se.b1", Tensor<T>({hidden}));
  p.add(prefix + ".se.w2", fan_in_uniform<T>({hidden, out}, hidden, rng));
  p.add(prefix + ".se.b2", Tensor<T>({out}));
  p.add(prefix + ".sp.w", fan_in_uniform<T>({1, 3, 3, in, 1}, 9 * in, rng));
  p.add(prefix + ".sp.b", Tensor<T>({1}));
}

template <typename T>
void add_cross_parameters(ParameterSet<T>& p, const std::string& prefix, CrossConnection topology,
                          std::size_t channels, Rng& rng) {
  const auto add = [&](const std::string& name) {
    p.add(name + ".w", fan_in_uniform<T>({1, 1, 1, channels, channels}, channels, rng));
    p.add(name + ".b", Tensor<T>({channels}));
    p.add(name + ".gate", Tensor<T>({channels}));
  };
  if (topology == CrossConnection::None) return;
  add(prefix + ".m2a");
  if (topology == CrossConnection::Bidirectional) add(prefix + ".a2m");
}

#define STADYN_FUSION_INSTANTIATE(T)                                                                               \
  template CcgChannelResult<T> ccg_channel_attention(const Tensor<T>&, const Tensor<T>&, const ParameterSet<T>&, \
                                                     const std::string&);                                          \
  template std::pair<Tensor<T>, Tensor<T>> ccg_channel_attention_backward(                                       \
      const Tensor<T>&, const Tensor<T>&, const ParameterSet<T>&, const std::string&, const CcgChannelResult<T>&,  \
      const Tensor<T>&, const Tensor<T>&, ParameterSet<T>&);                                                       \
  template GatedChannelResult<T> gated_channel_attention(const Tensor<T>&, const Tensor<T>&,                     \
                                                         const ParameterSet<T>&, const std::string&);              \
  template std::pair<Tensor<T>, Tensor<T>> gated_channel_attention_backward(                                     \
      const Tensor<T>&, const Tensor<T>&, const ParameterSet<T>&, const std::string&,                              \
      const GatedChannelResult<T>&, const Tensor<T>&, ParameterSet<T>&);                                           \
  template SpatialResult<T> ccg_spatial_attention(const Tensor<T>&, const Tensor<T>&, const ParameterSet<T>&,    \
                                                  const std::string&);                                             \
  template std::pair<Tensor<T>, Tensor<T>> ccg_spatial_attention_backward(                                       \
      const Tensor<T>&, const Tensor<T>&, const ParameterSet<T>&, const std::string&, const SpatialResult<T>&,     \
      const Tensor<T>&, ParameterSet<T>&);                                                                         \
  template SpatialResult<T> gated_spatial_attention(const Tensor<T>&, const ParameterSet<T>&, const std::string&); \
  template Tensor<T> gated_spatial_attention_backward(const Tensor<T>&, const ParameterSet<T>&,                  \
                                                      const std::string&, const SpatialResult<T>&,                 \
                                                      const Tensor<T>&, ParameterSet<T>&);                         \
  template CrossResult<T> cross_connect(const Tensor<T>&, const Tensor<T>&, CrossConnection,                     \
                                        const ParameterSet<T>&, const std::string&);                               \
  template std::pair<Tensor<T>, Tensor<T>> cross_connect_backward(                                               \
      const Tensor<T>&, const Tensor<T>&, CrossConnection, const ParameterSet<T>&, const std::string&,             \
      const CrossResult<T>&, const Tensor<T>&, const Tensor<T>&, ParameterSet<T>&);                                \
  template Tensor<T> fan_in_uniform(Shape, std::size_t, Rng&, double);                                                   \
  template void add_fusion_parameters(ParameterSet<T>&, const std::string&, Fusion, std::size_t, std::size_t,    \
                                      Rng&);                                                                       \
  template void add_cross_parameters(ParameterSet<T>&, const std::string&, CrossConnection, std::size_t, Rng&);

STADYN_FUSION_INSTANTIATE(float)
STADYN_FUSION_INSTANTIATE(double)

#undef STADYN_FUSION_INSTANTIATE

}  // namespace stadyn::zoo

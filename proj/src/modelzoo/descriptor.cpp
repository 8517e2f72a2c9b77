#include "stadyn/modelzoo/descriptor.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace stadyn::zoo {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<E, N>& values, const char* what) {
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(ModelKind v) {
  return v == ModelKind::SingleStream3D ? "SingleStream3D" : "TwoStream";
}
std::string_view to_string(CrossConnection v) {
  switch (v) {
    case CrossConnection::None: return "None";
    case CrossConnection::MotionToAppearance: return "MotionToAppearance";
    case CrossConnection::Bidirectional: return "Bidirectional";
  }
  return "?";
}
std::string_view to_string(Fusion v) { return v == Fusion::Gated ? "Gated" : "ConvexCombinationGated"; }
std::string_view to_string(Head v) { return v == Head::Classifier ? "Classifier" : "Segmenter"; }

ModelKind model_kind_from_string(std::string_view s) {
  return parse_enum(s, std::array{ModelKind::SingleStream3D, ModelKind::TwoStream}, "model kind");
}
CrossConnection cross_connection_from_string(std::string_view s) {
  return parse_enum(s,
                    std::array{CrossConnection::None, CrossConnection::MotionToAppearance,
                               CrossConnection::Bidirectional},
                    "cross connection");
}
Fusion fusion_from_string(std::string_view s) {
  return parse_enum(s, std::array{Fusion::Gated, Fusion::ConvexCombinationGated}, "fusion");
}
Head head_from_string(std::string_view s) {
  return parse_enum(s, std::array{Head::Classifier, Head::Segmenter}, "head");
}

void ArchitectureDescriptor::validate() const {
  if (widths.size() != 2 || widths[0] == 0 || widths[1] == 0) {
    throw std::invalid_argument("descriptor: widths must be two positive channel counts");
  }
  if (frames == 0 || height == 0 || width == 0) throw std::invalid_argument("descriptor: empty input extent");
  if (se_reduction == 0) throw std::invalid_argument("descriptor: se_reduction must be >= 1");
  if (head == Head::Classifier && num_classes < 2) {
    throw std::invalid_argument("descriptor: classifier needs at least 2 classes");
  }
  if (kind == ModelKind::SingleStream3D) {
    if (height % 2 || width % 2) {
      throw std::invalid_argument("descriptor: SingleStream3D pools 2x2, height and width must be even");
    }
    if (head == Head::Segmenter) throw std::invalid_argument("descriptor: segmenter head requires TwoStream");
  } else if (key_frame >= frames) {
    throw std::invalid_argument("descriptor: key_frame out of range");
  }
}

std::vector<std::string> ArchitectureDescriptor::probe_layers() const {
  if (kind == ModelKind::SingleStream3D) return {"block1", "block2"};
  return {"app1", "mot1", "app2", "mot2", "fusion"};
}

std::string ArchitectureDescriptor::final_layer() const {
  return kind == ModelKind::SingleStream3D ? "block2" : "fusion";
}

std::size_t ArchitectureDescriptor::layer_channels(std::string_view layer) const {
  if (layer == "block1" || layer == "app1" || layer == "mot1") return widths[0];
  if (layer == "block2" || layer == "app2" || layer == "mot2") return widths[1];
  if (layer == "fusion") return 2 * widths[1];
  throw std::invalid_argument("unknown layer '" + std::string(layer) + "'");
}

std::size_t ArchitectureDescriptor::se_hidden() const {
  return std::max<std::size_t>(1, 2 * widths[1] / se_reduction);
}

nlohmann::json to_json(const ArchitectureDescriptor& d) {
  return {{"kind", to_string(d.kind)},
          {"widths", d.widths},
          {"cross_connection", to_string(d.cross_connection)},
          {"fusion", to_string(d.fusion)},
          {"head", to_string(d.head)},
          {"num_classes", d.num_classes},
          {"se_reduction", d.se_reduction},
          {"frames", d.frames},
          {"height", d.height},
          {"width", d.width},
          {"key_frame", d.key_frame}};
}

ArchitectureDescriptor descriptor_from_json(const nlohmann::json& j) {
  ArchitectureDescriptor d;
  d.kind = model_kind_from_string(j.at("kind").get<std::string>());
  d.widths = j.at("widths").get<std::vector<std::size_t>>();
  d.cross_connection = cross_connection_from_string(j.at("cross_connection").get<std::string>());
  d.fusion = fusion_from_string(j.at("fusion").get<std::string>());
  d.head = head_from_string(j.at("head").get<std::string>());
  d.num_classes = j.at("num_classes").get<int>();
  d.se_reduction = j.at("se_reduction").get<std::size_t>();
  d.frames = j.at("frames").get<std::size_t>();
  d.height = j.at("height").get<std::size_t>();
  d.width = j.at("width").get<std::size_t>();
  d.key_frame = j.at("key_frame").get<std::size_t>();
  d.validate();
  return d;
}

}  // namespace stadyn::zoo

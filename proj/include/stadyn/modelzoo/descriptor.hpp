#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace stadyn::zoo {

enum class ModelKind { SingleStream3D, TwoStream };
enum class CrossConnection { None, MotionToAppearance, Bidirectional };
enum class Fusion { Gated, ConvexCombinationGated };
enum class Head { Classifier, Segmenter };

std::string_view to_string(ModelKind v);
std::string_view to_string(CrossConnection v);
std::string_view to_string(Fusion v);
std::string_view to_string(Head v);
ModelKind model_kind_from_string(std::string_view s);
CrossConnection cross_connection_from_string(std::string_view s);
Fusion fusion_from_string(std::string_view s);
Head head_from_string(std::string_view s);

/// Architecture of a toy spatiotemporal network.
///
/// SingleStream3D: two 3x3x3 conv blocks over the whole clip (ReLU, 2x2
/// spatial average pooling between them), global pooling, linear head.
///
/// TwoStream: an appearance stream on the RGB key frame and a motion stream
/// on the flow-analog key frame, each two 3x3 conv blocks; the cross
/// connection sits after block 1 and the fusion module after block 2.
/// `cross_connection` and `fusion` only apply to TwoStream.
struct ArchitectureDescriptor {
  ModelKind kind = ModelKind::SingleStream3D;
  std::vector<std::size_t> widths{8, 16};
  CrossConnection cross_connection = CrossConnection::None;
  Fusion fusion = Fusion::Gated;
  Head head = Head::Classifier;
  int num_classes = 8;
  std::size_t se_reduction = 2;
  std::size_t frames = 8;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t key_frame = 0;

  /// Throws std::invalid_argument describing the first inconsistency.
  void validate() const;

  /// Capture points, in forward order.
  std::vector<std::string> probe_layers() const;
  /// Last layer before the head; default target for dropout and removal.
  std::string final_layer() const;
  std::size_t layer_channels(std::string_view layer) const;
  std::size_t se_hidden() const;

  bool operator==(const ArchitectureDescriptor&) const = default;
};

nlohmann::json to_json(const ArchitectureDescriptor& d);
ArchitectureDescriptor descriptor_from_json(const nlohmann::json& j);

}  // namespace stadyn::zoo

#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include <nlohmann/json.hpp>

namespace draco::net {

enum class FusionStrategy { kEqual, kFixed, kAdaptive };
enum class Modality { kDual, kRidge, kCap };
enum class Expert : int { kP = 0, kF = 1, kC = 2 };

FusionStrategy parse_fusion(std::string_view name);
std::string_view to_string(FusionStrategy f);
Modality parse_modality(std::string_view name);
std::string_view to_string(Modality m);

struct EncoderConfig {
  std::array<int, 4> block_counts{3, 4, 6, 3};
  std::array<int, 2> stem_channels{32, 64};
  int stem_stride = 1;  // first stem convolution
  std::array<int, 4> layer_channels{64, 128, 256, 256};
  std::array<int, 4> layer_strides{2, 2, 2, 2};
  int cardinality = 8;
  int attention_reduction = 16;

  // Width after global average pooling.
  int feature_dim() const { return layer_channels[3]; }

  static EncoderConfig ridge() { return {}; }
  static EncoderConfig capacitive() {
    EncoderConfig c;
    c.layer_strides = {1, 1, 1, 1};
    return c;
  }
};

struct ModelConfig {
  EncoderConfig ridge = EncoderConfig::ridge();
  EncoderConfig cap = EncoderConfig::capacitive();
  int projector_hidden = 256;
  int projector_blocks = 4;
  int projector_expansion = 2;
  int router_hidden = 128;
  bool router_zero_init = false;
  int adapter_hidden = 256;
  // Width the adapter maps to; equals the teacher's ridge feature width.
  int teacher_feature_dim = 256;
  int position_bins = 256;
  int trig_bins = 120;
  FusionStrategy fusion = FusionStrategy::kAdaptive;
  Modality modality = Modality::kDual;

  // Same block layout with narrower widths, for desk-scale CPU runs.
  static ModelConfig compact();
};

nlohmann::json to_json(const EncoderConfig& c);
nlohmann::json to_json(const ModelConfig& c);
EncoderConfig encoder_from_json(const nlohmann::json& j, EncoderConfig defaults);
ModelConfig model_from_json(const nlohmann::json& j);

}  // namespace draco::net

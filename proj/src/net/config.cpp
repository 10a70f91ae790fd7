#include "draco/net/config.hpp"

#include <string>

#include "draco/error.hpp"

namespace draco::net {

using nlohmann::json;

FusionStrategy parse_fusion(std::string_view name) {
  if (name == "equal") return FusionStrategy::kEqual;
  if (name == "fixed") return FusionStrategy::kFixed;
  if (name == "adaptive") return FusionStrategy::kAdaptive;
  throw Error(ErrorCode::kConfigError, "unknown fusion strategy '" + std::string(name) + "'");
}

std::string_view to_string(FusionStrategy f) {
  switch (f) {
    case FusionStrategy::kEqual: return "equal";
    case FusionStrategy::kFixed: return "fixed";
    case FusionStrategy::kAdaptive: return "adaptive";
  }
  return "adaptive";
}

Modality parse_modality(std::string_view name) {
  if (name == "dual") return Modality::kDual;
  if (name == "fp") return Modality::kRidge;
  if (name == "cap") return Modality::kCap;
  throw Error(ErrorCode::kConfigError, "unknown modality '" + std::string(name) + "'");
}

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::kDual: return "dual";
    case Modality::kRidge: return "fp";
    case Modality::kCap: return "cap";
  }
  return "dual";
}

ModelConfig ModelConfig::compact() {
  ModelConfig c;
  for (EncoderConfig* e : {&c.ridge, &c.cap}) {
    e->stem_channels = {8, 16};
    e->layer_channels = {16, 32, 64, 64};
    e->cardinality = 4;
    e->attention_reduction = 8;
  }
  // Halving the stem resolution keeps CPU runs affordable; the layers below
  // still downsample 16x.
  c.ridge.stem_stride = 2;
  c.projector_hidden = 64;
  c.router_hidden = 32;
  c.adapter_hidden = 64;
  c.teacher_feature_dim = 64;
  return c;
}

json to_json(const EncoderConfig& c) {
  return {{"block_counts", c.block_counts},
          {"stem_channels", c.stem_channels},
          {"layer_channels", c.layer_channels},
          {"layer_strides", c.layer_strides},
          {"cardinality", c.cardinality},
          {"attention_reduction", c.attention_reduction},
          {"stem_stride", c.stem_stride},
          {"feature_dim", c.feature_dim()}};
}

json to_json(const ModelConfig& c) {
  return {{"ridge", to_json(c.ridge)},
          {"cap", to_json(c.cap)},
          {"projector_hidden", c.projector_hidden},
          {"projector_blocks", c.projector_blocks},
          {"projector_expansion", c.projector_expansion},
          {"router_hidden", c.router_hidden},
          {"router_zero_init", c.router_zero_init},
          {"adapter_hidden", c.adapter_hidden},
          {"teacher_feature_dim", c.teacher_feature_dim},
          {"position_bins", c.position_bins},
          {"trig_bins", c.trig_bins},
          {"fusion", std::string(to_string(c.fusion))},
          {"modality", std::string(to_string(c.modality))}};
}

EncoderConfig encoder_from_json(const json& j, EncoderConfig c) {
  if (!j.is_object()) return c;
  if (j.contains("block_counts")) c.block_counts = j.at("block_counts").get<std::array<int, 4>>();
  if (j.contains("stem_channels")) c.stem_channels = j.at("stem_channels").get<std::array<int, 2>>();
  if (j.contains("layer_channels")) {
    c.layer_channels = j.at("layer_channels").get<std::array<int, 4>>();
  }
  if (j.contains("layer_strides")) c.layer_strides = j.at("layer_strides").get<std::array<int, 4>>();
  c.cardinality = j.value("cardinality", c.cardinality);
  c.attention_reduction = j.value("attention_reduction", c.attention_reduction);
  c.stem_stride = j.value("stem_stride", c.stem_stride);
  return c;
}

ModelConfig model_from_json(const json& j) {
  ModelConfig c = j.value("preset", std::string("default")) == "compact" ? ModelConfig::compact()
                                                                         : ModelConfig{};
  if (j.contains("ridge")) c.ridge = encoder_from_json(j.at("ridge"), c.ridge);
  if (j.contains("cap")) c.cap = encoder_from_json(j.at("cap"), c.cap);
  c.projector_hidden = j.value("projector_hidden", c.projector_hidden);
  c.projector_blocks = j.value("projector_blocks", c.projector_blocks);
  c.projector_expansion = j.value("projector_expansion", c.projector_expansion);
  c.router_hidden = j.value("router_hidden", c.router_hidden);
  c.router_zero_init = j.value("router_zero_init", c.router_zero_init);
  c.adapter_hidden = j.value("adapter_hidden", c.adapter_hidden);
  c.teacher_feature_dim = j.value("teacher_feature_dim", c.teacher_feature_dim);
  c.position_bins = j.value("position_bins", c.position_bins);
  c.trig_bins = j.value("trig_bins", c.trig_bins);
  if (j.contains("fusion")) c.fusion = parse_fusion(j.at("fusion").get<std::string>());
  if (j.contains("modality")) c.modality = parse_modality(j.at("modality").get<std::string>());
  for (const EncoderConfig* e : {&c.ridge, &c.cap}) {
    for (int ch : e->layer_channels) {
      if (ch % e->cardinality != 0 || (ch / 2) % e->cardinality != 0) {
        throw Error(ErrorCode::kConfigError, "layer channels must be divisible by 2 * cardinality");
      }
    }
  }
  return c;
}

}  // namespace draco::net

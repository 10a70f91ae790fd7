#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "draco/net/draco_model.hpp"
#include "draco/pose_codec.hpp"

namespace draco::net {

// A checkpoint is `<name>.pt` (serialized parameters and buffers) plus a
// `<name>.json` sidecar holding the model config, codec tables and
// provenance. Only the sidecar is needed to rebuild the architecture.
std::filesystem::path sidecar_path(const std::filesystem::path& weights);

void save_checkpoint(DracoModel& model, const std::filesystem::path& weights,
                     const codec::PoseCodec& codec, const nlohmann::json& provenance);

struct LoadedCheckpoint {
  DracoModel model{nullptr};
  nlohmann::json sidecar;
  codec::PoseCodec codec;
  std::string weights_hash;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& weights);

nlohmann::json codec_to_json(const codec::PoseCodec& codec);
codec::PoseCodec codec_from_json(const nlohmann::json& j);
// Throws config-error naming the first differing field.
void require_same_codec(const codec::PoseCodec& a, const codec::PoseCodec& b);

}  // namespace draco::net

#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "draco/net/draco_model.hpp"
#include "draco/pose_codec.hpp"
#include "draco/synth/sample.hpp"

namespace draco::net {

struct Prediction {
  std::string id;
  Pose pose;
  std::array<double, 3> weights{};  // P, F, C
};

// Network input for a batch of samples according to the model's modality.
// A dual-modal model without capacitive data is a hard error.
ModelInput make_input(const DracoModelImpl& model,
                      std::span<const synth::DualModalSample* const> batch);

Pose decode_row(const Dists& dists, std::int64_t row, const codec::PoseCodec& codec,
                codec::DecodeMode mode);

// Inference-mode predictions, in input order.
std::vector<Prediction> predict(DracoModel& model, std::span<const synth::DualModalSample> samples,
                                const codec::PoseCodec& codec, codec::DecodeMode mode,
                                int batch_size = 64);

}  // namespace draco::net

#include "draco/net/inference.hpp"

#include <algorithm>

#include "draco/error.hpp"

namespace draco::net {

ModelInput make_input(const DracoModelImpl& model,
                      std::span<const synth::DualModalSample* const> batch) {
  const Modality m = model.config().modality;
  ModelInput in;
  if (m != Modality::kCap) {
    std::vector<cv::Mat> patches;
    for (const auto* s : batch) patches.push_back(s->patch.pixels);
    in.patch = patches_to_tensor(patches);
  }
  if (m != Modality::kRidge) {
    std::vector<cv::Mat> caps;
    for (const auto* s : batch) {
      if (s->cap.pixels.empty()) {
        throw Error(ErrorCode::kShapeMismatch,
                    "sample '" + s->id + "' has no capacitive image but the model needs one");
      }
      caps.push_back(s->cap.pixels);
    }
    in.cap = caps_to_tensor(caps);
  }
  return in;
}

Pose decode_row(const Dists& dists, std::int64_t row, const codec::PoseCodec& codec,
                codec::DecodeMode mode) {
  return codec.dists_to_pose(dists.row(row), mode);
}

std::vector<Prediction> predict(DracoModel& model, std::span<const synth::DualModalSample> samples,
                                const codec::PoseCodec& codec, codec::DecodeMode mode,
                                int batch_size) {
  torch::NoGradGuard guard;
  const bool was_training = model->is_training();
  model->eval();
  std::vector<Prediction> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const synth::DualModalSample*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&samples[i]);
    const ExpertOutput o = model->forward(make_input(*model, batch));
    const auto w = o.weights.to(torch::kDouble);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto r = static_cast<std::int64_t>(i);
      Prediction p;
      p.id = batch[i]->id;
      p.pose = decode_row(o.final, r, codec, mode);
      for (int e = 0; e < 3; ++e) p.weights[e] = w[r][e].item<double>();
      out.push_back(std::move(p));
    }
  }
  model->train(was_training);
  return out;
}

}  // namespace draco::net

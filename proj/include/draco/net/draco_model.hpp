#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/torch.h>

#include "draco/net/config.hpp"
#include "draco/net/modules.hpp"
#include "draco/pose_codec.hpp"

namespace draco::net {

// Batched distributions, one row per sample, each row summing to one.
struct Dists {
  torch::Tensor x, y, cos, sin;

  std::array<torch::Tensor, 4> components() const { return {x, y, cos, sin}; }
  Dists detached() const { return {x.detach(), y.detach(), cos.detach(), sin.detach()}; }
  // Row `i` as a plain codec distribution set.
  codec::PoseDistributionSet row(std::int64_t i) const;
};

Dists softmax(const HeadLogits& logits);
// sum_i weights[:, i] * dists[i]; weights is [B, 3].
Dists mix(const torch::Tensor& weights, const std::array<Dists, 3>& dists);

struct ExpertOutput {
  torch::Tensor f_p, f_c, f_f;  // undefined when the branch is inactive
  torch::Tensor weights;        // [B, 3], columns (P, F, C)
  std::array<std::optional<Dists>, 3> experts;
  Dists final;
};

struct ModelInput {
  torch::Tensor patch;  // [B, 1, 132, 132] in [0, 1]
  torch::Tensor cap;    // [B, 1, G, G] in [0, 1]
};

class DracoModelImpl : public torch::nn::Module {
 public:
  explicit DracoModelImpl(const ModelConfig& cfg);

  // Dispatches on the configured modality.
  ExpertOutput forward(const ModelInput& in);
  ExpertOutput forward_dual(const torch::Tensor& patch, const torch::Tensor& cap);
  // Only the chosen branch's encoder and expert run; weights are one-hot.
  ExpertOutput forward_single_modal(const torch::Tensor& input, Modality branch);

  torch::Tensor encode_ridge(const torch::Tensor& patch);
  torch::Tensor encode_cap(const torch::Tensor& cap);
  torch::Tensor route(const torch::Tensor& f_fused);
  Dists expert_forward(const torch::Tensor& f, Expert which);
  torch::Tensor adapt(const torch::Tensor& f_fused);
  // Weights used by the configured fusion strategy for a batch.
  torch::Tensor fusion_weights(const torch::Tensor& f_fused);

  const ModelConfig& config() const { return cfg_; }
  bool has_branch(Modality branch) const;
  bool has_adapter() const { return !adapter_.is_empty(); }
  std::int64_t parameter_count() const;

  Encoder ridge_encoder() const { return ridge_; }
  Encoder cap_encoder() const { return cap_; }

 private:
  ModelConfig cfg_;
  Encoder ridge_{nullptr}, cap_{nullptr};
  ExpertHead expert_p_{nullptr}, expert_f_{nullptr}, expert_c_{nullptr};
  Router router_{nullptr};
  torch::Tensor fixed_logits_;
  Adapter adapter_{nullptr};
};
TORCH_MODULE(DracoModel);

// Frozen network with the ridge-branch architecture plus the P expert, fed
// plain fingerprint views. Never receives gradients.
class Teacher {
 public:
  explicit Teacher(DracoModel model);
  static Teacher random(const ModelConfig& student_cfg, std::uint64_t seed);

  struct Output {
    torch::Tensor features;
    Dists dists;
  };
  Output forward(const torch::Tensor& plain_views);

  DracoModel model() const { return model_; }
  int feature_dim() const { return model_->config().ridge.feature_dim(); }
  // Hash of every parameter and buffer, for the frozen contract.
  std::string checksum() const;

 private:
  DracoModel model_;
};

ModelConfig teacher_config(const ModelConfig& student);

// Image batches to network input tensors.
torch::Tensor patches_to_tensor(std::span<const cv::Mat> patches);
torch::Tensor caps_to_tensor(std::span<const cv::Mat> caps);

std::string parameters_checksum(const torch::nn::Module& module);

}  // namespace draco::net

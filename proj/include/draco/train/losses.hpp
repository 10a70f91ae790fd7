#pragma once

#include <array>
#include <string_view>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "draco/net/draco_model.hpp"
#include "draco/pose_codec.hpp"

namespace draco::train {

enum class Distance { kCE, kJS };
enum class KtMode { kOff, kRelation, kFeature, kResponse };

Distance parse_distance(std::string_view name);
std::string_view to_string(Distance d);
KtMode parse_kt_mode(std::string_view name);
std::string_view to_string(KtMode m);

inline constexpr double kLogEpsilon = 1e-12;

struct ExpertWeights {
  double p = 0.2;
  double f = 0.2;
  double c = 0.4;
  double final = 1.0;
};

struct LossConfig {
  // x, y, cos, sin
  std::array<double, 4> lambda_components{1.0, 1.0, 1.0, 1.0};
  ExpertWeights lambda_experts;
  double sigma_pos = codec::kSigmaPosition;
  double sigma_trig = codec::kSigmaTrig;
  double tau = 8.0;
  double lambda_kt = 1.0;
  Distance distance = Distance::kCE;
  KtMode kt_mode = KtMode::kOff;
  codec::DecodeMode decode_mode = codec::DecodeMode::kSum;

  void validate() const;
};

nlohmann::json to_json(const LossConfig& c);
LossConfig loss_from_json(const nlohmann::json& j);

// Per-sample distance between [B, n] distributions, averaged over the batch.
// CE = -sum target log(pred + eps); JS uses base-2 logarithms.
torch::Tensor pose_component_loss(const torch::Tensor& pred, const torch::Tensor& target,
                                  Distance distance);

// sum_phi lambda_phi dist(d_phi, target_phi) for one distribution set.
torch::Tensor pose_set_loss(const net::Dists& pred, const net::Dists& target,
                            const LossConfig& cfg);

struct PoseLossTerms {
  torch::Tensor total;
  std::array<torch::Tensor, 3> experts;  // P, F, C; undefined when absent
  torch::Tensor final;
};

// L_pose = sum_e lambda_e H_e over the present experts and the fused output.
// With a single active expert only the fused term is used.
PoseLossTerms pose_loss(const net::ExpertOutput& out, const net::Dists& target,
                        const LossConfig& cfg);

// Symmetric InfoNCE over cosine similarities; row i of `teacher` is the
// positive for row i of `student`.
torch::Tensor infonce_relation_loss(const torch::Tensor& student, const torch::Tensor& teacher,
                                    double tau);

struct TeacherSignal {
  torch::Tensor features;
  net::Dists dists;
};

// Knowledge-transfer term. `adapted` is adapter(f_F) for relation/feature.
torch::Tensor kt_loss(const net::ExpertOutput& student, const torch::Tensor& adapted,
                      const TeacherSignal& teacher, const LossConfig& cfg);

torch::Tensor total_loss(const torch::Tensor& pose, const torch::Tensor& kt, const LossConfig& cfg);

// Gaussian targets for a batch of poses as tensors of `options` dtype.
net::Dists targets_for(std::span<const Pose> labels, const codec::PoseCodec& codec,
                       const torch::TensorOptions& options = torch::kFloat);

}  // namespace draco::train

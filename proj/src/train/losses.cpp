#include "draco/train/losses.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "draco/error.hpp"

namespace draco::train {

using nlohmann::json;

Distance parse_distance(std::string_view name) {
  if (name == "CE" || name == "ce") return Distance::kCE;
  if (name == "JS" || name == "js") return Distance::kJS;
  throw Error(ErrorCode::kConfigError, "unknown distance '" + std::string(name) + "'");
}

std::string_view to_string(Distance d) { return d == Distance::kCE ? "CE" : "JS"; }

KtMode parse_kt_mode(std::string_view name) {
  if (name == "off") return KtMode::kOff;
  if (name == "relation") return KtMode::kRelation;
  if (name == "feature") return KtMode::kFeature;
  if (name == "response") return KtMode::kResponse;
  throw Error(ErrorCode::kConfigError, "unknown kt_mode '" + std::string(name) + "'");
}

std::string_view to_string(KtMode m) {
  switch (m) {
    case KtMode::kOff: return "off";
    case KtMode::kRelation: return "relation";
    case KtMode::kFeature: return "feature";
    case KtMode::kResponse: return "response";
  }
  return "off";
}

void LossConfig::validate() const {
  for (double l : lambda_components) {
    if (!(l >= 0.0)) throw Error(ErrorCode::kConfigError, "component weights must be >= 0");
  }
  for (double l : {lambda_experts.p, lambda_experts.f, lambda_experts.c, lambda_experts.final}) {
    if (!(l >= 0.0)) throw Error(ErrorCode::kConfigError, "expert weights must be >= 0");
  }
  if (!(lambda_kt >= 0.0)) throw Error(ErrorCode::kConfigError, "lambda_kt must be >= 0");
  if (!(tau > 0.0)) throw Error(ErrorCode::kConfigError, "tau must be > 0");
  if (!(sigma_pos > 0.0) || !(sigma_trig > 0.0)) {
    throw Error(ErrorCode::kConfigError, "sigmas must be > 0");
  }
}

json to_json(const LossConfig& c) {
  return {{"lambda_components", c.lambda_components},
          {"lambda_experts",
           {{"P", c.lambda_experts.p},
            {"F", c.lambda_experts.f},
            {"C", c.lambda_experts.c},
            {"final", c.lambda_experts.final}}},
          {"sigma_pos", c.sigma_pos},
          {"sigma_trig", c.sigma_trig},
          {"tau", c.tau},
          {"lambda_kt", c.lambda_kt},
          {"distance", std::string(to_string(c.distance))},
          {"kt_mode", std::string(to_string(c.kt_mode))},
          {"decode_mode", std::string(codec::to_string(c.decode_mode))}};
}

LossConfig loss_from_json(const json& j) {
  LossConfig c;
  if (!j.is_object()) return c;
  if (j.contains("lambda_components")) {
    c.lambda_components = j.at("lambda_components").get<std::array<double, 4>>();
  }
  if (j.contains("lambda_experts")) {
    const json& e = j.at("lambda_experts");
    c.lambda_experts.p = e.value("P", c.lambda_experts.p);
    c.lambda_experts.f = e.value("F", c.lambda_experts.f);
    c.lambda_experts.c = e.value("C", c.lambda_experts.c);
    c.lambda_experts.final = e.value("final", c.lambda_experts.final);
  }
  c.sigma_pos = j.value("sigma_pos", c.sigma_pos);
  c.sigma_trig = j.value("sigma_trig", c.sigma_trig);
  c.tau = j.value("tau", c.tau);
  c.lambda_kt = j.value("lambda_kt", c.lambda_kt);
  if (j.contains("distance")) c.distance = parse_distance(j.at("distance").get<std::string>());
  if (j.contains("kt_mode")) c.kt_mode = parse_kt_mode(j.at("kt_mode").get<std::string>());
  if (j.contains("decode_mode")) {
    c.decode_mode = codec::parse_decode_mode(j.at("decode_mode").get<std::string>());
  }
  c.validate();
  return c;
}

torch::Tensor pose_component_loss(const torch::Tensor& pred, const torch::Tensor& target,
                                  Distance distance) {
  if (pred.sizes() != target.sizes()) {
    throw Error(ErrorCode::kLengthMismatch, "prediction and target shapes differ");
  }
  if (distance == Distance::kCE) {
    return -(target * torch::log(pred + kLogEpsilon)).sum(-1).mean();
  }
  const auto m = 0.5 * (pred + target);
  const auto log_m = torch::log(m + kLogEpsilon);
  const auto kl_p = (pred * (torch::log(pred + kLogEpsilon) - log_m)).sum(-1);
  const auto kl_q = (target * (torch::log(target + kLogEpsilon) - log_m)).sum(-1);
  return (0.5 * (kl_p + kl_q) / std::numbers::ln2).mean();
}

torch::Tensor pose_set_loss(const net::Dists& pred, const net::Dists& target,
                            const LossConfig& cfg) {
  const auto p = pred.components();
  const auto t = target.components();
  torch::Tensor total;
  for (std::size_t k = 0; k < 4; ++k) {
    auto term = cfg.lambda_components[k] * pose_component_loss(p[k], t[k], cfg.distance);
    total = total.defined() ? total + term : term;
  }
  return total;
}

PoseLossTerms pose_loss(const net::ExpertOutput& out, const net::Dists& target,
                        const LossConfig& cfg) {
  PoseLossTerms terms;
  terms.final = pose_set_loss(out.final, target, cfg);
  terms.total = cfg.lambda_experts.final * terms.final;

  int active = 0;
  for (const auto& e : out.experts) active += e.has_value() ? 1 : 0;
  if (active < 2) return terms;

  const std::array<double, 3> weights{cfg.lambda_experts.p, cfg.lambda_experts.f,
                                      cfg.lambda_experts.c};
  for (std::size_t e = 0; e < 3; ++e) {
    if (!out.experts[e]) continue;
    terms.experts[e] = pose_set_loss(*out.experts[e], target, cfg);
    terms.total = terms.total + weights[e] * terms.experts[e];
  }
  return terms;
}

torch::Tensor infonce_relation_loss(const torch::Tensor& student, const torch::Tensor& teacher,
                                    double tau) {
  if (student.dim() != 2 || student.sizes() != teacher.sizes()) {
    throw Error(ErrorCode::kShapeMismatch, "relation loss needs equal [B, w] features");
  }
  if (student.size(0) < 1) throw Error(ErrorCode::kEmptyInput, "relation loss needs B >= 1");
  const auto ns = student.norm(2, 1);
  const auto nt = teacher.norm(2, 1);
  if ((ns < 1e-12).any().item<bool>() || (nt < 1e-12).any().item<bool>()) {
    throw Error(ErrorCode::kDegenerateFeature, "zero feature row; cosine similarity undefined");
  }
  const auto sim = torch::mm(student / ns.unsqueeze(1), (teacher / nt.unsqueeze(1)).t()) / tau;
  const auto b = static_cast<double>(student.size(0));
  const auto student_to_teacher = torch::log_softmax(sim, 1).diagonal().sum();
  const auto teacher_to_student = torch::log_softmax(sim.t(), 1).diagonal().sum();
  return -(student_to_teacher + teacher_to_student) / (2.0 * b);
}

torch::Tensor kt_loss(const net::ExpertOutput& student, const torch::Tensor& adapted,
                      const TeacherSignal& teacher, const LossConfig& cfg) {
  switch (cfg.kt_mode) {
    case KtMode::kOff:
      return torch::zeros({}, student.final.x.options());
    case KtMode::kRelation:
      return infonce_relation_loss(adapted, teacher.features, cfg.tau);
    case KtMode::kFeature:
      if (adapted.sizes() != teacher.features.sizes()) {
        throw Error(ErrorCode::kShapeMismatch, "adapter output and teacher features differ in shape");
      }
      return (adapted - teacher.features).pow(2).mean();
    case KtMode::kResponse: {
      const auto s = student.final.components();
      const auto t = teacher.dists.components();
      torch::Tensor total;
      for (std::size_t k = 0; k < 4; ++k) {
        auto term = pose_component_loss(s[k], t[k], Distance::kCE);
        total = total.defined() ? total + term : term;
      }
      return total;
    }
  }
  return torch::zeros({}, student.final.x.options());
}

torch::Tensor total_loss(const torch::Tensor& pose, const torch::Tensor& kt, const LossConfig& cfg) {
  if (cfg.kt_mode == KtMode::kOff || !kt.defined()) return pose;
  return pose + cfg.lambda_kt * kt;
}

net::Dists targets_for(std::span<const Pose> labels, const codec::PoseCodec& codec,
                       const torch::TensorOptions& options) {
  const auto b = static_cast<std::int64_t>(labels.size());
  const auto np = static_cast<std::int64_t>(codec.position.size());
  const auto nt = static_cast<std::int64_t>(codec.trig.size());
  auto x = torch::empty({b, np}, torch::kDouble);
  auto y = torch::empty({b, np}, torch::kDouble);
  auto c = torch::empty({b, nt}, torch::kDouble);
  auto s = torch::empty({b, nt}, torch::kDouble);
  auto copy_row = [](torch::Tensor& dst, std::int64_t i, const std::vector<double>& v) {
    std::copy(v.begin(), v.end(), dst[i].data_ptr<double>());
  };
  for (std::int64_t i = 0; i < b; ++i) {
    const auto d = codec.pose_to_targets(labels[static_cast<std::size_t>(i)]);
    copy_row(x, i, d.dx);
    copy_row(y, i, d.dy);
    copy_row(c, i, d.dcos);
    copy_row(s, i, d.dsin);
  }
  return {x.to(options), y.to(options), c.to(options), s.to(options)};
}

}  // namespace draco::train

#include "draco/net/draco_model.hpp"

#include <cstring>
#include <string>

#include "draco/error.hpp"
#include "draco/hash.hpp"

namespace draco::net {

namespace {

std::vector<double> to_vector(const torch::Tensor& row) {
  const auto r = row.detach().to(torch::kCPU, torch::kDouble).contiguous();
  return {r.data_ptr<double>(), r.data_ptr<double>() + r.numel()};
}

void check_image_batch(const torch::Tensor& t, const char* what) {
  if (!t.defined() || t.dim() != 4 || t.size(1) != 1) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + " must be [B, 1, H, W]");
  }
}

}  // namespace

codec::PoseDistributionSet Dists::row(std::int64_t i) const {
  return {to_vector(x[i]), to_vector(y[i]), to_vector(cos[i]), to_vector(sin[i])};
}

Dists softmax(const HeadLogits& l) {
  return {torch::softmax(l.x, 1), torch::softmax(l.y, 1), torch::softmax(l.cos, 1),
          torch::softmax(l.sin, 1)};
}

Dists mix(const torch::Tensor& w, const std::array<Dists, 3>& d) {
  auto combine = [&](auto member) {
    torch::Tensor acc;
    for (int e = 0; e < 3; ++e) {
      auto term = w.select(1, e).unsqueeze(1) * (d[e].*member);
      acc = acc.defined() ? acc + term : term;
    }
    return acc;
  };
  return {combine(&Dists::x), combine(&Dists::y), combine(&Dists::cos), combine(&Dists::sin)};
}

DracoModelImpl::DracoModelImpl(const ModelConfig& cfg) : cfg_(cfg) {
  const bool ridge = cfg.modality != Modality::kCap;
  const bool cap = cfg.modality != Modality::kRidge;
  if (ridge) {
    ridge_ = register_module("ridge_encoder", Encoder(cfg.ridge));
    expert_p_ = register_module("expert_p", ExpertHead(cfg.ridge.feature_dim(), cfg));
  }
  if (cap) {
    cap_ = register_module("cap_encoder", Encoder(cfg.cap));
    expert_c_ = register_module("expert_c", ExpertHead(cfg.cap.feature_dim(), cfg));
  }
  if (ridge && cap) {
    const int fused = cfg.ridge.feature_dim() + cfg.cap.feature_dim();
    expert_f_ = register_module("expert_f", ExpertHead(fused, cfg));
    router_ = register_module("router", Router(fused, cfg.router_hidden, cfg.router_zero_init));
    fixed_logits_ = register_parameter("fixed_logits", torch::zeros({3}));
    adapter_ = register_module("adapter",
                               Adapter(fused, cfg.adapter_hidden, cfg.teacher_feature_dim));
  }
}

bool DracoModelImpl::has_branch(Modality branch) const {
  switch (branch) {
    case Modality::kRidge: return !ridge_.is_empty();
    case Modality::kCap: return !cap_.is_empty();
    case Modality::kDual: return !ridge_.is_empty() && !cap_.is_empty();
  }
  return false;
}

torch::Tensor DracoModelImpl::encode_ridge(const torch::Tensor& patch) {
  if (ridge_.is_empty()) throw Error(ErrorCode::kShapeMismatch, "model has no ridge branch");
  check_image_batch(patch, "ridge input");
  return ridge_(patch);
}

torch::Tensor DracoModelImpl::encode_cap(const torch::Tensor& cap) {
  if (cap_.is_empty()) throw Error(ErrorCode::kShapeMismatch, "model has no capacitive branch");
  check_image_batch(cap, "capacitive input");
  return cap_(cap);
}

torch::Tensor DracoModelImpl::route(const torch::Tensor& f_fused) {
  if (router_.is_empty()) throw Error(ErrorCode::kShapeMismatch, "model has no router");
  return router_(f_fused);
}

Dists DracoModelImpl::expert_forward(const torch::Tensor& f, Expert which) {
  ExpertHead head = which == Expert::kP ? expert_p_ : which == Expert::kF ? expert_f_ : expert_c_;
  if (head.is_empty()) throw Error(ErrorCode::kShapeMismatch, "expert not present in this model");
  if (f.dim() != 2) throw Error(ErrorCode::kShapeMismatch, "expert input must be [B, width]");
  return softmax(head(f));
}

torch::Tensor DracoModelImpl::adapt(const torch::Tensor& f_fused) {
  if (adapter_.is_empty()) throw Error(ErrorCode::kShapeMismatch, "model has no adapter");
  return adapter_(f_fused);
}

torch::Tensor DracoModelImpl::fusion_weights(const torch::Tensor& f_fused) {
  const auto batch = f_fused.size(0);
  switch (cfg_.fusion) {
    case FusionStrategy::kEqual:
      return torch::full({batch, 3}, 1.0 / 3.0, f_fused.options());
    case FusionStrategy::kFixed:
      return torch::softmax(fixed_logits_, 0).unsqueeze(0).expand({batch, 3});
    case FusionStrategy::kAdaptive:
      return route(f_fused);
  }
  return route(f_fused);
}

ExpertOutput DracoModelImpl::forward_dual(const torch::Tensor& patch, const torch::Tensor& cap) {
  if (!has_branch(Modality::kDual)) throw Error(ErrorCode::kShapeMismatch, "model is not dual-modal");
  ExpertOutput out;
  out.f_p = encode_ridge(patch);
  out.f_c = encode_cap(cap);
  if (out.f_p.size(0) != out.f_c.size(0)) {
    throw Error(ErrorCode::kShapeMismatch, "ridge and capacitive batch sizes differ");
  }
  out.f_f = torch::cat({out.f_p, out.f_c}, 1);
  out.weights = fusion_weights(out.f_f);
  std::array<Dists, 3> d{expert_forward(out.f_p, Expert::kP), expert_forward(out.f_f, Expert::kF),
                         expert_forward(out.f_c, Expert::kC)};
  out.final = mix(out.weights, d);
  for (int e = 0; e < 3; ++e) out.experts[e] = d[e];
  return out;
}

ExpertOutput DracoModelImpl::forward_single_modal(const torch::Tensor& input, Modality branch) {
  ExpertOutput out;
  int index = 0;
  Dists d;
  if (branch == Modality::kRidge) {
    out.f_p = encode_ridge(input);
    d = expert_forward(out.f_p, Expert::kP);
    index = static_cast<int>(Expert::kP);
  } else if (branch == Modality::kCap) {
    out.f_c = encode_cap(input);
    d = expert_forward(out.f_c, Expert::kC);
    index = static_cast<int>(Expert::kC);
  } else {
    throw Error(ErrorCode::kShapeMismatch, "single-modal forward needs fp or cap");
  }
  out.weights = torch::zeros({input.size(0), 3}, input.options());
  out.weights.select(1, index).fill_(1.0);
  out.experts[index] = d;
  out.final = d;
  return out;
}

ExpertOutput DracoModelImpl::forward(const ModelInput& in) {
  switch (cfg_.modality) {
    case Modality::kDual:
      if (!in.patch.defined() || !in.cap.defined()) {
        throw Error(ErrorCode::kShapeMismatch, "dual-modal model needs both patch and capacitive input");
      }
      return forward_dual(in.patch, in.cap);
    case Modality::kRidge: return forward_single_modal(in.patch, Modality::kRidge);
    case Modality::kCap: return forward_single_modal(in.cap, Modality::kCap);
  }
  return forward_dual(in.patch, in.cap);
}

std::int64_t DracoModelImpl::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : parameters()) n += p.numel();
  return n;
}

ModelConfig teacher_config(const ModelConfig& student) {
  ModelConfig t = student;
  t.modality = Modality::kRidge;
  return t;
}

Teacher::Teacher(DracoModel model) : model_(std::move(model)) {
  if (!model_->has_branch(Modality::kRidge)) {
    throw Error(ErrorCode::kShapeMismatch, "teacher needs the ridge branch");
  }
  for (auto& p : model_->parameters()) p.set_requires_grad(false);
  model_->eval();
}

Teacher Teacher::random(const ModelConfig& student_cfg, std::uint64_t seed) {
  torch::manual_seed(seed);
  return Teacher(DracoModel(teacher_config(student_cfg)));
}

Teacher::Output Teacher::forward(const torch::Tensor& plain_views) {
  torch::NoGradGuard guard;
  model_->eval();
  auto f = model_->encode_ridge(plain_views);
  auto d = model_->expert_forward(f, Expert::kP);
  return {f, d};
}

std::string Teacher::checksum() const { return parameters_checksum(*model_); }

std::string parameters_checksum(const torch::nn::Module& module) {
  std::string bytes;
  auto append = [&](const std::string& name, const torch::Tensor& t) {
    bytes += name;
    const auto c = t.detach().to(torch::kCPU).contiguous();
    bytes.append(static_cast<const char*>(c.data_ptr()), c.numel() * c.element_size());
  };
  for (const auto& item : module.named_parameters()) append(item.key(), item.value());
  for (const auto& item : module.named_buffers()) append(item.key(), item.value());
  return sha256_hex(bytes);
}

torch::Tensor patches_to_tensor(std::span<const cv::Mat> patches) {
  if (patches.empty()) throw Error(ErrorCode::kShapeMismatch, "empty patch batch");
  const int h = patches.front().rows;
  const int w = patches.front().cols;
  auto t = torch::empty({static_cast<std::int64_t>(patches.size()), 1, h, w});
  auto acc = t.accessor<float, 4>();
  for (std::size_t b = 0; b < patches.size(); ++b) {
    const cv::Mat& p = patches[b];
    if (p.rows != h || p.cols != w || p.type() != CV_8UC1) {
      throw Error(ErrorCode::kShapeMismatch, "patch batch must be uniform CV_8UC1");
    }
    for (int i = 0; i < h; ++i) {
      const auto* row = p.ptr<std::uint8_t>(i);
      for (int j = 0; j < w; ++j) acc[b][0][i][j] = row[j] / 255.0f;
    }
  }
  return t;
}

torch::Tensor caps_to_tensor(std::span<const cv::Mat> caps) {
  if (caps.empty()) throw Error(ErrorCode::kShapeMismatch, "empty capacitive batch");
  const int g = caps.front().rows;
  auto t = torch::empty({static_cast<std::int64_t>(caps.size()), 1, g, g});
  auto acc = t.accessor<float, 4>();
  for (std::size_t b = 0; b < caps.size(); ++b) {
    const cv::Mat& c = caps[b];
    if (c.rows != g || c.cols != g || c.type() != CV_32FC1) {
      throw Error(ErrorCode::kShapeMismatch, "capacitive batch must be uniform CV_32FC1");
    }
    for (int i = 0; i < g; ++i) {
      const auto* row = c.ptr<float>(i);
      for (int j = 0; j < g; ++j) acc[b][0][i][j] = row[j];
    }
  }
  return t;
}

}  // namespace draco::net

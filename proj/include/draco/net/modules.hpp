#pragma once

#include <torch/torch.h>

#include "draco/net/config.hpp"

namespace draco::net {

// conv -> batch norm -> ReLU
class ConvBnActImpl : public torch::nn::Module {
 public:
  ConvBnActImpl(int in, int out, int kernel, int stride, int groups = 1, bool act = true);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv_{nullptr};
  torch::nn::BatchNorm2d bn_{nullptr};
  bool act_;
};
TORCH_MODULE(ConvBnAct);

// Aggregated-residual bottleneck: 1x1 reduce, grouped 3x3, 1x1 expand.
class ResNeXtBlockImpl : public torch::nn::Module {
 public:
  ResNeXtBlockImpl(int in, int out, int stride, int cardinality);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  ConvBnAct reduce_{nullptr}, grouped_{nullptr}, expand_{nullptr};
  ConvBnAct shortcut_{nullptr};
};
TORCH_MODULE(ResNeXtBlock);

// Channel attention followed by spatial attention.
class ConvAttentionImpl : public torch::nn::Module {
 public:
  ConvAttentionImpl(int channels, int reduction);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
  torch::nn::Conv2d spatial_{nullptr};
};
TORCH_MODULE(ConvAttention);

// Stem, four ResNeXt layers with attention after each, global average pool.
class EncoderImpl : public torch::nn::Module {
 public:
  explicit EncoderImpl(const EncoderConfig& cfg, int in_channels = 1);
  torch::Tensor forward(const torch::Tensor& x);
  // Spatial size entering the pool, for the stride contract.
  torch::Tensor feature_map(const torch::Tensor& x);

 private:
  torch::nn::Sequential stem_{nullptr};
  torch::nn::ModuleList layers_{nullptr};
  torch::nn::ModuleList attention_{nullptr};
};
TORCH_MODULE(Encoder);

// x + W2 GELU(W1 LN(x))
class ResidualMlpImpl : public torch::nn::Module {
 public:
  ResidualMlpImpl(int width, int expansion);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::LayerNorm norm_{nullptr};
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
};
TORCH_MODULE(ResidualMlp);

// Head logits for the four pose components.
struct HeadLogits {
  torch::Tensor x, y, cos, sin;
};

// Projector (linear + residual MLP stack) and four single-linear heads.
class ExpertHeadImpl : public torch::nn::Module {
 public:
  ExpertHeadImpl(int in, const ModelConfig& cfg);
  HeadLogits forward(const torch::Tensor& f);
  torch::Tensor project(const torch::Tensor& f);

 private:
  torch::nn::Linear input_{nullptr};
  torch::nn::ModuleList blocks_{nullptr};
  torch::nn::Linear head_x_{nullptr}, head_y_{nullptr}, head_cos_{nullptr}, head_sin_{nullptr};
};
TORCH_MODULE(ExpertHead);

// Two fully connected layers, softmax over the three experts (P, F, C).
class RouterImpl : public torch::nn::Module {
 public:
  RouterImpl(int in, int hidden, bool zero_init);
  torch::Tensor forward(const torch::Tensor& f_fused);

 private:
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
};
TORCH_MODULE(Router);

// Two-layer MLP aligning the student's fused feature with the teacher's.
class AdapterImpl : public torch::nn::Module {
 public:
  AdapterImpl(int in, int hidden, int out);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
};
TORCH_MODULE(Adapter);

}  // namespace draco::net

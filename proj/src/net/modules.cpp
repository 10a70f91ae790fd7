#include "draco/net/modules.hpp"

#include <algorithm>

namespace draco::net {

namespace nn = torch::nn;

ConvBnActImpl::ConvBnActImpl(int in, int out, int kernel, int stride, int groups, bool act)
    : act_(act) {
  conv_ = register_module(
      "conv", nn::Conv2d(nn::Conv2dOptions(in, out, kernel)
                             .stride(stride)
                             .padding(kernel / 2)
                             .groups(groups)
                             .bias(false)));
  bn_ = register_module("bn", nn::BatchNorm2d(out));
}

torch::Tensor ConvBnActImpl::forward(const torch::Tensor& x) {
  auto y = bn_(conv_(x));
  return act_ ? torch::relu(y) : y;
}

ResNeXtBlockImpl::ResNeXtBlockImpl(int in, int out, int stride, int cardinality) {
  const int mid = out / 2;
  reduce_ = register_module("reduce", ConvBnAct(in, mid, 1, 1));
  grouped_ = register_module("grouped", ConvBnAct(mid, mid, 3, stride, cardinality));
  expand_ = register_module("expand", ConvBnAct(mid, out, 1, 1, 1, false));
  if (in != out || stride != 1) {
    shortcut_ = register_module("shortcut", ConvBnAct(in, out, 1, stride, 1, false));
  }
}

torch::Tensor ResNeXtBlockImpl::forward(const torch::Tensor& x) {
  auto y = expand_(grouped_(reduce_(x)));
  auto skip = shortcut_ ? shortcut_(x) : x;
  return torch::relu(y + skip);
}

ConvAttentionImpl::ConvAttentionImpl(int channels, int reduction) {
  const int hidden = std::max(1, channels / reduction);
  fc1_ = register_module("fc1", nn::Linear(channels, hidden));
  fc2_ = register_module("fc2", nn::Linear(hidden, channels));
  spatial_ = register_module(
      "spatial", nn::Conv2d(nn::Conv2dOptions(2, 1, 7).padding(3).bias(false)));
}

torch::Tensor ConvAttentionImpl::forward(const torch::Tensor& x) {
  auto mlp = [&](const torch::Tensor& v) { return fc2_(torch::relu(fc1_(v))); };
  const auto avg = x.mean({2, 3});
  const auto mx = x.amax({2, 3});
  const auto channel_gate = torch::sigmoid(mlp(avg) + mlp(mx)).unsqueeze(-1).unsqueeze(-1);
  auto y = x * channel_gate;
  const auto pooled = torch::cat({y.mean(1, true), y.amax(1, true)}, 1);
  return y * torch::sigmoid(spatial_(pooled));
}

EncoderImpl::EncoderImpl(const EncoderConfig& cfg, int in_channels) {
  stem_ = register_module("stem", nn::Sequential(ConvBnAct(in_channels, cfg.stem_channels[0], 3, cfg.stem_stride),
                                                 ConvBnAct(cfg.stem_channels[0],
                                                           cfg.stem_channels[1], 3, 1)));
  layers_ = register_module("layers", nn::ModuleList());
  attention_ = register_module("attention", nn::ModuleList());
  int in = cfg.stem_channels[1];
  for (int l = 0; l < 4; ++l) {
    nn::Sequential layer;
    for (int b = 0; b < cfg.block_counts[l]; ++b) {
      layer->push_back(ResNeXtBlock(in, cfg.layer_channels[l], b == 0 ? cfg.layer_strides[l] : 1,
                                    cfg.cardinality));
      in = cfg.layer_channels[l];
    }
    layers_->push_back(layer);
    attention_->push_back(ConvAttention(in, cfg.attention_reduction));
  }
}

torch::Tensor EncoderImpl::feature_map(const torch::Tensor& x) {
  auto y = stem_->forward(x);
  for (std::size_t l = 0; l < layers_->size(); ++l) {
    y = layers_[l]->as<nn::Sequential>()->forward(y);
    y = attention_[l]->as<ConvAttention>()->forward(y);
  }
  return y;
}

torch::Tensor EncoderImpl::forward(const torch::Tensor& x) { return feature_map(x).mean({2, 3}); }

ResidualMlpImpl::ResidualMlpImpl(int width, int expansion) {
  norm_ = register_module("norm", nn::LayerNorm(nn::LayerNormOptions({width})));
  fc1_ = register_module("fc1", nn::Linear(width, width * expansion));
  fc2_ = register_module("fc2", nn::Linear(width * expansion, width));
}

torch::Tensor ResidualMlpImpl::forward(const torch::Tensor& x) {
  return x + fc2_(torch::gelu(fc1_(norm_(x))));
}

ExpertHeadImpl::ExpertHeadImpl(int in, const ModelConfig& cfg) {
  input_ = register_module("input", nn::Linear(in, cfg.projector_hidden));
  blocks_ = register_module("blocks", nn::ModuleList());
  for (int b = 0; b < cfg.projector_blocks; ++b) {
    blocks_->push_back(ResidualMlp(cfg.projector_hidden, cfg.projector_expansion));
  }
  head_x_ = register_module("head_x", nn::Linear(cfg.projector_hidden, cfg.position_bins));
  head_y_ = register_module("head_y", nn::Linear(cfg.projector_hidden, cfg.position_bins));
  head_cos_ = register_module("head_cos", nn::Linear(cfg.projector_hidden, cfg.trig_bins));
  head_sin_ = register_module("head_sin", nn::Linear(cfg.projector_hidden, cfg.trig_bins));
}

torch::Tensor ExpertHeadImpl::project(const torch::Tensor& f) {
  auto h = input_(f);
  for (const auto& block : *blocks_) h = block->as<ResidualMlp>()->forward(h);
  return h;
}

HeadLogits ExpertHeadImpl::forward(const torch::Tensor& f) {
  const auto h = project(f);
  return {head_x_(h), head_y_(h), head_cos_(h), head_sin_(h)};
}

RouterImpl::RouterImpl(int in, int hidden, bool zero_init) {
  fc1_ = register_module("fc1", nn::Linear(in, hidden));
  fc2_ = register_module("fc2", nn::Linear(hidden, 3));
  if (zero_init) {
    torch::NoGradGuard guard;
    fc2_->weight.zero_();
    fc2_->bias.zero_();
  }
}

torch::Tensor RouterImpl::forward(const torch::Tensor& f_fused) {
  return torch::softmax(fc2_(torch::relu(fc1_(f_fused))), 1);
}

AdapterImpl::AdapterImpl(int in, int hidden, int out) {
  fc1_ = register_module("fc1", nn::Linear(in, hidden));
  fc2_ = register_module("fc2", nn::Linear(hidden, out));
}

torch::Tensor AdapterImpl::forward(const torch::Tensor& x) { return fc2_(torch::relu(fc1_(x))); }

}  // namespace draco::net

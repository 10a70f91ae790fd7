#include <cmath>

#include <gtest/gtest.h>

#include "draco/error.hpp"
#include "draco/train/losses.hpp"
#include "oracles.hpp"

using namespace draco;
using namespace draco::train;

namespace {

torch::Tensor random_dist(std::int64_t b, std::int64_t n, std::uint64_t seed) {
  torch::manual_seed(seed);
  return torch::softmax(torch::randn({b, n}, torch::kDouble), 1);
}

net::Dists random_set(std::int64_t b, std::uint64_t seed) {
  return {random_dist(b, 256, seed), random_dist(b, 256, seed + 1), random_dist(b, 120, seed + 2),
          random_dist(b, 120, seed + 3)};
}

net::ExpertOutput output_of(const net::Dists& final, const std::array<net::Dists, 3>& experts) {
  net::ExpertOutput out;
  out.final = final;
  for (int e = 0; e < 3; ++e) out.experts[e] = experts[e];
  out.weights = torch::full({final.x.size(0), 3}, 1.0 / 3.0, torch::kDouble);
  return out;
}

// Plain-loop oracles, independent of the tensor implementation.
double ce_oracle(const torch::Tensor& pred, const torch::Tensor& target) {
  const auto p = pred.accessor<double, 2>();
  const auto t = target.accessor<double, 2>();
  double total = 0.0;
  for (int i = 0; i < pred.size(0); ++i) {
    for (int j = 0; j < pred.size(1); ++j) total -= t[i][j] * std::log(p[i][j] + kLogEpsilon);
  }
  return total / static_cast<double>(pred.size(0));
}

double set_oracle(const net::Dists& pred, const net::Dists& target, const LossConfig& cfg) {
  const auto p = pred.components();
  const auto t = target.components();
  double total = 0.0;
  for (int k = 0; k < 4; ++k) total += cfg.lambda_components[k] * ce_oracle(p[k], t[k]);
  return total;
}

}  // namespace

TEST(PoseLoss, UniformVersusOneHot) {
  const auto pred = torch::full({1, 120}, 1.0 / 120.0, torch::kDouble);
  auto target = torch::zeros({1, 120}, torch::kDouble);
  target[0][17] = 1.0;
  EXPECT_NEAR(pose_component_loss(pred, target, Distance::kCE).item<double>(), std::log(120.0), 1e-6);
}

TEST(PoseLoss, PerfectPredictionCE) {
  auto one_hot = torch::zeros({2, 256}, torch::kDouble);
  one_hot[0][3] = 1.0;
  one_hot[1][200] = 1.0;
  EXPECT_NEAR(pose_component_loss(one_hot, one_hot, Distance::kCE).item<double>(), 0.0, 1e-10);
}

TEST(PoseLoss, JsBoundsAndIdentity) {
  const auto a = random_dist(4, 120, 1);
  const auto b = random_dist(4, 120, 2);
  EXPECT_NEAR(pose_component_loss(a, a, Distance::kJS).item<double>(), 0.0, 1e-10);
  auto p = torch::zeros({1, 10}, torch::kDouble);
  auto q = torch::zeros({1, 10}, torch::kDouble);
  p[0][0] = 1.0;
  q[0][9] = 1.0;
  // Disjoint supports reach the base-2 upper bound.
  EXPECT_NEAR(pose_component_loss(p, q, Distance::kJS).item<double>(), 1.0, 1e-9);
  const double js = pose_component_loss(a, b, Distance::kJS).item<double>();
  EXPECT_GT(js, 0.0);
  EXPECT_LT(js, 1.0);
  EXPECT_NEAR(js, pose_component_loss(b, a, Distance::kJS).item<double>(), 1e-12);
}

TEST(PoseLoss, ShapeMismatch) {
  EXPECT_THROW(pose_component_loss(random_dist(1, 10, 1), random_dist(1, 11, 1), Distance::kCE),
               Error);
}

TEST(PoseLoss, TermByTermRecomposition) {
  LossConfig cfg;
  cfg.lambda_components = {0.5, 1.0, 2.0, 0.25};
  const net::Dists target = random_set(4, 10);
  const std::array<net::Dists, 3> experts{random_set(4, 20), random_set(4, 30), random_set(4, 40)};
  const net::Dists final = random_set(4, 50);
  const auto terms = pose_loss(output_of(final, experts), target, cfg);
  double expected = cfg.lambda_experts.final * set_oracle(final, target, cfg);
  const double weights[3] = {cfg.lambda_experts.p, cfg.lambda_experts.f, cfg.lambda_experts.c};
  for (int e = 0; e < 3; ++e) {
    const double h = set_oracle(experts[e], target, cfg);
    EXPECT_NEAR(terms.experts[e].item<double>(), h, 1e-6);
    expected += weights[e] * h;
  }
  EXPECT_NEAR(terms.total.item<double>(), expected, 1e-6);
  EXPECT_NEAR(terms.final.item<double>(), set_oracle(final, target, cfg), 1e-6);
}

TEST(PoseLoss, LinearInExpertWeights) {
  LossConfig cfg;
  const net::Dists target = random_set(3, 1);
  const auto out = output_of(random_set(3, 2), {random_set(3, 3), random_set(3, 4), random_set(3, 5)});
  const double base = pose_loss(out, target, cfg).total.item<double>();
  cfg.lambda_experts = {0.4, 0.4, 0.8, 2.0};
  EXPECT_NEAR(pose_loss(out, target, cfg).total.item<double>(), 2.0 * base, 1e-9);
}

TEST(PoseLoss, SingleExpertUsesFinalOnly) {
  LossConfig cfg;
  const net::Dists target = random_set(2, 1);
  net::ExpertOutput out;
  out.final = random_set(2, 2);
  out.experts[0] = out.final;
  const auto terms = pose_loss(out, target, cfg);
  EXPECT_NEAR(terms.total.item<double>(), set_oracle(out.final, target, cfg), 1e-9);
}

TEST(PoseLoss, DefaultWeights) {
  const LossConfig cfg;
  EXPECT_EQ(cfg.lambda_experts.p, 0.2);
  EXPECT_EQ(cfg.lambda_experts.f, 0.2);
  EXPECT_EQ(cfg.lambda_experts.c, 0.4);
  EXPECT_EQ(cfg.lambda_experts.final, 1.0);
  EXPECT_EQ(cfg.tau, 8.0);
  EXPECT_EQ(cfg.lambda_kt, 1.0);
  for (double l : cfg.lambda_components) EXPECT_EQ(l, 1.0);
}

TEST(PoseLoss, ComponentGradients) {
  const auto target = random_dist(4, 30, 7);
  torch::manual_seed(8);
  const auto logits = torch::randn({4, 30}, torch::kDouble);
  for (auto d : {Distance::kCE, Distance::kJS}) {
    auto f = [&](const torch::Tensor& z) {
      return pose_component_loss(torch::softmax(z, 1), target, d);
    };
    EXPECT_LT(oracle::gradient_check(f, logits), 1e-3) << to_string(d);
  }
}

TEST(InfoNce, SingleSampleIsZero) {
  torch::manual_seed(1);
  const auto d = torch::randn({1, 16}, torch::kDouble);
  const auto p = torch::randn({1, 16}, torch::kDouble);
  EXPECT_EQ(infonce_relation_loss(d, p, 8.0).item<double>(), 0.0);
}

TEST(InfoNce, TwoSampleDerivedValue) {
  const auto e = torch::eye(2, torch::kDouble);
  const double expected = -std::log(std::exp(1.0 / 8.0) / (std::exp(1.0 / 8.0) + 1.0));
  EXPECT_NEAR(expected, 0.6327, 1e-3);
  EXPECT_NEAR(infonce_relation_loss(e, e, 8.0).item<double>(), expected, 1e-12);
}

TEST(InfoNce, PermutationAndScaleInvariance) {
  torch::manual_seed(2);
  const auto d = torch::randn({6, 8}, torch::kDouble);
  const auto p = torch::randn({6, 8}, torch::kDouble);
  const double base = infonce_relation_loss(d, p, 8.0).item<double>();
  const auto perm = torch::randperm(6, torch::kLong);
  EXPECT_NEAR(infonce_relation_loss(d.index_select(0, perm), p.index_select(0, perm), 8.0).item<double>(),
              base, 1e-12);
  const auto scale = torch::rand({6, 1}, torch::kDouble) * 10.0 + 0.1;
  EXPECT_NEAR(infonce_relation_loss(d * scale, p, 8.0).item<double>(), base, 1e-12);
  EXPECT_NEAR(infonce_relation_loss(d, p * scale.flip(0), 8.0).item<double>(), base, 1e-12);
}

TEST(InfoNce, ZeroRowIsDegenerate) {
  auto d = torch::randn({3, 4}, torch::kDouble);
  d[1].zero_();
  try {
    infonce_relation_loss(d, torch::randn({3, 4}, torch::kDouble), 8.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateFeature);
  }
}

TEST(InfoNce, Gradient) {
  torch::manual_seed(4);
  const auto p = torch::randn({4, 8}, torch::kDouble);
  auto f = [&](const torch::Tensor& d) { return infonce_relation_loss(d, p, 8.0); };
  EXPECT_LT(oracle::gradient_check(f, torch::randn({4, 8}, torch::kDouble)), 1e-3);
  auto g = [&](const torch::Tensor& t) { return infonce_relation_loss(p, t, 0.5); };
  EXPECT_LT(oracle::gradient_check(g, torch::randn({4, 8}, torch::kDouble)), 1e-3);
}

TEST(KtLoss, Modes) {
  const net::Dists student = random_set(3, 1);
  const auto out = output_of(student, {student, student, student});
  torch::manual_seed(3);
  const auto feats = torch::randn({3, 8}, torch::kDouble);
  LossConfig cfg;

  cfg.kt_mode = KtMode::kOff;
  EXPECT_EQ(kt_loss(out, feats, {feats, student}, cfg).item<double>(), 0.0);

  cfg.kt_mode = KtMode::kFeature;
  EXPECT_EQ(kt_loss(out, feats, {feats, student}, cfg).item<double>(), 0.0);
  EXPECT_NEAR(kt_loss(out, feats + 2.0, {feats, student}, cfg).item<double>(), 4.0, 1e-12);

  cfg.kt_mode = KtMode::kRelation;
  EXPECT_NEAR(kt_loss(out, feats, {feats * 3.0, student}, cfg).item<double>(),
              infonce_relation_loss(feats, feats, cfg.tau).item<double>(), 1e-12);

  // Identical distributions: CE equals the teacher's entropy.
  cfg.kt_mode = KtMode::kResponse;
  double entropy = 0.0;
  for (const auto& c : student.components()) {
    entropy += -(c * torch::log(c + kLogEpsilon)).sum(1).mean().item<double>();
  }
  EXPECT_NEAR(kt_loss(out, feats, {feats, student}, cfg).item<double>(), entropy, 1e-9);
}

TEST(KtLoss, ResponseMinimizerIsTeacher) {
  const net::Dists teacher = random_set(1, 11);
  torch::manual_seed(12);
  std::array<torch::Tensor, 4> logits;
  const auto t = teacher.components();
  for (int k = 0; k < 4; ++k) {
    logits[k] = torch::zeros_like(t[k]).set_requires_grad(true);
  }
  torch::optim::Adam opt(std::vector<torch::Tensor>(logits.begin(), logits.end()),
                         torch::optim::AdamOptions(0.1));
  LossConfig cfg;
  cfg.kt_mode = KtMode::kResponse;
  for (int step = 0; step < 2000; ++step) {
    opt.zero_grad();
    net::Dists s{torch::softmax(logits[0], 1), torch::softmax(logits[1], 1),
                 torch::softmax(logits[2], 1), torch::softmax(logits[3], 1)};
    const auto loss = kt_loss(output_of(s, {s, s, s}), torch::Tensor(), {torch::Tensor(), teacher}, cfg);
    loss.backward();
    opt.step();
  }
  for (int k = 0; k < 4; ++k) {
    EXPECT_LT((torch::softmax(logits[k], 1) - t[k]).abs().max().item<double>(), 1e-3);
  }
}

TEST(TotalLoss, Recomposition) {
  const auto pose = torch::tensor(1.25, torch::kDouble);
  const auto kt = torch::tensor(0.5, torch::kDouble);
  LossConfig cfg;
  EXPECT_EQ(total_loss(pose, kt, cfg).item<double>(), 1.25);
  cfg.kt_mode = KtMode::kRelation;
  EXPECT_NEAR(total_loss(pose, kt, cfg).item<double>(), 1.75, 1e-7);
  cfg.lambda_kt = 0.0;
  EXPECT_EQ(total_loss(pose, kt, cfg).item<double>(), 1.25);
}

TEST(LossConfig, JsonRoundtripAndValidation) {
  LossConfig cfg;
  cfg.distance = Distance::kJS;
  cfg.kt_mode = KtMode::kResponse;
  cfg.decode_mode = codec::DecodeMode::kMax;
  cfg.tau = 2.0;
  const LossConfig back = loss_from_json(to_json(cfg));
  EXPECT_EQ(back.distance, Distance::kJS);
  EXPECT_EQ(back.kt_mode, KtMode::kResponse);
  EXPECT_EQ(back.decode_mode, codec::DecodeMode::kMax);
  EXPECT_EQ(back.tau, 2.0);
  EXPECT_THROW(loss_from_json({{"tau", 0.0}}), Error);
  EXPECT_THROW(loss_from_json({{"kt_mode", "bogus"}}), Error);
}

TEST(Targets, MatchCodec) {
  const codec::PoseCodec codec;
  const std::vector<Pose> labels{{12.0, -40.0, 95.0}};
  const net::Dists t = targets_for(labels, codec, torch::kDouble);
  const auto d = codec.pose_to_targets(labels[0]);
  for (int j = 0; j < 256; ++j) EXPECT_DOUBLE_EQ(t.x[0][j].item<double>(), d.dx[j]);
  for (int j = 0; j < 120; ++j) EXPECT_DOUBLE_EQ(t.sin[0][j].item<double>(), d.dsin[j]);
}

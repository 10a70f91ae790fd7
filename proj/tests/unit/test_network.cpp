#include <cmath>

#include <gtest/gtest.h>

#include "draco/error.hpp"
#include "draco/net/checkpoint.hpp"
#include "draco/net/draco_model.hpp"
#include "draco/train/losses.hpp"
#include "oracles.hpp"

using namespace draco;
using namespace draco::net;

namespace {

ModelConfig compact(FusionStrategy fusion = FusionStrategy::kAdaptive,
                    Modality modality = Modality::kDual) {
  ModelConfig c = ModelConfig::compact();
  c.fusion = fusion;
  c.modality = modality;
  return c;
}

DracoModel make_model(const ModelConfig& cfg, std::uint64_t seed = 0) {
  torch::manual_seed(seed);
  DracoModel m(cfg);
  m->eval();
  return m;
}

torch::Tensor patches(int b, std::uint64_t seed = 1) {
  torch::manual_seed(seed);
  return torch::rand({b, 1, 132, 132});
}

torch::Tensor caps(int b, std::uint64_t seed = 2) {
  torch::manual_seed(seed);
  return torch::rand({b, 1, 12, 12});
}

double max_abs(const torch::Tensor& a, const torch::Tensor& b) {
  return (a - b).abs().max().item<double>();
}

void expect_distributions(const Dists& d, std::int64_t batch) {
  const std::array<std::int64_t, 4> lengths{256, 256, 120, 120};
  const auto comps = d.components();
  for (int k = 0; k < 4; ++k) {
    ASSERT_EQ(comps[k].size(0), batch);
    ASSERT_EQ(comps[k].size(1), lengths[k]);
    EXPECT_GE(comps[k].min().item<double>(), 0.0);
    EXPECT_LT(max_abs(comps[k].sum(1), torch::ones({batch}, comps[k].options())), 1e-6);
  }
}

}  // namespace

TEST(Encoder, RidgeShapeFiniteDeterministic) {
  auto m = make_model(compact());
  torch::NoGradGuard g;
  const auto x = patches(3);
  const auto f1 = m->encode_ridge(x);
  const auto f2 = m->encode_ridge(x);
  ASSERT_EQ(f1.size(0), 3);
  ASSERT_EQ(f1.size(1), m->config().ridge.feature_dim());
  EXPECT_TRUE(torch::isfinite(f1).all().item<bool>());
  EXPECT_EQ(max_abs(f1, f2), 0.0);
}

TEST(Encoder, BatchMatchesSingle) {
  auto m = make_model(compact());
  torch::NoGradGuard g;
  const auto x = patches(4);
  const auto c = caps(4);
  const auto fr = m->encode_ridge(x);
  const auto fc = m->encode_cap(c);
  for (int i = 0; i < 4; ++i) {
    EXPECT_LT(max_abs(fr[i], m->encode_ridge(x.slice(0, i, i + 1))[0]), 1e-5);
    EXPECT_LT(max_abs(fc[i], m->encode_cap(c.slice(0, i, i + 1))[0]), 1e-5);
  }
}

TEST(Encoder, DefaultWidths) {
  auto m = make_model(ModelConfig{});
  torch::NoGradGuard g;
  EXPECT_EQ(m->encode_ridge(patches(1)).size(1), 256);
  EXPECT_EQ(m->encode_cap(caps(1)).size(1), 256);
}

TEST(Encoder, StrideContract) {
  for (const ModelConfig& cfg : {ModelConfig{}, ModelConfig::compact()}) {
    auto m = make_model(cfg);
    torch::NoGradGuard g;
    const int stem = (132 + cfg.ridge.stem_stride - 1) / cfg.ridge.stem_stride;
    const auto ridge_map = m->ridge_encoder()->feature_map(patches(1));
    // Four stride-2 layers, each rounding up.
    int expect = stem;
    for (int l = 0; l < 4; ++l) expect = (expect + 1) / 2;
    EXPECT_EQ(ridge_map.size(2), expect);
    EXPECT_EQ(ridge_map.size(3), expect);
    const auto cap_map = m->cap_encoder()->feature_map(caps(1));
    EXPECT_EQ(cap_map.size(2), 12);
    EXPECT_EQ(cap_map.size(3), 12);
  }
}

TEST(Encoder, ShapeMismatch) {
  auto m = make_model(compact());
  torch::NoGradGuard g;
  try {
    m->encode_ridge(torch::rand({1, 100, 100}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
  EXPECT_THROW(m->encode_cap(torch::rand({2, 3, 12, 12})), Error);
}

TEST(Router, SimplexAndStability) {
  auto m = make_model(compact());
  torch::NoGradGuard g;
  const int width = m->config().ridge.feature_dim() + m->config().cap.feature_dim();
  torch::manual_seed(5);
  const auto f = torch::randn({1000, width}) * 10.0;
  const auto w = m->route(f);
  EXPECT_TRUE(torch::isfinite(w).all().item<bool>());
  EXPECT_GE(w.min().item<double>(), 0.0);
  EXPECT_LE(w.max().item<double>(), 1.0);
  EXPECT_LT(max_abs(w.sum(1), torch::ones({1000})), 1e-6);
}

TEST(Router, ZeroInitIsUniform) {
  ModelConfig cfg = compact();
  cfg.router_zero_init = true;
  auto m = make_model(cfg);
  torch::NoGradGuard g;
  const auto w = m->route(torch::randn({5, 128}));
  EXPECT_LT(max_abs(w, torch::full({5, 3}, 1.0 / 3.0)), 1e-7);
}

TEST(Expert, LengthsAndNormalization) {
  auto m = make_model(compact());
  torch::NoGradGuard g;
  const auto f = torch::randn({6, 64});
  const Dists d = m->expert_forward(f, Expert::kP);
  expect_distributions(d, 6);
  const Dists again = m->expert_forward(f, Expert::kP);
  EXPECT_EQ(max_abs(d.x, again.x), 0.0);
}

TEST(Expert, HeadShiftInvariance) {
  HeadLogits logits{torch::randn({3, 256}), torch::randn({3, 256}), torch::randn({3, 120}),
                    torch::randn({3, 120})};
  const Dists a = softmax(logits);
  logits.cos = logits.cos + 37.5;
  const Dists b = softmax(logits);
  EXPECT_LT(max_abs(a.cos, b.cos), 1e-6);
}

TEST(Expert, ProjectorInputGradient) {
  auto m = make_model(compact());
  m->to(torch::kDouble);
  const codec::PoseCodec codec;
  const std::vector<Pose> labels{{10, -20, 30}, {-100, 3, -170}, {0, 0, 0}, {77, 50, 91}};
  const Dists target = train::targets_for(labels, codec, torch::kDouble);
  train::LossConfig cfg;
  auto loss = [&](const torch::Tensor& f) {
    return train::pose_set_loss(m->expert_forward(f, Expert::kF), target, cfg);
  };
  torch::manual_seed(3);
  EXPECT_LT(oracle::gradient_check(loss, torch::randn({4, 128}, torch::kDouble)), 1e-3);
}

TEST(Fusion, MixOfOneHots) {
  std::array<Dists, 3> experts;
  const int bins[3] = {10, 20, 30};
  for (int e = 0; e < 3; ++e) {
    auto oh = torch::zeros({1, 256});
    oh[0][bins[e]] = 1.0;
    auto t = torch::zeros({1, 120});
    t[0][bins[e]] = 1.0;
    experts[e] = {oh, oh, t, t};
  }
  const Dists d = mix(torch::full({1, 3}, 1.0 / 3.0), experts);
  for (int b : bins) EXPECT_NEAR(d.x[0][b].item<double>(), 1.0 / 3.0, 1e-7);
  EXPECT_NEAR(d.x.sum().item<double>(), 1.0, 1e-6);
}

TEST(Fusion, IdenticalExpertsEveryStrategy) {
  HeadLogits logits{torch::randn({4, 256}), torch::randn({4, 256}), torch::randn({4, 120}),
                    torch::randn({4, 120})};
  const Dists d = softmax(logits);
  torch::manual_seed(8);
  const auto w = torch::softmax(torch::randn({4, 3}), 1);
  for (const auto& weights : {w, torch::full({4, 3}, 1.0 / 3.0)}) {
    const Dists f = mix(weights, {d, d, d});
    EXPECT_LT(max_abs(f.x, d.x), 1e-6);
    EXPECT_LT(max_abs(f.sin, d.sin), 1e-6);
  }
}

TEST(Fusion, RecompositionAllStrategies) {
  for (auto fusion : {FusionStrategy::kEqual, FusionStrategy::kFixed, FusionStrategy::kAdaptive}) {
    auto m = make_model(compact(fusion));
    torch::NoGradGuard g;
    const auto out = m->forward({patches(5), caps(5)});
    expect_distributions(out.final, 5);
    EXPECT_LT(max_abs(out.weights.sum(1), torch::ones({5})), 1e-6);
    const auto fc = out.final.components();
    for (int k = 0; k < 4; ++k) {
      torch::Tensor manual = torch::zeros_like(fc[k]);
      for (int e = 0; e < 3; ++e) {
        manual += out.weights.select(1, e).unsqueeze(1) * out.experts[e]->components()[k];
      }
      EXPECT_LT(max_abs(manual, fc[k]), 1e-6);
    }
    if (fusion == FusionStrategy::kEqual) {
      EXPECT_LT(max_abs(out.weights, torch::full({5, 3}, 1.0 / 3.0)), 1e-7);
    }
    if (fusion == FusionStrategy::kFixed) {
      EXPECT_LT(max_abs(out.weights[0], out.weights[4]), 1e-7);
    }
  }
}

TEST(SingleModal, MatchesDefinition) {
  auto fp = make_model(compact(FusionStrategy::kAdaptive, Modality::kRidge));
  auto cap = make_model(compact(FusionStrategy::kAdaptive, Modality::kCap));
  torch::NoGradGuard g;
  const auto x = patches(2);
  const auto c = caps(2);
  const auto out_fp = fp->forward({x, torch::Tensor()});
  const Dists ref_fp = fp->expert_forward(fp->encode_ridge(x), Expert::kP);
  EXPECT_EQ(max_abs(out_fp.final.x, ref_fp.x), 0.0);
  EXPECT_EQ(max_abs(out_fp.weights, torch::tensor({1.0f, 0.0f, 0.0f}).repeat({2, 1})), 0.0);
  const auto out_cap = cap->forward({torch::Tensor(), c});
  const Dists ref_cap = cap->expert_forward(cap->encode_cap(c), Expert::kC);
  EXPECT_EQ(max_abs(out_cap.final.sin, ref_cap.sin), 0.0);
  EXPECT_FALSE(fp->has_branch(Modality::kCap));
  EXPECT_FALSE(cap->has_branch(Modality::kRidge));
}

TEST(SingleModal, DiffersFromDual) {
  auto dual = make_model(compact());
  torch::NoGradGuard g;
  const auto x = patches(2);
  const auto both = dual->forward({x, caps(2)});
  const auto ridge_only = dual->forward_single_modal(x, Modality::kRidge);
  EXPECT_GT(max_abs(both.final.x, ridge_only.final.x), 1e-6);
}

TEST(Teacher, FrozenAndDeterministic) {
  ModelConfig cfg = compact();
  Teacher teacher = Teacher::random(cfg, 4);
  EXPECT_EQ(teacher.feature_dim(), cfg.teacher_feature_dim);
  for (const auto& p : teacher.model()->parameters()) EXPECT_FALSE(p.requires_grad());
  torch::manual_seed(1);
  const auto views = torch::rand({2, 1, 256, 256});
  const auto a = teacher.forward(views);
  const auto b = teacher.forward(views);
  EXPECT_EQ(max_abs(a.features, b.features), 0.0);
  EXPECT_EQ(max_abs(a.dists.cos, b.dists.cos), 0.0);
  EXPECT_FALSE(a.features.requires_grad());
}

TEST(Adapter, WidthStabilityAndGradient) {
  ModelConfig cfg = compact();
  auto m = make_model(cfg);
  {
    torch::NoGradGuard g;
    torch::manual_seed(9);
    const auto out = m->adapt(torch::randn({1000, 128}) * 5.0);
    EXPECT_EQ(out.size(1), cfg.teacher_feature_dim);
    EXPECT_TRUE(torch::isfinite(out).all().item<bool>());
  }
  m->train();
  Teacher teacher = Teacher::random(cfg, 2);
  const auto t = teacher.forward(torch::rand({4, 1, 256, 256}));
  const auto out = m->forward({patches(4), caps(4)});
  train::LossConfig loss;
  loss.kt_mode = train::KtMode::kRelation;
  const auto kt = train::kt_loss(out, m->adapt(out.f_f), {t.features, t.dists}, loss);
  kt.backward();
  double norm = 0.0;
  for (const auto& item : m->named_parameters()) {
    const auto& g = item.value().grad();
    if (item.key().rfind("adapter", 0) == 0 && g.defined()) norm += g.norm().item<double>();
  }
  EXPECT_GT(norm, 0.0);
}

TEST(Checkpoint, RoundtripAndCodecGuard) {
  const auto dir = oracle::scratch_dir("checkpoint");
  auto m = make_model(compact(FusionStrategy::kFixed));
  const codec::PoseCodec codec;
  save_checkpoint(m, dir / "m.pt", codec, {{"seed", 3}});
  auto loaded = load_checkpoint(dir / "m.pt");
  EXPECT_EQ(loaded.model->config().fusion, FusionStrategy::kFixed);
  EXPECT_EQ(parameters_checksum(*loaded.model), parameters_checksum(*m));
  EXPECT_EQ(loaded.sidecar["provenance"]["seed"], 3);
  EXPECT_EQ(loaded.weights_hash, loaded.sidecar["weights_sha256"]);
  torch::NoGradGuard g;
  const auto x = patches(2), c = caps(2);
  EXPECT_EQ(max_abs(m->forward({x, c}).final.y, loaded.model->forward({x, c}).final.y), 0.0);

  codec::PoseCodec other;
  other.trig = codec::build_embeddings(-1, 1, 90);
  try {
    require_same_codec(other, loaded.codec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError);
  }
}

TEST(Checkpoint, DefaultParameterCount) {
  auto m = make_model(ModelConfig{});
  // Same order of magnitude as the reference model (~9.65 M).
  EXPECT_GT(m->parameter_count(), 2'000'000);
  EXPECT_LT(m->parameter_count(), 30'000'000);
}

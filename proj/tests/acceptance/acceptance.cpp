// End-to-end acceptance run. Prints one PASS/FAIL line per criterion (also
// written to acceptance_report.txt in the working directory) and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <torch/torch.h>

#include "draco/cli/commands.hpp"
#include "draco/error.hpp"
#include "draco/eval/verification.hpp"
#include "draco/net/draco_model.hpp"
#include "draco/pose_codec.hpp"
#include "draco/rng.hpp"
#include "draco/synth/dataset.hpp"
#include "draco/train/losses.hpp"
#include "draco/train/trainer.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace draco;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

fs::path work_root() {
  static const fs::path root = oracle::scratch_dir("acceptance");
  return root;
}

// ---------------------------------------------------------------- codec

Outcome codec_roundtrip() {
  const auto t0 = Clock::now();
  const codec::PoseCodec codec;
  Rng rng(20240601);
  double worst_pos = 0.0, worst_rot = 0.0, worst_oracle = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Pose p{rng.uniform(-240.0, 240.0), rng.uniform(-240.0, 240.0), rng.uniform(-180.0, 180.0)};
    const Pose back = codec.dists_to_pose(codec.pose_to_targets(p));
    const double ex = std::abs(back.x - p.x);
    const double ey = std::abs(back.y - p.y);
    const double et = angular_distance(back.theta, p.theta);
    worst_pos = std::max({worst_pos, ex, ey});
    worst_rot = std::max(worst_rot, et);
    const auto o = oracle::pose_roundtrip(p.x, p.y, p.theta);
    worst_oracle = std::max({worst_oracle, std::abs(o.dx - ex), std::abs(o.dy - ey), std::abs(o.dtheta - et)});
  }
  const double elapsed = seconds_since(t0);
  return {worst_pos <= 1.0 && worst_rot <= 1.0 && worst_oracle <= 1e-6 && elapsed < 10.0,
          "max error " + fmt(worst_pos) + " px / " + fmt(worst_rot) + " deg, oracle gap " + fmt(worst_oracle) +
              ", " + fmt(elapsed, 3) + " s"};
}

// ---------------------------------------------------------------- overfit

Outcome overfit() {
  const auto t0 = Clock::now();
  const fs::path dir = work_root() / "overfit";
  const auto samples = synth::read_dataset(fixture::make_dataset(dir, 8, 2, 4, 31, 180.0, 512));
  train::TrainData data;
  data.train = samples;

  torch::manual_seed(0);
  net::DracoModel model(net::ModelConfig::compact());
  train::TrainSchedule s = train::TrainSchedule::standard();
  s.batch_size = 64;
  s.max_steps = 2000;
  s.augment = false;
  s.validate_every = 50;
  s.seed = 0;
  train::TrainOptions opts;
  opts.stop_when = [](const train::ValMetrics& v) { return v.trans <= 5.0 && v.rot <= 3.0; };
  const auto r = train::train(model, data, s, {}, codec::PoseCodec{}, opts);
  const auto final = train::evaluate(model, samples, codec::PoseCodec{}, codec::DecodeMode::kSum);
  const double minutes = seconds_since(t0) / 60.0;
  return {samples.size() == 64 && r.steps <= 2000 && final.trans <= 5.0 && final.rot <= 3.0 && minutes <= 90.0,
          std::to_string(samples.size()) + " samples, " + std::to_string(r.steps) + " steps: trans " +
              fmt(final.trans) + " px, rot " + fmt(final.rot) + " deg, " + fmt(minutes, 3) + " min"};
}

// ---------------------------------------------------------------- complementarity

Outcome complementarity() {
  const auto t0 = Clock::now();
  const fs::path dir = work_root() / "complementarity";
  std::ostringstream log;
  // Two independent synthetic populations, so no finger appears in both.
  cli::cmd_plains({{"out", (dir / "plains_train").string()}, {"seed", 101}, {"fingers", 100}, {"impressions", 2}},
                  {}, log);
  cli::cmd_plains({{"out", (dir / "plains_held").string()}, {"seed", 202}, {"fingers", 10}, {"impressions", 2}},
                  {}, log);
  cli::cmd_synth({{"plains", (dir / "plains_train").string()},
                  {"out", (dir / "train").string()},
                  {"seed", 1},
                  {"samples_per_plain", 10},
                  {"rot_range", 180}},
                 {}, log);
  cli::cmd_synth({{"plains", (dir / "plains_held").string()},
                  {"out", (dir / "held").string()},
                  {"seed", 2},
                  {"samples_per_plain", 10},
                  {"rot_range", 180}},
                 {}, log);
  train::TrainData data;
  data.train = synth::read_dataset(dir / "train");
  data.val = synth::read_dataset(dir / "held");
  train::attach_sources(data);

  int holds = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::map<net::Modality, train::ValMetrics> result;
    for (auto modality : {net::Modality::kDual, net::Modality::kRidge, net::Modality::kCap}) {
      net::ModelConfig cfg = net::ModelConfig::compact();
      cfg.modality = modality;
      torch::manual_seed(seed);
      net::DracoModel model(cfg);
      train::TrainSchedule s = train::TrainSchedule::standard();
      s.batch_size = 64;
      s.max_steps = 800;
      s.validate_every = 800;
      s.log_every = 100;
      s.seed = seed;
      train::train(model, data, s, {}, codec::PoseCodec{}, {});
      result[modality] = train::evaluate(model, data.val, codec::PoseCodec{}, codec::DecodeMode::kSum);
    }
    const auto& dual = result[net::Modality::kDual];
    const auto& fp = result[net::Modality::kRidge];
    const auto& cap = result[net::Modality::kCap];
    const bool ok = dual.rot <= fp.rot && fp.trans <= cap.trans;
    holds += ok ? 1 : 0;
    detail += " seed " + std::to_string(seed) + (ok ? " ok" : " no") + " (dual " + fmt(dual.trans, 3) + "/" +
              fmt(dual.rot, 3) + ", fp " + fmt(fp.trans, 3) + "/" + fmt(fp.rot, 3) + ", cap " +
              fmt(cap.trans, 3) + "/" + fmt(cap.rot, 3) + ");";
  }
  const double minutes = seconds_since(t0) / 60.0;
  return {holds >= 2 && minutes <= 120.0,
          "orderings hold on " + std::to_string(holds) + "/3 seeds, " + fmt(minutes, 3) + " min;" + detail};
}

// ---------------------------------------------------------------- losses

Outcome loss_analytics() {
  torch::manual_seed(1);
  const auto d = torch::randn({1, 32}, torch::kDouble);
  const auto p = torch::randn({1, 32}, torch::kDouble);
  const double b1 = train::infonce_relation_loss(d, p, 8.0).item<double>();
  const auto e = torch::eye(2, torch::kDouble);
  const double b2 = train::infonce_relation_loss(e, e, 8.0).item<double>();
  const auto uniform = torch::full({1, 120}, 1.0 / 120.0, torch::kDouble);
  auto one_hot = torch::zeros({1, 120}, torch::kDouble);
  one_hot[0][57] = 1.0;
  const double ce = train::pose_component_loss(uniform, one_hot, train::Distance::kCE).item<double>();
  return {b1 == 0.0 && std::abs(b2 - 0.6327) <= 1e-3 && std::abs(ce - std::log(120.0)) <= 1e-6,
          "B=1 " + fmt(b1 + 0.0) + ", B=2 " + fmt(b2, 6) + ", CE " + fmt(ce, 9) + " vs log 120 " +
              fmt(std::log(120.0), 9)};
}

Outcome gradient_checks() {
  const codec::PoseCodec codec;
  const std::vector<Pose> labels{{12, -30, 40}, {-90, 5, -150}, {0, 0, 179}, {200, -200, -10}};
  const net::Dists target = train::targets_for(labels, codec, torch::kDouble);
  const std::array<std::int64_t, 4> widths{256, 256, 120, 120};
  auto split = [&](const torch::Tensor& z) {
    return net::Dists{torch::softmax(z.slice(1, 0, 256), 1), torch::softmax(z.slice(1, 256, 512), 1),
                      torch::softmax(z.slice(1, 512, 632), 1), torch::softmax(z.slice(1, 632, 752), 1)};
  };
  (void)widths;
  std::vector<std::pair<std::string, double>> checks;

  for (auto distance : {train::Distance::kCE, train::Distance::kJS}) {
    train::LossConfig cfg;
    cfg.distance = distance;
    // Final plus three experts, all functions of the same logits.
    auto f = [&](const torch::Tensor& z) {
      net::ExpertOutput out;
      out.final = split(z);
      out.experts[0] = split(z * 0.5);
      out.experts[1] = split(z + z.pow(2) * 0.1);
      out.experts[2] = split(-z);
      return train::pose_loss(out, target, cfg).total;
    };
    torch::manual_seed(2);
    checks.emplace_back("pose " + std::string(train::to_string(distance)),
                        oracle::gradient_check(f, torch::randn({4, 752}, torch::kDouble)));
  }

  torch::manual_seed(3);
  const auto teacher_features = torch::randn({4, 16}, torch::kDouble);
  const net::Dists teacher_dists = split(torch::randn({4, 752}, torch::kDouble));
  net::ExpertOutput student;
  student.final = teacher_dists;
  for (auto mode : {train::KtMode::kRelation, train::KtMode::kFeature}) {
    train::LossConfig cfg;
    cfg.kt_mode = mode;
    auto f = [&](const torch::Tensor& a) {
      return train::kt_loss(student, a, {teacher_features, teacher_dists}, cfg);
    };
    checks.emplace_back("kt " + std::string(train::to_string(mode)),
                        oracle::gradient_check(f, torch::randn({4, 16}, torch::kDouble)));
  }
  {
    train::LossConfig cfg;
    cfg.kt_mode = train::KtMode::kResponse;
    auto f = [&](const torch::Tensor& z) {
      net::ExpertOutput out;
      out.final = split(z);
      return train::kt_loss(out, torch::Tensor(), {teacher_features, teacher_dists}, cfg);
    };
    checks.emplace_back("kt response", oracle::gradient_check(f, torch::randn({4, 752}, torch::kDouble)));
  }

  bool ok = true;
  std::string detail;
  for (const auto& [name, err] : checks) {
    ok = ok && err <= 1e-3;
    detail += (detail.empty() ? "" : ", ") + name + " " + fmt(err, 3);
  }
  return {ok, "max relative error: " + detail};
}

// ---------------------------------------------------------------- fusion

Outcome fusion_invariants() {
  double worst_sum = 0.0, worst_recompose = 0.0, min_weight = 1.0;
  bool finite = true;
  for (auto fusion : {net::FusionStrategy::kEqual, net::FusionStrategy::kFixed, net::FusionStrategy::kAdaptive}) {
    net::ModelConfig cfg = net::ModelConfig::compact();
    cfg.fusion = fusion;
    torch::manual_seed(static_cast<std::uint64_t>(fusion) + 10);
    net::DracoModel model(cfg);
    model->eval();
    torch::NoGradGuard guard;
    for (int chunk = 0; chunk < 1000; chunk += 100) {
      const auto patch = torch::rand({100, 1, 132, 132});
      const auto cap = torch::rand({100, 1, 12, 12});
      const auto out = model->forward({patch, cap});
      finite = finite && torch::isfinite(out.weights).all().item<bool>();
      min_weight = std::min(min_weight, out.weights.min().item<double>());
      worst_sum = std::max(worst_sum, (out.weights.sum(1) - 1.0).abs().max().item<double>());
      const auto fc = out.final.components();
      for (int k = 0; k < 4; ++k) {
        torch::Tensor manual = torch::zeros_like(fc[k]);
        for (int e = 0; e < 3; ++e) {
          manual += out.weights.select(1, e).unsqueeze(1) * out.experts[e]->components()[k];
        }
        worst_recompose = std::max(worst_recompose, (manual - fc[k]).abs().max().item<double>());
      }
    }
    if (fusion == net::FusionStrategy::kAdaptive) {
      // Router alone on widely spread features.
      const auto w = model->route(torch::randn({1000, 128}) * 100.0);
      finite = finite && torch::isfinite(w).all().item<bool>();
      min_weight = std::min(min_weight, w.min().item<double>());
      worst_sum = std::max(worst_sum, (w.sum(1) - 1.0).abs().max().item<double>());
    }
  }
  return {finite && min_weight >= 0.0 && worst_sum <= 1e-6 && worst_recompose <= 1e-6,
          "3 strategies x 1000 inputs: min weight " + fmt(min_weight) + ", simplex gap " + fmt(worst_sum, 3) +
              ", recomposition gap " + fmt(worst_recompose, 3)};
}

// ---------------------------------------------------------------- gate search

std::vector<eval::ScoredPair> toy_pairs(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> pos(-150.0, 150.0), ang(-180.0, 180.0);
  std::vector<eval::ScoredPair> pairs;
  for (int i = 0; i < 100; ++i) {
    eval::ScoredPair p;
    p.genuine = i % 3 == 0;
    p.query_id = "q" + std::to_string(i / 5);
    p.candidate_id = "c" + std::to_string(i);
    p.score = normal(rng) + (p.genuine ? 1.0 : 0.0);
    p.pose_query = {pos(rng), pos(rng), ang(rng)};
    p.pose_candidate = p.genuine ? Pose{p.pose_query.x + 15.0 * normal(rng), p.pose_query.y + 15.0 * normal(rng),
                                        p.pose_query.theta + 20.0 * normal(rng)}
                                 : Pose{pos(rng), pos(rng), ang(rng)};
    pairs.push_back(p);
  }
  return pairs;
}

json report_bytes(const eval::VerificationReport& r) {
  return {{"eer", r.eer}, {"fnmr_1e3", r.fnmr_at_fmr_1e3}, {"fnmr_1e4", r.fnmr_at_fmr_1e4}};
}

Outcome gate_search() {
  const auto pairs = toy_pairs(17);
  std::vector<bool> labels;
  for (const auto& p : pairs) labels.push_back(p.genuine);
  const auto grid = eval::GridSpec::standard();
  const auto found = eval::threshold_search(pairs, grid);

  double best = 2.0, best_t = 0.0, best_r = 0.0;
  for (double t : grid.trans) {
    for (double r : grid.rot) {
      std::vector<double> scores;
      for (const auto& p : pairs) {
        const double d = std::hypot(p.pose_query.x - p.pose_candidate.x, p.pose_query.y - p.pose_candidate.y);
        double a = std::fmod(std::abs(p.pose_query.theta - p.pose_candidate.theta), 360.0);
        a = std::min(a, 360.0 - a);
        scores.push_back(d <= t && a <= r ? p.score : -eval::kInfinity);
      }
      const double e = oracle::eer(scores, labels);
      if (e < best || (e == best && (t > best_t || (t == best_t && r > best_r)))) {
        best = e;
        best_t = t;
        best_r = r;
      }
    }
  }
  const bool same = found.eer == best && found.gate.th_trans == best_t && found.gate.th_rot == best_r;
  const std::string ungated = report_bytes(eval::verification_report(pairs)).dump();
  const std::string vacuous = report_bytes(eval::verification_report(pairs, eval::Gate{eval::kInfinity, 180.0})).dump();
  return {same && ungated == vacuous,
          "search (" + fmt(found.gate.th_trans) + " px, " + fmt(found.gate.th_rot) + " deg, EER " + fmt(found.eer, 6) +
              ") vs brute force (" + fmt(best_t) + ", " + fmt(best_r) + ", " + fmt(best, 6) + "); vacuous gate " +
              (ungated == vacuous ? "identical" : "differs")};
}

// ---------------------------------------------------------------- ablation

Outcome ablation() {
  const fs::path dir = work_root() / "ablation";
  const fs::path ds = fixture::make_dataset(dir, 4, 2, 4, 41, 180.0, 512);
  struct Variant {
    std::string name;
    json loss;
    std::string fusion;
  };
  std::vector<Variant> variants;
  for (const char* kt : {"relation", "feature", "response", "off"}) variants.push_back({std::string("kt_mode=") + kt, {{"kt_mode", kt}}, "adaptive"});
  for (const char* d : {"CE", "JS"}) variants.push_back({std::string("distance=") + d, {{"distance", d}}, "adaptive"});
  for (const char* m : {"sum", "max"}) variants.push_back({std::string("decode_mode=") + m, {{"decode_mode", m}}, "adaptive"});
  for (const char* f : {"equal", "fixed", "adaptive"}) variants.push_back({std::string("fusion=") + f, json::object(), f});

  int ok = 0;
  std::string failures;
  for (const auto& v : variants) {
    json model = {{"preset", "compact"}, {"fusion", v.fusion}};
    json config{{"dataset", ds.string()},
                {"out", (dir / "runs" / v.name).string()},
                {"seed", 5},
                {"model", model},
                {"loss", v.loss},
                {"schedule", {{"batch_size", 8}, {"max_steps", 50}, {"validate_every", 50}, {"val_fraction", 0.25}}}};
    if (v.loss.contains("kt_mode") && v.loss["kt_mode"] != "off") config["teacher"] = "random";
    std::ostringstream log;
    try {
      cli::cmd_train(config, {}, log);
      int steps = 0;
      bool finite = true;
      std::ifstream in(dir / "runs" / v.name / "metrics.jsonl");
      std::string line;
      while (std::getline(in, line)) {
        const json rec = json::parse(line);
        if (rec["type"] == "train") {
          steps = rec["step"].get<int>() + 1;
          finite = finite && std::isfinite(rec["loss"].get<double>());
        } else {
          finite = finite && std::isfinite(rec["trans"].get<double>()) && std::isfinite(rec["rot"].get<double>());
        }
      }
      if (steps == 50 && finite) {
        ++ok;
      } else {
        failures += " " + v.name + " (steps " + std::to_string(steps) + ")";
      }
    } catch (const std::exception& e) {
      failures += " " + v.name + " (" + e.what() + ")";
    }
  }
  return {ok == static_cast<int>(variants.size()),
          std::to_string(ok) + "/" + std::to_string(variants.size()) + " configurations trained 50 steps" +
              (failures.empty() ? "" : "; failed:" + failures)};
}

}  // namespace

// With arguments, only the listed criterion numbers run.
int main(int argc, char** argv) {
  std::set<std::string> only(argv + 1, argv + argc);
  torch::set_num_threads(1);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 codec roundtrip", codec_roundtrip},
      {"2 overfit smoke", overfit},
      {"3 complementarity", complementarity},
      {"4 loss analytics", loss_analytics},
      {"5 gradient checks", gradient_checks},
      {"6 fusion invariants", fusion_invariants},
      {"7 gate search oracle", gate_search},
      {"8 ablation plumbing", ablation},
  };
  int failed = 0;
  std::ofstream report("acceptance_report.txt");
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && !only.count(name.substr(0, name.find(' ')))) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    const std::string line = std::string(o.pass ? "PASS" : "FAIL") + "  [" + name + "] " + o.detail;
    std::cout << line << std::endl;
    report << line << std::endl;
  }
  const std::string last = failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed";
  std::cout << last << std::endl;
  report << last << std::endl;
  return failed == 0 ? 0 : 1;
}

#include "draco/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <torch/torch.h>

#include "draco/cli/schema.hpp"
#include "draco/eval/metrics.hpp"
#include "draco/eval/verification.hpp"
#include "draco/hash.hpp"
#include "draco/net/checkpoint.hpp"
#include "draco/net/inference.hpp"
#include "draco/rng.hpp"
#include "draco/synth/dataset.hpp"
#include "draco/synth/plain_generator.hpp"
#include "draco/synth/simulate.hpp"
#include "draco/train/trainer.hpp"

namespace draco::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kInvalidRange:
      return kExitConfig;
    case ErrorCode::kNumericalAbort:
      return kExitNumerical;
    default:
      return kExitData;
  }
}

json load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot read config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
}

std::string config_hash(const json& resolved) { return sha256_hex(resolved.dump()); }

std::string dataset_hash(const fs::path& dir) {
  const fs::path manifest = dir / synth::kManifestName;
  if (!fs::exists(manifest)) throw Error(ErrorCode::kIoError, "no manifest in " + dir.string());
  std::ostringstream listing;
  listing << "manifest " << sha256_file(manifest) << '\n';
  std::ifstream in(manifest);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded()) throw Error(ErrorCode::kSchemaMismatch, "unparsable manifest line in " + dir.string());
    for (const char* key : {"patch", "cap"}) {
      if (!rec.contains(key)) continue;
      const auto rel = rec[key].get<std::string>();
      listing << rel << ' ' << sha256_file(dir / rel) << '\n';
    }
  }
  return sha256_hex(listing.str());
}

json provenance(const std::string& command, const json& resolved, const json& inputs) {
  json config = resolved;
  config.erase("out");
  return {{"tool", "draco"},
          {"command", command},
          {"config", config},
          {"config_hash", config_hash(config)},
          {"inputs", inputs}};
}

namespace {

void write_json_file(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::uint64_t seed_of(const json& c) { return c.value("seed", std::uint64_t{0}); }

std::string plains_hash(const std::vector<synth::PlainFingerprint>& plains) {
  std::ostringstream listing;
  for (const auto& p : plains) {
    listing << p.finger_id << ' ' << p.impression_id << ' ' << sha256_file(p.source) << '\n';
  }
  return sha256_hex(listing.str());
}

json pose_json(const Pose& p) { return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }

Pose pose_from(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("theta").get<double>()};
}

json gate_json(const eval::Gate& g) {
  return {{"th_trans", std::isinf(g.th_trans) ? json("inf") : json(g.th_trans)}, {"th_rot", g.th_rot}};
}

}  // namespace

SynthReport cmd_plains(const json& config, const RunFlags& flags, std::ostream& log) {
  require_valid(config, "plains");
  const fs::path out = config.at("out").get<std::string>();
  const auto seed = seed_of(config);
  const int fingers = config.value("fingers", 10);
  const int impressions = config.value("impressions", 2);
  const int size = config.value("size", 512);
  SynthReport report;
  report.requested = static_cast<std::size_t>(fingers) * impressions;
  if (flags.dry_run) {
    log << "plains: would render " << report.requested << " images into " << out.string() << '\n';
    return report;
  }
  std::vector<synth::PlainFingerprint> plains;
  for (int f = 0; f < fingers; ++f) {
    for (int i = 0; i < impressions; ++i) plains.push_back(synth::synthetic_plain(seed, f, i, size));
  }
  synth::write_plains(plains, out);
  write_json_file(out / "provenance.json", provenance("plains", config, json::object()));
  report.plains = report.written = plains.size();
  log << "plains: wrote " << plains.size() << " images (" << fingers << " fingers x " << impressions
      << " impressions) to " << out.string() << '\n';
  return report;
}

SynthReport cmd_synth(const json& config, const RunFlags& flags, std::ostream& log) {
  require_valid(config, "synth");
  const fs::path plains_dir = config.at("plains").get<std::string>();
  const fs::path out = config.at("out").get<std::string>();
  const auto seed = seed_of(config);
  const int per_plain = config.value("samples_per_plain", 4);
  synth::AugmentRequest request;
  request.rot_range = config.value("rot_range", request.rot_range);
  request.trans_range = config.value("trans_range", request.trans_range);
  request.grid = config.value("grid", request.grid);
  synth::validate_rot_range(request.rot_range);

  const auto plains = synth::read_plains(plains_dir);
  SynthReport report;
  report.plains = plains.size();
  report.requested = plains.size() * static_cast<std::size_t>(per_plain);
  if (flags.dry_run) {
    log << "synth: " << plains.size() << " plains, would request " << report.requested << " samples\n";
    return report;
  }

  std::vector<synth::DualModalSample> samples;
  std::set<std::string> ids;
  std::map<std::string, int> exhausted_by_plain;
  for (std::size_t p = 0; p < plains.size(); ++p) {
    const synth::SynthesisSource source(plains[p]);
    for (int k = 0; k < per_plain; ++k) {
      Rng rng = Rng::derive(seed, {static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(k)});
      try {
        synth::DualModalSample s = synth::augment(source, request, rng);
        s.id = plains[p].finger_id + "_" + plains[p].impression_id + "_" + std::to_string(k);
        if (!ids.insert(s.id).second) {
          throw Error(ErrorCode::kSchemaMismatch, "duplicate sample id " + s.id +
                                                      " (repeated finger/impression in " +
                                                      plains_dir.string() + ")");
        }
        report.rejected_draws += static_cast<std::size_t>(s.synthesis.attempts - 1);
        samples.push_back(std::move(s));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kSynthesisExhausted) throw;
        ++report.exhausted;
        report.rejected_draws += synth::kMaxSynthesisAttempts;
        ++exhausted_by_plain[plains[p].source];
      }
    }
  }
  report.written = samples.size();
  log << "synth: plains=" << report.plains << " requested=" << report.requested
      << " written=" << report.written << " exhausted=" << report.exhausted
      << " rejected_draws=" << report.rejected_draws << '\n';

  if (report.requested > 0 && 10 * report.exhausted > report.requested) {
    std::ostringstream msg;
    msg << report.exhausted << " of " << report.requested
        << " requests exhausted their draws (limit 10%); worst sources:";
    std::vector<std::pair<int, std::string>> worst;
    for (const auto& [src, n] : exhausted_by_plain) worst.emplace_back(-n, src);
    std::sort(worst.begin(), worst.end());
    for (std::size_t i = 0; i < std::min<std::size_t>(worst.size(), 5); ++i) {
      msg << "\n  " << worst[i].second << " (" << -worst[i].first << "/" << per_plain << ")";
    }
    throw Error(ErrorCode::kSynthesisExhausted, msg.str());
  }

  // Given fields are echoed verbatim; defaults fill the rest.
  json resolved = config;
  const json defaults{{"seed", seed},
                      {"samples_per_plain", per_plain},
                      {"rot_range", request.rot_range},
                      {"trans_range", request.trans_range},
                      {"grid", request.grid}};
  for (const auto& [key, value] : defaults.items()) {
    if (!resolved.contains(key)) resolved[key] = value;
  }
  json inputs{{"plains", plains_hash(plains)}};
  json prov = provenance("synth", resolved, inputs);
  prov["counts"] = {{"plains", report.plains},
                    {"requested", report.requested},
                    {"written", report.written},
                    {"exhausted", report.exhausted},
                    {"rejected_draws", report.rejected_draws}};
  synth::write_dataset(samples, out, prov);
  return report;
}

void cmd_train(const json& config, const RunFlags& flags, std::ostream& log, bool finetune) {
  require_valid(config, "train");
  const std::string command = finetune ? "finetune" : "train";
  const auto seed = seed_of(config);
  const fs::path out = config.at("out").get<std::string>();

  std::optional<net::LoadedCheckpoint> parent;
  if (finetune) {
    if (!config.contains("checkpoint")) throw Error(ErrorCode::kConfigError, "finetune needs \"checkpoint\"");
    parent = net::load_checkpoint(config.at("checkpoint").get<std::string>());
  } else if (config.contains("checkpoint")) {
    throw Error(ErrorCode::kConfigError, "\"checkpoint\" is only valid for finetune");
  }

  net::ModelConfig model_cfg = parent ? net::model_from_json(parent->sidecar.at("model"))
                                      : net::model_from_json(config.value("model", json::object()));
  if (parent && config.contains("model") &&
      net::to_json(net::model_from_json(config.at("model"))) != net::to_json(model_cfg)) {
    throw Error(ErrorCode::kConfigError, "\"model\" differs from the parent checkpoint's architecture");
  }

  const json loss_json = config.value("loss", json::object());
  train::LossConfig loss = train::loss_from_json(loss_json);

  codec::PoseCodec codec;
  if (config.contains("codec")) {
    codec = net::codec_from_json(config.at("codec"));
    if (!loss_json.contains("sigma_pos")) loss.sigma_pos = codec.sigma_pos;
    if (!loss_json.contains("sigma_trig")) loss.sigma_trig = codec.sigma_trig;
    if (parent) net::require_same_codec(codec, parent->codec);
  } else if (parent) {
    codec = parent->codec;
  }
  codec.sigma_pos = loss.sigma_pos;
  codec.sigma_trig = loss.sigma_trig;
  if (codec.position.n != static_cast<std::size_t>(model_cfg.position_bins) ||
      codec.trig.n != static_cast<std::size_t>(model_cfg.trig_bins)) {
    throw Error(ErrorCode::kConfigError, "codec bin counts differ from the model heads");
  }
  loss.validate();

  const json sched_json = config.value("schedule", json::object());
  const std::string preset = sched_json.value("preset", finetune ? "finetune" : "standard");
  train::TrainSchedule schedule = preset == "finetune"             ? train::TrainSchedule::finetune()
                                  : preset == "knowledge_transfer" ? train::TrainSchedule::knowledge_transfer()
                                                                   : train::TrainSchedule::standard();
  json sched_fields = sched_json;
  sched_fields.erase("preset");
  schedule = train::schedule_from_json(sched_fields, schedule);
  schedule.seed = seed;
  schedule.validate();

  const std::string input_kind = config.value("input", std::string("sample"));
  json resolved{{"dataset", config.at("dataset")},
                {"out", out.string()},
                {"seed", seed},
                {"model", net::to_json(model_cfg)},
                {"loss", train::to_json(loss)},
                {"schedule", train::to_json(schedule)},
                {"codec", net::codec_to_json(codec)},
                {"input", input_kind}};
  for (const char* key : {"val_dataset", "teacher", "checkpoint"}) {
    if (config.contains(key)) resolved[key] = config.at(key);
  }

  torch::manual_seed(seed);
  net::DracoModel model = parent ? parent->model : net::DracoModel(model_cfg);
  log << command << ": parameters=" << model->parameter_count() << " config_hash="
      << config_hash(provenance(command, resolved, json::object())["config"]) << '\n';
  if (flags.dry_run) return;

  const fs::path dataset_dir = config.at("dataset").get<std::string>();
  json inputs{{"dataset", dataset_hash(dataset_dir)}};
  train::TrainData data;
  if (config.contains("val_dataset")) {
    const fs::path val_dir = config.at("val_dataset").get<std::string>();
    data.train = synth::read_dataset(dataset_dir);
    data.val = synth::read_dataset(val_dir);
    inputs["val_dataset"] = dataset_hash(val_dir);
  } else {
    data = train::split_by_finger(synth::read_dataset(dataset_dir), schedule.val_fraction, seed);
  }
  if (parent) inputs["parent_checkpoint"] = parent->weights_hash;

  std::optional<net::Teacher> teacher;
  if (loss.kt_mode != train::KtMode::kOff) {
    const std::string spec = config.value("teacher", std::string());
    if (spec.empty()) throw Error(ErrorCode::kConfigError, "kt_mode " + std::string(train::to_string(loss.kt_mode)) + " needs \"teacher\"");
    if (spec == "random") {
      teacher.emplace(net::Teacher::random(model_cfg, seed ^ 0x7eac4e7ULL));
    } else {
      auto loaded = net::load_checkpoint(spec);
      teacher.emplace(loaded.model);
      inputs["teacher"] = loaded.weights_hash;
    }
    if (teacher->feature_dim() != model_cfg.teacher_feature_dim) {
      throw Error(ErrorCode::kConfigError, "teacher feature dim " + std::to_string(teacher->feature_dim()) +
                                               " != teacher_feature_dim " +
                                               std::to_string(model_cfg.teacher_feature_dim));
    }
    inputs["teacher_checksum"] = teacher->checksum();
  }
  const bool plain_view = input_kind == "plain_view";
  if (schedule.augment || teacher || plain_view) train::attach_sources(data);

  train::TrainOptions opts;
  opts.out_dir = out;
  opts.provenance = provenance(command, resolved, inputs);
  opts.config_hash = opts.provenance["config_hash"].get<std::string>();
  opts.resume = flags.resume;
  opts.stop_after = flags.stop_after;
  opts.teacher = teacher ? &*teacher : nullptr;
  opts.input = plain_view ? train::InputKind::kPlainView : train::InputKind::kSample;
  opts.on_log = [&log, command](const json& rec) {
    if (rec.value("type", "") != "val") return;
    log << command << ": step " << rec["step"] << " val trans=" << rec["trans"].get<double>()
        << " rot=" << rec["rot"].get<double>() << '\n';
  };
  write_json_file(out / "config.json", opts.provenance);
  log << command << ": train=" << data.train.size() << " val=" << data.val.size() << '\n';
  const auto result = train::train(model, data, schedule, loss, codec, opts);
  log << command << ": steps=" << result.steps << " best trans=" << result.best_val.trans
      << " rot=" << result.best_val.rot << " -> " << result.best_checkpoint.string() << '\n';
}

namespace {

codec::DecodeMode checkpoint_decode_mode(const json& sidecar) {
  const json* loss = nullptr;
  if (sidecar.contains("provenance") && sidecar["provenance"].contains("config") &&
      sidecar["provenance"]["config"].contains("loss")) {
    loss = &sidecar["provenance"]["config"]["loss"];
  }
  return codec::parse_decode_mode(loss ? loss->value("decode_mode", std::string("sum")) : "sum");
}

// Arrow overlay of predicted (red) and optional true (green) poses around
// the ridge patch, in a canvas large enough for the position range.
void write_overlay(const synth::DualModalSample& s, const Pose& pred, const Pose* truth,
                   const fs::path& path) {
  constexpr int kCanvas = 600;
  cv::Mat canvas(kCanvas, kCanvas, CV_8UC3, cv::Scalar(255, 255, 255));
  const int origin = (kCanvas - synth::kPatchSize) / 2;
  cv::Mat patch_bgr;
  cv::cvtColor(s.patch.pixels, patch_bgr, cv::COLOR_GRAY2BGR);
  patch_bgr.copyTo(canvas(cv::Rect(origin, origin, synth::kPatchSize, synth::kPatchSize)));
  cv::rectangle(canvas, cv::Rect(origin, origin, synth::kPatchSize, synth::kPatchSize), cv::Scalar(0, 0, 0));
  const double center = kCanvas / 2.0;
  auto draw = [&](const Pose& p, const cv::Scalar& color) {
    const cv::Point2d c(center + p.x, center + p.y);
    const double t = p.theta * kDegToRad;
    const cv::Point2d tip(c.x + 60.0 * std::sin(t), c.y - 60.0 * std::cos(t));
    cv::circle(canvas, c, 5, color, 2);
    cv::arrowedLine(canvas, c, tip, color, 2, cv::LINE_AA, 0, 0.2);
  };
  if (truth) draw(*truth, cv::Scalar(0, 160, 0));
  draw(pred, cv::Scalar(0, 0, 220));
  if (!cv::imwrite(path.string(), canvas)) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

synth::DualModalSample single_sample(const json& config) {
  synth::DualModalSample s;
  s.id = fs::path(config.at("patch").get<std::string>()).stem().string();
  const std::string patch_path = config.at("patch").get<std::string>();
  s.patch.pixels = cv::imread(patch_path, cv::IMREAD_GRAYSCALE);
  if (s.patch.pixels.empty()) throw Error(ErrorCode::kIoError, "cannot read " + patch_path);
  if (s.patch.pixels.rows != synth::kPatchSize || s.patch.pixels.cols != synth::kPatchSize) {
    throw Error(ErrorCode::kShapeMismatch, patch_path + " is not " + std::to_string(synth::kPatchSize) +
                                               "x" + std::to_string(synth::kPatchSize));
  }
  if (config.contains("cap")) {
    const std::string cap_path = config.at("cap").get<std::string>();
    const cv::Mat cap = cv::imread(cap_path, cv::IMREAD_GRAYSCALE);
    if (cap.empty()) throw Error(ErrorCode::kIoError, "cannot read " + cap_path);
    if (cap.rows != cap.cols) throw Error(ErrorCode::kShapeMismatch, cap_path + " is not square");
    cap.convertTo(s.cap.pixels, CV_32F, 1.0 / 255.0);
  }
  return s;
}

}  // namespace

void cmd_predict(const json& config, const RunFlags& flags, std::ostream& out, std::ostream& log) {
  require_valid(config, "predict");
  const bool single = config.contains("patch");
  if (single == config.contains("dataset")) {
    throw Error(ErrorCode::kConfigError, "predict needs exactly one of \"dataset\" or \"patch\"");
  }
  if (!single && !config.contains("out")) throw Error(ErrorCode::kConfigError, "dataset mode needs \"out\"");
  if (config.contains("cap") && !single) throw Error(ErrorCode::kConfigError, "\"cap\" needs \"patch\"");

  const fs::path ck_path = config.at("checkpoint").get<std::string>();
  auto loaded = net::load_checkpoint(ck_path);
  const codec::DecodeMode mode = config.contains("decode_mode")
                                     ? codec::parse_decode_mode(config["decode_mode"].get<std::string>())
                                     : checkpoint_decode_mode(loaded.sidecar);
  json resolved = config;
  resolved["decode_mode"] = std::string(codec::to_string(mode));
  if (flags.dry_run) {
    log << "predict: checkpoint ok (" << loaded.model->parameter_count() << " parameters)\n";
    return;
  }

  json inputs{{"checkpoint", loaded.weights_hash}};
  std::vector<synth::DualModalSample> samples;
  if (single) {
    samples.push_back(single_sample(config));
    inputs["patch"] = sha256_file(config.at("patch").get<std::string>());
    if (config.contains("cap")) inputs["cap"] = sha256_file(config.at("cap").get<std::string>());
  } else {
    const fs::path dir = config.at("dataset").get<std::string>();
    inputs["dataset"] = dataset_hash(dir);
    samples = synth::read_dataset(dir);
  }
  const auto preds = net::predict(loaded.model, samples, loaded.codec, mode,
                                  config.value("batch_size", 64));
  const std::string mode_name(codec::to_string(mode));

  auto record = [&](const net::Prediction& p) {
    return json{{"id", p.id},
                {"pose", pose_json(p.pose)},
                {"weights", {{"P", p.weights[0]}, {"F", p.weights[1]}, {"C", p.weights[2]}}},
                {"decode_mode", mode_name}};
  };

  if (config.contains("overlay")) {
    const fs::path dir = config.at("overlay").get<std::string>();
    fs::create_directories(dir);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      write_overlay(samples[i], preds[i].pose, single ? nullptr : &samples[i].label, dir / (samples[i].id + ".png"));
    }
  }

  if (single) {
    out << record(preds.front()).dump() << '\n';
    if (!config.contains("out")) return;
  }
  const fs::path out_path = config.at("out").get<std::string>();
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::kIoError, "cannot write " + out_path.string());
  for (const auto& p : preds) file << record(p).dump() << '\n';
  fs::path meta = out_path;
  meta += ".meta.json";
  write_json_file(meta, provenance("predict", resolved, inputs));
  log << "predict: " << preds.size() << " predictions (" << mode_name << ") -> " << out_path.string() << '\n';
}

namespace {

std::map<std::string, Pose> read_prediction_poses(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::map<std::string, Pose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      poses[rec.at("id").get<std::string>()] = pose_from(rec.at("pose"));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kSchemaMismatch, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return poses;
}

std::map<std::string, Pose> read_truth_poses(fs::path path) {
  if (fs::is_directory(path)) path /= synth::kManifestName;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::map<std::string, Pose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      poses[rec.at("id").get<std::string>()] = pose_from(rec.at("label"));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kSchemaMismatch, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return poses;
}

json report_json(const eval::VerificationReport& r) {
  return {{"eer", r.eer},
          {"fnmr_at_fmr_1e-3", r.fnmr_at_fmr_1e3},
          {"fnmr_at_fmr_1e-4", r.fnmr_at_fmr_1e4},
          {"genuine", r.genuine},
          {"impostor", r.impostor},
          {"gated_genuine", r.gated_genuine},
          {"gated_impostor", r.gated_impostor}};
}

json indexing_json(const eval::IndexingCurve& c) {
  json j{{"queries", c.queries}, {"gallery_size", c.gallery_size}, {"hit_rate", c.hit_rate}};
  for (std::size_t k : {1u, 5u, 10u, 20u}) {
    if (k <= c.hit_rate.size()) j["top" + std::to_string(k)] = c.hit_rate[k - 1];
  }
  return j;
}

}  // namespace

void cmd_eval(const json& config, const RunFlags& flags, std::ostream& log) {
  require_valid(config, "eval");
  const fs::path pred_path = config.at("predictions").get<std::string>();
  const fs::path truth_path = config.at("truth").get<std::string>();
  const fs::path out = config.at("out").get<std::string>();
  const auto preds = read_prediction_poses(pred_path);
  const auto truth = read_truth_poses(truth_path);

  std::set<std::string> missing;
  for (const auto& [id, p] : preds) if (!truth.count(id)) missing.insert(id);
  for (const auto& [id, p] : truth) if (!preds.count(id)) missing.insert(id);
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw Error(ErrorCode::kJoinMismatch, "ids present in only one of predictions/truth: " + list);
  }
  if (flags.dry_run) {
    log << "eval: " << preds.size() << " joined ids\n";
    return;
  }

  json inputs{{"predictions", sha256_file(pred_path)},
              {"truth", sha256_file(fs::is_directory(truth_path) ? truth_path / synth::kManifestName
                                                                : truth_path)}};
  if (config.contains("scores")) inputs["scores"] = sha256_file(config.at("scores").get<std::string>());

  std::vector<eval::PoseError> errors;
  std::vector<double> trans, rot;
  for (const auto& [id, p] : preds) {
    errors.push_back(eval::pose_error(p, truth.at(id)));
    trans.push_back(errors.back().trans_err);
    rot.push_back(errors.back().rot_err);
  }
  const auto s = eval::summarize(errors);
  json summary = provenance("eval", config, inputs);
  summary["count"] = s.count;
  summary["trans_err"] = {{"mean", s.mean_trans}, {"median", s.median_trans}, {"p90", s.p90_trans}};
  summary["rot_err"] = {{"mean", s.mean_rot}, {"median", s.median_rot}, {"p90", s.p90_rot}};

  if (config.contains("scores")) {
    auto pairs = eval::read_scores_csv(config.at("scores").get<std::string>());
    eval::attach_poses(pairs, preds);
    const auto search = eval::threshold_search(pairs, eval::GridSpec::standard());
    summary["verification"] = {{"ungated", report_json(eval::verification_report(pairs))},
                               {"gated", report_json(eval::verification_report(pairs, search.gate))},
                               {"gate", gate_json(search.gate)},
                               {"gate_search_eer", search.eer}};
    summary["indexing"] = {{"ungated", indexing_json(eval::indexing_report(pairs))},
                           {"gated", indexing_json(eval::indexing_report(pairs, search.gate))},
                           {"gate", gate_json(search.gate)}};
  }
  fs::create_directories(out);
  const auto ecdf_trans = eval::ecdf(trans);
  const auto ecdf_rot = eval::ecdf(rot);
  eval::write_ecdf_csv(ecdf_trans, out / "ecdf_trans.csv", "trans_err");
  eval::write_ecdf_csv(ecdf_rot, out / "ecdf_rot.csv", "rot_err");
  eval::render_ecdf_png({{"trans_err", ecdf_trans}}, out / "ecdf_trans.png", "translation error (px)");
  eval::render_ecdf_png({{"rot_err", ecdf_rot}}, out / "ecdf_rot.png", "rotation error (deg)");

  write_json_file(out / "summary.json", summary);
  log << "eval: n=" << s.count << " trans mean=" << s.mean_trans << " rot mean=" << s.mean_rot << '\n';
}

}  // namespace draco::cli

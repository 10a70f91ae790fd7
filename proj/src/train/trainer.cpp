#include "draco/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "draco/error.hpp"
#include "draco/eval/metrics.hpp"
#include "draco/net/checkpoint.hpp"
#include "draco/net/inference.hpp"
#include "draco/rng.hpp"
#include "draco/synth/dataset.hpp"

namespace draco::train {

namespace fs = std::filesystem;
using nlohmann::json;

TrainSchedule TrainSchedule::standard() { return {}; }

TrainSchedule TrainSchedule::knowledge_transfer() {
  TrainSchedule s;
  s.batch_size = 512;
  s.lr_start = 4e-3;
  s.lr_end = 4e-6;
  s.epochs = 200;
  return s;
}

TrainSchedule TrainSchedule::finetune() {
  TrainSchedule s;
  s.lr_start = 1e-4;
  s.lr_end = 1e-5;
  s.epochs = 200;
  return s;
}

void TrainSchedule::validate() const {
  if (!(lr_end > 0.0) || !(lr_start >= lr_end)) {
    throw Error(ErrorCode::kConfigError, "need lr_start >= lr_end > 0");
  }
  if (batch_size < 1) throw Error(ErrorCode::kConfigError, "batch_size must be >= 1");
  if (epochs < 0 || max_steps < 0) throw Error(ErrorCode::kConfigError, "epochs/max_steps must be >= 0");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorCode::kConfigError, "val_fraction must lie in [0, 1)");
  }
  synth::validate_rot_range(rot_range);
}

json to_json(const TrainSchedule& s) {
  return {{"optimizer", "adamw"},
          {"scheduler", "cosine"},
          {"lr_start", s.lr_start},
          {"lr_end", s.lr_end},
          {"batch_size", s.batch_size},
          {"epochs", s.epochs},
          {"max_steps", s.max_steps},
          {"weight_decay", s.weight_decay},
          {"grad_clip", s.grad_clip},
          {"augment", s.augment},
          {"rot_range", s.rot_range},
          {"trans_range", s.trans_range},
          {"seed", s.seed},
          {"val_fraction", s.val_fraction},
          {"validate_every", s.validate_every},
          {"log_every", s.log_every},
          {"teacher_input", s.teacher_input}};
}

TrainSchedule schedule_from_json(const json& j, TrainSchedule s) {
  if (!j.is_object()) return s;
  s.lr_start = j.value("lr_start", s.lr_start);
  s.lr_end = j.value("lr_end", s.lr_end);
  s.batch_size = j.value("batch_size", s.batch_size);
  s.epochs = j.value("epochs", s.epochs);
  s.max_steps = j.value("max_steps", s.max_steps);
  s.weight_decay = j.value("weight_decay", s.weight_decay);
  s.grad_clip = j.value("grad_clip", s.grad_clip);
  s.augment = j.value("augment", s.augment);
  s.rot_range = j.value("rot_range", s.rot_range);
  s.trans_range = j.value("trans_range", s.trans_range);
  s.seed = j.value("seed", s.seed);
  s.val_fraction = j.value("val_fraction", s.val_fraction);
  s.validate_every = j.value("validate_every", s.validate_every);
  s.log_every = j.value("log_every", s.log_every);
  s.teacher_input = j.value("teacher_input", s.teacher_input);
  s.validate();
  return s;
}

double cosine_lr(int step, int total_steps, double lr_start, double lr_end) {
  if (total_steps <= 1) return lr_start;
  const double progress =
      std::clamp(static_cast<double>(step) / static_cast<double>(total_steps - 1), 0.0, 1.0);
  return lr_end + 0.5 * (lr_start - lr_end) * (1.0 + std::cos(std::numbers::pi * progress));
}

TrainData split_by_finger(std::vector<synth::DualModalSample> samples, double val_fraction,
                          std::uint64_t seed) {
  TrainData data;
  std::set<std::string> finger_set;
  for (const auto& s : samples) finger_set.insert(s.finger_id);
  std::vector<std::string> fingers(finger_set.begin(), finger_set.end());

  std::size_t n_val = static_cast<std::size_t>(std::lround(val_fraction * fingers.size()));
  if (val_fraction > 0.0 && n_val == 0 && fingers.size() >= 2) n_val = 1;
  Rng rng = Rng::derive(seed, {0x5b1});
  for (std::size_t i = fingers.size(); i > 1; --i) std::swap(fingers[i - 1], fingers[rng.below(i)]);
  const std::set<std::string> val_fingers(fingers.begin(),
                                          fingers.begin() + static_cast<std::ptrdiff_t>(n_val));

  for (auto& s : samples) (val_fingers.count(s.finger_id) ? data.val : data.train).push_back(std::move(s));
  return data;
}

void attach_sources(TrainData& data) {
  auto add = [&](const synth::DualModalSample& s) {
    if (s.source.empty() || data.sources.count(s.source)) return;
    auto fp = synth::read_plain(s.source, s.source_pose, s.finger_id, s.impression_id);
    fp.source = s.source;
    data.sources.emplace(s.source, std::make_shared<const synth::SynthesisSource>(std::move(fp)));
  };
  for (const auto& s : data.train) add(s);
  for (const auto& s : data.val) add(s);
}

namespace {

const synth::SynthesisSource& source_for(const TrainData& data, const synth::DualModalSample& s) {
  const auto it = data.sources.find(s.source);
  if (it == data.sources.end()) {
    throw Error(ErrorCode::kConfigError,
                "sample '" + s.id + "' has no loaded plain fingerprint source ('" + s.source + "')");
  }
  return *it->second;
}

double item(const torch::Tensor& t) { return t.defined() ? t.detach().item<double>() : 0.0; }

void write_json_line(std::ofstream& out, const json& j) {
  out << j.dump() << '\n';
  out.flush();
}

}  // namespace

std::vector<synth::DualModalSample> as_plain_views(const TrainData& data,
                                                   const std::vector<synth::DualModalSample>& samples,
                                                   int size) {
  std::vector<synth::DualModalSample> out = samples;
  for (auto& s : out) {
    s.patch.pixels = synth::plain_view(source_for(data, s).plain(), s.synthesis.crop_center,
                                       s.synthesis.crop_angle, size);
  }
  return out;
}

ValMetrics evaluate(net::DracoModel& model, const std::vector<synth::DualModalSample>& samples,
                    const codec::PoseCodec& codec, codec::DecodeMode mode) {
  ValMetrics m;
  if (samples.empty()) return m;
  const auto preds = net::predict(model, samples, codec, mode);
  std::vector<eval::PoseError> errors;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    errors.push_back(eval::pose_error(preds[i].pose, samples[i].label));
  }
  const auto s = eval::summarize(errors);
  m.trans = s.mean_trans;
  m.rot = s.mean_rot;
  m.count = s.count;
  return m;
}

TrainResult train(net::DracoModel& model, const TrainData& data, const TrainSchedule& schedule,
                  const LossConfig& loss_cfg, const codec::PoseCodec& base_codec,
                  const TrainOptions& opts) {
  schedule.validate();
  loss_cfg.validate();
  if (data.train.empty()) throw Error(ErrorCode::kEmptyInput, "no training samples");

  const bool plain_views = opts.input == InputKind::kPlainView;
  const bool needs_teacher = loss_cfg.kt_mode != KtMode::kOff;
  if (plain_views && model->config().modality != net::Modality::kRidge) {
    throw Error(ErrorCode::kConfigError, "plain-view training needs a ridge-only (teacher) model");
  }
  if (needs_teacher) {
    if (opts.teacher == nullptr) throw Error(ErrorCode::kConfigError, "kt_mode needs a teacher");
    if (!model->has_adapter()) throw Error(ErrorCode::kConfigError, "kt_mode needs a dual-modal student");
  }
  if (schedule.augment || needs_teacher || plain_views) {
    for (const auto& s : data.train) source_for(data, s);
  }

  codec::PoseCodec codec = base_codec;
  codec.sigma_pos = loss_cfg.sigma_pos;
  codec.sigma_trig = loss_cfg.sigma_trig;

  const auto n = static_cast<int>(data.train.size());
  const int batch = std::min(schedule.batch_size, n);
  const int steps_per_epoch = std::max(1, n / batch);
  const int total = schedule.max_steps > 0 ? schedule.max_steps : schedule.epochs * steps_per_epoch;

  torch::optim::AdamW optimizer(
      model->parameters(),
      torch::optim::AdamWOptions(schedule.lr_start).weight_decay(schedule.weight_decay));

  TrainResult result;
  result.total_steps = total;
  int start_step = 0;
  const fs::path last_path = opts.out_dir / "last.pt";
  const fs::path best_path = opts.out_dir / "model.pt";
  const fs::path optim_path = opts.out_dir / "optimizer.pt";
  if (opts.resume) {
    const auto loaded = net::load_checkpoint(last_path);
    const json& prov = loaded.sidecar.at("provenance");
    if (prov.value("config_hash", std::string()) != opts.config_hash) {
      throw Error(ErrorCode::kConfigError, "resume refused: config hash differs from " + last_path.string());
    }
    net::require_same_codec(codec, loaded.codec);
    torch::serialize::InputArchive archive;
    archive.load_from(last_path.string());
    model->load(archive);
    torch::load(optimizer, optim_path.string());
    start_step = prov.value("step", 0);
    if (prov.contains("best_val")) {
      result.best_val = {prov["best_val"].value("trans", 0.0), prov["best_val"].value("rot", 0.0),
                         prov["best_val"].value("count", std::size_t{0})};
    }
  }

  std::ofstream log_file;
  if (!opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir);
    log_file.open(opts.out_dir / "metrics.jsonl",
                  std::ios::binary | (opts.resume ? std::ios::app : std::ios::trunc));
  }
  auto emit = [&](const json& record) {
    result.log.push_back(record);
    if (log_file.is_open()) write_json_line(log_file, record);
    if (opts.on_log) opts.on_log(record);
  };

  const std::vector<synth::DualModalSample>& val_base = data.val.empty() ? data.train : data.val;
  const std::vector<synth::DualModalSample> val_set =
      plain_views ? as_plain_views(data, val_base, schedule.teacher_input) : val_base;
  double best_score = result.best_val.count ? result.best_val.trans + result.best_val.rot : 0.0;
  bool have_best = result.best_val.count > 0;

  auto provenance = [&](int step) {
    json p = opts.provenance;
    p["step"] = step;
    p["total_steps"] = total;
    p["config_hash"] = opts.config_hash;
    p["schedule"] = to_json(schedule);
    p["loss"] = to_json(loss_cfg);
    p["best_val"] = {{"trans", result.best_val.trans},
                     {"rot", result.best_val.rot},
                     {"count", result.best_val.count}};
    return p;
  };

  auto validate_now = [&](int step) {
    result.last_val = evaluate(model, val_set, codec, loss_cfg.decode_mode);
    emit({{"type", "val"},
          {"step", step},
          {"trans", result.last_val.trans},
          {"rot", result.last_val.rot},
          {"count", result.last_val.count},
          {"on", data.val.empty() ? "train" : "val"}});
    const double score = result.last_val.trans + result.last_val.rot;
    if (!have_best || score < best_score) {
      have_best = true;
      best_score = score;
      result.best_val = result.last_val;
      if (opts.write_checkpoints && !opts.out_dir.empty()) {
        net::save_checkpoint(model, best_path, codec, provenance(step));
        result.best_checkpoint = best_path;
      }
    }
  };

  auto save_last = [&](int step) {
    if (!opts.write_checkpoints || opts.out_dir.empty()) return;
    net::save_checkpoint(model, last_path, codec, provenance(step));
    torch::save(optimizer, optim_path.string());
    result.last_checkpoint = last_path;
  };

  std::vector<int> order;
  int order_epoch = -1;
  std::vector<const synth::DualModalSample*> batch_ptrs;
  std::vector<synth::DualModalSample> resynthesized;
  model->train();

  for (int step = start_step; step < total; ++step) {
    const int epoch = step / steps_per_epoch;
    const int within = step % steps_per_epoch;
    if (epoch != order_epoch) {
      order.resize(n);
      for (int i = 0; i < n; ++i) order[i] = i;
      Rng rng = Rng::derive(schedule.seed, {0x0e, static_cast<std::uint64_t>(epoch)});
      for (int i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
      order_epoch = epoch;
    }

    resynthesized.clear();
    batch_ptrs.clear();
    for (int b = 0; b < batch; ++b) {
      const int idx = order[within * batch + b];
      const auto& base = data.train[idx];
      if (schedule.augment) {
        Rng rng = Rng::derive(schedule.seed, {0xa6, static_cast<std::uint64_t>(epoch),
                                              static_cast<std::uint64_t>(idx)});
        synth::AugmentRequest req{schedule.rot_range, schedule.trans_range, base.synthesis.grid};
        synth::DualModalSample s = synth::augment(source_for(data, base), req, rng);
        s.id = base.id;
        resynthesized.push_back(std::move(s));
      } else {
        resynthesized.push_back(base);
      }
    }
    for (auto& s : resynthesized) {
      if (plain_views) {
        s.patch.pixels = synth::plain_view(source_for(data, s).plain(), s.synthesis.crop_center,
                                           s.synthesis.crop_angle, schedule.teacher_input);
      }
      batch_ptrs.push_back(&s);
    }

    const double lr = cosine_lr(step, total, schedule.lr_start, schedule.lr_end);
    for (auto& group : optimizer.param_groups()) {
      static_cast<torch::optim::AdamWOptions&>(group.options()).lr(lr);
    }

    std::vector<Pose> labels;
    for (const auto* s : batch_ptrs) labels.push_back(s->label);
    const net::Dists target = targets_for(labels, codec);

    model->train();
    const net::ExpertOutput out = model->forward(net::make_input(*model, batch_ptrs));
    const PoseLossTerms pose = pose_loss(out, target, loss_cfg);
    torch::Tensor kt;
    if (needs_teacher) {
      std::vector<cv::Mat> views;
      for (const auto* s : batch_ptrs) {
        views.push_back(synth::plain_view(source_for(data, *s).plain(), s->synthesis.crop_center,
                                          s->synthesis.crop_angle, schedule.teacher_input));
      }
      const auto t = opts.teacher->forward(net::patches_to_tensor(views));
      const torch::Tensor adapted = loss_cfg.kt_mode == KtMode::kResponse ? torch::Tensor()
                                                                           : model->adapt(out.f_f);
      kt = kt_loss(out, adapted, {t.features, t.dists}, loss_cfg);
    }
    const torch::Tensor loss = total_loss(pose.total, kt, loss_cfg);

    const double loss_value = item(loss);
    if (!std::isfinite(loss_value)) {
      std::ostringstream msg;
      msg << "step " << step << ": loss=" << loss_value << " pose=" << item(pose.total)
          << " kt=" << item(kt) << " lr=" << lr;
      throw Error(ErrorCode::kNumericalAbort, msg.str());
    }

    optimizer.zero_grad();
    loss.backward();
    if (schedule.grad_clip > 0.0) torch::nn::utils::clip_grad_norm_(model->parameters(), schedule.grad_clip);
    optimizer.step();
    result.steps = step + 1;

    if (schedule.log_every > 0 && (step % schedule.log_every == 0 || step + 1 == total)) {
      json rec{{"type", "train"},
               {"step", step},
               {"epoch", epoch},
               {"lr", lr},
               {"loss", loss_value},
               {"pose", item(pose.total)},
               {"pose_final", item(pose.final)}};
      static constexpr const char* kExpertNames[] = {"pose_P", "pose_F", "pose_C"};
      for (int e = 0; e < 3; ++e) {
        if (pose.experts[e].defined()) rec[kExpertNames[e]] = item(pose.experts[e]);
      }
      if (needs_teacher) rec["kt"] = item(kt);
      emit(rec);
    }

    const bool epoch_end = within + 1 == steps_per_epoch;
    const bool periodic = schedule.validate_every > 0 ? (step + 1) % schedule.validate_every == 0
                                                      : epoch_end;
    if (periodic || step + 1 == total) {
      validate_now(step + 1);
      save_last(step + 1);
      if (opts.stop_when && opts.stop_when(result.last_val)) break;
    }
    if (opts.stop_after > 0 && result.steps - start_step >= opts.stop_after) break;
  }

  if (total == 0 || start_step >= total) {
    if (!have_best) validate_now(start_step);
  }
  if (opts.write_checkpoints && !opts.out_dir.empty()) {
    if (result.best_checkpoint.empty() && fs::exists(best_path)) result.best_checkpoint = best_path;
    if (result.best_checkpoint.empty()) {
      net::save_checkpoint(model, best_path, codec, provenance(result.steps));
      result.best_checkpoint = best_path;
    }
    save_last(std::max(result.steps, start_step));
  }
  result.steps = std::max(result.steps, start_step);
  model->eval();
  return result;
}

}  // namespace draco::train

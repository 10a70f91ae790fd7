#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "draco/net/draco_model.hpp"
#include "draco/pose_codec.hpp"
#include "draco/synth/sample.hpp"
#include "draco/synth/simulate.hpp"
#include "draco/train/losses.hpp"

namespace draco::train {

struct TrainSchedule {
  double lr_start = 1e-3;
  double lr_end = 1e-6;
  int batch_size = 256;
  int epochs = 80;
  int max_steps = 0;  // 0: epochs * steps_per_epoch
  double weight_decay = 1e-2;
  double grad_clip = 5.0;
  bool augment = true;
  double rot_range = 180.0;
  double trans_range = 40.0;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  int validate_every = 0;  // steps; 0 validates at every epoch end
  int log_every = 1;
  int teacher_input = 512;

  static TrainSchedule standard();
  // Contrastive variant: batch 512, learning rates x4, 200 epochs.
  static TrainSchedule knowledge_transfer();
  static TrainSchedule finetune();

  void validate() const;
};

nlohmann::json to_json(const TrainSchedule& s);
TrainSchedule schedule_from_json(const nlohmann::json& j, TrainSchedule defaults = {});

// Cosine annealing from lr_start at step 0 to lr_end at step total_steps - 1.
double cosine_lr(int step, int total_steps, double lr_start, double lr_end);

struct ValMetrics {
  double trans = 0.0;
  double rot = 0.0;
  std::size_t count = 0;
};

struct TrainData {
  std::vector<synth::DualModalSample> train;
  // Empty: validation runs on the training samples themselves.
  std::vector<synth::DualModalSample> val;
  // Plain-fingerprint sources keyed by DualModalSample::source; needed for
  // augmentation and for the teacher's plain views.
  std::map<std::string, std::shared_ptr<const synth::SynthesisSource>> sources;
};

// Finger-disjoint split: a seeded selection of ~val_fraction of the finger
// ids goes to validation.
TrainData split_by_finger(std::vector<synth::DualModalSample> samples, double val_fraction,
                          std::uint64_t seed);

// Loads every plain referenced by the samples.
void attach_sources(TrainData& data);

enum class InputKind { kSample, kPlainView };

struct TrainOptions {
  std::filesystem::path out_dir;
  nlohmann::json provenance = nlohmann::json::object();
  std::string config_hash;
  bool resume = false;
  net::Teacher* teacher = nullptr;
  // kPlainView trains a ridge-only model on plain views (teacher pretraining).
  InputKind input = InputKind::kSample;
  bool write_checkpoints = true;
  // Stop after this many steps in this invocation (0: run to the end); the
  // run continues later with `resume`. Not part of the configuration.
  int stop_after = 0;
  std::function<void(const nlohmann::json&)> on_log;
  // Early stop: checked after every validation.
  std::function<bool(const ValMetrics&)> stop_when;
};

struct TrainResult {
  int steps = 0;
  int total_steps = 0;
  ValMetrics last_val;
  ValMetrics best_val;
  std::vector<nlohmann::json> log;
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
};

TrainResult train(net::DracoModel& model, const TrainData& data, const TrainSchedule& schedule,
                  const LossConfig& loss, const codec::PoseCodec& codec,
                  const TrainOptions& options);

// Mean pose errors of the model on `samples` (inference mode).
ValMetrics evaluate(net::DracoModel& model, const std::vector<synth::DualModalSample>& samples,
                    const codec::PoseCodec& codec, codec::DecodeMode mode);

// Replaces each sample's patch by the plain view around its crop.
std::vector<synth::DualModalSample> as_plain_views(const TrainData& data,
                                                   const std::vector<synth::DualModalSample>& samples,
                                                   int size);

}  // namespace draco::train

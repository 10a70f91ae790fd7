#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "draco/cli/commands.hpp"

namespace draco::cli {

namespace {

using nlohmann::json;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool dry_run = false;
  bool resume = false;
  int stop_after = 0;
  std::vector<std::string> sets;
  // Subcommand-specific scalar overrides: config key -> value.
  std::map<std::string, std::string> strings;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config file");
  app->add_option("--seed", c.seed, "override the config seed");
  app->add_option("--out", c.out, "override the output path");
  app->add_flag("--dry-run", c.dry_run, "validate and report without doing work");
  app->add_option("--set", c.sets, "override a scalar field, e.g. schedule.max_steps=50");
}

void add_string(CLI::App* app, Common& c, const std::string& flag, const std::string& key,
                const std::string& help) {
  app->add_option(flag, c.strings[key], help);
}

json resolve(const Common& c) {
  json config = c.config.empty() ? json::object() : load_config(c.config);
  if (!config.is_object()) throw Error(ErrorCode::kConfigError, "config root must be an object");
  for (const auto& [key, value] : c.strings) {
    if (!value.empty()) config[key] = value;
  }
  if (c.seed) config["seed"] = *c.seed;
  if (!c.out.empty()) config["out"] = c.out;
  for (const auto& assignment : c.sets) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorCode::kConfigError, "--set expects key=value, got '" + assignment + "'");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    std::string pointer = "/" + path;
    for (auto& ch : pointer) {
      if (ch == '.') ch = '/';
    }
    config[json::json_pointer(pointer)] = value;
  }
  return config;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"draco: dual-modal fingerprint pose estimation"};
  app.require_subcommand(1);

  Common plains, synth, train, finetune, predict, evaluate;
  auto* c_plains = app.add_subcommand("plains", "render a synthetic plain-fingerprint population");
  add_common(c_plains, plains);
  auto* c_synth = app.add_subcommand("synth", "synthesize a dual-modal dataset from plain fingerprints");
  add_common(c_synth, synth);
  add_string(c_synth, synth, "--plains", "plains", "source plain-fingerprint directory");
  auto* c_train = app.add_subcommand("train", "train a model");
  add_common(c_train, train);
  c_train->add_flag("--resume", train.resume, "continue from <out>/last.pt");
  c_train->add_option("--stop-after", train.stop_after, "stop after N steps in this invocation");
  add_string(c_train, train, "--dataset", "dataset", "dataset directory");
  auto* c_finetune = app.add_subcommand("finetune", "fine-tune a checkpoint");
  add_common(c_finetune, finetune);
  c_finetune->add_flag("--resume", finetune.resume, "continue from <out>/last.pt");
  c_finetune->add_option("--stop-after", finetune.stop_after, "stop after N steps in this invocation");
  add_string(c_finetune, finetune, "--dataset", "dataset", "dataset directory");
  add_string(c_finetune, finetune, "--checkpoint", "checkpoint", "parent checkpoint");
  auto* c_predict = app.add_subcommand("predict", "predict poses");
  add_common(c_predict, predict);
  add_string(c_predict, predict, "--checkpoint", "checkpoint", "model checkpoint (.pt)");
  add_string(c_predict, predict, "--dataset", "dataset", "dataset directory");
  add_string(c_predict, predict, "--patch", "patch", "single ridge patch PNG");
  add_string(c_predict, predict, "--cap", "cap", "single capacitive PNG");
  add_string(c_predict, predict, "--decode-mode", "decode_mode", "sum or max");
  add_string(c_predict, predict, "--overlay", "overlay", "directory for debug overlays");
  auto* c_eval = app.add_subcommand("eval", "evaluate predictions");
  add_common(c_eval, evaluate);
  add_string(c_eval, evaluate, "--predictions", "predictions", "predictions JSONL");
  add_string(c_eval, evaluate, "--truth", "truth", "dataset directory or manifest");
  add_string(c_eval, evaluate, "--scores", "scores", "matcher scores CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  torch::set_num_threads(1);
  try {
    if (c_plains->parsed()) {
      cmd_plains(resolve(plains), {plains.dry_run, false}, err);
    } else if (c_synth->parsed()) {
      cmd_synth(resolve(synth), {synth.dry_run, false}, err);
    } else if (c_train->parsed()) {
      cmd_train(resolve(train), {train.dry_run, train.resume, train.stop_after}, err, false);
    } else if (c_finetune->parsed()) {
      cmd_train(resolve(finetune), {finetune.dry_run, finetune.resume, finetune.stop_after}, err, true);
    } else if (c_predict->parsed()) {
      cmd_predict(resolve(predict), {predict.dry_run, false}, out, err);
    } else if (c_eval->parsed()) {
      cmd_eval(resolve(evaluate), {evaluate.dry_run, false}, err);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const nlohmann::json::exception& e) {
    err << "error: config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const c10::Error& e) {
    err << "error: tensor: " << e.what_without_backtrace() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}

}  // namespace draco::cli

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "draco/error.hpp"

namespace draco::cli {

// Process exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

int exit_code(ErrorCode code);

// Reads a JSON config file; parse failures are config errors.
nlohmann::json load_config(const std::filesystem::path& path);

// SHA-256 of the config as canonical JSON (sorted keys, compact).
std::string config_hash(const nlohmann::json& resolved);

// Content hash over a dataset's manifest and every file it references.
std::string dataset_hash(const std::filesystem::path& dir);

// {tool, command, config, config_hash, inputs}. The output location is not
// part of the echoed config so artifacts do not depend on where they live.
nlohmann::json provenance(const std::string& command, const nlohmann::json& resolved,
                          const nlohmann::json& inputs);

struct RunFlags {
  bool dry_run = false;
  bool resume = false;
  int stop_after = 0;
};

struct SynthReport {
  std::size_t plains = 0;
  std::size_t requested = 0;
  std::size_t written = 0;
  std::size_t exhausted = 0;
  std::size_t rejected_draws = 0;
};

// Every command validates `config` against its schema first.
SynthReport cmd_plains(const nlohmann::json& config, const RunFlags& flags, std::ostream& log);
SynthReport cmd_synth(const nlohmann::json& config, const RunFlags& flags, std::ostream& log);
// Training from scratch; `finetune` starts from config["checkpoint"].
void cmd_train(const nlohmann::json& config, const RunFlags& flags, std::ostream& log,
               bool finetune = false);
void cmd_predict(const nlohmann::json& config, const RunFlags& flags, std::ostream& out,
                 std::ostream& log);
void cmd_eval(const nlohmann::json& config, const RunFlags& flags, std::ostream& log);

// Argument parsing and dispatch; returns the process exit status.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace draco::cli

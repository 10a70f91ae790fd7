#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "draco/cli/commands.hpp"
#include "draco/net/config.hpp"
#include "draco/synth/dataset.hpp"

namespace fixture {

namespace fs = std::filesystem;

// Synthetic plains under dir/plains and a dataset under dir/ds, built with
// the same commands a user would run.
inline fs::path make_dataset(const fs::path& dir, int fingers, int impressions, int per_plain,
                             std::uint64_t seed = 1, double rot_range = 180.0, int size = 400) {
  std::ostringstream log;
  const fs::path plains = dir / "plains";
  const fs::path ds = dir / "ds";
  if (!fs::exists(plains / draco::synth::kPlainIndexName)) {
    draco::cli::cmd_plains({{"out", plains.string()},
                            {"seed", seed},
                            {"fingers", fingers},
                            {"impressions", impressions},
                            {"size", size}},
                           {}, log);
  }
  draco::cli::cmd_synth({{"plains", plains.string()},
                         {"out", ds.string()},
                         {"seed", seed},
                         {"samples_per_plain", per_plain},
                         {"rot_range", rot_range}},
                        {}, log);
  return ds;
}

// Small enough that a training step takes a fraction of a second.
inline draco::net::ModelConfig tiny_model() {
  draco::net::ModelConfig c = draco::net::ModelConfig::compact();
  for (auto* e : {&c.ridge, &c.cap}) {
    e->block_counts = {1, 1, 1, 1};
    e->stem_channels = {8, 8};
    e->layer_channels = {16, 16, 32, 32};
  }
  c.ridge.stem_stride = 2;
  c.projector_hidden = 32;
  c.projector_blocks = 1;
  c.router_hidden = 16;
  c.adapter_hidden = 32;
  c.teacher_feature_dim = 32;
  return c;
}

inline nlohmann::json tiny_model_json() { return draco::net::to_json(tiny_model()); }

}  // namespace fixture

#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "draco/synth/sample.hpp"

namespace draco::synth {

// Dataset directory layout:
//   manifest.jsonl      one JSON record per sample
//   patches/<id>.png    8-bit ridge patch
//   cap/<id>.png        capacitive grid scaled by 255
//   dataset.json        provenance (written only when given)
inline constexpr const char* kManifestName = "manifest.jsonl";
inline constexpr const char* kProvenanceName = "dataset.json";

std::filesystem::path write_dataset(const std::vector<DualModalSample>& samples,
                                    const std::filesystem::path& dir,
                                    const nlohmann::json& provenance = nullptr);

// Exact inverse of write_dataset up to PNG quantization of the capacitive
// grid. Throws manifest-schema-mismatch naming the offending record.
std::vector<DualModalSample> read_dataset(const std::filesystem::path& dir);

nlohmann::json sample_record(const DualModalSample& s);

// Source plain fingerprints. A directory holds PNG images plus an optional
// plains.jsonl with {file, finger_id, impression_id, pose}. Without it every
// PNG is taken as standardized (center at the image center, direction 0) and
// the finger id is the file stem up to the first '_'.
inline constexpr const char* kPlainIndexName = "plains.jsonl";

std::vector<PlainFingerprint> read_plains(const std::filesystem::path& dir);
void write_plains(const std::vector<PlainFingerprint>& plains, const std::filesystem::path& dir);
PlainFingerprint read_plain(const std::filesystem::path& file, const Pose& pose,
                            std::string finger_id, std::string impression_id);

}  // namespace draco::synth

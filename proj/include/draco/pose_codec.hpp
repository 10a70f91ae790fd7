#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "draco/pose.hpp"

namespace draco::codec {

// Frozen bin-center values for one pose component. Never trained.
struct ClassEmbeddingTable {
  std::vector<double> values;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;

  double step() const { return (hi - lo) / static_cast<double>(n); }
  std::size_t size() const { return values.size(); }
};

// Decoupled per-component distributions over the frozen bins.
struct PoseDistributionSet {
  std::vector<double> dx;
  std::vector<double> dy;
  std::vector<double> dcos;
  std::vector<double> dsin;
};

enum class DecodeMode { kSum, kMax };

DecodeMode parse_decode_mode(std::string_view name);
std::string_view to_string(DecodeMode mode);

inline constexpr double kPositionLo = -256.0;
inline constexpr double kPositionHi = 256.0;
inline constexpr std::size_t kPositionBins = 256;
inline constexpr double kTrigLo = -1.0;
inline constexpr double kTrigHi = 1.0;
inline constexpr std::size_t kTrigBins = 120;
inline constexpr double kSigmaPosition = 3.5;
inline constexpr double kSigmaTrig = 2.5;
inline constexpr double kDomainTolerance = 1e-9;

// Bin centers lo + (t + 0.5) * (hi - lo) / n. Throws invalid-range.
ClassEmbeddingTable build_embeddings(double lo, double hi, std::size_t n);

// Gaussian soft label. `sigma` is measured in bins of `table`, so the same
// value means the same label sharpness relative to the quantization for every
// component: d_t ∝ exp(-((v - e_t) / step)^2 / (2 sigma^2)).
std::vector<double> encode_value(double v, const ClassEmbeddingTable& table, double sigma);

// Expectation over bin centers; input need not be normalized.
double decode_value(std::span<const double> d, const ClassEmbeddingTable& table);

// Center of the highest bin, ties toward the lowest index.
double decode_value_argmax(std::span<const double> d, const ClassEmbeddingTable& table);

double decode_with(DecodeMode mode, std::span<const double> d, const ClassEmbeddingTable& table);

// Codec configuration shared by training targets and prediction decoding.
struct PoseCodec {
  ClassEmbeddingTable position = build_embeddings(kPositionLo, kPositionHi, kPositionBins);
  ClassEmbeddingTable trig = build_embeddings(kTrigLo, kTrigHi, kTrigBins);
  double sigma_pos = kSigmaPosition;
  double sigma_trig = kSigmaTrig;

  PoseDistributionSet pose_to_targets(const Pose& p) const;
  Pose dists_to_pose(const PoseDistributionSet& d, DecodeMode mode = DecodeMode::kSum) const;

  // True when |x|, |y| fit the position table.
  bool encodable(const Pose& p) const;
};

PoseDistributionSet pose_to_targets(const Pose& p, double sigma_pos, double sigma_trig);
Pose dists_to_pose(const PoseDistributionSet& d, DecodeMode mode = DecodeMode::kSum);

// Direction in degrees from decoded (sin, cos). Throws direction-undefined
// when the pair has norm below 1e-6.
double direction_from_trig(double s, double c);

}  // namespace draco::codec

#include "draco/pose_codec.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "draco/error.hpp"

namespace draco::codec {

DecodeMode parse_decode_mode(std::string_view name) {
  if (name == "sum") return DecodeMode::kSum;
  if (name == "max") return DecodeMode::kMax;
  throw Error(ErrorCode::kConfigError, "unknown decode_mode '" + std::string(name) + "'");
}

std::string_view to_string(DecodeMode mode) { return mode == DecodeMode::kSum ? "sum" : "max"; }

ClassEmbeddingTable build_embeddings(double lo, double hi, std::size_t n) {
  if (!(lo < hi) || n < 2) {
    throw Error(ErrorCode::kInvalidRange, "embedding table needs lo < hi and n >= 2");
  }
  ClassEmbeddingTable table;
  table.lo = lo;
  table.hi = hi;
  table.n = n;
  table.values.resize(n);
  const double step = (hi - lo) / static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) {
    table.values[t] = lo + (static_cast<double>(t) + 0.5) * step;
  }
  return table;
}

std::vector<double> encode_value(double v, const ClassEmbeddingTable& table, double sigma) {
  if (!std::isfinite(v) || v < table.lo - kDomainTolerance || v > table.hi + kDomainTolerance) {
    throw Error(ErrorCode::kOutOfDomain, "value " + std::to_string(v) + " outside [" +
                                             std::to_string(table.lo) + ", " +
                                             std::to_string(table.hi) + "]");
  }
  if (!(sigma > 0.0)) throw Error(ErrorCode::kInvalidRange, "sigma must be positive");

  const double step = table.step();
  const double denom = 2.0 * sigma * sigma;
  std::vector<double> d(table.size());
  double total = 0.0;
  for (std::size_t t = 0; t < d.size(); ++t) {
    const double u = (v - table.values[t]) / step;
    d[t] = std::exp(-u * u / denom);
    total += d[t];
  }
  for (double& p : d) p /= total;
  return d;
}

namespace {

void check_decodable(std::span<const double> d, const ClassEmbeddingTable& table) {
  if (d.size() != table.size()) {
    throw Error(ErrorCode::kLengthMismatch, "distribution length " + std::to_string(d.size()) +
                                                " != table size " + std::to_string(table.size()));
  }
}

}  // namespace

double decode_value(std::span<const double> d, const ClassEmbeddingTable& table) {
  check_decodable(d, table);
  double mass = 0.0;
  double weighted = 0.0;
  for (std::size_t t = 0; t < d.size(); ++t) {
    mass += d[t];
    weighted += d[t] * table.values[t];
  }
  if (!(mass >= 1e-12)) throw Error(ErrorCode::kDegenerateDistribution, "total mass below 1e-12");
  return weighted / mass;
}

double decode_value_argmax(std::span<const double> d, const ClassEmbeddingTable& table) {
  check_decodable(d, table);
  double mass = 0.0;
  for (double p : d) mass += p;
  if (!(mass >= 1e-12)) throw Error(ErrorCode::kDegenerateDistribution, "total mass below 1e-12");
  // max_element returns the first maximum, i.e. the lowest index on ties.
  const auto it = std::max_element(d.begin(), d.end());
  return table.values[static_cast<std::size_t>(it - d.begin())];
}

double decode_with(DecodeMode mode, std::span<const double> d, const ClassEmbeddingTable& table) {
  return mode == DecodeMode::kSum ? decode_value(d, table) : decode_value_argmax(d, table);
}

double direction_from_trig(double s, double c) {
  if (std::hypot(s, c) < 1e-6) {
    throw Error(ErrorCode::kDirectionUndefined, "decoded (sin, cos) has near-zero norm");
  }
  return normalize_degrees(std::atan2(s, c) * kRadToDeg);
}

PoseDistributionSet PoseCodec::pose_to_targets(const Pose& p) const {
  const double rad = p.theta * kDegToRad;
  PoseDistributionSet out;
  out.dx = encode_value(p.x, position, sigma_pos);
  out.dy = encode_value(p.y, position, sigma_pos);
  // cos/sin of an exact angle can exceed 1 by an ulp; the domain tolerance covers it.
  out.dcos = encode_value(std::cos(rad), trig, sigma_trig);
  out.dsin = encode_value(std::sin(rad), trig, sigma_trig);
  return out;
}

Pose PoseCodec::dists_to_pose(const PoseDistributionSet& d, DecodeMode mode) const {
  Pose p;
  p.x = decode_with(mode, d.dx, position);
  p.y = decode_with(mode, d.dy, position);
  const double s = decode_with(mode, d.dsin, trig);
  const double c = decode_with(mode, d.dcos, trig);
  p.theta = direction_from_trig(s, c);
  return p;
}

bool PoseCodec::encodable(const Pose& p) const {
  auto inside = [&](double v) {
    return std::isfinite(v) && v >= position.lo - kDomainTolerance &&
           v <= position.hi + kDomainTolerance;
  };
  return inside(p.x) && inside(p.y) && std::isfinite(p.theta);
}

PoseDistributionSet pose_to_targets(const Pose& p, double sigma_pos, double sigma_trig) {
  PoseCodec codec;
  codec.sigma_pos = sigma_pos;
  codec.sigma_trig = sigma_trig;
  return codec.pose_to_targets(p);
}

Pose dists_to_pose(const PoseDistributionSet& d, DecodeMode mode) {
  return PoseCodec{}.dists_to_pose(d, mode);
}

}  // namespace draco::codec

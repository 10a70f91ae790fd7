#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "draco/pose.hpp"

namespace draco::eval {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct ScoredPair {
  std::string query_id;
  std::string candidate_id;
  double score = 0.0;
  bool genuine = false;
  Pose pose_query;
  Pose pose_candidate;
};

struct Gate {
  double th_trans = kInfinity;  // px
  double th_rot = 180.0;        // degrees
};

// True when the pair is kept: center distance <= th_trans and wrapped angle
// difference <= th_rot.
bool pose_gate(const Pose& a, const Pose& b, double th_trans, double th_rot);

// Scores with gated-out pairs replaced by -infinity.
std::vector<double> gated_scores(std::span<const ScoredPair> pairs, const std::optional<Gate>& gate);

struct RocPoint {
  double threshold = 0.0;
  double fmr = 0.0;   // impostors with score >= threshold
  double fnmr = 0.0;  // genuines with score < threshold
};

// Operating points for every distinct score plus +infinity, by increasing
// threshold. Throws degenerate-labels unless both classes are present.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const bool> genuine);

// Crossing of FMR and FNMR, linearly interpolated between operating points.
double equal_error_rate(std::span<const RocPoint> roc);
// FNMR at the given FMR, linearly interpolated between operating points.
double fnmr_at_fmr(std::span<const RocPoint> roc, double target_fmr);

struct VerificationReport {
  double eer = 0.0;
  double fnmr_at_fmr_1e3 = 0.0;
  double fnmr_at_fmr_1e4 = 0.0;
  std::size_t genuine = 0;
  std::size_t impostor = 0;
  std::size_t gated_genuine = 0;
  std::size_t gated_impostor = 0;
};

VerificationReport verification_report(std::span<const ScoredPair> pairs,
                                       const std::optional<Gate>& gate = std::nullopt);

struct GridSpec {
  std::vector<double> trans;
  std::vector<double> rot;

  // trans 10..200 step 10 plus infinity; rot 10..180 step 10.
  static GridSpec standard();
};

struct ThresholdResult {
  Gate gate;
  double eer = 0.0;
};

// Exhaustive grid search minimizing EER; ties go to the larger translation
// threshold, then the larger rotation threshold.
ThresholdResult threshold_search(std::span<const ScoredPair> pairs, const GridSpec& grid);

struct IndexingCurve {
  std::size_t queries = 0;
  std::size_t gallery_size = 0;
  // hit_rate[k - 1]: fraction of queries whose genuine mate is kept by the
  // gate and ranked within the top k.
  std::vector<double> hit_rate;
};

// Gallery is the set of distinct candidate ids. Throws no-genuine-mate when a
// query has no genuine pair.
IndexingCurve indexing_report(std::span<const ScoredPair> pairs,
                              const std::optional<Gate>& gate = std::nullopt);

// Scores CSV with header query_id,candidate_id,score,genuine_flag.
std::vector<ScoredPair> read_scores_csv(const std::filesystem::path& path);

// Fills pose_query/pose_candidate from `poses`; throws join-mismatch listing
// ids without a pose.
void attach_poses(std::vector<ScoredPair>& pairs, const std::map<std::string, Pose>& poses);

}  // namespace draco::eval

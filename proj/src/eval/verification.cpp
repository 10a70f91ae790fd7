#include "draco/eval/verification.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <unordered_map>

#include "draco/error.hpp"

namespace draco::eval {

bool pose_gate(const Pose& a, const Pose& b, double th_trans, double th_rot) {
  const double dist = std::hypot(a.x - b.x, a.y - b.y);
  const double dtheta = angular_distance(a.theta, b.theta);
  return dist <= th_trans && dtheta <= th_rot;
}

std::vector<double> gated_scores(std::span<const ScoredPair> pairs, const std::optional<Gate>& gate) {
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& p : pairs) {
    const bool kept = !gate || pose_gate(p.pose_query, p.pose_candidate, gate->th_trans, gate->th_rot);
    scores.push_back(kept ? p.score : -kInfinity);
  }
  return scores;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const bool> genuine) {
  if (scores.size() != genuine.size()) {
    throw Error(ErrorCode::kLengthMismatch, "scores and labels differ in length");
  }
  std::vector<double> gen, imp;
  for (std::size_t i = 0; i < scores.size(); ++i) (genuine[i] ? gen : imp).push_back(scores[i]);
  if (gen.empty() || imp.empty()) {
    throw Error(ErrorCode::kDegenerateLabels, "need both genuine and impostor pairs");
  }
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());

  std::vector<double> thresholds(scores.begin(), scores.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  if (thresholds.back() != kInfinity) thresholds.push_back(kInfinity);

  const double ng = static_cast<double>(gen.size());
  const double ni = static_cast<double>(imp.size());
  std::vector<RocPoint> roc;
  roc.reserve(thresholds.size());
  // Two-pointer sweep over both sorted classes.
  std::size_t gi = 0, ii = 0;
  for (double t : thresholds) {
    while (gi < gen.size() && gen[gi] < t) ++gi;
    while (ii < imp.size() && imp[ii] < t) ++ii;
    const bool reject_all = t == kInfinity;
    const double accepted_imp = reject_all ? 0.0 : static_cast<double>(imp.size() - ii);
    const double rejected_gen = reject_all ? ng : static_cast<double>(gi);
    roc.push_back({t, accepted_imp / ni, rejected_gen / ng});
  }
  return roc;
}

double equal_error_rate(std::span<const RocPoint> roc) {
  for (std::size_t k = 0; k < roc.size(); ++k) {
    if (roc[k].fnmr < roc[k].fmr) continue;
    if (k == 0) return 0.5 * (roc[0].fmr + roc[0].fnmr);
    const RocPoint& a = roc[k - 1];
    const RocPoint& b = roc[k];
    const double da = a.fmr - a.fnmr;
    const double db = b.fmr - b.fnmr;
    const double alpha = da / (da - db);
    return a.fmr + alpha * (b.fmr - a.fmr);
  }
  return 0.5 * (roc.back().fmr + roc.back().fnmr);
}

double fnmr_at_fmr(std::span<const RocPoint> roc, double target) {
  for (std::size_t k = 0; k < roc.size(); ++k) {
    if (roc[k].fmr > target) continue;
    if (k == 0) return roc[0].fnmr;
    const RocPoint& a = roc[k - 1];
    const RocPoint& b = roc[k];
    const double alpha = (a.fmr - target) / (a.fmr - b.fmr);
    return a.fnmr + alpha * (b.fnmr - a.fnmr);
  }
  return roc.back().fnmr;
}

VerificationReport verification_report(std::span<const ScoredPair> pairs,
                                       const std::optional<Gate>& gate) {
  const std::vector<double> scores = gated_scores(pairs, gate);
  std::vector<bool> labels_vec;
  labels_vec.reserve(pairs.size());
  VerificationReport r;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const bool g = pairs[i].genuine;
    labels_vec.push_back(g);
    (g ? r.genuine : r.impostor) += 1;
    if (scores[i] == -kInfinity && pairs[i].score != -kInfinity) {
      (g ? r.gated_genuine : r.gated_impostor) += 1;
    }
  }
  // std::vector<bool> has no contiguous storage.
  std::unique_ptr<bool[]> labels(new bool[labels_vec.size()]);
  std::copy(labels_vec.begin(), labels_vec.end(), labels.get());
  const auto roc = roc_curve(scores, std::span<const bool>(labels.get(), labels_vec.size()));
  r.eer = equal_error_rate(roc);
  r.fnmr_at_fmr_1e3 = fnmr_at_fmr(roc, 1e-3);
  r.fnmr_at_fmr_1e4 = fnmr_at_fmr(roc, 1e-4);
  return r;
}

GridSpec GridSpec::standard() {
  GridSpec g;
  for (int t = 10; t <= 200; t += 10) g.trans.push_back(t);
  g.trans.push_back(kInfinity);
  for (int r = 10; r <= 180; r += 10) g.rot.push_back(r);
  return g;
}

ThresholdResult threshold_search(std::span<const ScoredPair> pairs, const GridSpec& grid) {
  if (grid.trans.empty() || grid.rot.empty()) {
    throw Error(ErrorCode::kEmptyInput, "threshold grid is empty");
  }
  // Visit the most permissive thresholds first so that only a strictly
  // better EER displaces the incumbent.
  std::vector<double> trans = grid.trans;
  std::vector<double> rot = grid.rot;
  std::sort(trans.rbegin(), trans.rend());
  std::sort(rot.rbegin(), rot.rend());

  std::optional<ThresholdResult> best;
  for (double tt : trans) {
    for (double tr : rot) {
      const Gate gate{tt, tr};
      const double eer = verification_report(pairs, gate).eer;
      if (!best || eer < best->eer) best = ThresholdResult{gate, eer};
    }
  }
  return *best;
}

IndexingCurve indexing_report(std::span<const ScoredPair> pairs, const std::optional<Gate>& gate) {
  const std::vector<double> scores = gated_scores(pairs, gate);
  std::set<std::string> gallery;
  std::vector<std::string> query_order;
  std::unordered_map<std::string, std::vector<std::size_t>> by_query;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    gallery.insert(pairs[i].candidate_id);
    auto [it, inserted] = by_query.try_emplace(pairs[i].query_id);
    if (inserted) query_order.push_back(pairs[i].query_id);
    it->second.push_back(i);
  }
  if (query_order.empty()) throw Error(ErrorCode::kEmptyInput, "no scored pairs");

  IndexingCurve curve;
  curve.queries = query_order.size();
  curve.gallery_size = gallery.size();
  std::vector<std::size_t> hits_at_rank(gallery.size() + 1, 0);

  std::string missing;
  for (const auto& q : query_order) {
    const auto& idx = by_query.at(q);
    bool has_mate = false;
    double best_mate = -kInfinity;
    bool mate_kept = false;
    for (std::size_t i : idx) {
      if (!pairs[i].genuine) continue;
      has_mate = true;
      if (scores[i] != -kInfinity) {
        mate_kept = true;
        best_mate = std::max(best_mate, scores[i]);
      }
    }
    if (!has_mate) {
      missing += (missing.empty() ? "" : ", ") + q;
      continue;
    }
    if (!mate_kept) continue;
    // Ties with impostors count against the query.
    std::size_t rank = 1;
    for (std::size_t i : idx) {
      if (!pairs[i].genuine && scores[i] != -kInfinity && scores[i] >= best_mate) ++rank;
    }
    if (rank <= gallery.size()) ++hits_at_rank[rank];
  }
  if (!missing.empty()) throw Error(ErrorCode::kNoGenuineMate, "queries without a genuine mate: " + missing);

  curve.hit_rate.resize(gallery.size());
  std::size_t cumulative = 0;
  for (std::size_t k = 1; k <= gallery.size(); ++k) {
    cumulative += hits_at_rank[k];
    curve.hit_rate[k - 1] = static_cast<double>(cumulative) / static_cast<double>(curve.queries);
  }
  return curve;
}

std::vector<ScoredPair> read_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::vector<ScoredPair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line_no == 1 && !cells.empty() && cells[0] == "query_id") continue;
    if (cells.size() != 4) {
      throw Error(ErrorCode::kSchemaMismatch,
                  path.string() + ":" + std::to_string(line_no) + " needs 4 columns");
    }
    ScoredPair p;
    p.query_id = cells[0];
    p.candidate_id = cells[1];
    try {
      p.score = std::stod(cells[2]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kSchemaMismatch,
                  path.string() + ":" + std::to_string(line_no) + " bad score '" + cells[2] + "'");
    }
    p.genuine = cells[3] == "1" || cells[3] == "true" || cells[3] == "genuine";
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void attach_poses(std::vector<ScoredPair>& pairs, const std::map<std::string, Pose>& poses) {
  std::set<std::string> missing;
  for (auto& p : pairs) {
    const auto q = poses.find(p.query_id);
    const auto c = poses.find(p.candidate_id);
    if (q == poses.end()) missing.insert(p.query_id);
    if (c == poses.end()) missing.insert(p.candidate_id);
    if (q != poses.end()) p.pose_query = q->second;
    if (c != poses.end()) p.pose_candidate = c->second;
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw Error(ErrorCode::kJoinMismatch, "ids without a pose: " + list);
  }
}

}  // namespace draco::eval

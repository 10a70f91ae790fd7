#include "draco/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "draco/error.hpp"

namespace draco::eval {

PoseError pose_error(const Pose& pred, const Pose& gt) {
  return {std::hypot(pred.x - gt.x, pred.y - gt.y), angular_distance(pred.theta, gt.theta)};
}

namespace {

// Linear-interpolated quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

Summary summarize(std::span<const PoseError> errors) {
  if (errors.empty()) throw Error(ErrorCode::kEmptyInput, "no pose errors to summarize");
  Summary s;
  s.count = errors.size();
  std::vector<double> trans, rot;
  trans.reserve(errors.size());
  rot.reserve(errors.size());
  double st = 0.0, sr = 0.0;
  for (const auto& e : errors) {
    st += e.trans_err;
    sr += e.rot_err;
    trans.push_back(e.trans_err);
    rot.push_back(e.rot_err);
  }
  s.mean_trans = st / static_cast<double>(s.count);
  s.mean_rot = sr / static_cast<double>(s.count);
  std::sort(trans.begin(), trans.end());
  std::sort(rot.begin(), rot.end());
  s.median_trans = quantile(trans, 0.5);
  s.median_rot = quantile(rot, 0.5);
  s.p90_trans = quantile(trans, 0.9);
  s.p90_rot = quantile(rot, 0.9);
  return s;
}

std::vector<EcdfPoint> ecdf(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "ECDF of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  std::vector<EcdfPoint> curve;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    curve.push_back({v[i], static_cast<double>(i + 1) / n});
  }
  return curve;
}

void write_ecdf_csv(std::span<const EcdfPoint> curve, const std::filesystem::path& path,
                    const std::string& value_name) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << value_name << ",fraction\n";
  char buf[64];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.value, p.fraction);
    out << buf;
  }
}

void render_ecdf_png(const std::vector<std::pair<std::string, std::vector<EcdfPoint>>>& curves,
                     const std::filesystem::path& path, const std::string& x_label) {
  constexpr int kW = 640, kH = 480, kLeft = 60, kRight = 20, kTop = 20, kBottom = 50;
  cv::Mat img(kH, kW, CV_8UC3, cv::Scalar(255, 255, 255));
  double x_max = 0.0;
  for (const auto& [name, c] : curves) {
    if (!c.empty()) x_max = std::max(x_max, c.back().value);
  }
  if (x_max <= 0.0) x_max = 1.0;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  auto to_px = [&](double x, double f) {
    return cv::Point(kLeft + static_cast<int>(std::lround(x / x_max * pw)),
                     kTop + static_cast<int>(std::lround((1.0 - f) * ph)));
  };
  cv::rectangle(img, to_px(0, 1), to_px(x_max, 0), cv::Scalar(0, 0, 0), 1);
  for (int t = 0; t <= 4; ++t) {
    const double f = t / 4.0;
    cv::line(img, to_px(0, f), to_px(x_max, f), cv::Scalar(220, 220, 220), 1);
    char label[32];
    std::snprintf(label, sizeof(label), "%.2f", f);
    cv::putText(img, label, to_px(0, f) + cv::Point(-52, 4), cv::FONT_HERSHEY_SIMPLEX, 0.4,
                cv::Scalar(0, 0, 0), 1);
    std::snprintf(label, sizeof(label), "%.3g", x_max * f);
    cv::putText(img, label, to_px(x_max * f, 0) + cv::Point(-10, 16), cv::FONT_HERSHEY_SIMPLEX,
                0.4, cv::Scalar(0, 0, 0), 1);
  }
  cv::putText(img, x_label, cv::Point(kW / 2 - 40, kH - 10), cv::FONT_HERSHEY_SIMPLEX, 0.5,
              cv::Scalar(0, 0, 0), 1);

  static const cv::Scalar kColors[] = {{200, 80, 30}, {30, 30, 200}, {30, 150, 30}, {150, 30, 150}};
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& [name, c] = curves[k];
    const cv::Scalar color = kColors[k % 4];
    cv::Point prev = to_px(0.0, 0.0);
    for (const auto& p : c) {
      const cv::Point step = to_px(p.value, 0.0);
      cv::line(img, prev, cv::Point(step.x, prev.y), color, 2);
      const cv::Point up = to_px(p.value, p.fraction);
      cv::line(img, cv::Point(step.x, prev.y), up, color, 2);
      prev = up;
    }
    cv::putText(img, name, cv::Point(kW - 200, kTop + 40 + 18 * static_cast<int>(k)),
                cv::FONT_HERSHEY_SIMPLEX, 0.5, color, 1);
  }
  if (!cv::imwrite(path.string(), img)) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

}  // namespace draco::eval

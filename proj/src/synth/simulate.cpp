#include "draco/synth/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <opencv2/imgproc.hpp>

#include "draco/error.hpp"
#include "draco/pose_codec.hpp"

namespace draco::synth {

namespace {

// Bilinear sample with pixel centers at integer coordinates; `outside` is
// returned for taps that fall off the image.
template <typename T>
double sample_bilinear(const cv::Mat& img, double x, double y, double outside) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  auto tap = [&](int xi, int yi) -> double {
    if (xi < 0 || yi < 0 || xi >= img.cols || yi >= img.rows) return outside;
    return static_cast<double>(img.at<T>(yi, xi));
  };
  const double top = tap(x0, y0) * (1.0 - fx) + tap(x0 + 1, y0) * fx;
  const double bottom = tap(x0, y0 + 1) * (1.0 - fx) + tap(x0 + 1, y0 + 1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

constexpr double kPatchHalf = (kPatchSize - 1) / 2.0;

void check_window_inside(const cv::Mat& img, Vec2 crop_center, double crop_angle) {
  const std::array<Vec2, 4> corners{{{-kPatchHalf, -kPatchHalf},
                                     {kPatchHalf, -kPatchHalf},
                                     {-kPatchHalf, kPatchHalf},
                                     {kPatchHalf, kPatchHalf}}};
  for (const Vec2& c : corners) {
    const Vec2 p = patch_to_image(c, crop_center, crop_angle);
    if (p.x < 0.0 || p.y < 0.0 || p.x > img.cols - 1.0 || p.y > img.rows - 1.0) {
      throw Error(ErrorCode::kOutOfBounds, "crop window leaves the image");
    }
  }
}

}  // namespace

cv::Mat foreground_mask(const PlainFingerprint& fp, const MaskParams& params) {
  cv::Mat f;
  fp.pixels.convertTo(f, CV_32F);
  const cv::Size win(params.variance_window, params.variance_window);
  cv::Mat mean, mean_sq;
  cv::boxFilter(f, mean, CV_32F, win, cv::Point(-1, -1), true, cv::BORDER_REFLECT);
  cv::boxFilter(f.mul(f), mean_sq, CV_32F, win, cv::Point(-1, -1), true, cv::BORDER_REFLECT);
  cv::Mat variance = mean_sq - mean.mul(mean);

  cv::Mat mask;
  cv::compare(variance, params.variance_threshold, mask, cv::CMP_GT);
  if (params.closing_radius > 0) {
    const int k = 2 * params.closing_radius + 1;
    const cv::Mat kernel = cv::getStructuringElement(cv::MORPH_ELLIPSE, cv::Size(k, k));
    cv::morphologyEx(mask, mask, cv::MORPH_CLOSE, kernel, cv::Point(-1, -1), 1,
                     cv::BORDER_CONSTANT, cv::Scalar(0));
  }
  return mask;
}

SynthesisSource::SynthesisSource(PlainFingerprint fp, const MaskParams& params)
    : SynthesisSource(fp, foreground_mask(fp, params)) {}

SynthesisSource::SynthesisSource(PlainFingerprint fp, cv::Mat mask)
    : fp_(std::move(fp)), mask_(std::move(mask)) {
  if (mask_.size() != fp_.pixels.size() || mask_.type() != CV_8UC1) {
    throw Error(ErrorCode::kShapeMismatch, "mask must be CV_8UC1 of the image size");
  }
  // Windows entirely outside the image average to zero, so a pad of one
  // half-window plus the bilinear tap is enough.
  pad_ = kCapacitiveCell / 2 + 2;
  cv::Mat indicator;
  mask_.convertTo(indicator, CV_32F, 1.0 / 255.0);
  cv::Mat padded;
  cv::copyMakeBorder(indicator, padded, pad_, pad_, pad_, pad_, cv::BORDER_CONSTANT, 0.0);
  cv::boxFilter(padded, coverage_, CV_32F, cv::Size(kCapacitiveCell, kCapacitiveCell),
                cv::Point(-1, -1), true, cv::BORDER_CONSTANT);
}

double SynthesisSource::coverage_at(Vec2 p) const {
  // The even-sized box anchored at (25, 25) covers [q - 25, q + 24]; its
  // centroid sits half a pixel before q.
  return sample_bilinear<float>(coverage_, p.x + pad_ + 0.5, p.y + pad_ + 0.5, 0.0);
}

Vec2 patch_to_image(Vec2 patch_point, Vec2 crop_center, double crop_angle) {
  const Vec2 r = rotate(patch_point, crop_angle);
  return {crop_center.x + r.x, crop_center.y + r.y};
}

Pose label_for_crop(const Pose& finger, Vec2 crop_center, double crop_angle) {
  const Vec2 local = rotate({finger.x - crop_center.x, finger.y - crop_center.y}, -crop_angle);
  return {local.x, local.y, normalize_degrees(finger.theta - crop_angle)};
}

double patch_foreground_ratio(const SynthesisSource& src, Vec2 crop_center, double crop_angle) {
  double total = 0.0;
  for (int i = 0; i < kPatchSize; ++i) {
    for (int j = 0; j < kPatchSize; ++j) {
      const Vec2 p = patch_to_image({j - kPatchHalf, i - kPatchHalf}, crop_center, crop_angle);
      total += sample_bilinear<std::uint8_t>(src.mask(), p.x, p.y, 0.0) / 255.0;
    }
  }
  return total / (kPatchSize * kPatchSize);
}

std::pair<RidgePatch, Pose> simulate_ridge_patch(const SynthesisSource& src, Vec2 crop_center,
                                                 double crop_angle) {
  const cv::Mat& img = src.plain().pixels;
  check_window_inside(img, crop_center, crop_angle);

  const double ratio = patch_foreground_ratio(src, crop_center, crop_angle);
  if (ratio < kMinForegroundRatio) {
    throw Error(ErrorCode::kLowForeground, "patch foreground ratio " + std::to_string(ratio));
  }

  RidgePatch patch{cv::Mat(kPatchSize, kPatchSize, CV_8UC1)};
  for (int i = 0; i < kPatchSize; ++i) {
    for (int j = 0; j < kPatchSize; ++j) {
      const Vec2 p = patch_to_image({j - kPatchHalf, i - kPatchHalf}, crop_center, crop_angle);
      const double v = sample_bilinear<std::uint8_t>(img, p.x, p.y, 255.0);
      patch.pixels.at<std::uint8_t>(i, j) = cv::saturate_cast<std::uint8_t>(std::lround(v));
    }
  }
  return {std::move(patch), label_for_crop(src.plain().pose, crop_center, crop_angle)};
}

std::pair<RidgePatch, Pose> simulate_ridge_patch(const PlainFingerprint& fp, Vec2 crop_center,
                                                 double crop_angle) {
  return simulate_ridge_patch(SynthesisSource(fp), crop_center, crop_angle);
}

CapacitiveImage simulate_capacitive(const SynthesisSource& src, Vec2 crop_center,
                                    double crop_angle, int grid) {
  if (grid < 1) throw Error(ErrorCode::kInvalidRange, "capacitive grid must be >= 1");
  CapacitiveImage cap{cv::Mat(grid, grid, CV_32FC1), {0.0, 0.0}};
  const double half = (grid - 1) / 2.0;
  for (int r = 0; r < grid; ++r) {
    for (int c = 0; c < grid; ++c) {
      const Vec2 cell{(c - half) * kCapacitiveCell, (r - half) * kCapacitiveCell};
      const double v = src.coverage_at(patch_to_image(cell, crop_center, crop_angle));
      cap.pixels.at<float>(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return cap;
}

CapacitiveImage simulate_capacitive(const PlainFingerprint& fp, Vec2 crop_center,
                                    double crop_angle, int grid) {
  return simulate_capacitive(SynthesisSource(fp), crop_center, crop_angle, grid);
}

cv::Mat plain_view(const PlainFingerprint& fp, Vec2 crop_center, double crop_angle, int size) {
  cv::Mat view(size, size, CV_8UC1);
  const double half = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const Vec2 p = patch_to_image({j - half, i - half}, crop_center, crop_angle);
      const double v = sample_bilinear<std::uint8_t>(fp.pixels, p.x, p.y, 255.0);
      view.at<std::uint8_t>(i, j) = cv::saturate_cast<std::uint8_t>(std::lround(v));
    }
  }
  return view;
}

void validate_rot_range(double rot_range) {
  if (!(rot_range >= 0.0 && rot_range <= 180.0)) {
    throw Error(ErrorCode::kConfigError, "rot_range must lie in [0, 180]");
  }
}

DualModalSample augment(const SynthesisSource& src, const AugmentRequest& request, Rng& rng) {
  validate_rot_range(request.rot_range);
  if (!(request.trans_range >= 0.0)) {
    throw Error(ErrorCode::kConfigError, "trans_range must be >= 0");
  }
  const Pose& finger = src.plain().pose;
  const codec::PoseCodec codec;
  for (int attempt = 1; attempt <= kMaxSynthesisAttempts; ++attempt) {
    const double angle = rng.uniform(-request.rot_range, request.rot_range);
    const double dx = rng.uniform(-request.trans_range, request.trans_range);
    const double dy = rng.uniform(-request.trans_range, request.trans_range);
    const Vec2 center{finger.x + dx, finger.y + dy};
    try {
      auto [patch, label] = simulate_ridge_patch(src, center, angle);
      if (!codec.encodable(label)) continue;
      DualModalSample s;
      s.patch = std::move(patch);
      s.cap = simulate_capacitive(src, center, angle, request.grid);
      s.label = label;
      s.finger_id = src.plain().finger_id;
      s.impression_id = src.plain().impression_id;
      s.source = src.plain().source;
      s.source_pose = finger;
      s.synthesis = {center, angle, request.rot_range, request.trans_range, request.grid, attempt};
      return s;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kOutOfBounds && e.code() != ErrorCode::kLowForeground) throw;
    }
  }
  throw Error(ErrorCode::kSynthesisExhausted,
              std::to_string(kMaxSynthesisAttempts) + " rejected draws for plain '" +
                  src.plain().finger_id + "/" + src.plain().impression_id + "'");
}

}  // namespace draco::synth

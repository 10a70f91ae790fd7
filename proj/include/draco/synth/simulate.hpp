#pragma once

#include <utility>

#include <opencv2/core.hpp>

#include "draco/rng.hpp"
#include "draco/synth/sample.hpp"

namespace draco::synth {

struct MaskParams {
  int variance_window = 15;
  double variance_threshold = 200.0;
  int closing_radius = 5;
};

// Ridge-bearing pixels (255) via local variance thresholding followed by a
// morphological closing. CV_8UC1, same size as the input.
cv::Mat foreground_mask(const PlainFingerprint& fp, const MaskParams& params = {});

// Per-plain cache of the derived maps that synthesis samples from.
class SynthesisSource {
 public:
  explicit SynthesisSource(PlainFingerprint fp, const MaskParams& params = {});
  // Uses a caller-provided foreground mask (CV_8UC1, 0 or 255).
  SynthesisSource(PlainFingerprint fp, cv::Mat mask);

  const PlainFingerprint& plain() const { return fp_; }
  const cv::Mat& mask() const { return mask_; }

  // Mean foreground indicator over the axis-aligned 50x50 window centered on
  // an image point; zero outside the image.
  double coverage_at(Vec2 image_point) const;

 private:
  PlainFingerprint fp_;
  cv::Mat mask_;
  cv::Mat coverage_;  // box-filtered indicator on a zero-padded canvas
  int pad_ = 0;
};

// Maps patch-frame coordinates (origin at the patch center) into the image.
Vec2 patch_to_image(Vec2 patch_point, Vec2 crop_center, double crop_angle);

// Pose of the finger re-expressed in the rotated crop frame.
Pose label_for_crop(const Pose& finger_in_image, Vec2 crop_center, double crop_angle);

// Bilinear resample of the rotated 132x132 window. Throws out-of-bounds when
// the window leaves the image and low-foreground when less than 40% of the
// window is ridge-bearing.
std::pair<RidgePatch, Pose> simulate_ridge_patch(const SynthesisSource& src, Vec2 crop_center,
                                                 double crop_angle);
std::pair<RidgePatch, Pose> simulate_ridge_patch(const PlainFingerprint& fp, Vec2 crop_center,
                                                 double crop_angle);

// Fraction of the patch window covered by the foreground mask.
double patch_foreground_ratio(const SynthesisSource& src, Vec2 crop_center, double crop_angle);

// Contact map at 10 ppi on a G x G grid concentric with the patch.
CapacitiveImage simulate_capacitive(const SynthesisSource& src, Vec2 crop_center,
                                    double crop_angle, int grid = kDefaultGrid);
CapacitiveImage simulate_capacitive(const PlainFingerprint& fp, Vec2 crop_center,
                                    double crop_angle, int grid = kDefaultGrid);

// Rotated square view of the plain fingerprint around the crop center, used
// as the teacher's input. Pixels outside the image are background (255).
cv::Mat plain_view(const PlainFingerprint& fp, Vec2 crop_center, double crop_angle, int size);

struct AugmentRequest {
  double rot_range = 180.0;
  double trans_range = 40.0;
  int grid = kDefaultGrid;
};

// Draws a random crop around the finger center and synthesizes both
// modalities; retries rejected draws up to 20 times.
DualModalSample augment(const SynthesisSource& src, const AugmentRequest& request, Rng& rng);

// Throws config-error unless rot_range lies in [0, 180].
void validate_rot_range(double rot_range);

}  // namespace draco::synth

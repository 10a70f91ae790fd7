#pragma once

#include <string>

#include <opencv2/core.hpp>

#include "draco/pose.hpp"

namespace draco::synth {

inline constexpr int kPatchSize = 132;
inline constexpr int kDefaultGrid = 12;
// 500 ppi -> 10 ppi.
inline constexpr int kCapacitiveCell = 50;
inline constexpr double kMinForegroundRatio = 0.4;
inline constexpr int kMaxSynthesisAttempts = 20;

// Plain fingerprint at 500 ppi. `pose` is in absolute image coordinates.
struct PlainFingerprint {
  cv::Mat pixels;  // CV_8UC1
  Pose pose;
  std::string finger_id;
  std::string impression_id;
  std::string source;  // file path when loaded from disk
};

struct RidgePatch {
  cv::Mat pixels;  // CV_8UC1, kPatchSize x kPatchSize
};

struct CapacitiveImage {
  cv::Mat pixels;  // CV_32FC1, G x G, values in [0, 1]
  // Patch-frame coordinates of the grid center; the grid is concentric with
  // the ridge patch so this is always (0, 0) for synthesized samples.
  Vec2 origin;
};

struct SynthesisParams {
  Vec2 crop_center;
  double crop_angle = 0.0;
  double rot_range = 0.0;
  double trans_range = 0.0;
  int grid = kDefaultGrid;
  int attempts = 1;
};

struct DualModalSample {
  std::string id;
  RidgePatch patch;
  CapacitiveImage cap;
  Pose label;  // finger pose in the patch frame
  std::string finger_id;
  std::string impression_id;
  std::string source;  // plain fingerprint reference
  Pose source_pose;    // finger pose in the plain's image frame
  SynthesisParams synthesis;
};

}  // namespace draco::synth

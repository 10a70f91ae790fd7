#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "draco/pose.hpp"

namespace draco::eval {

struct PoseError {
  double trans_err = 0.0;  // Euclidean center error, px
  double rot_err = 0.0;    // absolute wrapped angle error, degrees in [0, 180]
};

PoseError pose_error(const Pose& pred, const Pose& gt);

struct Summary {
  std::size_t count = 0;
  double mean_trans = 0.0;
  double mean_rot = 0.0;
  double median_trans = 0.0;
  double median_rot = 0.0;
  double p90_trans = 0.0;
  double p90_rot = 0.0;
};

// Throws empty-input for an empty list.
Summary summarize(std::span<const PoseError> errors);

struct EcdfPoint {
  double value = 0.0;
  double fraction = 0.0;
};

// Right-continuous ECDF, one point per distinct value.
std::vector<EcdfPoint> ecdf(std::span<const double> values);

void write_ecdf_csv(std::span<const EcdfPoint> curve, const std::filesystem::path& path,
                    const std::string& value_name);

// Renders one or more ECDF curves into a PNG line plot.
void render_ecdf_png(const std::vector<std::pair<std::string, std::vector<EcdfPoint>>>& curves,
                     const std::filesystem::path& path, const std::string& x_label);

}  // namespace draco::eval

#include "draco/synth/plain_generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace draco::synth {

FingerIdentity draw_identity(Rng& rng) {
  FingerIdentity f;
  f.ridge_period = rng.uniform(8.0, 11.0);
  f.upper_ellipticity = rng.uniform(0.8, 1.25);
  f.lower_stretch = rng.uniform(0.12, 0.4);
  f.silhouette_a = rng.uniform(100.0, 130.0);
  f.silhouette_b = rng.uniform(150.0, 185.0);
  f.silhouette_dx = rng.uniform(-25.0, 25.0);
  f.silhouette_dy = rng.uniform(0.0, 50.0);
  f.crease_fraction = rng.uniform(0.45, 0.65);
  for (auto& w : f.warp) {
    const double period = rng.uniform(150.0, 400.0);
    const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
    w.kx = 2.0 * std::numbers::pi / period * std::cos(dir);
    w.ky = 2.0 * std::numbers::pi / period * std::sin(dir);
    w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    w.amplitude = rng.uniform(2.0, 10.0);
  }
  return f;
}

ImpressionVariation draw_impression(Rng& rng) {
  ImpressionVariation v;
  v.pressure = rng.uniform(0.9, 1.1);
  v.contrast = rng.uniform(80.0, 110.0);
  v.noise = rng.uniform(4.0, 12.0);
  v.warp_jitter = rng.uniform(-0.15, 0.15);
  return v;
}

PlainFingerprint render_plain(const FingerIdentity& f, const ImpressionVariation& imp,
                              std::uint64_t noise_seed, int size) {
  Rng rng(noise_seed);
  PlainFingerprint fp;
  fp.pixels = cv::Mat(size, size, CV_8UC1);
  const double cx = (size - 1) / 2.0;
  const double cy = (size - 1) / 2.0;
  fp.pose = {cx, cy, 0.0};

  const double a = f.silhouette_a * imp.pressure;
  const double b = f.silhouette_b * imp.pressure;
  const double sx = cx + f.silhouette_dx;
  const double sy = cy + f.silhouette_dy;
  const double crease = sy + f.crease_fraction * b;
  constexpr double kEdge = 4.0;  // silhouette edge softness, px

  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double dx = j - cx;
      const double dy = i - cy;
      // Concentric arcs above the core, an elongated loop below it.
      double g = dy < 0.0 ? std::hypot(dx, f.upper_ellipticity * dy)
                          : std::hypot(dx, f.lower_stretch * dy);
      for (const auto& w : f.warp) {
        g += w.amplitude * (1.0 + imp.warp_jitter) * std::sin(w.kx * j + w.ky * i + w.phase);
      }
      const double ridge = std::cos(2.0 * std::numbers::pi * g / f.ridge_period);

      // Signed distance proxy to the silhouette boundary (positive inside).
      const double ex = (j - sx) / a;
      const double ey = (i - sy) / b;
      const double inside_ellipse = (1.0 - std::hypot(ex, ey)) * std::min(a, b);
      const double inside = std::min(inside_ellipse, crease - i);
      const double alpha = std::clamp(0.5 + inside / (2.0 * kEdge), 0.0, 1.0);

      const double texture = 128.0 + imp.contrast * ridge + imp.noise * rng.normal();
      const double value = alpha * texture + (1.0 - alpha) * (250.0 + 2.0 * rng.normal());
      fp.pixels.at<std::uint8_t>(i, j) = cv::saturate_cast<std::uint8_t>(std::lround(value));
    }
  }
  return fp;
}

PlainFingerprint synthetic_plain(std::uint64_t seed, int finger_index, int impression_index,
                                 int size) {
  Rng finger_rng = Rng::derive(seed, {1, static_cast<std::uint64_t>(finger_index)});
  const FingerIdentity identity = draw_identity(finger_rng);
  Rng imp_rng = Rng::derive(seed, {2, static_cast<std::uint64_t>(finger_index),
                                   static_cast<std::uint64_t>(impression_index)});
  const ImpressionVariation variation = draw_impression(imp_rng);
  PlainFingerprint fp = render_plain(identity, variation, imp_rng.next(), size);
  fp.finger_id = "f" + std::to_string(finger_index);
  fp.impression_id = std::to_string(impression_index);
  return fp;
}

}  // namespace draco::synth

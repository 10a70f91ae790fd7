#pragma once

#include <cstdint>
#include <string>

#include "draco/rng.hpp"
#include "draco/synth/sample.hpp"

namespace draco::synth {

// Identity-level parameters of a synthetic finger. Drawn once per finger so
// that impressions of one finger share ridge structure and silhouette shape.
struct FingerIdentity {
  double ridge_period = 9.0;     // px
  double upper_ellipticity = 1.0;
  double lower_stretch = 0.2;    // vertical compression of the lower loop
  double silhouette_a = 115.0;   // horizontal semi-axis, px
  double silhouette_b = 170.0;   // vertical semi-axis, px
  double silhouette_dx = 0.0;    // silhouette center relative to the core
  double silhouette_dy = 30.0;
  double crease_fraction = 0.55; // flat cut below the silhouette center, in units of b
  struct Wave {
    double kx = 0.0, ky = 0.0, phase = 0.0, amplitude = 0.0;
  };
  Wave warp[3];
};

struct ImpressionVariation {
  double pressure = 1.0;  // silhouette scale
  double contrast = 100.0;
  double noise = 8.0;
  double warp_jitter = 0.0;
};

FingerIdentity draw_identity(Rng& rng);
ImpressionVariation draw_impression(Rng& rng);

// Renders a standardized plain fingerprint: finger center (the ridge core) at
// the image center, direction 0 (fingertip toward -y). Background is 255.
PlainFingerprint render_plain(const FingerIdentity& finger, const ImpressionVariation& impression,
                              std::uint64_t noise_seed, int size = 512);

// Convenience: finger `finger_index`, impression `impression_index` of the
// synthetic population defined by `seed`. Finger ids are "f<index>".
PlainFingerprint synthetic_plain(std::uint64_t seed, int finger_index, int impression_index,
                                 int size = 512);

}  // namespace draco::synth

#pragma once

#include <cstdint>

#include "desmoke/image.hpp"

namespace desmoke {

enum class Tier { Low, Medium, High };

struct TierRange {
  float lo, hi;
};

// Intensity ranges for low/medium/high smoke.
TierRange tier_range(Tier tier);

const char* tier_name(Tier tier);
Tier tier_from_name(const std::string& name);

struct SmokeParams {
  float intensity = 0.7f;                    // l in (0,1]
  Rgb atmospheric_light{0.92f, 0.92f, 0.92f};
  std::uint64_t seed = 0;                    // mask seed
  int octaves = 4;
  float persistence = 0.5f;
  float base_frequency = 4.f;                // cycles per image width
};

// Octave-summed gradient-lattice noise, min-max normalized to [0,1].
// Bit-identical for a fixed (seed, octaves, persistence, base_frequency).
Plane perlin_mask(int height, int width, const SmokeParams& params);

// t = l * (1 - m)
Plane transmission(const Plane& m, float l);

// I = J*t + (1-t)*A per channel.
ImageRgb composite(const ImageRgb& J, const Plane& t, const Rgb& A);

// Uniform draw inside the tier's interval, endpoints excluded.
float sample_intensity(Tier tier, std::uint64_t seed);

struct SmokePair {
  ImageRgb smoked;
  SmokeParams params;
};

// Mask + intensity + compositing in one deterministic step. The returned
// params reproduce the smoked image exactly via render_smoke.
SmokePair smoke_pair(const ImageRgb& J, Tier tier, std::uint64_t seed,
                     bool jitter_light = false);

// Re-applies recorded smoke parameters to a clear image.
ImageRgb render_smoke(const ImageRgb& J, const SmokeParams& params);

}  // namespace desmoke

#include "desmoke/smokesim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "desmoke/rng.hpp"

namespace desmoke {

TierRange tier_range(Tier tier) {
  switch (tier) {
    case Tier::Low: return {0.40f, 0.55f};
    case Tier::Medium: return {0.60f, 0.75f};
    case Tier::High: return {0.77f, 0.92f};
  }
  throw ValueError("unknown tier");
}

const char* tier_name(Tier tier) {
  switch (tier) {
    case Tier::Low: return "low";
    case Tier::Medium: return "medium";
    case Tier::High: return "high";
  }
  throw ValueError("unknown tier");
}

Tier tier_from_name(const std::string& name) {
  if (name == "low") return Tier::Low;
  if (name == "medium") return Tier::Medium;
  if (name == "high") return Tier::High;
  throw ValueError("unknown tier: " + name);
}

namespace {

// Gradient-lattice noise with the quintic fade. Gradients come from a seeded
// permutation of 0..255; everything below is plain arithmetic so masks
// regenerate bit-identically on any platform.
class PerlinField {
 public:
  explicit PerlinField(std::uint64_t seed) {
    std::vector<int> p(256);
    std::iota(p.begin(), p.end(), 0);
    Rng rng(seed);
    shuffle(p, rng);
    for (int i = 0; i < 512; ++i) perm_[i] = p[i & 255];
  }

  double at(double x, double y) const {
    const int xi = fast_floor(x), yi = fast_floor(y);
    const double xf = x - xi, yf = y - yi;
    const double u = fade(xf), v = fade(yf);
    const int x0 = xi & 255, y0 = yi & 255;
    const double n00 = grad(perm_[perm_[x0] + y0], xf, yf);
    const double n10 = grad(perm_[perm_[(x0 + 1) & 255] + y0], xf - 1, yf);
    const double n01 = grad(perm_[perm_[x0] + ((y0 + 1) & 255)], xf, yf - 1);
    const double n11 = grad(perm_[perm_[(x0 + 1) & 255] + ((y0 + 1) & 255)], xf - 1, yf - 1);
    return lerp(lerp(n00, n10, u), lerp(n01, n11, u), v);
  }

 private:
  static int fast_floor(double t) {
    const int i = static_cast<int>(t);
    return t < i ? i - 1 : i;
  }
  static double fade(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }
  static double lerp(double a, double b, double t) { return a + t * (b - a); }
  static double grad(int h, double x, double y) {
    switch (h & 7) {
      case 0: return x + y;
      case 1: return x - y;
      case 2: return -x + y;
      case 3: return -x - y;
      case 4: return x;
      case 5: return -x;
      case 6: return y;
      default: return -y;
    }
  }
  std::array<int, 512> perm_{};
};

}  // namespace

Plane perlin_mask(int height, int width, const SmokeParams& params) {
  if (height < 1 || width < 1) throw ValueError("perlin_mask: size must be >= 1");
  if (params.octaves < 1) throw ValueError("perlin_mask: octaves must be >= 1");
  if (!(params.persistence > 0.f && params.persistence < 1.f))
    throw ValueError("perlin_mask: persistence must be in (0,1)");

  Plane acc = Plane::Zero(height, width);
  double amplitude = 1.0;
  double frequency = params.base_frequency;
  for (int o = 0; o < params.octaves; ++o) {
    PerlinField field(mix(params.seed, static_cast<std::uint64_t>(o)));
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double u = (x + 0.5) / width * frequency;
        const double v = (y + 0.5) / width * frequency;
        acc(y, x) += static_cast<float>(amplitude * field.at(u, v));
      }
    amplitude *= params.persistence;
    frequency *= 2.0;
  }

  const float lo = acc.minCoeff();
  const float hi = acc.maxCoeff();
  if (hi - lo <= 0.f) return Plane::Zero(height, width);
  return ((acc - lo) / (hi - lo)).eval();
}

Plane transmission(const Plane& m, float l) {
  if (!(l > 0.f && l <= 1.f)) throw ValueError("transmission: l must be in (0,1]");
  return (l * (1.f - m)).eval();
}

ImageRgb composite(const ImageRgb& J, const Plane& t, const Rgb& A) {
  require_same_shape(J.r, t, "composite");
  ImageRgb out;
  out.r = J.r * t + (1.f - t) * A[0];
  out.g = J.g * t + (1.f - t) * A[1];
  out.b = J.b * t + (1.f - t) * A[2];
  return out;
}

float sample_intensity(Tier tier, std::uint64_t seed) {
  const TierRange range = tier_range(tier);
  Rng rng(seed);
  return static_cast<float>(range.lo + rng.uniform01() * (range.hi - range.lo));
}

ImageRgb render_smoke(const ImageRgb& J, const SmokeParams& params) {
  const Plane m = perlin_mask(J.height(), J.width(), params);
  const Plane t = transmission(m, params.intensity);
  return composite(J, t, params.atmospheric_light);
}

SmokePair smoke_pair(const ImageRgb& J, Tier tier, std::uint64_t seed, bool jitter_light) {
  SmokeParams params;
  params.seed = mix(seed, 0xA5u);
  params.intensity = sample_intensity(tier, mix(seed, 0x17u));
  if (jitter_light) {
    Rng rng(mix(seed, 0x3Cu));
    const float a = static_cast<float>(rng.uniform(0.85, 1.0));
    params.atmospheric_light = {a, a, a};
  }
  return SmokePair{render_smoke(J, params), params};
}

}  // namespace desmoke

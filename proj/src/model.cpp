#include "desmoke/model.hpp"

#include <cmath>

namespace desmoke {

int scaled_width(int w, double scale) {
  const double s = w * scale;
  const long r = std::lround(s);
  if (r < 1 || std::abs(s - r) > 1e-9)
    throw ValueError("width_scale yields non-integer width: " + std::to_string(w) + " * " +
                     std::to_string(scale));
  return static_cast<int>(r);
}

namespace {

bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

int enc_width(const GeneratorSpec& spec, int stage_1based) {
  const int mult = stage_1based >= 4 ? 8 : (1 << (stage_1based - 1));
  return scaled_width(spec.base_width * mult, spec.width_scale);
}

}  // namespace

int generator_depth(const GeneratorSpec& spec) {
  if (spec.depth > 0) return spec.depth;
  int d = 0, r = spec.resolution;
  while (r > 1) {
    r >>= 1;
    ++d;
  }
  return d;
}

void validate(const GeneratorSpec& spec) {
  if (!power_of_two(spec.resolution))
    throw ValueError("generator resolution must be a power of two");
  const int e = generator_depth(spec);
  if (e < 2) throw ValueError("generator needs at least 2 encoder stages");
  if ((1 << e) != spec.resolution)
    throw ValueError("generator resolution/depth mismatch: 2^depth must equal resolution");
  if (spec.input_channels < 1 || spec.output_channels < 1)
    throw ValueError("generator channel counts must be >= 1");
  if (!(spec.width_scale > 0.0 && spec.width_scale <= 1.0))
    throw ValueError("width_scale must be in (0,1]");
  if (spec.dropout_rate < 0.f || spec.dropout_rate >= 1.f)
    throw ValueError("dropout_rate must be in [0,1)");
  for (int i = 1; i <= e; ++i) enc_width(spec, i);  // throws on non-integer widths
}

void validate(const DiscriminatorSpec& spec) {
  if (spec.resolution < 1) throw ValueError("discriminator resolution must be >= 1");
  if (spec.n_down < 1) throw ValueError("discriminator needs at least one stride-2 stage");
  if (!(spec.width_scale > 0.0 && spec.width_scale <= 1.0))
    throw ValueError("width_scale must be in (0,1]");
  if (spec.resolution % (1 << spec.n_down) != 0)
    throw ValueError("discriminator resolution must be divisible by 2^n_down");
  // after the two valid convs the map must stay non-empty
  const int after = spec.resolution / (1 << spec.n_down) + 1;
  if (after < 4)
    throw ValueError("discriminator resolution too small for its depth");
  scaled_width(spec.base_width * 8, spec.width_scale);
}

std::vector<Shape3> generator_shape_trace(const GeneratorSpec& spec) {
  validate(spec);
  const int e = generator_depth(spec);
  std::vector<Shape3> rows;
  rows.reserve(2 * e + 1);
  int size = spec.resolution;
  for (int i = 1; i <= e; ++i) {
    size /= 2;
    rows.push_back({size, size, enc_width(spec, i)});
  }
  rows.push_back({1, 1, 2 * enc_width(spec, e)});  // channel-widening stage at 1x1
  size = 1;
  for (int m = 2; m <= e; ++m) {
    size *= 2;
    rows.push_back({size, size, 2 * enc_width(spec, e - m + 1)});
  }
  rows.push_back({spec.resolution, spec.resolution, spec.output_channels});
  return rows;
}

std::vector<Shape3> discriminator_shape_trace(const DiscriminatorSpec& spec) {
  validate(spec);
  auto width = [&](int mult) { return scaled_width(spec.base_width * mult, spec.width_scale); };
  std::vector<Shape3> rows;
  int size = spec.resolution;
  int w = 0;
  for (int j = 0; j < spec.n_down; ++j) {
    size /= 2;
    w = width(std::min(1 << j, 8));
    rows.push_back({size, size, w});
  }
  rows.push_back({size + 2, size + 2, w});              // zero padding
  rows.push_back({size - 1, size - 1, width(8)});       // 4x4 valid conv, stride 1
  rows.push_back({size + 1, size + 1, width(8)});       // bn + lrelu + padding
  rows.push_back({size - 2, size - 2, 1});              // final 4x4 valid conv
  return rows;
}

}  // namespace desmoke

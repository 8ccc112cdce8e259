#include "desmoke/dcprior.hpp"

#include <algorithm>
#include <vector>

namespace desmoke {

namespace {

inline int clamp_idx(int i, int n) { return std::min(std::max(i, 0), n - 1); }

// 1-D sliding min along each row, window [-r, r], replicated borders.
Plane row_min(const Plane& in, int r) {
  const int h = static_cast<int>(in.rows()), w = static_cast<int>(in.cols());
  Plane out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float m = in(y, clamp_idx(x - r, w));
      for (int dx = -r + 1; dx <= r; ++dx) m = std::min(m, in(y, clamp_idx(x + dx, w)));
      out(y, x) = m;
    }
  return out;
}

Plane col_min(const Plane& in, int r) {
  const int h = static_cast<int>(in.rows()), w = static_cast<int>(in.cols());
  Plane out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float m = in(clamp_idx(y - r, h), x);
      for (int dy = -r + 1; dy <= r; ++dy) m = std::min(m, in(clamp_idx(y + dy, h), x));
      out(y, x) = m;
    }
  return out;
}

// Separable box sum with replicated borders, double accumulators.
PlaneT<double> box_sum(const Plane& in, int r) {
  const int h = static_cast<int>(in.rows()), w = static_cast<int>(in.cols());
  PlaneT<double> rows(h, w);
  for (int y = 0; y < h; ++y) {
    double s = 0.0;
    for (int dx = -r; dx <= r; ++dx) s += in(y, clamp_idx(dx, w));
    rows(y, 0) = s;
    for (int x = 1; x < w; ++x) {
      s += in(y, clamp_idx(x + r, w)) - in(y, clamp_idx(x - r - 1, w));
      rows(y, x) = s;
    }
  }
  PlaneT<double> out(h, w);
  for (int x = 0; x < w; ++x) {
    double s = 0.0;
    for (int dy = -r; dy <= r; ++dy) s += rows(clamp_idx(dy, h), x);
    out(0, x) = s;
    for (int y = 1; y < h; ++y) {
      s += rows(clamp_idx(y + r, h), x) - rows(clamp_idx(y - r - 1, h), x);
      out(y, x) = s;
    }
  }
  return out;
}

}  // namespace

Plane box_mean(const Plane& img, int radius) {
  if (radius < 1) throw ValueError("box_mean: radius must be >= 1");
  const double count = static_cast<double>(2 * radius + 1) * (2 * radius + 1);
  return (box_sum(img, radius) / count).cast<float>();
}

Plane dark_channel(const ImageRgb& img, const DarkChannelParams& params) {
  const int s = params.kernel_size;
  if (s < 1 || s % 2 == 0)
    throw ValueError("dark_channel: kernel_size must be odd and >= 1");
  if (s > img.height() || s > img.width())
    throw ValueError("dark_channel: kernel larger than image");
  Plane chan_min = img.r.min(img.g).min(img.b);
  const int r = s / 2;
  if (r == 0) return chan_min;
  return col_min(row_min(chan_min, r), r);
}

Plane guided_filter(const Plane& guide, const Plane& p, const GuidedFilterParams& params) {
  require_same_shape(guide, p, "guided_filter");
  if (params.epsilon <= 0.f) throw ValueError("guided_filter: epsilon must be > 0");
  const int r = params.radius;
  if (r < 1) throw ValueError("guided_filter: radius must be >= 1");
  if (2 * r + 1 > guide.rows() || 2 * r + 1 > guide.cols())
    throw ValueError("guided_filter: window larger than image");

  const Plane mean_i = box_mean(guide, r);
  const Plane mean_p = box_mean(p, r);
  const Plane corr_ii = box_mean((guide * guide).eval(), r);
  const Plane corr_ip = box_mean((guide * p).eval(), r);

  const Plane var_i = corr_ii - mean_i * mean_i;
  const Plane cov_ip = corr_ip - mean_i * mean_p;

  const Plane a = cov_ip / (var_i + params.epsilon);
  const Plane b = mean_p - a * mean_i;

  return box_mean(a, r) * guide + box_mean(b, r);
}

Plane refined_dark_channel(const ImageRgb& img, const DarkChannelParams& dcp,
                           const GuidedFilterParams& gfp) {
  Plane refined = guided_filter(gray_mean(img), dark_channel(img, dcp), gfp);
  return refined.min(1.f).max(0.f);
}

ImageStack4 prepare_input(const ImageRgb& img, const DarkChannelParams& dcp,
                          const GuidedFilterParams& gfp) {
  Plane guide = refined_dark_channel(img, dcp, gfp);
  return stack_guide(img, std::move(guide));
}

}  // namespace desmoke

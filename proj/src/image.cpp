#include "desmoke/image.hpp"

#include <cmath>

namespace desmoke {

ImageStack4 stack_guide(ImageRgb rgb, Plane guide) {
  require_same_shape(rgb.r, guide, "stack_guide");
  return ImageStack4{std::move(rgb), std::move(guide)};
}

std::pair<ImageRgb, Plane> unstack(ImageStack4 stack) {
  return {std::move(stack.rgb), std::move(stack.guide)};
}

namespace {

// a + t*(b-a): exact for t==0 and for a==b, which is what makes identity
// resizes and constant images reproduce bitwise.
inline float lerp(float a, float b, double t) {
  return static_cast<float>(static_cast<double>(a) +
                            t * (static_cast<double>(b) - static_cast<double>(a)));
}

}  // namespace

Plane resize_to(const Plane& img, int h, int w) {
  if (h < 1 || w < 1) throw ValueError("resize_to: target size must be >= 1");
  const int sh = static_cast<int>(img.rows());
  const int sw = static_cast<int>(img.cols());
  Plane out(h, w);
  const double sy = static_cast<double>(sh) / h;
  const double sx = static_cast<double>(sw) / w;
  for (int y = 0; y < h; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    const double fy0 = std::floor(fy);
    const double ty = fy - fy0;
    const int y0 = std::min(std::max(static_cast<int>(fy0), 0), sh - 1);
    const int y1 = std::min(std::max(static_cast<int>(fy0) + 1, 0), sh - 1);
    for (int x = 0; x < w; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const double fx0 = std::floor(fx);
      const double tx = fx - fx0;
      const int x0 = std::min(std::max(static_cast<int>(fx0), 0), sw - 1);
      const int x1 = std::min(std::max(static_cast<int>(fx0) + 1, 0), sw - 1);
      const float top = lerp(img(y0, x0), img(y0, x1), tx);
      const float bot = lerp(img(y1, x0), img(y1, x1), tx);
      float v = lerp(top, bot, ty);
      if (v < 0.f) v = 0.f;
      if (v > 1.f) v = 1.f;
      out(y, x) = v;
    }
  }
  return out;
}

ImageRgb resize_to(const ImageRgb& img, int h, int w) {
  ImageRgb out;
  out.r = resize_to(img.r, h, w);
  out.g = resize_to(img.g, h, w);
  out.b = resize_to(img.b, h, w);
  return out;
}

Plane gray_mean(const ImageRgb& img) {
  return ((img.r + img.g + img.b) / 3.0f).eval();
}

ImageRgb constant_rgb(int h, int w, float r, float g, float b) {
  ImageRgb img;
  img.r = Plane::Constant(h, w, r);
  img.g = Plane::Constant(h, w, g);
  img.b = Plane::Constant(h, w, b);
  return img;
}

}  // namespace desmoke

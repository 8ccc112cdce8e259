#pragma once

#include <Eigen/Core>

#include <array>
#include <string>
#include <utility>

#include "desmoke/error.hpp"

namespace desmoke {

// Row-major single-channel raster with values in [0,1].
template <class T>
using PlaneT = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Plane = PlaneT<float>;

using Rgb = std::array<float, 3>;

struct ImageRgb {
  Plane r, g, b;

  ImageRgb() = default;
  ImageRgb(int height, int width)
      : r(Plane::Zero(height, width)),
        g(Plane::Zero(height, width)),
        b(Plane::Zero(height, width)) {}

  int height() const { return static_cast<int>(r.rows()); }
  int width() const { return static_cast<int>(r.cols()); }

  Plane& channel(int c) { return c == 0 ? r : (c == 1 ? g : b); }
  const Plane& channel(int c) const { return c == 0 ? r : (c == 1 ? g : b); }
};

// RGB image plus the refined dark channel that was embedded as 4th channel.
struct ImageStack4 {
  ImageRgb rgb;
  Plane guide;

  int height() const { return rgb.height(); }
  int width() const { return rgb.width(); }
};

inline void require_same_shape(const Plane& a, const Plane& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(what) + ": shape mismatch (" +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
}

inline void require_same_shape(const ImageRgb& a, const ImageRgb& b, const char* what) {
  require_same_shape(a.r, b.r, what);
  require_same_shape(a.g, b.g, what);
  require_same_shape(a.b, b.b, what);
}

// Binds rgb and guide without touching either; throws ShapeError on mismatch.
ImageStack4 stack_guide(ImageRgb rgb, Plane guide);
std::pair<ImageRgb, Plane> unstack(ImageStack4 stack);

// Bilinear resize (pixel-center aligned, replicated borders). A same-size
// resize is bit-identical to the input; constants stay constant.
Plane resize_to(const Plane& img, int h, int w);
ImageRgb resize_to(const ImageRgb& img, int h, int w);

// Per-pixel mean of R,G,B; the scalar guidance image for the guided filter.
Plane gray_mean(const ImageRgb& img);

ImageRgb constant_rgb(int h, int w, float r, float g, float b);

}  // namespace desmoke

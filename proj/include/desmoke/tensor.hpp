#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "desmoke/error.hpp"
#include "desmoke/image.hpp"

namespace desmoke {

template <class T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<MatT<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const MatT<T>>;

// Dense NHWC activation tensor.
template <class T>
struct Tensor4 {
  int n = 0, h = 0, w = 0, c = 0;
  std::vector<T> v;

  Tensor4() = default;
  Tensor4(int n_, int h_, int w_, int c_)
      : n(n_), h(h_), w(w_), c(c_),
        v(static_cast<std::size_t>(n_) * h_ * w_ * c_, T(0)) {}

  std::size_t size() const { return v.size(); }

  T& at(int in, int iy, int ix, int ic) {
    return v[((static_cast<std::size_t>(in) * h + iy) * w + ix) * c + ic];
  }
  T at(int in, int iy, int ix, int ic) const {
    return v[((static_cast<std::size_t>(in) * h + iy) * w + ix) * c + ic];
  }

  // One sample as a (h*w) x c row-major matrix view.
  MatMap<T> sample(int in) {
    return MatMap<T>(v.data() + static_cast<std::size_t>(in) * h * w * c,
                     static_cast<Eigen::Index>(h) * w, c);
  }
  ConstMatMap<T> sample(int in) const {
    return ConstMatMap<T>(v.data() + static_cast<std::size_t>(in) * h * w * c,
                          static_cast<Eigen::Index>(h) * w, c);
  }

  bool same_shape(const Tensor4& o) const {
    return n == o.n && h == o.h && w == o.w && c == o.c;
  }
};

template <class T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w)
    throw ShapeError("concat_channels: spatial/batch mismatch");
  Tensor4<T> out(a.n, a.h, a.w, a.c + b.c);
  const std::size_t pixels = static_cast<std::size_t>(a.n) * a.h * a.w;
  for (std::size_t p = 0; p < pixels; ++p) {
    T* dst = out.v.data() + p * out.c;
    const T* pa = a.v.data() + p * a.c;
    const T* pb = b.v.data() + p * b.c;
    for (int i = 0; i < a.c; ++i) dst[i] = pa[i];
    for (int i = 0; i < b.c; ++i) dst[a.c + i] = pb[i];
  }
  return out;
}

// Inverse of concat_channels for gradients.
template <class T>
std::pair<Tensor4<T>, Tensor4<T>> split_channels(const Tensor4<T>& x, int c_first) {
  if (c_first <= 0 || c_first >= x.c) throw ShapeError("split_channels: bad split point");
  Tensor4<T> a(x.n, x.h, x.w, c_first);
  Tensor4<T> b(x.n, x.h, x.w, x.c - c_first);
  const std::size_t pixels = static_cast<std::size_t>(x.n) * x.h * x.w;
  for (std::size_t p = 0; p < pixels; ++p) {
    const T* src = x.v.data() + p * x.c;
    T* pa = a.v.data() + p * a.c;
    T* pb = b.v.data() + p * b.c;
    for (int i = 0; i < c_first; ++i) pa[i] = src[i];
    for (int i = 0; i < b.c; ++i) pb[i] = src[c_first + i];
  }
  return {std::move(a), std::move(b)};
}

// ---- conversions between raster types and tensors ----

template <class T>
Tensor4<T> to_tensor(const std::vector<ImageStack4>& batch) {
  if (batch.empty()) throw ValueError("to_tensor: empty batch");
  const int h = batch[0].height(), w = batch[0].width();
  Tensor4<T> out(static_cast<int>(batch.size()), h, w, 4);
  for (int i = 0; i < out.n; ++i) {
    const ImageStack4& s = batch[i];
    if (s.height() != h || s.width() != w) throw ShapeError("to_tensor: ragged batch");
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        out.at(i, y, x, 0) = static_cast<T>(s.rgb.r(y, x));
        out.at(i, y, x, 1) = static_cast<T>(s.rgb.g(y, x));
        out.at(i, y, x, 2) = static_cast<T>(s.rgb.b(y, x));
        out.at(i, y, x, 3) = static_cast<T>(s.guide(y, x));
      }
  }
  return out;
}

template <class T>
Tensor4<T> to_tensor(const std::vector<ImageRgb>& batch) {
  if (batch.empty()) throw ValueError("to_tensor: empty batch");
  const int h = batch[0].height(), w = batch[0].width();
  Tensor4<T> out(static_cast<int>(batch.size()), h, w, 3);
  for (int i = 0; i < out.n; ++i) {
    const ImageRgb& img = batch[i];
    if (img.height() != h || img.width() != w) throw ShapeError("to_tensor: ragged batch");
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) out.at(i, y, x, c) = static_cast<T>(img.channel(c)(y, x));
  }
  return out;
}

template <class T>
std::vector<ImageRgb> to_images(const Tensor4<T>& t) {
  if (t.c < 3) throw ShapeError("to_images: need at least 3 channels");
  std::vector<ImageRgb> out;
  out.reserve(t.n);
  for (int i = 0; i < t.n; ++i) {
    ImageRgb img(t.h, t.w);
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x)
        for (int c = 0; c < 3; ++c)
          img.channel(c)(y, x) = static_cast<float>(t.at(i, y, x, c));
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace desmoke

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "desmoke/rng.hpp"
#include "desmoke/tensor.hpp"

namespace desmoke {

// Handle to one trainable array; the optimizer and checkpointer iterate these.
template <class T>
struct ParamRef {
  std::string name;
  std::vector<T>* value;
  std::vector<T>* grad;
};

// Non-trainable state (batch-norm running statistics).
template <class T>
struct BufferRef {
  std::string name;
  std::vector<T>* value;
};

namespace geom {
inline int conv_out(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}
inline int deconv_out(int in, int k, int stride, int pad, int opad) {
  return (in - 1) * stride - 2 * pad + k + opad;
}
}  // namespace geom

// im2col: rows indexed by output position, columns by (ky, kx, channel).
template <class T>
void im2col(const Tensor4<T>& x, int sample, int k, int stride, int pad, MatT<T>& cols) {
  const int oh = geom::conv_out(x.h, k, stride, pad);
  const int ow = geom::conv_out(x.w, k, stride, pad);
  cols.setZero(static_cast<Eigen::Index>(oh) * ow, static_cast<Eigen::Index>(k) * k * x.c);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      const Eigen::Index row = static_cast<Eigen::Index>(oy) * ow + ox;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * stride - pad + ky;
        if (iy < 0 || iy >= x.h) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * stride - pad + kx;
          if (ix < 0 || ix >= x.w) continue;
          const T* src = &x.v[((static_cast<std::size_t>(sample) * x.h + iy) * x.w + ix) * x.c];
          T* dst = cols.data() + row * cols.cols() + (static_cast<Eigen::Index>(ky) * k + kx) * x.c;
          for (int ci = 0; ci < x.c; ++ci) dst[ci] = src[ci];
        }
      }
    }
}

// Scatter-add of im2col columns back into the image; adjoint of im2col.
template <class T>
void col2im_add(const MatT<T>& cols, int sample, int k, int stride, int pad, Tensor4<T>& x) {
  const int oh = geom::conv_out(x.h, k, stride, pad);
  const int ow = geom::conv_out(x.w, k, stride, pad);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      const Eigen::Index row = static_cast<Eigen::Index>(oy) * ow + ox;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * stride - pad + ky;
        if (iy < 0 || iy >= x.h) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * stride - pad + kx;
          if (ix < 0 || ix >= x.w) continue;
          T* dst = &x.v[((static_cast<std::size_t>(sample) * x.h + iy) * x.w + ix) * x.c];
          const T* src = cols.data() + row * cols.cols() + (static_cast<Eigen::Index>(ky) * k + kx) * x.c;
          for (int ci = 0; ci < x.c; ++ci) dst[ci] += src[ci];
        }
      }
    }
}

template <class T>
class Conv2d {
 public:
  Conv2d(int in_c, int out_c, int k, int stride, int pad)
      : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad),
        weight_(static_cast<std::size_t>(k) * k * in_c * out_c, T(0)),
        bias_(out_c, T(0)),
        dweight_(weight_.size(), T(0)),
        dbias_(out_c, T(0)) {}

  void init(Rng& rng, T stddev) {
    for (T& w : weight_) w = static_cast<T>(rng.normal(0.0, static_cast<double>(stddev)));
    for (T& b : bias_) b = T(0);
  }

  Tensor4<T> forward(const Tensor4<T>& x) {
    if (x.c != in_c_) throw ShapeError("Conv2d: channel mismatch");
    x_ = x;
    const int oh = geom::conv_out(x.h, k_, stride_, pad_);
    const int ow = geom::conv_out(x.w, k_, stride_, pad_);
    if (oh < 1 || ow < 1) throw ShapeError("Conv2d: kernel does not fit input");
    Tensor4<T> y(x.n, oh, ow, out_c_);
    ConstMatMap<T> wmat(weight_.data(), static_cast<Eigen::Index>(k_) * k_ * in_c_, out_c_);
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bvec(bias_.data(), out_c_);
    MatT<T> cols;
    for (int i = 0; i < x.n; ++i) {
      im2col(x, i, k_, stride_, pad_, cols);
      y.sample(i).noalias() = cols * wmat;
      y.sample(i).rowwise() += bvec;
    }
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) {
    Tensor4<T> dx(x_.n, x_.h, x_.w, x_.c);
    MatMap<T> dwmat(dweight_.data(), static_cast<Eigen::Index>(k_) * k_ * in_c_, out_c_);
    ConstMatMap<T> wmat(weight_.data(), static_cast<Eigen::Index>(k_) * k_ * in_c_, out_c_);
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> dbvec(dbias_.data(), out_c_);
    MatT<T> cols, dcols;
    for (int i = 0; i < x_.n; ++i) {
      im2col(x_, i, k_, stride_, pad_, cols);
      dwmat.noalias() += cols.transpose() * dy.sample(i);
      dbvec += dy.sample(i).colwise().sum();
      dcols.noalias() = dy.sample(i) * wmat.transpose();
      col2im_add(dcols, i, k_, stride_, pad_, dx);
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".W", &weight_, &dweight_});
    out.push_back({prefix + ".b", &bias_, &dbias_});
  }

  int out_channels() const { return out_c_; }

 private:
  int in_c_, out_c_, k_, stride_, pad_;
  std::vector<T> weight_, bias_, dweight_, dbias_;
  Tensor4<T> x_;
};

template <class T>
class ConvTranspose2d {
 public:
  ConvTranspose2d(int in_c, int out_c, int k, int stride, int pad, int opad = 0)
      : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad), opad_(opad),
        weight_(static_cast<std::size_t>(in_c) * k * k * out_c, T(0)),
        bias_(out_c, T(0)),
        dweight_(weight_.size(), T(0)),
        dbias_(out_c, T(0)) {}

  void init(Rng& rng, T stddev) {
    for (T& w : weight_) w = static_cast<T>(rng.normal(0.0, static_cast<double>(stddev)));
    for (T& b : bias_) b = T(0);
  }

  Tensor4<T> forward(const Tensor4<T>& x) {
    if (x.c != in_c_) throw ShapeError("ConvTranspose2d: channel mismatch");
    x_ = x;
    const int oh = geom::deconv_out(x.h, k_, stride_, pad_, opad_);
    const int ow = geom::deconv_out(x.w, k_, stride_, pad_, opad_);
    if (oh < 1 || ow < 1) throw ShapeError("ConvTranspose2d: degenerate output");
    Tensor4<T> y(x.n, oh, ow, out_c_);
    ConstMatMap<T> wmat(weight_.data(), in_c_, static_cast<Eigen::Index>(k_) * k_ * out_c_);
    MatT<T> cols;
    for (int i = 0; i < x.n; ++i) {
      cols.noalias() = x.sample(i) * wmat;
      col2im_add(cols, i, k_, stride_, pad_, y);
    }
    for (int i = 0; i < y.n; ++i) {
      Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bvec(bias_.data(), out_c_);
      y.sample(i).rowwise() += bvec;
    }
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) {
    Tensor4<T> dx(x_.n, x_.h, x_.w, x_.c);
    ConstMatMap<T> wmat(weight_.data(), in_c_, static_cast<Eigen::Index>(k_) * k_ * out_c_);
    MatMap<T> dwmat(dweight_.data(), in_c_, static_cast<Eigen::Index>(k_) * k_ * out_c_);
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> dbvec(dbias_.data(), out_c_);
    MatT<T> dcols;
    for (int i = 0; i < x_.n; ++i) {
      im2col(dy, i, k_, stride_, pad_, dcols);
      dx.sample(i).noalias() = dcols * wmat.transpose();
      dwmat.noalias() += x_.sample(i).transpose() * dcols;
      dbvec += dy.sample(i).colwise().sum();
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".W", &weight_, &dweight_});
    out.push_back({prefix + ".b", &bias_, &dbias_});
  }

  int out_channels() const { return out_c_; }

 private:
  int in_c_, out_c_, k_, stride_, pad_, opad_;
  std::vector<T> weight_, bias_, dweight_, dbias_;
  Tensor4<T> x_;
};

template <class T>
class BatchNorm2d {
 public:
  explicit BatchNorm2d(int channels, T eps = T(1e-5), T momentum = T(0.1))
      : c_(channels), eps_(eps), momentum_(momentum),
        gamma_(channels, T(1)), beta_(channels, T(0)),
        dgamma_(channels, T(0)), dbeta_(channels, T(0)),
        running_mean_(channels, T(0)), running_var_(channels, T(1)) {}

  void init(Rng& rng, T stddev) {
    for (T& g : gamma_) g = static_cast<T>(rng.normal(1.0, static_cast<double>(stddev)));
    for (T& b : beta_) b = T(0);
  }

  Tensor4<T> forward(const Tensor4<T>& x, bool use_batch_stats) {
    if (x.c != c_) throw ShapeError("BatchNorm2d: channel mismatch");
    train_ = use_batch_stats;
    const std::size_t pixels = static_cast<std::size_t>(x.n) * x.h * x.w;
    mean_.assign(c_, T(0));
    inv_std_.assign(c_, T(0));
    if (use_batch_stats) {
      std::vector<T> var(c_, T(0));
      for (std::size_t p = 0; p < pixels; ++p) {
        const T* src = x.v.data() + p * c_;
        for (int ci = 0; ci < c_; ++ci) mean_[ci] += src[ci];
      }
      for (int ci = 0; ci < c_; ++ci) mean_[ci] /= static_cast<T>(pixels);
      for (std::size_t p = 0; p < pixels; ++p) {
        const T* src = x.v.data() + p * c_;
        for (int ci = 0; ci < c_; ++ci) {
          const T d = src[ci] - mean_[ci];
          var[ci] += d * d;
        }
      }
      for (int ci = 0; ci < c_; ++ci) var[ci] /= static_cast<T>(pixels);
      for (int ci = 0; ci < c_; ++ci) inv_std_[ci] = T(1) / std::sqrt(var[ci] + eps_);
      // running stats keep the unbiased variance, as the usual frameworks do
      const T unbias = pixels > 1 ? static_cast<T>(pixels) / static_cast<T>(pixels - 1) : T(1);
      for (int ci = 0; ci < c_; ++ci) {
        running_mean_[ci] = (T(1) - momentum_) * running_mean_[ci] + momentum_ * mean_[ci];
        running_var_[ci] = (T(1) - momentum_) * running_var_[ci] + momentum_ * var[ci] * unbias;
      }
    } else {
      for (int ci = 0; ci < c_; ++ci) {
        mean_[ci] = running_mean_[ci];
        inv_std_[ci] = T(1) / std::sqrt(running_var_[ci] + eps_);
      }
    }
    xhat_ = Tensor4<T>(x.n, x.h, x.w, x.c);
    Tensor4<T> y(x.n, x.h, x.w, x.c);
    for (std::size_t p = 0; p < pixels; ++p) {
      const T* src = x.v.data() + p * c_;
      T* xh = xhat_.v.data() + p * c_;
      T* dst = y.v.data() + p * c_;
      for (int ci = 0; ci < c_; ++ci) {
        xh[ci] = (src[ci] - mean_[ci]) * inv_std_[ci];
        dst[ci] = gamma_[ci] * xh[ci] + beta_[ci];
      }
    }
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) {
    const std::size_t pixels = static_cast<std::size_t>(dy.n) * dy.h * dy.w;
    Tensor4<T> dx(dy.n, dy.h, dy.w, dy.c);
    std::vector<T> sum_dy(c_, T(0)), sum_dy_xhat(c_, T(0));
    for (std::size_t p = 0; p < pixels; ++p) {
      const T* dyp = dy.v.data() + p * c_;
      const T* xh = xhat_.v.data() + p * c_;
      for (int ci = 0; ci < c_; ++ci) {
        sum_dy[ci] += dyp[ci];
        sum_dy_xhat[ci] += dyp[ci] * xh[ci];
      }
    }
    for (int ci = 0; ci < c_; ++ci) {
      dbeta_[ci] += sum_dy[ci];
      dgamma_[ci] += sum_dy_xhat[ci];
    }
    if (train_) {
      const T inv_n = T(1) / static_cast<T>(pixels);
      for (std::size_t p = 0; p < pixels; ++p) {
        const T* dyp = dy.v.data() + p * c_;
        const T* xh = xhat_.v.data() + p * c_;
        T* dxp = dx.v.data() + p * c_;
        for (int ci = 0; ci < c_; ++ci) {
          const T t = dyp[ci] - inv_n * sum_dy[ci] - inv_n * sum_dy_xhat[ci] * xh[ci];
          dxp[ci] = gamma_[ci] * inv_std_[ci] * t;
        }
      }
    } else {
      for (std::size_t p = 0; p < pixels; ++p) {
        const T* dyp = dy.v.data() + p * c_;
        T* dxp = dx.v.data() + p * c_;
        for (int ci = 0; ci < c_; ++ci) dxp[ci] = dyp[ci] * gamma_[ci] * inv_std_[ci];
      }
    }
    return dx;
  }

  void collect(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".gamma", &gamma_, &dgamma_});
    out.push_back({prefix + ".beta", &beta_, &dbeta_});
  }
  void collect_buffers(const std::string& prefix, std::vector<BufferRef<T>>& out) {
    out.push_back({prefix + ".running_mean", &running_mean_});
    out.push_back({prefix + ".running_var", &running_var_});
  }

 private:
  int c_;
  T eps_, momentum_;
  bool train_ = true;
  std::vector<T> gamma_, beta_, dgamma_, dbeta_, running_mean_, running_var_;
  std::vector<T> mean_, inv_std_;
  Tensor4<T> xhat_;
};

template <class T>
class LeakyRelu {
 public:
  explicit LeakyRelu(T slope) : slope_(slope) {}

  Tensor4<T> forward(const Tensor4<T>& x) {
    x_ = x;
    Tensor4<T> y = x;
    for (T& v : y.v) v = v > T(0) ? v : slope_ * v;
    return y;
  }
  Tensor4<T> backward(const Tensor4<T>& dy) {
    Tensor4<T> dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i)
      if (x_.v[i] <= T(0)) dx.v[i] *= slope_;
    return dx;
  }

 private:
  T slope_;
  Tensor4<T> x_;
};

template <class T>
class Tanh {
 public:
  Tensor4<T> forward(const Tensor4<T>& x) {
    y_ = x;
    for (T& v : y_.v) v = std::tanh(v);
    return y_;
  }
  Tensor4<T> backward(const Tensor4<T>& dy) {
    Tensor4<T> dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] *= T(1) - y_.v[i] * y_.v[i];
    return dx;
  }

 private:
  Tensor4<T> y_;
};

// Inverted dropout, mask drawn from a caller-provided seed so that a training
// step replays exactly from (seed, step).
template <class T>
class Dropout {
 public:
  explicit Dropout(T rate) : rate_(rate) {}

  Tensor4<T> forward(const Tensor4<T>& x, bool active, std::uint64_t seed) {
    active_ = active && rate_ > T(0);
    if (!active_) return x;
    Rng rng(seed);
    mask_.assign(x.size(), T(0));
    const T keep = T(1) - rate_;
    for (std::size_t i = 0; i < mask_.size(); ++i)
      mask_[i] = rng.uniform01() >= static_cast<double>(rate_) ? T(1) / keep : T(0);
    Tensor4<T> y = x;
    for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] *= mask_[i];
    return y;
  }
  Tensor4<T> backward(const Tensor4<T>& dy) {
    if (!active_) return dy;
    Tensor4<T> dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] *= mask_[i];
    return dx;
  }

 private:
  T rate_;
  bool active_ = false;
  std::vector<T> mask_;
};

template <class T>
class ZeroPad2d {
 public:
  explicit ZeroPad2d(int pad) : pad_(pad) {}

  Tensor4<T> forward(const Tensor4<T>& x) {
    Tensor4<T> y(x.n, x.h + 2 * pad_, x.w + 2 * pad_, x.c);
    for (int i = 0; i < x.n; ++i)
      for (int yy = 0; yy < x.h; ++yy)
        for (int xx = 0; xx < x.w; ++xx)
          for (int ci = 0; ci < x.c; ++ci)
            y.at(i, yy + pad_, xx + pad_, ci) = x.at(i, yy, xx, ci);
    return y;
  }
  Tensor4<T> backward(const Tensor4<T>& dy) {
    Tensor4<T> dx(dy.n, dy.h - 2 * pad_, dy.w - 2 * pad_, dy.c);
    for (int i = 0; i < dx.n; ++i)
      for (int yy = 0; yy < dx.h; ++yy)
        for (int xx = 0; xx < dx.w; ++xx)
          for (int ci = 0; ci < dx.c; ++ci)
            dx.at(i, yy, xx, ci) = dy.at(i, yy + pad_, xx + pad_, ci);
    return dx;
  }

 private:
  int pad_;
};

}  // namespace desmoke

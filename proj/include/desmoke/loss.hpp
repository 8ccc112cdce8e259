#pragma once

#include <cmath>

#include "desmoke/tensor.hpp"

namespace desmoke {

struct LossConfig {
  double lambda = 100.0;  // weight of the L1 term
};

// Mean binary cross-entropy over all patch cells, on raw logits.
// Accumulated in double regardless of the tensor scalar.
template <class T>
double bce_with_logits_mean(const Tensor4<T>& scores, double target) {
  double acc = 0.0;
  for (const T& sv : scores.v) {
    const double s = static_cast<double>(sv);
    acc += std::max(s, 0.0) - s * target + std::log1p(std::exp(-std::abs(s)));
  }
  return acc / static_cast<double>(scores.size());
}

// d/ds of the mean BCE: (sigmoid(s) - target) / count.
template <class T>
Tensor4<T> bce_with_logits_grad(const Tensor4<T>& scores, double target) {
  Tensor4<T> g(scores.n, scores.h, scores.w, scores.c);
  const double inv_count = 1.0 / static_cast<double>(scores.size());
  for (std::size_t i = 0; i < scores.v.size(); ++i) {
    const double s = static_cast<double>(scores.v[i]);
    const double sig = 1.0 / (1.0 + std::exp(-s));
    g.v[i] = static_cast<T>((sig - target) * inv_count);
  }
  return g;
}

struct AdversarialLosses {
  double d_loss = 0.0;
  double g_adv = 0.0;
};

// d_loss = mean[BCE(real,1) + BCE(fake,0)], g_adv = mean[BCE(fake,1)].
template <class T>
AdversarialLosses adversarial_loss(const Tensor4<T>& real_scores, const Tensor4<T>& fake_scores) {
  AdversarialLosses out;
  out.d_loss = bce_with_logits_mean(real_scores, 1.0) + bce_with_logits_mean(fake_scores, 0.0);
  out.g_adv = bce_with_logits_mean(fake_scores, 1.0);
  return out;
}

// Mean absolute difference over batch, pixels and the three RGB channels.
// Any extra channels beyond the first three are ignored by construction.
template <class T>
double l1_rgb(const Tensor4<T>& output, const Tensor4<T>& target) {
  if (output.n != target.n || output.h != target.h || output.w != target.w)
    throw ShapeError("l1_rgb: shape mismatch");
  if (output.c < 3 || target.c < 3) throw ShapeError("l1_rgb: need at least 3 channels");
  double acc = 0.0;
  const std::size_t pixels = static_cast<std::size_t>(output.n) * output.h * output.w;
  for (std::size_t p = 0; p < pixels; ++p) {
    const T* a = output.v.data() + p * output.c;
    const T* b = target.v.data() + p * target.c;
    for (int ci = 0; ci < 3; ++ci)
      acc += std::abs(static_cast<double>(a[ci]) - static_cast<double>(b[ci]));
  }
  return acc / (static_cast<double>(pixels) * 3.0);
}

// d l1_rgb / d output; zero on channels past the first three.
template <class T>
Tensor4<T> l1_rgb_grad(const Tensor4<T>& output, const Tensor4<T>& target) {
  Tensor4<T> g(output.n, output.h, output.w, output.c);
  const std::size_t pixels = static_cast<std::size_t>(output.n) * output.h * output.w;
  const T inv = T(1.0 / (static_cast<double>(pixels) * 3.0));
  for (std::size_t p = 0; p < pixels; ++p) {
    const T* a = output.v.data() + p * output.c;
    const T* b = target.v.data() + p * target.c;
    T* gp = g.v.data() + p * output.c;
    for (int ci = 0; ci < 3; ++ci) {
      const T d = a[ci] - b[ci];
      gp[ci] = d > T(0) ? inv : (d < T(0) ? -inv : T(0));
    }
  }
  return g;
}

inline double total_generator_loss(double g_adv, double l1, const LossConfig& cfg) {
  return g_adv + cfg.lambda * l1;
}

}  // namespace desmoke

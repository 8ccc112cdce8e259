#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "desmoke/dcprior.hpp"
#include "desmoke/rng.hpp"
#include "desmoke/smokesim.hpp"

using namespace desmoke;

namespace {

int clampi(int i, int n) { return std::min(std::max(i, 0), n - 1); }

// Nested-min oracle straight from the definition, replicated borders.
Plane dark_channel_oracle(const ImageRgb& img, int s) {
  const int h = img.height(), w = img.width(), r = s / 2;
  Plane out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float m = 1.f;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int yy = clampi(y + dy, h), xx = clampi(x + dx, w);
          m = std::min({m, img.r(yy, xx), img.g(yy, xx), img.b(yy, xx)});
        }
      out(y, x) = m;
    }
  return out;
}

double window_mean(const Plane& p, int cy, int cx, int r) {
  const int h = static_cast<int>(p.rows()), w = static_cast<int>(p.cols());
  double s = 0.0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) s += p(clampi(cy + dy, h), clampi(cx + dx, w));
  return s / ((2 * r + 1) * (2 * r + 1));
}

// Per-window evaluation of the linear-coefficient equations, then the
// averaged-coefficient output, all in double.
Plane guided_filter_oracle(const Plane& I, const Plane& p, int r, double eps) {
  const int h = static_cast<int>(I.rows()), w = static_cast<int>(I.cols());
  PlaneT<double> a(h, w), b(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double mu = window_mean(I, y, x, r);
      const double pbar = window_mean(p, y, x, r);
      const double corr = window_mean((I * p).eval(), y, x, r);
      const double corr_ii = window_mean((I * I).eval(), y, x, r);
      const double var = corr_ii - mu * mu;
      a(y, x) = (corr - mu * pbar) / (var + eps);
      b(y, x) = pbar - a(y, x) * mu;
    }
  Plane out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double abar = 0.0, bbar = 0.0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          abar += a(clampi(y + dy, h), clampi(x + dx, w));
          bbar += b(clampi(y + dy, h), clampi(x + dx, w));
        }
      const double n = (2 * r + 1) * (2 * r + 1);
      out(y, x) = static_cast<float>(abar / n * I(y, x) + bbar / n);
    }
  return out;
}

Plane random_plane(int h, int w, Rng& rng) {
  Plane p(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) p(y, x) = static_cast<float>(rng.uniform01());
  return p;
}

ImageRgb random_rgb(int h, int w, Rng& rng) {
  ImageRgb img(h, w);
  img.r = random_plane(h, w, rng);
  img.g = random_plane(h, w, rng);
  img.b = random_plane(h, w, rng);
  return img;
}

}  // namespace

TEST_CASE("dark channel of a constant image is that constant") {
  ImageRgb img = constant_rgb(32, 32, 0.5f, 0.5f, 0.5f);
  Plane dc = dark_channel(img, {15});
  CHECK((dc == 0.5f).all());
}

TEST_CASE("dark channel of a pure red image is zero") {
  ImageRgb img = constant_rgb(16, 16, 1.f, 0.f, 0.f);
  for (int s : {1, 3, 7}) CHECK((dark_channel(img, {s}) == 0.f).all());
}

TEST_CASE("3x3 dark spot spreads to the whole image at s=3") {
  ImageRgb img = constant_rgb(3, 3, 0.9f, 0.9f, 0.9f);
  img.r(1, 1) = img.g(1, 1) = img.b(1, 1) = 0.1f;
  Plane dc = dark_channel(img, {3});
  Plane want = dark_channel_oracle(img, 3);
  CHECK((dc == want).all());
  CHECK((dc == 0.1f).all());
}

TEST_CASE("separable min filter is bit-equal to the brute-force oracle") {
  Rng rng(1234);
  for (int i = 0; i < 25; ++i) {
    ImageRgb img = random_rgb(32, 32, rng);
    for (int s : {1, 3, 7, 15}) {
      Plane fast = dark_channel(img, {s});
      Plane slow = dark_channel_oracle(img, s);
      REQUIRE((fast == slow).all());
    }
  }
}

TEST_CASE("dark channel bounds, monotonicity and interior translation equivariance") {
  Rng rng(99);
  ImageRgb img = random_rgb(24, 24, rng);
  const int s = 7;
  Plane dc = dark_channel(img, {s});

  Plane pixel_min = img.r.min(img.g).min(img.b);
  CHECK((dc <= pixel_min + 0.f).all());

  ImageRgb brighter = img;
  brighter.r = (img.r + 0.05f).min(1.f);
  brighter.g = (img.g + 0.05f).min(1.f);
  brighter.b = (img.b + 0.05f).min(1.f);
  CHECK((dark_channel(brighter, {s}) >= dc).all());

  // shift the image content by one column; interior outputs shift along
  ImageRgb shifted(24, 24);
  for (int c = 0; c < 3; ++c) {
    shifted.channel(c).leftCols(23) = img.channel(c).rightCols(23);
    shifted.channel(c).col(23) = img.channel(c).col(23);
  }
  Plane dcs = dark_channel(shifted, {s});
  const int r = s / 2;
  for (int y = r; y < 24 - r; ++y)
    for (int x = r; x < 23 - r - 1; ++x) REQUIRE(dcs(y, x) == dc(y, x + 1));
}

TEST_CASE("dark channel rejects bad kernels") {
  ImageRgb img = constant_rgb(8, 8, 0.5f, 0.5f, 0.5f);
  CHECK_THROWS_AS(dark_channel(img, {4}), ValueError);
  CHECK_THROWS_AS(dark_channel(img, {9}), ValueError);
  CHECK_THROWS_AS(dark_channel(img, {-1}), ValueError);
}

TEST_CASE("guided filter reproduces a non-constant guide under self-guidance") {
  Rng rng(42);
  Plane guide = random_plane(24, 24, rng);
  Plane out = guided_filter(guide, guide, {2, 1e-12f});
  CHECK((out - guide).abs().maxCoeff() <= 1e-4f);
}

TEST_CASE("guided filter with constant guide equals doubly box-filtered p") {
  Rng rng(7);
  Plane guide = Plane::Constant(20, 20, 0.5f);
  Plane p = random_plane(20, 20, rng);
  Plane out = guided_filter(guide, p, {2, 1e-3f});
  Plane want = box_mean(box_mean(p, 2), 2);
  CHECK((out - want).abs().maxCoeff() <= 1e-5f);
  // and the per-window oracle agrees
  Plane oracle = guided_filter_oracle(guide, p, 2, 1e-3);
  CHECK((out - oracle).abs().maxCoeff() <= 1e-6f);
}

TEST_CASE("guided filter preserves constant p exactly") {
  Rng rng(8);
  Plane guide = random_plane(16, 16, rng);
  Plane p = Plane::Constant(16, 16, 0.37f);
  Plane out = guided_filter(guide, p, {3, 1e-3f});
  CHECK((out - 0.37f).abs().maxCoeff() <= 1e-5f);
}

TEST_CASE("box-filter implementation matches the naive windowed oracle") {
  Rng rng(555);
  for (int i = 0; i < 20; ++i) {
    Plane guide = random_plane(16, 16, rng);
    Plane p = random_plane(16, 16, rng);
    for (int r : {1, 2, 4})
      for (float eps : {1e-4f, 1e-3f, 1e-1f}) {
        Plane fast = guided_filter(guide, p, {r, eps});
        Plane slow = guided_filter_oracle(guide, p, r, eps);
        REQUIRE((fast - slow).abs().maxCoeff() <= 1e-6f);
      }
  }
}

TEST_CASE("large epsilon drives the output to the doubly box-filtered p") {
  Rng rng(21);
  Plane guide = random_plane(16, 16, rng);
  Plane p = random_plane(16, 16, rng);
  Plane out = guided_filter(guide, p, {2, 1e6f});
  Plane want = box_mean(box_mean(p, 2), 2);
  CHECK((out - want).abs().maxCoeff() <= 1e-4f);
}

TEST_CASE("guided filter rejects invalid input") {
  CHECK_THROWS_AS(guided_filter(Plane::Zero(8, 8), Plane::Zero(8, 9), {2, 1e-3f}), ShapeError);
  CHECK_THROWS_AS(guided_filter(Plane::Zero(8, 8), Plane::Zero(8, 8), {2, 0.f}), ValueError);
}

TEST_CASE("refined dark channel of a constant gray image is that constant") {
  ImageRgb img = constant_rgb(48, 48, 0.4f, 0.4f, 0.4f);
  Plane refined = refined_dark_channel(img, {15}, {5, 1e-3f});
  CHECK((refined - 0.4f).abs().maxCoeff() <= 1e-5f);
  CHECK(refined.rows() == 48);
  CHECK(refined.cols() == 48);
}

TEST_CASE("smoked images have a brighter refined dark channel than clear ones") {
  Rng rng(2024);
  int wins = 0;
  for (int i = 0; i < 20; ++i) {
    ImageRgb clear = random_rgb(48, 48, rng);
    clear.r *= 0.6f;  // keep some channel low, as tissue images do
    SmokePair pair = smoke_pair(clear, Tier::Medium, 1000 + i);
    Plane rd_clear = refined_dark_channel(clear, {15}, {5, 1e-3f});
    Plane rd_smoked = refined_dark_channel(pair.smoked, {15}, {5, 1e-3f});
    if (rd_smoked.mean() > rd_clear.mean()) ++wins;
  }
  CHECK(wins == 20);
}

TEST_CASE("prepare_input embeds the refined dark channel untouched") {
  Rng rng(77);
  ImageRgb img = random_rgb(32, 32, rng);
  DarkChannelParams dcp{7};
  GuidedFilterParams gfp{3, 1e-3f};
  ImageStack4 stack = prepare_input(img, dcp, gfp);
  CHECK((stack.rgb.r == img.r).all());
  CHECK((stack.rgb.g == img.g).all());
  CHECK((stack.rgb.b == img.b).all());
  CHECK((stack.guide == refined_dark_channel(img, dcp, gfp)).all());

  ImageStack4 black = prepare_input(constant_rgb(32, 32, 0, 0, 0), dcp, gfp);
  CHECK((black.guide == 0.f).all());
}

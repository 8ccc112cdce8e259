#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "desmoke/image.hpp"
#include "desmoke/image_io.hpp"
#include "desmoke/rng.hpp"

using namespace desmoke;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
  fs::path p = fs::temp_directory_path() / "desmoke_test_image";
  fs::create_directories(p);
  return p;
}

ImageRgb random_quantized(int h, int w, Rng& rng) {
  ImageRgb img(h, w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        img.channel(c)(y, x) = static_cast<float>(rng.below(256)) / 255.f;
  return img;
}

ImageRgb random_rgb(int h, int w, Rng& rng) {
  ImageRgb img(h, w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        img.channel(c)(y, x) = static_cast<float>(rng.uniform01());
  return img;
}

}  // namespace

TEST_CASE("load of all-black and all-white PNGs normalizes to 0 and 1") {
  const fs::path dir = tmp_dir();
  save_image(constant_rgb(2, 2, 0, 0, 0), dir / "black.png");
  ImageRgb black = load_image(dir / "black.png");
  CHECK(black.r.maxCoeff() == 0.f);
  CHECK(black.g.maxCoeff() == 0.f);
  CHECK(black.b.maxCoeff() == 0.f);

  save_image(constant_rgb(2, 2, 1, 1, 1), dir / "white.png");
  ImageRgb white = load_image(dir / "white.png");
  CHECK(white.r.minCoeff() == 1.f);
  CHECK(white.b.minCoeff() == 1.f);
}

TEST_CASE("save/load round trip is bit-identical for quantized images") {
  const fs::path dir = tmp_dir();
  Rng rng(42);
  for (int i = 0; i < 100; ++i) {
    ImageRgb img = random_quantized(7, 5, rng);
    save_image(img, dir / "rt.png");
    ImageRgb back = load_image(dir / "rt.png");
    REQUIRE((back.r == img.r).all());
    REQUIRE((back.g == img.g).all());
    REQUIRE((back.b == img.b).all());
  }
}

TEST_CASE("save then load of arbitrary floats stays within the quantization bound") {
  const fs::path dir = tmp_dir();
  Rng rng(7);
  ImageRgb img = random_rgb(16, 16, rng);
  save_image(img, dir / "q.png");
  ImageRgb back = load_image(dir / "q.png");
  const float bound = 1.f / 510.f + 1e-6f;
  for (int c = 0; c < 3; ++c)
    CHECK((back.channel(c) - img.channel(c)).abs().maxCoeff() <= bound);
}

TEST_CASE("plane of 0.5 quantizes to gray 128") {
  const fs::path dir = tmp_dir();
  save_image(Plane::Constant(3, 3, 0.5f), dir / "gray.png");
  Plane back = load_plane(dir / "gray.png");
  CHECK((back == 128.f / 255.f).all());
}

TEST_CASE("plane load/save is idempotent after the first quantization") {
  const fs::path dir = tmp_dir();
  Rng rng(3);
  Plane p(9, 4);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 4; ++x) p(y, x) = static_cast<float>(rng.uniform01());
  save_image(p, dir / "p1.png");
  Plane p1 = load_plane(dir / "p1.png");
  save_image(p1, dir / "p2.png");
  Plane p2 = load_plane(dir / "p2.png");
  CHECK((p1 == p2).all());
}

TEST_CASE("stack4 PNG has the quantized guide as 4th channel") {
  const fs::path dir = tmp_dir();
  Rng rng(11);
  ImageRgb rgb = random_quantized(6, 6, rng);
  Plane guide = Plane::Constant(6, 6, 0.25f);
  save_image(stack_guide(rgb, guide), dir / "s.png");
  ImageStack4 back = load_stack4(dir / "s.png");
  CHECK((back.rgb.r == rgb.r).all());
  CHECK((back.guide == Plane::Constant(6, 6, std::round(0.25f * 255.f) / 255.f)).all());
}

TEST_CASE("stack_guide keeps rgb bit-identical and rejects shape mismatch") {
  Rng rng(5);
  ImageRgb rgb = random_rgb(8, 8, rng);
  Plane zeros = Plane::Zero(8, 8);
  ImageRgb copy = rgb;
  ImageStack4 s = stack_guide(rgb, zeros);
  CHECK((s.rgb.r == copy.r).all());
  CHECK((s.rgb.g == copy.g).all());
  CHECK((s.rgb.b == copy.b).all());
  CHECK((s.guide == 0.f).all());

  auto [rgb2, guide2] = unstack(std::move(s));
  CHECK((rgb2.b == copy.b).all());
  CHECK((guide2 == 0.f).all());

  CHECK_THROWS_AS(stack_guide(random_rgb(4, 4, rng), Plane::Zero(4, 5)), ShapeError);
}

TEST_CASE("load errors carry distinct kinds") {
  const fs::path dir = tmp_dir();
  CHECK_THROWS_AS(load_image(dir / "missing.png"), IoError);

  std::FILE* f = std::fopen((dir / "junk.png").string().c_str(), "wb");
  std::fputs("this is not a png", f);
  std::fclose(f);
  CHECK_THROWS_AS(load_image(dir / "junk.png"), FormatError);

  save_image(Plane::Constant(2, 2, 0.5f), dir / "gray8.png");
  CHECK_THROWS_AS(load_image(dir / "gray8.png"), ChannelError);
  save_image(constant_rgb(2, 2, 0.1f, 0.2f, 0.3f), dir / "rgb8.png");
  CHECK_THROWS_AS(load_plane(dir / "rgb8.png"), ChannelError);
}

TEST_CASE("resize preserves constants and identity") {
  ImageRgb img = constant_rgb(10, 14, 0.3f, 0.6f, 0.9f);
  ImageRgb up = resize_to(img, 23, 5);
  CHECK((up.r == 0.3f).all());
  CHECK((up.g == 0.6f).all());
  CHECK((up.b == 0.9f).all());

  Rng rng(9);
  ImageRgb noisy(12, 12);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 12; ++x)
        noisy.channel(c)(y, x) = static_cast<float>(rng.uniform01());
  ImageRgb same = resize_to(noisy, 12, 12);
  CHECK((same.r == noisy.r).all());
  CHECK((same.g == noisy.g).all());
  CHECK((same.b == noisy.b).all());
}

TEST_CASE("2x upscale matches the direct bilinear formula") {
  // Oracle: out(y,x) = bilinear sample at ((x+0.5)*sw/w - 0.5, ...) with
  // replicated borders, computed straight from the definition in double.
  const int sh = 6, sw = 6;
  Plane src(sh, sw);
  for (int y = 0; y < sh; ++y)
    for (int x = 0; x < sw; ++x) src(y, x) = ((x + y) % 2) ? 1.f : 0.f;

  const int h = 12, w = 12;
  Plane got = resize_to(src, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double fy = (y + 0.5) * (static_cast<double>(sh) / h) - 0.5;
      const double fx = (x + 0.5) * (static_cast<double>(sw) / w) - 0.5;
      const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, sh - 1);
      const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, sw - 1);
      const int y1 = std::clamp(static_cast<int>(std::floor(fy)) + 1, 0, sh - 1);
      const int x1 = std::clamp(static_cast<int>(std::floor(fx)) + 1, 0, sw - 1);
      const double ty = fy - std::floor(fy);
      const double tx = fx - std::floor(fx);
      const double top = src(y0, x0) + tx * (src(y0, x1) - src(y0, x0));
      const double bot = src(y1, x0) + tx * (src(y1, x1) - src(y1, x0));
      const double want = top + ty * (bot - top);
      CHECK(std::abs(got(y, x) - want) < 1e-6);
    }
}

TEST_CASE("resize rejects degenerate targets") {
  CHECK_THROWS_AS(resize_to(Plane::Zero(4, 4), 0, 4), ValueError);
}

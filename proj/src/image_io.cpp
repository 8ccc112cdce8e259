#include "desmoke/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

namespace desmoke {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
  }
};

struct Raster {
  int height = 0;
  int width = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> px;  // interleaved, one entry per sample
};

Raster read_png(const std::filesystem::path& path, bool want_gray) {
  FilePtr f(std::fopen(path.string().c_str(), "rb"));
  if (!f) throw IoError("missing file: " + path.string());

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw FormatError("not a PNG file: " + path.string());

  PngReader rd;
  rd.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!rd.png) throw IoError("libpng init failed");
  rd.info = png_create_info_struct(rd.png);
  if (!rd.info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(rd.png)))
    throw FormatError("corrupt PNG: " + path.string());

  png_init_io(rd.png, f.get());
  png_set_sig_bytes(rd.png, 8);
  png_read_info(rd.png, rd.info);

  int bit_depth = png_get_bit_depth(rd.png, rd.info);
  int color_type = png_get_color_type(rd.png, rd.info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(rd.png);
    bit_depth = 8;
    color_type = PNG_COLOR_TYPE_RGB;
  }
  if (bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(rd.png);
    bit_depth = 8;
  }
  if (bit_depth != 8 && bit_depth != 16)
    throw FormatError("unsupported PNG bit depth: " + path.string());

  const bool is_gray = color_type == PNG_COLOR_TYPE_GRAY ||
                       color_type == PNG_COLOR_TYPE_GRAY_ALPHA;
  if (want_gray && !is_gray)
    throw ChannelError("expected grayscale PNG: " + path.string());
  if (!want_gray && is_gray)
    throw ChannelError("expected RGB PNG, got grayscale: " + path.string());

  png_read_update_info(rd.png, rd.info);

  const int height = static_cast<int>(png_get_image_height(rd.png, rd.info));
  const int width = static_cast<int>(png_get_image_width(rd.png, rd.info));
  const int channels = png_get_channels(rd.png, rd.info);
  const std::size_t rowbytes = png_get_rowbytes(rd.png, rd.info);

  std::vector<unsigned char> row(rowbytes);
  Raster out;
  out.height = height;
  out.width = width;
  out.channels = channels;
  out.bit_depth = bit_depth;
  out.px.resize(static_cast<std::size_t>(height) * width * channels);

  for (int y = 0; y < height; ++y) {
    png_read_row(rd.png, row.data(), nullptr);
    std::uint16_t* dst = out.px.data() + static_cast<std::size_t>(y) * width * channels;
    if (bit_depth == 8) {
      for (int i = 0; i < width * channels; ++i) dst[i] = row[i];
    } else {
      for (int i = 0; i < width * channels; ++i)  // PNG 16-bit is big endian
        dst[i] = static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1]);
    }
  }
  png_read_end(rd.png, nullptr);
  return out;
}

void write_png(const std::filesystem::path& path, int height, int width,
               int channels, const std::vector<unsigned char>& px) {
  FilePtr f(std::fopen(path.string().c_str(), "wb"));
  if (!f) throw IoError("cannot open for write: " + path.string());

  PngWriter wr;
  wr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!wr.png) throw IoError("libpng init failed");
  wr.info = png_create_info_struct(wr.png);
  if (!wr.info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(wr.png)))
    throw IoError("PNG write failed: " + path.string());

  int color_type = PNG_COLOR_TYPE_GRAY;
  if (channels == 3) color_type = PNG_COLOR_TYPE_RGB;
  if (channels == 4) color_type = PNG_COLOR_TYPE_RGB_ALPHA;

  png_init_io(wr.png, f.get());
  png_set_IHDR(wr.png, wr.info, width, height, 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(wr.png, wr.info);
  for (int y = 0; y < height; ++y)
    png_write_row(wr.png, const_cast<unsigned char*>(
                              px.data() + static_cast<std::size_t>(y) * width * channels));
  png_write_end(wr.png, wr.info);
}

inline unsigned char quantize(float v) {
  if (v < 0.f) v = 0.f;
  if (v > 1.f) v = 1.f;
  return static_cast<unsigned char>(std::lround(static_cast<double>(v) * 255.0));
}

}  // namespace

ImageRgb load_image(const std::filesystem::path& path) {
  Raster ras = read_png(path, /*want_gray=*/false);
  const float scale = ras.bit_depth == 8 ? 255.f : 65535.f;
  ImageRgb img(ras.height, ras.width);
  const int c = ras.channels;  // 3 or 4; alpha ignored
  for (int y = 0; y < ras.height; ++y)
    for (int x = 0; x < ras.width; ++x) {
      const std::uint16_t* p = ras.px.data() + (static_cast<std::size_t>(y) * ras.width + x) * c;
      img.r(y, x) = p[0] / scale;
      img.g(y, x) = p[1] / scale;
      img.b(y, x) = p[2] / scale;
    }
  return img;
}

Plane load_plane(const std::filesystem::path& path) {
  Raster ras = read_png(path, /*want_gray=*/true);
  const float scale = ras.bit_depth == 8 ? 255.f : 65535.f;
  Plane img(ras.height, ras.width);
  const int c = ras.channels;
  for (int y = 0; y < ras.height; ++y)
    for (int x = 0; x < ras.width; ++x)
      img(y, x) = ras.px[(static_cast<std::size_t>(y) * ras.width + x) * c] / scale;
  return img;
}

ImageStack4 load_stack4(const std::filesystem::path& path) {
  Raster ras = read_png(path, /*want_gray=*/false);
  if (ras.channels != 4)
    throw ChannelError("expected RGBA PNG: " + path.string());
  const float scale = ras.bit_depth == 8 ? 255.f : 65535.f;
  ImageRgb rgb(ras.height, ras.width);
  Plane guide(ras.height, ras.width);
  for (int y = 0; y < ras.height; ++y)
    for (int x = 0; x < ras.width; ++x) {
      const std::uint16_t* p = ras.px.data() + (static_cast<std::size_t>(y) * ras.width + x) * 4;
      rgb.r(y, x) = p[0] / scale;
      rgb.g(y, x) = p[1] / scale;
      rgb.b(y, x) = p[2] / scale;
      guide(y, x) = p[3] / scale;
    }
  return ImageStack4{std::move(rgb), std::move(guide)};
}

void save_image(const ImageRgb& img, const std::filesystem::path& path) {
  const int h = img.height(), w = img.width();
  std::vector<unsigned char> px(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      unsigned char* p = px.data() + (static_cast<std::size_t>(y) * w + x) * 3;
      p[0] = quantize(img.r(y, x));
      p[1] = quantize(img.g(y, x));
      p[2] = quantize(img.b(y, x));
    }
  write_png(path, h, w, 3, px);
}

void save_image(const Plane& img, const std::filesystem::path& path) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  std::vector<unsigned char> px(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) px[static_cast<std::size_t>(y) * w + x] = quantize(img(y, x));
  write_png(path, h, w, 1, px);
}

void save_image(const ImageStack4& img, const std::filesystem::path& path) {
  const int h = img.height(), w = img.width();
  std::vector<unsigned char> px(static_cast<std::size_t>(h) * w * 4);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      unsigned char* p = px.data() + (static_cast<std::size_t>(y) * w + x) * 4;
      p[0] = quantize(img.rgb.r(y, x));
      p[1] = quantize(img.rgb.g(y, x));
      p[2] = quantize(img.rgb.b(y, x));
      p[3] = quantize(img.guide(y, x));
    }
  write_png(path, h, w, 4, px);
}

}  // namespace desmoke

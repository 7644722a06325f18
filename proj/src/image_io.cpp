#include "gf/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gf {

double srgb_encode(double linear) {
  if (linear <= 0.0031308) return 12.92 * linear;
  return 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

double srgb_decode(double code) {
  if (code <= 0.04045) return code / 12.92;
  return std::pow((code + 0.055) / 1.055, 2.4);
}

namespace {

struct PngWriteSink {
  std::string bytes;
};

void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* sink = static_cast<PngWriteSink*>(png_get_io_ptr(png));
  sink->bytes.append(reinterpret_cast<const char*>(data), len);
}

void png_flush_cb(png_structp) {}

struct PngReadSource {
  const std::string* bytes;
  size_t pos = 0;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t len) {
  auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
  if (src->pos + len > src->bytes->size()) png_error(png, "unexpected end of PNG stream");
  std::memcpy(out, src->bytes->data() + src->pos, len);
  src->pos += len;
}

}  // namespace

std::string encode_png(const Image& rgb, bool srgb) {
  require(rgb.channels == 3 && rgb.width > 0 && rgb.height > 0, ErrCode::ShapeMismatch,
          "encode_png expects an HxWx3 image");
  std::vector<uint8_t> rows(static_cast<size_t>(rgb.width) * rgb.height * 3);
  for (int y = 0; y < rgb.height; ++y)
    for (int x = 0; x < rgb.width; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = std::clamp(rgb.at(x, y, c), 0.0, 1.0);
        if (srgb) v = srgb_encode(v);
        rows[(static_cast<size_t>(y) * rgb.width + x) * 3 + c] =
            static_cast<uint8_t>(std::lround(v * 255.0));
      }

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  PngWriteSink sink;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrCode::MalformedFile, "libpng write failure");
  }
  png_set_write_fn(png, &sink, png_write_cb, png_flush_cb);
  png_set_IHDR(png, info, rgb.width, rgb.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < rgb.height; ++y)
    png_write_row(png, rows.data() + static_cast<size_t>(y) * rgb.width * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return sink.bytes;
}

Image decode_png(const std::string& bytes, bool srgb) {
  require(bytes.size() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0,
          ErrCode::MalformedFile, "not a PNG stream");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  PngReadSource src{&bytes, 0};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrCode::MalformedFile, "libpng read failure");
  }
  png_set_read_fn(png, &src, png_read_cb);
  png_read_info(png, info);
  const int width = png_get_image_width(png, info);
  const int height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::vector<uint8_t> row(static_cast<size_t>(width) * 3);
  Image out(width, height, 3);
  for (int y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = row[static_cast<size_t>(x) * 3 + c] / 255.0;
        out.at(x, y, c) = srgb ? srgb_decode(v) : v;
      }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png(const std::string& path, const Image& rgb, bool srgb) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrCode::MalformedFile, "cannot open for write: " + path);
  const std::string bytes = encode_png(rgb, srgb);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Image read_png(const std::string& path, bool srgb) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrCode::MalformedFile, "cannot open: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return decode_png(ss.str(), srgb);
}

std::string encode_pfm(const Image& depth) {
  require(depth.channels == 1 && depth.width > 0 && depth.height > 0, ErrCode::ShapeMismatch,
          "encode_pfm expects an HxW image");
  std::string out = "Pf\n" + std::to_string(depth.width) + " " + std::to_string(depth.height) +
                    "\n-1.0\n";
  // PFM scanlines run bottom-to-top.
  out.reserve(out.size() + static_cast<size_t>(depth.width) * depth.height * 4);
  for (int y = depth.height - 1; y >= 0; --y)
    for (int x = 0; x < depth.width; ++x) {
      double d = depth.at(x, y);
      if (!std::isfinite(d)) d = 0.0;
      const float v = static_cast<float>(d);
      char buf[4];
      std::memcpy(buf, &v, 4);
      out.append(buf, 4);
    }
  return out;
}

Image decode_pfm(const std::string& bytes) {
  auto malformed = [&](const std::string& why, size_t offset) {
    fail(ErrCode::MalformedFile, why + " at byte " + std::to_string(offset));
  };
  size_t pos = 0;
  auto token = [&]() -> std::string {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) malformed("truncated PFM header", start);
    return bytes.substr(start, pos - start);
  };
  const std::string magic = token();
  if (magic != "Pf") malformed("expected 'Pf' magic", 0);
  int width = 0, height = 0;
  double scale = 0.0;
  try {
    width = std::stoi(token());
    height = std::stoi(token());
    scale = std::stod(token());
  } catch (const std::exception&) {
    malformed("bad PFM header field", pos);
  }
  if (width <= 0 || height <= 0) malformed("non-positive PFM dimensions", pos);
  if (scale >= 0.0) malformed("big-endian PFM unsupported (scale must be negative)", pos);
  if (pos >= bytes.size() || (bytes[pos] != '\n' && bytes[pos] != ' ' && bytes[pos] != '\r'))
    malformed("missing header terminator", pos);
  ++pos;
  const size_t need = static_cast<size_t>(width) * height * 4;
  if (bytes.size() - pos < need) malformed("truncated PFM payload", bytes.size());
  Image out(width, height, 1);
  for (int y = height - 1; y >= 0; --y)
    for (int x = 0; x < width; ++x) {
      float v;
      std::memcpy(&v, bytes.data() + pos, 4);
      pos += 4;
      out.at(x, y) = static_cast<double>(v);
    }
  return out;
}

void write_pfm(const std::string& path, const Image& depth) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrCode::MalformedFile, "cannot open for write: " + path);
  const std::string bytes = encode_pfm(depth);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Image read_pfm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrCode::MalformedFile, "cannot open: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return decode_pfm(ss.str());
}

}  // namespace gf

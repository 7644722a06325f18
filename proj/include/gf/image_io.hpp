#pragma once

#include <string>

#include "gf/image.hpp"

namespace gf {

/// 8-bit RGB PNG codec. With srgb=true values pass through the sRGB transfer
/// curve on write and are linearized on read; with srgb=false the 8-bit codes
/// are linear. Values are clamped to [0,1] on write.
std::string encode_png(const Image& rgb, bool srgb);
Image decode_png(const std::string& bytes, bool srgb);
void write_png(const std::string& path, const Image& rgb, bool srgb = true);
Image read_png(const std::string& path, bool srgb = true);

/// Grayscale PFM ("Pf", scale -1.0, little-endian float32, bottom-up rows).
/// Non-finite values are written as 0.
std::string encode_pfm(const Image& depth);
Image decode_pfm(const std::string& bytes);
void write_pfm(const std::string& path, const Image& depth);
Image read_pfm(const std::string& path);

double srgb_encode(double linear);
double srgb_decode(double code);

}  // namespace gf

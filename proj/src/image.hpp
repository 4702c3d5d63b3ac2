#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace stcae {

// 8-bit grayscale pixmap, row-major.
struct Pixmap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
};

// Decodes an 8-bit grayscale or RGB PNG, or a binary (P5) PGM, to grayscale.
// Color converts via BT.601 luminance Y = 0.299 R + 0.587 G + 0.114 B,
// rounded to nearest.
Pixmap decode_frame(const std::string& path);

// Bilinear resample with corner alignment and edge clamping; a same-size
// resize is the identity and constant images stay constant.
std::vector<float> resize_bilinear(const Pixmap& src, int out_width, int out_height);

// x/255 then per-frame mean subtraction; result is a (H, W, 1) tensor with
// values in [-1, 1] and zero mean.
Tensor normalize_frame(const std::vector<float>& pixels, int width, int height);

// Fraction of exactly-zero pixels; the hole heuristic for depth frames.
double zero_fraction(const Pixmap& p);

void write_pgm(const std::string& path, const Pixmap& p);

}  // namespace stcae

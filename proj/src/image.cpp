#include "image.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include <png.h>

namespace stcae {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    const long v = std::lround(y);
    return static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v));
}

Pixmap decode_png(const std::string& path, std::FILE* f) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    check(png != nullptr, ErrorKind::data, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(ErrorKind::data, "libpng init failed");
    }
    std::vector<std::uint8_t> interleaved;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorKind::data, "corrupt PNG: " + path);
    }
    png_init_io(png, f);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const png_size_t rowbytes = png_get_rowbytes(png, info);
    const int channels = png_get_channels(png, info);
    check(channels == 1 || channels == 3, ErrorKind::data,
          "unsupported PNG channel layout: " + path);

    interleaved.resize(rowbytes * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = interleaved.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Pixmap out;
    out.width = static_cast<int>(w);
    out.height = static_cast<int>(h);
    out.pixels.resize(static_cast<std::size_t>(w) * h);
    for (png_uint_32 y = 0; y < h; ++y) {
        const std::uint8_t* src = interleaved.data() + y * rowbytes;
        std::uint8_t* dst = out.pixels.data() + static_cast<std::size_t>(y) * w;
        if (channels == 1) {
            std::memcpy(dst, src, w);
        } else {
            for (png_uint_32 x = 0; x < w; ++x) {
                dst[x] = luma(src[3 * x], src[3 * x + 1], src[3 * x + 2]);
            }
        }
    }
    return out;
}

int pgm_token(std::FILE* f, const std::string& path) {
    // skips whitespace and '#' comment lines, then reads one integer
    int c = std::fgetc(f);
    for (;;) {
        while (c == ' ' || c == '\t' || c == '\n' || c == '\r') c = std::fgetc(f);
        if (c == '#') {
            while (c != '\n' && c != EOF) c = std::fgetc(f);
            continue;
        }
        break;
    }
    check(c != EOF && c >= '0' && c <= '9', ErrorKind::data, "malformed PGM header: " + path);
    int v = 0;
    while (c >= '0' && c <= '9') {
        v = v * 10 + (c - '0');
        check(v <= 1 << 26, ErrorKind::data, "PGM header value out of range: " + path);
        c = std::fgetc(f);
    }
    return v;
}

Pixmap decode_pgm(const std::string& path, std::FILE* f) {
    const int w = pgm_token(f, path);
    const int h = pgm_token(f, path);
    const int maxval = pgm_token(f, path);
    check(w > 0 && h > 0, ErrorKind::data, "empty PGM: " + path);
    check(maxval > 0 && maxval <= 255, ErrorKind::data, "only 8-bit PGM supported: " + path);
    Pixmap out;
    out.width = w;
    out.height = h;
    out.pixels.resize(static_cast<std::size_t>(w) * h);
    const std::size_t n = out.pixels.size();
    check(std::fread(out.pixels.data(), 1, n, f) == n, ErrorKind::data,
          "truncated PGM pixel data: " + path);
    return out;
}

}  // namespace

Pixmap decode_frame(const std::string& path) {
    File f(std::fopen(path.c_str(), "rb"));
    check(f != nullptr, ErrorKind::data, "cannot open frame: " + path);
    unsigned char sig[2];
    check(std::fread(sig, 1, 2, f.get()) == 2, ErrorKind::data, "empty frame file: " + path);
    std::rewind(f.get());
    if (sig[0] == 0x89 && sig[1] == 'P') return decode_png(path, f.get());
    if (sig[0] == 'P' && sig[1] == '5') {
        check(std::fgetc(f.get()) == 'P' && std::fgetc(f.get()) == '5', ErrorKind::data,
              "malformed PGM header: " + path);
        return decode_pgm(path, f.get());
    }
    fail(ErrorKind::data, "unsupported frame format (need PNG or binary PGM): " + path);
}

std::vector<float> resize_bilinear(const Pixmap& src, int out_width, int out_height) {
    check_contract(src.width > 0 && src.height > 0, "resize of empty pixmap");
    check_contract(out_width > 0 && out_height > 0, "resize target must be positive");
    std::vector<float> out(static_cast<std::size_t>(out_width) * out_height);
    const double sx = out_width > 1 ? static_cast<double>(src.width - 1) / (out_width - 1) : 0.0;
    const double sy = out_height > 1 ? static_cast<double>(src.height - 1) / (out_height - 1) : 0.0;
    for (int oy = 0; oy < out_height; ++oy) {
        const double fy = out_height > 1 ? oy * sy : (src.height - 1) * 0.5;
        int y0 = static_cast<int>(fy);
        if (y0 > src.height - 1) y0 = src.height - 1;
        const int y1 = y0 + 1 < src.height ? y0 + 1 : src.height - 1;
        const double wy = fy - y0;
        for (int ox = 0; ox < out_width; ++ox) {
            const double fx = out_width > 1 ? ox * sx : (src.width - 1) * 0.5;
            int x0 = static_cast<int>(fx);
            if (x0 > src.width - 1) x0 = src.width - 1;
            const int x1 = x0 + 1 < src.width ? x0 + 1 : src.width - 1;
            const double wx = fx - x0;
            const double p00 = src.pixels[static_cast<std::size_t>(y0) * src.width + x0];
            const double p01 = src.pixels[static_cast<std::size_t>(y0) * src.width + x1];
            const double p10 = src.pixels[static_cast<std::size_t>(y1) * src.width + x0];
            const double p11 = src.pixels[static_cast<std::size_t>(y1) * src.width + x1];
            const double top = p00 + (p01 - p00) * wx;
            const double bot = p10 + (p11 - p10) * wx;
            out[static_cast<std::size_t>(oy) * out_width + ox] =
                static_cast<float>(top + (bot - top) * wy);
        }
    }
    return out;
}

Tensor normalize_frame(const std::vector<float>& pixels, int width, int height) {
    check_contract(static_cast<int>(pixels.size()) == width * height,
                   "pixel buffer does not match extents");
    Tensor t({height, width, 1});
    double mean = 0.0;
    for (float v : pixels) mean += v / 255.0;
    mean /= pixels.size();
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        t[static_cast<std::int64_t>(i)] = static_cast<float>(pixels[i] / 255.0 - mean);
    }
    return t;
}

double zero_fraction(const Pixmap& p) {
    if (p.pixels.empty()) return 0.0;
    std::size_t zeros = 0;
    for (auto v : p.pixels) zeros += v == 0 ? 1 : 0;
    return static_cast<double>(zeros) / static_cast<double>(p.pixels.size());
}

void write_pgm(const std::string& path, const Pixmap& p) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    check(f != nullptr, ErrorKind::io, "cannot open for writing: " + path);
    std::fprintf(f, "P5\n%d %d\n255\n", p.width, p.height);
    const bool ok = std::fwrite(p.pixels.data(), 1, p.pixels.size(), f) == p.pixels.size();
    check(std::fclose(f) == 0 && ok, ErrorKind::io, "PGM write failed: " + path);
}

}  // namespace stcae

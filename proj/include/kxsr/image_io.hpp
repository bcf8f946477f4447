#pragma once

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <png.h>

#include "kxsr/image.hpp"

namespace kxsr {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline int pnm_token(std::istream& in) {
    // skips whitespace and '#' comments
    for (;;) {
        int ch = in.peek();
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(ch)) {
            in.get();
        } else {
            break;
        }
    }
    int v;
    if (!(in >> v)) throw FormatError("PNM: malformed header");
    return v;
}

inline Image load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[2];
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
        throw FormatError("PNM: expected binary P5/P6 magic in " + path);
    int channels = magic[1] == '5' ? 1 : 3;
    int w = pnm_token(in);
    int h = pnm_token(in);
    int maxval = pnm_token(in);
    if (maxval != 255) throw FormatError("PNM: only 8-bit (maxval 255) supported");
    in.get();  // single whitespace before raster
    Image img(h, w, channels);
    std::vector<unsigned char> row(static_cast<size_t>(w) * channels);
    for (int i = 0; i < h; ++i) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!in) throw FormatError("PNM: truncated raster in " + path);
        for (size_t k = 0; k < row.size(); ++k)
            img.data[static_cast<size_t>(i) * w * channels + k] = row[k] / 255.0;
    }
    return img;
}

inline unsigned char quantize(double v) {
    v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    // round half away from zero
    return static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
}

inline void save_pnm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << (img.c == 1 ? "P5" : "P6") << "\n" << img.w << " " << img.h << "\n255\n";
    std::vector<unsigned char> buf(img.size());
    for (size_t k = 0; k < img.size(); ++k) buf[k] = quantize(img.data[k]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path);
}

inline Image load_png(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw IoError("cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        std::fclose(fp);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw FormatError("PNG: decode failed for " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    png_uint_32 w, h;
    int depth, color;
    png_get_IHDR(png, info, &w, &h, &depth, &color, nullptr, nullptr, nullptr);
    if (depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw FormatError("PNG: 16-bit depth not supported");
    }
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw FormatError("PNG: unsupported channel count");
    }
    Image img(static_cast<int>(h), static_cast<int>(w), channels);
    std::vector<unsigned char> raster(static_cast<size_t>(w) * h * channels);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 i = 0; i < h; ++i)
        rows[i] = raster.data() + static_cast<size_t>(i) * w * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    for (size_t k = 0; k < raster.size(); ++k) img.data[k] = raster[k] / 255.0;
    return img;
}

inline void save_png(const Image& img, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        std::fclose(fp);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("PNG: encode failed for " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, img.w, img.h, 8,
                 img.c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> raster(img.size());
    for (size_t k = 0; k < img.size(); ++k) raster[k] = quantize(img.data[k]);
    std::vector<png_bytep> rows(img.h);
    for (int i = 0; i < img.h; ++i)
        rows[i] = raster.data() + static_cast<size_t>(i) * img.w * img.c;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

inline bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace detail

/// Loads an 8-bit PNG/PGM/PPM as a [0,1] floating image.
inline Image load_image(const std::string& path) {
    if (detail::has_suffix(path, ".png")) return detail::load_png(path);
    if (detail::has_suffix(path, ".pgm") || detail::has_suffix(path, ".ppm"))
        return detail::load_pnm(path);
    // sniff the magic
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    in.close();
    if (magic[0] == 'P') return detail::load_pnm(path);
    return detail::load_png(path);
}

/// Saves as PNG or binary PGM/PPM depending on file suffix (default PNG).
inline void save_image(const Image& img, const std::string& path) {
    if (detail::has_suffix(path, ".pgm") || detail::has_suffix(path, ".ppm"))
        detail::save_pnm(img, path);
    else
        detail::save_png(img, path);
}

/// Kernel text format: line 1 is p, then p lines of p floats.
inline Kernel read_kernel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    int p;
    if (!(in >> p) || p < 1 || p % 2 == 0)
        throw FormatError("kernel file: bad size header in " + path);
    Kernel k(p);
    for (int i = 0; i < p * p; ++i)
        if (!(in >> k.data[i]))
            throw FormatError("kernel file: expected " + std::to_string(p * p) +
                              " weights in " + path);
    double trailing;
    if (in >> trailing) throw FormatError("kernel file: trailing data in " + path);
    for (double v : k.data)
        if (v < -1e-6) throw FormatError("kernel file: negative weight in " + path);
    if (std::abs(k.sum() - 1.0) > 1e-6)
        throw FormatError("kernel file: weights do not sum to 1 in " + path);
    for (double& v : k.data)
        if (v < 0.0) v = 0.0;
    k.normalize();
    return k;
}

inline void write_kernel(const Kernel& k, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << k.p << "\n";
    out << std::setprecision(9);
    for (int i = 0; i < k.p; ++i) {
        for (int j = 0; j < k.p; ++j) out << (j ? " " : "") << k.at(i, j);
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace kxsr

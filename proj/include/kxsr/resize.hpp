#pragma once

#include "kxsr/image.hpp"

namespace kxsr {

/// Cubic convolution weight, Keys kernel with a = -0.5.
inline double cubic_weight(double t) {
    constexpr double a = -0.5;
    t = std::abs(t);
    if (t < 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
    if (t < 2.0) return a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a;
    return 0.0;
}

namespace detail {

inline int clamp_idx(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

}  // namespace detail

/// Evaluates the separable cubic interpolant of one channel at a fractional
/// source coordinate (y, x), with edge samples replicated.
inline double bicubic_sample(const Image& img, double y, double x, int ch = 0) {
    int iy = static_cast<int>(std::floor(y));
    int ix = static_cast<int>(std::floor(x));
    double acc = 0.0;
    for (int m = -1; m <= 2; ++m) {
        double wy = cubic_weight(y - (iy + m));
        if (wy == 0.0) continue;
        int si = detail::clamp_idx(iy + m, img.h);
        double row = 0.0;
        for (int n = -1; n <= 2; ++n) {
            double wx = cubic_weight(x - (ix + n));
            if (wx == 0.0) continue;
            row += wx * img.at(si, detail::clamp_idx(ix + n, img.w), ch);
        }
        acc += wy * row;
    }
    return acc;
}

/// Cubic-convolution resize (a = -0.5), origin-aligned coordinate mapping
/// (source 0 maps to output 0), edge replication. Origin alignment keeps an
/// x-fold upsample phase-consistent with a downsampler that retains the
/// upper-left sample of each block.
inline Image bicubic_resize(const Image& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1)
        throw std::invalid_argument("bicubic_resize: output dims must be >= 1");
    Image out(out_h, out_w, img.c);
    double sy = static_cast<double>(img.h) / out_h;
    double sx = static_cast<double>(img.w) / out_w;
    for (int i = 0; i < out_h; ++i) {
        double y = i * sy;
        for (int j = 0; j < out_w; ++j) {
            double x = j * sx;
            for (int ch = 0; ch < img.c; ++ch)
                out.at(i, j, ch) = bicubic_sample(img, y, x, ch);
        }
    }
    return out;
}

}  // namespace kxsr

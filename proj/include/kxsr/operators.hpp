#pragma once

#include "kxsr/degrade.hpp"
#include "kxsr/image.hpp"

namespace kxsr {

/// Patch matrix: row r holds the flattened p x p neighborhood of output
/// pixel r, ordered so that row . vec(kernel) reproduces convolve2d.
struct UnfoldedMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    std::vector<double> mul(const std::vector<double>& v) const {
        if (static_cast<int>(v.size()) != cols)
            throw std::invalid_argument("UnfoldedMatrix::mul: size mismatch");
        std::vector<double> out(rows, 0.0);
        for (int r = 0; r < rows; ++r) {
            double acc = 0.0;
            const double* row = data.data() + static_cast<size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) acc += row[c] * v[c];
            out[r] = acc;
        }
        return out;
    }

    std::vector<double> mul_transpose(const std::vector<double>& v) const {
        if (static_cast<int>(v.size()) != rows)
            throw std::invalid_argument("UnfoldedMatrix::mul_transpose: size mismatch");
        std::vector<double> out(cols, 0.0);
        for (int r = 0; r < rows; ++r) {
            const double* row = data.data() + static_cast<size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) out[c] += row[c] * v[r];
        }
        return out;
    }
};

namespace detail {

// Materialization guard: larger instances must use the matrix-free paths.
inline void check_unfold_size(const Image& x, int p) {
    if (p * p > 441 || x.h > 512 || x.w > 512)
        throw std::invalid_argument("unfold: instance too large to materialize");
}

}  // namespace detail

/// Unfolds a single-channel image so convolution becomes matrix-vector
/// product: row (i*W + j), column (u*p + v) holds x(i + c - u, j + c - v)
/// under the boundary extension.
inline UnfoldedMatrix unfold(const Image& x, int p, Boundary boundary) {
    if (x.c != 1) throw std::invalid_argument("unfold: single-channel input required");
    if (p % 2 == 0) throw std::invalid_argument("unfold: p must be odd");
    detail::check_unfold_size(x, p);
    const int ctr = (p - 1) / 2;
    UnfoldedMatrix m;
    m.rows = x.h * x.w;
    m.cols = p * p;
    m.data.assign(static_cast<size_t>(m.rows) * m.cols, 0.0);
    for (int i = 0; i < x.h; ++i) {
        for (int j = 0; j < x.w; ++j) {
            int r = i * x.w + j;
            for (int u = 0; u < p; ++u) {
                int si = map_index(i + ctr - u, x.h, boundary);
                if (si < 0) continue;
                for (int v = 0; v < p; ++v) {
                    int sj = map_index(j + ctr - v, x.w, boundary);
                    if (sj < 0) continue;
                    m.at(r, u * p + v) = x.at(si, sj);
                }
            }
        }
    }
    return m;
}

/// Row-selected unfolding: keeps only rows whose pixels survive the s-fold
/// downsampler, giving the (h*w) x p^2 matrix of the subsampled fidelity.
inline UnfoldedMatrix unfold_downsampled(const Image& x, int p, int s, Boundary boundary) {
    if (x.c != 1)
        throw std::invalid_argument("unfold_downsampled: single-channel input required");
    if (p % 2 == 0) throw std::invalid_argument("unfold_downsampled: p must be odd");
    if (x.h % s != 0 || x.w % s != 0)
        throw std::invalid_argument("unfold_downsampled: dims not divisible by scale");
    detail::check_unfold_size(x, p);
    const int ctr = (p - 1) / 2;
    const int oh = x.h / s, ow = x.w / s;
    UnfoldedMatrix m;
    m.rows = oh * ow;
    m.cols = p * p;
    m.data.assign(static_cast<size_t>(m.rows) * m.cols, 0.0);
    for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
            int r = i * ow + j;
            for (int u = 0; u < p; ++u) {
                int si = map_index(i * s + ctr - u, x.h, boundary);
                if (si < 0) continue;
                for (int v = 0; v < p; ++v) {
                    int sj = map_index(j * s + ctr - v, x.w, boundary);
                    if (sj < 0) continue;
                    m.at(r, u * p + v) = x.at(si, sj);
                }
            }
        }
    }
    return m;
}

/// Transposed strided convolution: the exact adjoint of
/// x -> downsample_s(convolve2d(x, k), s) under the chosen boundary.
/// Scatters each LR residual back through the forward access pattern.
inline Image conv_transpose_s(const Kernel& k, const Image& e, int s, int out_h,
                              int out_w, Boundary boundary) {
    if (e.h * s != out_h || e.w * s != out_w)
        throw std::invalid_argument("conv_transpose_s: dimension mismatch");
    const int p = k.p, ctr = (p - 1) / 2;
    Image out(out_h, out_w, e.c);
    for (int i = 0; i < e.h; ++i) {
        for (int u = 0; u < p; ++u) {
            int si = map_index(i * s + ctr - u, out_h, boundary);
            if (si < 0) continue;
            for (int j = 0; j < e.w; ++j) {
                for (int v = 0; v < p; ++v) {
                    int sj = map_index(j * s + ctr - v, out_w, boundary);
                    if (sj < 0) continue;
                    double kv = k.at(u, v);
                    for (int ch = 0; ch < e.c; ++ch)
                        out.at(si, sj, ch) += kv * e.at(i, j, ch);
                }
            }
        }
    }
    return out;
}

/// Coverage divisor K (x)^T_s 1: how much each HR pixel is touched by the
/// transposed convolution.
inline Image coverage_map(const Kernel& k, int s, int out_h, int out_w, Boundary boundary) {
    Image ones(out_h / s, out_w / s, 1, 1.0);
    return conv_transpose_s(k, ones, s, out_h, out_w, boundary);
}

/// Divides the HR gradient elementwise by the coverage map to correct the
/// uneven-overlap pattern of strided transposed convolution; the divisor is
/// floored at eps so uncovered pixels stay finite.
inline Image gradient_adjuster(const Image& g, const Kernel& k, int s, int out_h,
                               int out_w, Boundary boundary, double eps = 1e-8) {
    if (g.h != out_h || g.w != out_w)
        throw std::invalid_argument("gradient_adjuster: dimension mismatch");
    Image cov = coverage_map(k, s, out_h, out_w, boundary);
    Image out = g;
    for (int i = 0; i < out_h; ++i)
        for (int j = 0; j < out_w; ++j) {
            double d = std::max(cov.at(i, j), eps);
            for (int ch = 0; ch < g.c; ++ch) out.at(i, j, ch) /= d;
        }
    return out;
}

}  // namespace kxsr

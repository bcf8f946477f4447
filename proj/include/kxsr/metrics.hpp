#pragma once

#include <limits>
#include <sstream>

#include "kxsr/image.hpp"

namespace kxsr {

struct MetricReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
    double kernel_l1 = 0.0;
    double stage_loss = 0.0;
    int border = 0;
};

namespace detail {

inline Image crop_luma(const Image& img, int border) {
    Image y = img.c == 3 ? rgb_to_y(img) : img;
    if (border == 0) return y;
    if (y.h <= 2 * border || y.w <= 2 * border)
        throw std::invalid_argument("metrics: border crop larger than image");
    Image out(y.h - 2 * border, y.w - 2 * border, 1);
    for (int i = 0; i < out.h; ++i)
        for (int j = 0; j < out.w; ++j) out.at(i, j) = y.at(i + border, j + border);
    return out;
}

}  // namespace detail

/// PSNR on the luma channel, [0,1] dynamic range, border pixels shaved on
/// all sides. Identical images give the +inf sentinel.
inline double psnr(const Image& a, const Image& b, int border = 0) {
    if (a.h != b.h || a.w != b.w || a.c != b.c)
        throw std::invalid_argument("psnr: dimension mismatch");
    Image ya = detail::crop_luma(a, border);
    Image yb = detail::crop_luma(b, border);
    double mse = 0.0;
    for (size_t i = 0; i < ya.size(); ++i) {
        double d = ya.data[i] - yb.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(ya.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

/// Single-scale SSIM on the luma channel: 11x11 Gaussian window sigma 1.5,
/// K1 = 0.01, K2 = 0.03, dynamic range 1, averaged over positions where the
/// window fits entirely inside the (cropped) image.
inline double ssim(const Image& a, const Image& b, int border = 0) {
    if (a.h != b.h || a.w != b.w || a.c != b.c)
        throw std::invalid_argument("ssim: dimension mismatch");
    Image ya = detail::crop_luma(a, border);
    Image yb = detail::crop_luma(b, border);
    constexpr int win = 11;
    constexpr double sigma = 1.5, k1 = 0.01, k2 = 0.03;
    if (ya.h < win || ya.w < win)
        throw std::invalid_argument("ssim: image smaller than window");
    double wgt[win][win];
    double wsum = 0.0;
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
            double di = i - (win - 1) / 2.0, dj = j - (win - 1) / 2.0;
            wgt[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
            wsum += wgt[i][j];
        }
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) wgt[i][j] /= wsum;

    const double c1 = k1 * k1, c2 = k2 * k2;
    double acc = 0.0;
    long count = 0;
    for (int i = 0; i + win <= ya.h; ++i) {
        for (int j = 0; j + win <= ya.w; ++j) {
            double mu1 = 0, mu2 = 0, s11 = 0, s22 = 0, s12 = 0;
            for (int u = 0; u < win; ++u)
                for (int v = 0; v < win; ++v) {
                    double pa = ya.at(i + u, j + v), pb = yb.at(i + u, j + v);
                    double w = wgt[u][v];
                    mu1 += w * pa;
                    mu2 += w * pb;
                    s11 += w * pa * pa;
                    s22 += w * pb * pb;
                    s12 += w * pa * pb;
                }
            double var1 = s11 - mu1 * mu1;
            double var2 = s22 - mu2 * mu2;
            double cov = s12 - mu1 * mu2;
            acc += ((2 * mu1 * mu2 + c1) * (2 * cov + c2)) /
                   ((mu1 * mu1 + mu2 * mu2 + c1) * (var1 + var2 + c2));
            ++count;
        }
    }
    return acc / count;
}

inline double kernel_l1(const Kernel& a, const Kernel& b) {
    if (a.p != b.p) throw std::invalid_argument("kernel_l1: size mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
    return s;
}

inline double image_l1(const Image& a, const Image& b) {
    if (a.h != b.h || a.w != b.w || a.c != b.c)
        throw std::invalid_argument("image_l1: dimension mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
    return s;
}

/// Default stage weights: 0.1 at middle stages, 1.0 at the last.
inline std::vector<double> default_stage_weights(int stages) {
    std::vector<double> w(stages, 0.1);
    if (stages > 0) w.back() = 1.0;
    return w;
}

/// Stage-weighted L1 diagnostic: sum_t alpha_t |K - K_t|_1 + beta_t |X - X_t|_1.
inline double stage_loss(const std::vector<std::pair<Kernel, Image>>& trace,
                         const Kernel& gt_k, const Image& gt_x,
                         const std::vector<double>& alpha,
                         const std::vector<double>& beta) {
    if (trace.size() != alpha.size() || trace.size() != beta.size())
        throw std::invalid_argument("stage_loss: weight length mismatch");
    double loss = 0.0;
    for (size_t t = 0; t < trace.size(); ++t)
        loss += alpha[t] * kernel_l1(trace[t].first, gt_k) +
                beta[t] * image_l1(trace[t].second, gt_x);
    return loss;
}

}  // namespace kxsr

#pragma once

#include <optional>
#include <random>
#include <variant>

#include "kxsr/image.hpp"

namespace kxsr {

/// Isotropic Gaussian kernel parameters.
struct Iso {
    double sigma;
};

/// Anisotropic Gaussian: axis widths lambda1/lambda2 rotated by theta.
struct Aniso {
    double lambda1;
    double lambda2;
    double theta;
};

using KernelParams = std::variant<Iso, Aniso>;

struct DegradationSpec {
    int scale = 2;
    int kernel_size = 21;
    KernelParams params = Iso{1.0};
    double noise_level = 0.0;  // sigma on the 0-255 scale
    uint64_t seed = 0;
};

/// Normalized Gaussian blur kernel on a p x p grid centered at (p-1)/2.
inline Kernel gaussian_kernel(int p, const KernelParams& params) {
    double ixx, ixy, iyy;  // inverse covariance entries
    if (std::holds_alternative<Iso>(params)) {
        double s = std::get<Iso>(params).sigma;
        if (!(s > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma must be > 0");
        ixx = iyy = 1.0 / (s * s);
        ixy = 0.0;
    } else {
        const Aniso& a = std::get<Aniso>(params);
        if (!(a.lambda1 > 0.0) || !(a.lambda2 > 0.0))
            throw std::invalid_argument("gaussian_kernel: widths must be > 0");
        // Sigma = R diag(l1^2, l2^2) R^T; invert in the rotated frame
        double c = std::cos(a.theta), s = std::sin(a.theta);
        double i1 = 1.0 / (a.lambda1 * a.lambda1), i2 = 1.0 / (a.lambda2 * a.lambda2);
        ixx = c * c * i1 + s * s * i2;
        iyy = s * s * i1 + c * c * i2;
        ixy = c * s * (i1 - i2);
    }
    Kernel k(p);
    double ctr = (p - 1) / 2.0;
    for (int i = 0; i < p; ++i) {
        double di = i - ctr;
        for (int j = 0; j < p; ++j) {
            double dj = j - ctr;
            double q = ixx * di * di + 2.0 * ixy * di * dj + iyy * dj * dj;
            k.at(i, j) = std::exp(-0.5 * q);
        }
    }
    k.normalize();
    return k;
}

/// True 2-D convolution (kernel flipped), same-size output.
inline Image convolve2d(const Image& x, const Kernel& k, Boundary boundary) {
    if (k.p > x.h || k.p > x.w)
        throw std::invalid_argument("convolve2d: kernel larger than image");
    const int p = k.p, ctr = (p - 1) / 2;
    Image out(x.h, x.w, x.c);
    for (int i = 0; i < x.h; ++i) {
        for (int j = 0; j < x.w; ++j) {
            for (int u = 0; u < p; ++u) {
                int si = map_index(i + ctr - u, x.h, boundary);
                if (si < 0) continue;
                for (int v = 0; v < p; ++v) {
                    int sj = map_index(j + ctr - v, x.w, boundary);
                    if (sj < 0) continue;
                    double kv = k.at(u, v);
                    for (int ch = 0; ch < x.c; ++ch)
                        out.at(i, j, ch) += kv * x.at(si, sj, ch);
                }
            }
        }
    }
    return out;
}

/// s-fold downsampler: keeps the upper-left pixel of each s x s block.
inline Image downsample_s(const Image& x, int s) {
    if (s < 1) throw std::invalid_argument("downsample_s: scale must be >= 1");
    if (x.h % s != 0 || x.w % s != 0)
        throw std::invalid_argument("downsample_s: dims not divisible by scale");
    Image out(x.h / s, x.w / s, x.c);
    for (int i = 0; i < out.h; ++i)
        for (int j = 0; j < out.w; ++j)
            for (int ch = 0; ch < x.c; ++ch)
                out.at(i, j, ch) = x.at(i * s, j * s, ch);
    return out;
}

/// Seeded i.i.d. Gaussian noise with standard deviation sigma/255.
/// No clamping: the solver sees the unclipped model.
inline Image add_awgn(const Image& x, double sigma_255, uint64_t seed) {
    if (sigma_255 < 0.0) throw std::invalid_argument("add_awgn: negative noise level");
    Image out = x;
    if (sigma_255 == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, sigma_255 / 255.0);
    for (double& v : out.data) v += dist(rng);
    return out;
}

/// Full degradation pipeline: blur, downsample, add noise.
inline std::pair<Image, Kernel> degrade(const Image& x, const DegradationSpec& spec,
                                        Boundary boundary = Boundary::replicate) {
    Kernel k = gaussian_kernel(spec.kernel_size, spec.params);
    Image y = add_awgn(downsample_s(convolve2d(x, k, boundary), spec.scale),
                       spec.noise_level, spec.seed);
    return {std::move(y), std::move(k)};
}

/// The 8-kernel isotropic test set: sigma evenly spaced over the per-scale
/// range, endpoints included, p = 21.
inline std::vector<Kernel> gaussian8(int scale) {
    double lo, hi;
    switch (scale) {
        case 2: lo = 0.8; hi = 1.6; break;
        case 3: lo = 1.35; hi = 2.40; break;
        case 4: lo = 1.8; hi = 3.2; break;
        default: throw std::invalid_argument("gaussian8: scale must be 2, 3, or 4");
    }
    std::vector<Kernel> out;
    out.reserve(8);
    for (int i = 0; i < 8; ++i)
        out.push_back(gaussian_kernel(21, Iso{lo + (hi - lo) * i / 7.0}));
    return out;
}

/// Sigma values backing gaussian8, exposed for reporting.
inline std::vector<double> gaussian8_sigmas(int scale) {
    double lo, hi;
    switch (scale) {
        case 2: lo = 0.8; hi = 1.6; break;
        case 3: lo = 1.35; hi = 2.40; break;
        case 4: lo = 1.8; hi = 3.2; break;
        default: throw std::invalid_argument("gaussian8: scale must be 2, 3, or 4");
    }
    std::vector<double> s(8);
    for (int i = 0; i < 8; ++i) s[i] = lo + (hi - lo) * i / 7.0;
    return s;
}

/// Training-range anisotropic sampler: lambda1, lambda2 ~ U(0.6, 5.0),
/// theta ~ U[-pi, pi].
inline Aniso sample_aniso(uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> width(0.6, 5.0);
    std::uniform_real_distribution<double> angle(-M_PI, M_PI);
    Aniso a;
    a.lambda1 = width(rng);
    a.lambda2 = width(rng);
    a.theta = angle(rng);
    return a;
}

}  // namespace kxsr

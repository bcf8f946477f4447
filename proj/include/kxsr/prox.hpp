#pragma once

#include <algorithm>
#include <functional>
#include <numeric>

#include "kxsr/image.hpp"

namespace kxsr {

/// Euclidean projection onto the probability simplex, sort-and-threshold.
inline std::vector<double> prox_simplex(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument("prox_simplex: non-finite input");
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cumsum = 0.0, theta = 0.0;
    int rho = 0;
    for (size_t j = 0; j < u.size(); ++j) {
        cumsum += u[j];
        double t = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) {
            rho = static_cast<int>(j + 1);
            theta = t;
        }
    }
    (void)rho;
    std::vector<double> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
    return out;
}

inline Kernel prox_simplex(const Kernel& k) {
    Kernel out(k.p);
    out.data = prox_simplex(k.data);
    return out;
}

/// Image-domain proximal operator; step is the gradient step size the prox
/// is composed with (prox_{tau * step}).
struct ImageProx {
    virtual ~ImageProx() = default;
    virtual Image apply(const Image& v, double step) const = 0;
    virtual std::string name() const = 0;
};

struct IdentityProx final : ImageProx {
    Image apply(const Image& v, double) const override { return v; }
    std::string name() const override { return "identity"; }
};

/// prox of (tau/2)|u|^2: elementwise shrink toward zero by 1/(1 + tau*step).
struct TikhonovProx final : ImageProx {
    double tau;
    explicit TikhonovProx(double t) : tau(t) {
        if (t < 0.0) throw std::invalid_argument("tikhonov: tau must be >= 0");
    }
    Image apply(const Image& v, double step) const override {
        Image out = v;
        double f = 1.0 / (1.0 + tau * step);
        for (double& x : out.data) x *= f;
        return out;
    }
    std::string name() const override { return "tikhonov"; }
};

/// prox of tau * TV(u) via Chambolle's dual projection algorithm, run
/// per channel for a fixed number of inner iterations.
struct TvProx final : ImageProx {
    double tau;
    int inner_iters;
    TvProx(double t, int iters) : tau(t), inner_iters(iters) {
        if (t < 0.0 || iters < 1) throw std::invalid_argument("tv: bad parameters");
    }

    Image apply(const Image& v, double step) const override {
        double lambda = tau * step;
        if (lambda == 0.0) return v;
        Image out = v;
        for (int ch = 0; ch < v.c; ++ch) denoise_channel(out, ch, lambda);
        return out;
    }
    std::string name() const override { return "tv"; }

private:
    // Chambolle 2004: p <- (p + dt grad(div p - v/lambda)) / (1 + dt |grad ...|),
    // u = v - lambda div p.  dt = 1/4 guarantees convergence.
    void denoise_channel(Image& img, int ch, double lambda) const {
        const int h = img.h, w = img.w;
        std::vector<double> px(static_cast<size_t>(h) * w, 0.0);
        std::vector<double> py(static_cast<size_t>(h) * w, 0.0);
        std::vector<double> div(static_cast<size_t>(h) * w, 0.0);
        auto idx = [w](int i, int j) { return static_cast<size_t>(i) * w + j; };
        const double dt = 0.25;
        for (int it = 0; it < inner_iters; ++it) {
            // div p with adjoint (backward-difference) boundary handling
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    double d = 0.0;
                    d += (i < h - 1 ? px[idx(i, j)] : 0.0) - (i > 0 ? px[idx(i - 1, j)] : 0.0);
                    d += (j < w - 1 ? py[idx(i, j)] : 0.0) - (j > 0 ? py[idx(i, j - 1)] : 0.0);
                    div[idx(i, j)] = d;
                }
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    double center = div[idx(i, j)] - img.at(i, j, ch) / lambda;
                    double gx = i < h - 1
                                    ? (div[idx(i + 1, j)] - img.at(i + 1, j, ch) / lambda) - center
                                    : 0.0;
                    double gy = j < w - 1
                                    ? (div[idx(i, j + 1)] - img.at(i, j + 1, ch) / lambda) - center
                                    : 0.0;
                    double mag = std::sqrt(gx * gx + gy * gy);
                    px[idx(i, j)] = (px[idx(i, j)] + dt * gx) / (1.0 + dt * mag);
                    py[idx(i, j)] = (py[idx(i, j)] + dt * gy) / (1.0 + dt * mag);
                }
        }
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                double d = 0.0;
                d += (i < h - 1 ? px[idx(i, j)] : 0.0) - (i > 0 ? px[idx(i - 1, j)] : 0.0);
                d += (j < w - 1 ? py[idx(i, j)] : 0.0) - (j > 0 ? py[idx(i, j - 1)] : 0.0);
                img.at(i, j, ch) -= lambda * d;
            }
    }
};

}  // namespace kxsr

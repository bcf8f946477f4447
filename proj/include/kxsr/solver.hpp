#pragma once

#include <memory>
#include <optional>

#include "kxsr/degrade.hpp"
#include "kxsr/metrics.hpp"
#include "kxsr/operators.hpp"
#include "kxsr/prox.hpp"
#include "kxsr/resize.hpp"

namespace kxsr {

enum class ImageProxKind { identity, tikhonov, tv };

inline ImageProxKind image_prox_from_string(const std::string& s) {
    if (s == "identity") return ImageProxKind::identity;
    if (s == "tikhonov") return ImageProxKind::tikhonov;
    if (s == "tv") return ImageProxKind::tv;
    throw std::invalid_argument("unknown image prox: " + s);
}

struct SolverConfig {
    int stages = 19;
    int scale = 2;
    int kernel_size = 11;
    std::optional<double> delta1;  // kernel step; backtracking when unset
    std::optional<double> delta2;  // image step; backtracking when unset
    ImageProxKind prox_x = ImageProxKind::identity;
    double tau = 0.0;
    int tv_iters = 10;
    Boundary boundary = Boundary::replicate;
    uint64_t seed = 0;
    bool update_kernel = true;  // disabled when solving with a known kernel

    std::shared_ptr<ImageProx> make_image_prox() const {
        switch (prox_x) {
            case ImageProxKind::identity: return std::make_shared<IdentityProx>();
            case ImageProxKind::tikhonov: return std::make_shared<TikhonovProx>(tau);
            case ImageProxKind::tv: return std::make_shared<TvProx>(tau, tv_iters);
        }
        throw std::logic_error("bad prox kind");
    }
};

struct StageRecord {
    int stage = 0;
    double fidelity = 0.0;
    double kernel_change = 0.0;
    std::optional<double> psnr_db;
    std::optional<double> kernel_l1_err;
};

struct SolverState {
    Image x;
    Kernel k;
    int stage = 0;
    double fidelity = 0.0;
    double last_delta1 = 1.0;  // backtracking warm starts
    double last_delta2 = 1.0;
    std::vector<StageRecord> trace;
};

struct DivergenceError : std::runtime_error {
    int stage;
    SolverState last_state;
    DivergenceError(int s, SolverState st)
        : std::runtime_error("solver diverged at stage " + std::to_string(s)),
          stage(s),
          last_state(std::move(st)) {}
};

/// LR-domain residual y - (x (*) k) downarrow_s.
inline Image residual_lr(const Image& y, const Image& x, const Kernel& k, int s,
                         Boundary boundary) {
    Image pred = downsample_s(convolve2d(x, k, boundary), s);
    if (pred.h != y.h || pred.w != y.w || pred.c != y.c)
        throw std::invalid_argument("residual_lr: dimension mismatch");
    Image r = y;
    for (size_t i = 0; i < r.size(); ++i) r.data[i] -= pred.data[i];
    return r;
}

/// Half squared norm of the LR residual.
inline double fidelity(const Image& y, const Image& x, const Kernel& k, int s,
                       Boundary boundary) {
    Image r = residual_lr(y, x, k, s, boundary);
    double acc = 0.0;
    for (double v : r.data) acc += v * v;
    return 0.5 * acc;
}

/// Gradient of the fidelity term in the kernel, matrix-free: the adjoint of
/// the per-patch weighted sum (D_s U_f(x))^T applied to the LR residual,
/// summed over channels. Descent sign: uses (Ak - y).
inline Kernel grad_k(const Image& y, const Image& x, const Kernel& k, int s,
                     Boundary boundary) {
    Image r = residual_lr(y, x, k, s, boundary);  // y - Ak
    const int p = k.p, ctr = (p - 1) / 2;
    Kernel g(p);
    for (int u = 0; u < p; ++u)
        for (int v = 0; v < p; ++v) {
            double acc = 0.0;
            for (int i = 0; i < r.h; ++i) {
                int si = map_index(i * s + ctr - u, x.h, boundary);
                if (si < 0) continue;
                for (int j = 0; j < r.w; ++j) {
                    int sj = map_index(j * s + ctr - v, x.w, boundary);
                    if (sj < 0) continue;
                    for (int ch = 0; ch < x.c; ++ch)
                        acc += x.at(si, sj, ch) * (-r.at(i, j, ch));
                }
            }
            g.at(u, v) = acc;
        }
    return g;
}

/// Same gradient through the materialized unfolded matrix; single-channel
/// only, kept as the cross-check path for the matrix-free computation.
inline Kernel grad_k_materialized(const Image& y, const Image& x, const Kernel& k, int s,
                                  Boundary boundary) {
    UnfoldedMatrix m = unfold_downsampled(x, k.p, s, boundary);
    std::vector<double> pred = m.mul(k.data);
    std::vector<double> r(pred.size());
    for (size_t i = 0; i < r.size(); ++i) r[i] = pred[i] - y.data[i];
    Kernel g(k.p);
    g.data = m.mul_transpose(r);
    return g;
}

/// Gradient of the fidelity term in the image: K (x)^T_s (Ax - y).
inline Image grad_x(const Image& y, const Image& x, const Kernel& k, int s,
                    Boundary boundary) {
    Image r = residual_lr(y, x, k, s, boundary);  // y - Ax
    for (double& v : r.data) v = -v;
    return conv_transpose_s(k, r, s, x.h, x.w, boundary);
}

/// Armijo backtracking: largest delta = delta_init * 2^-m, m <= 40, with
/// f(v - delta g) <= f(v) - 1e-4 delta |g|^2.
inline double backtracking_step(const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& v, const std::vector<double>& g,
                                double delta_init) {
    double gnorm2 = 0.0;
    for (double x : g) {
        if (!std::isfinite(x)) throw std::invalid_argument("backtracking: non-finite gradient");
        gnorm2 += x * x;
    }
    double fv = f(v);
    double delta = delta_init;
    std::vector<double> trial(v.size());
    for (int m = 0; m <= 40; ++m) {
        for (size_t i = 0; i < v.size(); ++i) trial[i] = v[i] - delta * g[i];
        if (f(trial) <= fv - 1e-4 * delta * gnorm2) return delta;
        delta *= 0.5;
    }
    throw DivergenceError(0, SolverState{});
}

/// Initialization: bicubic upsampling of y, isotropic Gaussian kernel with
/// sigma = p/6.
inline SolverState solver_init(const Image& y, const SolverConfig& cfg) {
    SolverState st;
    st.x = bicubic_resize(y, y.h * cfg.scale, y.w * cfg.scale);
    st.k = gaussian_kernel(cfg.kernel_size, Iso{cfg.kernel_size / 6.0});
    st.stage = 0;
    st.fidelity = fidelity(y, st.x, st.k, cfg.scale, cfg.boundary);
    return st;
}

/// Projected-gradient kernel update: simplex projection of K - delta1 grad.
/// With backtracking, the projected Armijo rule accepts a step whenever the
/// projected point gives sufficient decrease relative to its displacement,
/// so a constrained stationary point stays put instead of failing.
inline Kernel k_step(SolverState& st, const Image& y, const SolverConfig& cfg) {
    Kernel g = grad_k(y, st.x, st.k, cfg.scale, cfg.boundary);
    auto take = [&](double delta) {
        Kernel cand(st.k.p);
        for (size_t i = 0; i < cand.data.size(); ++i)
            cand.data[i] = st.k.data[i] - delta * g.data[i];
        return prox_simplex(cand);
    };
    if (cfg.delta1) return take(*cfg.delta1);

    double fv = fidelity(y, st.x, st.k, cfg.scale, cfg.boundary);
    double delta = st.last_delta1 * 2.0;
    for (int m = 0; m <= 40; ++m) {
        Kernel cand = take(delta);
        double move2 = 0.0;
        for (size_t i = 0; i < cand.data.size(); ++i) {
            double d = cand.data[i] - st.k.data[i];
            move2 += d * d;
        }
        // projection roundoff can leave a ~1e-16 displacement at a
        // constrained stationary point; treat that as converged
        if (move2 <= 1e-24) return st.k;
        if (fidelity(y, st.x, cand, cfg.scale, cfg.boundary) <= fv - 1e-4 / delta * move2) {
            st.last_delta1 = delta;
            return cand;
        }
        delta *= 0.5;
    }
    throw DivergenceError(st.stage, st);
}

/// Adjusted-gradient image update: X - delta2 * adjuster(grad_x), then the
/// configured image prox.
inline Image x_step(SolverState& st, const Image& y, const SolverConfig& cfg,
                    const ImageProx& prox) {
    Image g = grad_x(y, st.x, st.k, cfg.scale, cfg.boundary);
    Image d = gradient_adjuster(g, st.k, cfg.scale, st.x.h, st.x.w, cfg.boundary);
    auto take = [&](double delta) {
        Image cand = st.x;
        for (size_t i = 0; i < cand.size(); ++i) cand.data[i] -= delta * d.data[i];
        return prox.apply(cand, delta);
    };
    if (cfg.delta2) return take(*cfg.delta2);

    // Armijo along the adjusted direction; <g, d> >= 0 since the adjuster
    // divides by a positive coverage map.
    double gd = 0.0;
    for (size_t i = 0; i < g.size(); ++i) gd += g.data[i] * d.data[i];
    double fv = fidelity(y, st.x, st.k, cfg.scale, cfg.boundary);
    double delta = st.last_delta2 * 2.0;
    for (int m = 0; m <= 40; ++m) {
        Image cand = st.x;
        for (size_t i = 0; i < cand.size(); ++i) cand.data[i] -= delta * d.data[i];
        if (fidelity(y, cand, st.k, cfg.scale, cfg.boundary) <= fv - 1e-4 * delta * gd) {
            st.last_delta2 = delta;
            return prox.apply(cand, delta);
        }
        delta *= 0.5;
    }
    throw DivergenceError(st.stage, st);
}

struct GroundTruth {
    Image x;
    Kernel k;
};

/// Runs the alternating K-step / X-step loop for cfg.stages stages. The
/// trace has stages+1 records (stage 0 is initialization). When ground
/// truth is supplied, per-stage PSNR and kernel L1 error are recorded.
inline SolverState run_solver(const Image& y, const SolverConfig& cfg,
                              const std::optional<GroundTruth>& gt = std::nullopt) {
    SolverState st = solver_init(y, cfg);
    auto prox = cfg.make_image_prox();

    auto record = [&](int t, double kchange) {
        StageRecord rec;
        rec.stage = t;
        rec.fidelity = st.fidelity;
        rec.kernel_change = kchange;
        if (gt) {
            rec.psnr_db = psnr(st.x, gt->x, cfg.scale);
            rec.kernel_l1_err = kernel_l1(st.k, gt->k);
        }
        st.trace.push_back(rec);
    };
    record(0, 0.0);

    for (int t = 1; t <= cfg.stages; ++t) {
        st.stage = t;
        double kchange = 0.0;
        if (cfg.update_kernel) {
            Kernel knew = k_step(st, y, cfg);
            for (size_t i = 0; i < knew.data.size(); ++i) {
                double d = knew.data[i] - st.k.data[i];
                kchange += d * d;
            }
            kchange = std::sqrt(kchange);
            st.k = std::move(knew);
        }
        st.x = x_step(st, y, cfg, *prox);
        if (!st.x.finite() || !std::isfinite(st.k.sum())) {
            st.stage = t - 1;
            throw DivergenceError(t, st);
        }
        st.fidelity = fidelity(y, st.x, st.k, cfg.scale, cfg.boundary);
        record(t, kchange);
    }
    return st;
}

}  // namespace kxsr

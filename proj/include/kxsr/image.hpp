#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kxsr {

/// Floating-point image, row-major, samples nominally in [0,1].
/// Channels are interleaved: data[(i*W + j)*c + ch].
struct Image {
    int h = 0;
    int w = 0;
    int c = 1;
    std::vector<double> data;

    Image() = default;
    Image(int height, int width, int channels = 1, double fill = 0.0)
        : h(height), w(width), c(channels),
          data(static_cast<size_t>(height) * width * channels, fill) {
        if (height < 1 || width < 1 || (channels != 1 && channels != 3))
            throw std::invalid_argument("Image: bad dimensions");
    }

    double& at(int i, int j, int ch = 0) {
        return data[(static_cast<size_t>(i) * w + j) * c + ch];
    }
    double at(int i, int j, int ch = 0) const {
        return data[(static_cast<size_t>(i) * w + j) * c + ch];
    }

    size_t size() const { return data.size(); }

    bool finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// p x p blur kernel; p odd, weights non-negative and summing to one.
struct Kernel {
    int p = 1;
    std::vector<double> data;

    Kernel() : data(1, 1.0) {}
    explicit Kernel(int size, double fill = 0.0)
        : p(size), data(static_cast<size_t>(size) * size, fill) {
        if (size < 1 || size % 2 == 0)
            throw std::invalid_argument("Kernel: size must be odd and >= 1");
    }

    double& at(int i, int j) { return data[static_cast<size_t>(i) * p + j]; }
    double at(int i, int j) const { return data[static_cast<size_t>(i) * p + j]; }

    double sum() const {
        double s = 0.0;
        for (double v : data) s += v;
        return s;
    }

    /// Checks the simplex invariants (non-negativity, unit sum within tol).
    bool valid(double tol = 1e-9) const {
        for (double v : data)
            if (!(v >= 0.0)) return false;
        return std::abs(sum() - 1.0) <= tol;
    }

    void normalize() {
        double s = sum();
        if (s <= 0.0) throw std::runtime_error("Kernel: non-positive sum");
        for (double& v : data) v /= s;
    }
};

enum class Boundary { replicate, circular, zero };

inline Boundary boundary_from_string(const std::string& s) {
    if (s == "replicate") return Boundary::replicate;
    if (s == "circular") return Boundary::circular;
    if (s == "zero") return Boundary::zero;
    throw std::invalid_argument("unknown boundary: " + s);
}

inline std::string to_string(Boundary b) {
    switch (b) {
        case Boundary::replicate: return "replicate";
        case Boundary::circular: return "circular";
        case Boundary::zero: return "zero";
    }
    return "?";
}

/// Maps an out-of-range index into [0,n) under the given extension.
/// Returns -1 for zero-extension misses.
inline int map_index(int i, int n, Boundary b) {
    if (i >= 0 && i < n) return i;
    switch (b) {
        case Boundary::replicate: return i < 0 ? 0 : n - 1;
        case Boundary::circular: {
            int m = i % n;
            return m < 0 ? m + n : m;
        }
        case Boundary::zero: return -1;
    }
    return -1;
}

/// Full-range BT.601 luma.
inline Image rgb_to_y(const Image& img) {
    if (img.c != 3) throw std::invalid_argument("rgb_to_y: 3-channel input required");
    Image out(img.h, img.w, 1);
    for (int i = 0; i < img.h; ++i)
        for (int j = 0; j < img.w; ++j)
            out.at(i, j) = 0.299 * img.at(i, j, 0) + 0.587 * img.at(i, j, 1) +
                           0.114 * img.at(i, j, 2);
    return out;
}

}  // namespace kxsr

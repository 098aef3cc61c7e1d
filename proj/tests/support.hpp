#pragma once

// Helpers shared by the C++ test binaries.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "tomopipe/core.hpp"

namespace tomopipe::testing {

/// Relative L2 distance ||a - ref|| / ||ref|| over pixels with |u| <= radius.
inline double masked_rel_l2(const ImageGrid& a, const ImageGrid& ref, double radius = 0.8) {
    double num = 0.0, den = 0.0;
    for (std::size_t r = 0; r < a.n(); ++r) {
        for (std::size_t c = 0; c < a.n(); ++c) {
            const Point2 p = pixel_center(a, r, c);
            if (std::hypot(p.u1, p.u2) > radius) continue;
            const double d = a(r, c) - ref(r, c);
            num += d * d;
            den += ref(r, c) * ref(r, c);
        }
    }
    return std::sqrt(num / den);
}

/// Mean of the pixels whose radius lies in [r0, r1].
inline double ring_mean(const ImageGrid& x, double r0, double r1) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < x.n(); ++r) {
        for (std::size_t c = 0; c < x.n(); ++c) {
            const Point2 p = pixel_center(x, r, c);
            const double rad = std::hypot(p.u1, p.u2);
            if (rad < r0 || rad > r1) continue;
            sum += x(r, c);
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

/// Largest |x / target - 1| over |u| <= radius.
inline double max_rel_deviation(const ImageGrid& x, double target, double radius = 0.8) {
    double worst = 0.0;
    for (std::size_t r = 0; r < x.n(); ++r) {
        for (std::size_t c = 0; c < x.n(); ++c) {
            const Point2 p = pixel_center(x, r, c);
            if (std::hypot(p.u1, p.u2) > radius) continue;
            worst = std::max(worst, std::abs(x(r, c) / target - 1.0));
        }
    }
    return worst;
}

inline double rel_l2(std::span<const double> a, std::span<const double> ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num += (a[k] - ref[k]) * (a[k] - ref[k]);
        den += ref[k] * ref[k];
    }
    return std::sqrt(num / den);
}

/// Gaussian low-pass of white noise that is smooth on the whole cylinder the
/// backprojection integrates over: generated on [0, 2 pi), periodic in theta,
/// zero-extended in t, then folded with y(t, theta + pi) = y(-t, theta).
inline Sinogram smooth_random_sinogram(std::size_t n_t, std::size_t n_theta, double sigma_bins,
                                       std::uint32_t seed) {
    const std::size_t rows = 2 * n_theta;
    std::mt19937 gen(seed);
    std::normal_distribution<double> normal;
    RealArray z(rows, n_t);
    for (double& v : z.values()) v = normal(gen);

    const auto reach = static_cast<long>(std::ceil(4.0 * sigma_bins));
    std::vector<double> w(static_cast<std::size_t>(2 * reach + 1));
    for (long k = -reach; k <= reach; ++k) {
        w[static_cast<std::size_t>(k + reach)] = std::exp(-0.5 * static_cast<double>(k * k) / (sigma_bins * sigma_bins));
    }
    RealArray along_t(rows, n_t);
    for (std::size_t j = 0; j < rows; ++j) {
        for (std::size_t i = 0; i < n_t; ++i) {
            double acc = 0.0;
            for (long k = -reach; k <= reach; ++k) {
                const long ii = static_cast<long>(i) + k;
                if (ii < 0 || ii >= static_cast<long>(n_t)) continue;
                acc += w[static_cast<std::size_t>(k + reach)] * z(j, static_cast<std::size_t>(ii));
            }
            along_t(j, i) = acc;
        }
    }
    RealArray both(rows, n_t);
    const auto period = static_cast<long>(rows);
    for (std::size_t j = 0; j < rows; ++j) {
        for (std::size_t i = 0; i < n_t; ++i) {
            double acc = 0.0;
            for (long k = -reach; k <= reach; ++k) {
                const long jj = ((static_cast<long>(j) + k) % period + period) % period;
                acc += w[static_cast<std::size_t>(k + reach)] * along_t(static_cast<std::size_t>(jj), i);
            }
            both(j, i) = acc;
        }
    }
    RealArray y(n_theta, n_t);
    for (std::size_t j = 0; j < n_theta; ++j) {
        for (std::size_t i = 0; i < n_t; ++i) y(j, i) = 0.5 * (both(j, i) + both(j + n_theta, n_t - 1 - i));
    }
    return Sinogram(DetectorAxis(n_t), AngleAxis(n_theta), std::move(y));
}

/// White-noise sinogram with values in [-1, 1].
inline Sinogram random_sinogram(std::size_t n_t, std::size_t n_theta, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    RealArray y(n_theta, n_t);
    for (double& v : y.values()) v = uni(gen);
    return Sinogram(DetectorAxis(n_t), AngleAxis(n_theta), std::move(y));
}

inline ImageGrid random_image(std::size_t n, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    RealArray x(n, n);
    for (double& v : x.values()) v = uni(gen);
    return ImageGrid(n, std::move(x));
}

/// Nonnegative variants, uniform on [0, 1]: densities and line integrals.
inline Sinogram random_nonnegative_sinogram(std::size_t n_t, std::size_t n_theta, std::uint32_t seed) {
    Sinogram y = random_sinogram(n_t, n_theta, seed);
    RealArray data = y.data();
    for (double& v : data.values()) v = 0.5 * (v + 1.0);
    return Sinogram(y.detector(), y.angles(), std::move(data));
}

inline ImageGrid random_nonnegative_image(std::size_t n, std::uint32_t seed) {
    RealArray data = random_image(n, seed).data();
    for (double& v : data.values()) v = 0.5 * (v + 1.0);
    return ImageGrid(n, std::move(data));
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("tomopipe-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

/// Best (minimum) wall time of `reps` calls.
template <typename F>
double min_seconds(F&& f, int reps) {
    double best = 1e300;
    for (int k = 0; k < reps; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

}  // namespace tomopipe::testing

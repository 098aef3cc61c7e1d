#include "tomopipe/preprocess.hpp"

#include <algorithm>

namespace tomopipe {
namespace {

// Row j of a frame that is either a single broadcast row or a full matrix.
std::span<const double> frame_row(const RealArray& frame, std::size_t j) {
    return frame.rows() == 1 ? frame.row(0) : frame.row(j);
}

void check_frame(const RealArray& frame, const RealArray& counts, const char* what) {
    if (frame.cols() != counts.cols() || (frame.rows() != 1 && frame.rows() != counts.rows())) {
        throw std::invalid_argument(std::string("normalize: ") + what + " frame is " +
                                    std::to_string(frame.rows()) + "x" + std::to_string(frame.cols()) +
                                    ", counts are " + std::to_string(counts.rows()) + "x" +
                                    std::to_string(counts.cols()));
    }
}

}  // namespace

RealArray normalize(const RealArray& counts, const FlatDarkFrames& frames, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("normalize: eps must be positive");
    check_frame(frames.flat, counts, "flat");
    check_frame(frames.dark, counts, "dark");
    RealArray out(counts.rows(), counts.cols());
    for (std::size_t j = 0; j < counts.rows(); ++j) {
        const auto flat = frame_row(frames.flat, j);
        const auto dark = frame_row(frames.dark, j);
        const auto in = counts.row(j);
        auto dst = out.row(j);
        for (std::size_t i = 0; i < in.size(); ++i) {
            dst[i] = -std::log(std::max(in[i] - dark[i], eps) / std::max(flat[i] - dark[i], eps));
        }
    }
    return out;
}

Sinogram normalize(const Sinogram& counts, const FlatDarkFrames& frames, double eps) {
    return Sinogram(counts.detector(), counts.angles(), normalize(counts.data(), frames, eps));
}

CenteringResult estimate_center(const Sinogram& y) {
    if (y.n_theta() < 2) throw std::invalid_argument("estimate_center: needs at least two angles");
    const std::size_t n = y.n_t();
    const auto p = y.row(0);
    const auto last = y.row(y.n_theta() - 1);
    // q(t) = y(-t, theta_last); the grid is symmetric so this is an index reversal.
    std::vector<double> q(last.rbegin(), last.rend());

    auto is_constant = [](std::span<const double> v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return *hi - *lo <= 1e-12 * std::max(1.0, std::max(std::abs(*lo), std::abs(*hi)));
    };
    if (is_constant(p) || is_constant(q)) throw std::domain_error("centering undetermined");

    // With an axis shift beta, p(t) = y0(t - beta) and q(t) = y0(t + beta), so
    // p[i] matches q[i - s] at s = 2 beta / dt.
    const auto max_shift = static_cast<long>(n / 2);
    auto corr = [&](long s) {
        double acc = 0.0;
        for (long i = 0; i < static_cast<long>(n); ++i) {
            const long k = i - s;
            if (k < 0 || k >= static_cast<long>(n)) continue;
            acc += p[static_cast<std::size_t>(i)] * q[static_cast<std::size_t>(k)];
        }
        return acc;
    };
    std::vector<double> c(static_cast<std::size_t>(2 * max_shift + 1));
    for (long s = -max_shift; s <= max_shift; ++s) c[static_cast<std::size_t>(s + max_shift)] = corr(s);
    const auto best = static_cast<long>(std::max_element(c.begin(), c.end()) - c.begin());

    double shift = static_cast<double>(best - max_shift);
    if (best > 0 && best + 1 < static_cast<long>(c.size())) {
        const double cm = c[static_cast<std::size_t>(best - 1)];
        const double c0 = c[static_cast<std::size_t>(best)];
        const double cp = c[static_cast<std::size_t>(best + 1)];
        const double denom = cm - 2.0 * c0 + cp;
        if (denom < 0.0) shift += 0.5 * (cm - cp) / denom;
    }

    double pp = 0.0, qq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        pp += p[i] * p[i];
        qq += q[i] * q[i];
    }
    CenteringResult result;
    result.beta_bins = 0.5 * shift;
    result.beta = result.beta_bins * y.detector().spacing();
    result.confidence = std::clamp(c[static_cast<std::size_t>(best)] / std::sqrt(pp * qq), 0.0, 1.0);
    return result;
}

Sinogram apply_center(const Sinogram& y, double beta) {
    if (!std::isfinite(beta)) throw std::invalid_argument("apply_center: beta must be finite");
    const std::size_t n = y.n_t();
    const double offset = beta / y.detector().spacing();
    const double last = static_cast<double>(n - 1);
    RealArray out(y.n_theta(), n);
    for (std::size_t j = 0; j < y.n_theta(); ++j) {
        const auto src = y.row(j);
        auto dst = out.row(j);
        for (std::size_t i = 0; i < n; ++i) {
            const double p = static_cast<double>(i) + offset;
            if (p < 0.0 || p > last) continue;
            const double p0 = std::floor(p);
            const auto i0 = static_cast<std::size_t>(p0);
            const double w = p - p0;
            dst[i] = (i0 + 1 < n && w > 0.0) ? src[i0] + w * (src[i0 + 1] - src[i0]) : src[i0];
        }
    }
    return Sinogram(y.detector(), y.angles(), std::move(out));
}

Sinogram suppress_rings(const Sinogram& y, std::size_t window) {
    if (window < 3 || window % 2 == 0) {
        throw std::invalid_argument("suppress_rings: window must be odd and >= 3");
    }
    const std::size_t n = y.n_t();
    std::vector<double> mean(n, 0.0);
    for (std::size_t j = 0; j < y.n_theta(); ++j) {
        const auto row = y.row(j);
        for (std::size_t i = 0; i < n; ++i) mean[i] += row[i];
    }
    for (double& m : mean) m /= static_cast<double>(y.n_theta());

    // Running median of the neighbours, window clipped at the detector ends.
    // Leaving the sample itself out keeps a stripe from displacing the median
    // on a steep edge: on a linear ramp the two middle values straddle m[i].
    const std::size_t half = window / 2;
    std::vector<double> stripe(n), buf;
    buf.reserve(window);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n, i + half + 1);
        buf.assign(mean.begin() + static_cast<long>(lo), mean.begin() + static_cast<long>(i));
        buf.insert(buf.end(), mean.begin() + static_cast<long>(i + 1), mean.begin() + static_cast<long>(hi));
        auto mid = buf.begin() + static_cast<long>(buf.size() / 2);
        std::nth_element(buf.begin(), mid, buf.end());
        double median = *mid;
        if (buf.size() % 2 == 0) {
            median = 0.5 * (median + *std::max_element(buf.begin(), mid));
        }
        stripe[i] = mean[i] - median;
    }

    RealArray out = y.data();
    for (std::size_t j = 0; j < out.rows(); ++j) {
        auto row = out.row(j);
        for (std::size_t i = 0; i < n; ++i) row[i] -= stripe[i];
    }
    return Sinogram(y.detector(), y.angles(), std::move(out));
}

}  // namespace tomopipe

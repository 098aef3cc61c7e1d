#include "tomopipe/phantom.hpp"

namespace tomopipe {
namespace {

void require_slice(double s) {
    if (!(std::abs(s) <= 1.0)) throw std::invalid_argument("slice coordinate must satisfy |s| <= 1");
}

}  // namespace

Ellipsoid::Ellipsoid(double a, double b, double c, double rho, EllipsoidCenter center)
    : a_(a), b_(b), c_(c), rho_(rho), center_(center) {
    if (!(a > 0.0 && b > 0.0 && c > 0.0)) {
        throw std::invalid_argument("Ellipsoid: semi-axes must be positive");
    }
    if (!std::isfinite(rho)) throw std::invalid_argument("Ellipsoid: density must be finite");
    constexpr double slack = 1e-12;
    if (std::abs(center.u1) + a > 1.0 + slack || std::abs(center.u2) + b > 1.0 + slack ||
        std::abs(center.s) + c > 1.0 + slack) {
        throw std::invalid_argument("Ellipsoid: body does not fit in [-1, 1]^3");
    }
}

std::pair<double, double> Ellipsoid::slice_axes(double s) const noexcept {
    const double z = (s - center_.s) / c_;
    const double k = 1.0 - z * z;
    if (k <= 0.0) return {0.0, 0.0};
    const double scale = std::sqrt(k);
    return {a_ * scale, b_ * scale};
}

double Ellipsoid::line_integral(double s, double t, double theta) const noexcept {
    const auto [as, bs] = slice_axes(s);
    if (as == 0.0) return 0.0;
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    const double q2 = as * as * c * c + bs * bs * sn * sn;
    const double tp = t - (center_.u1 * c + center_.u2 * sn);
    const double d = q2 - tp * tp;
    if (d <= 0.0) return 0.0;
    return 2.0 * rho_ * as * bs * std::sqrt(d) / q2;
}

ImageGrid render_slice(const Ellipsoid& e, double s, std::size_t n) {
    require_slice(s);
    RealArray img(n, n);
    const auto [as, bs] = e.slice_axes(s);
    if (as > 0.0) {
        for (std::size_t r = 0; r < n; ++r) {
            const double v = (pixel_coordinate(n, r) - e.center().u2) / bs;
            for (std::size_t c = 0; c < n; ++c) {
                const double w = (pixel_coordinate(n, c) - e.center().u1) / as;
                if (w * w + v * v <= 1.0) img(r, c) = e.rho();
            }
        }
    }
    return ImageGrid(n, std::move(img));
}

Sinogram analytic_sinogram(const Ellipsoid& e, double s, const DetectorAxis& detector,
                           const AngleAxis& angles) {
    require_slice(s);
    RealArray data(angles.size(), detector.size());
    for (std::size_t j = 0; j < angles.size(); ++j) {
        const double theta = angles.angle(j);
        for (std::size_t i = 0; i < detector.size(); ++i) {
            data(j, i) = e.line_integral(s, detector.coordinate(i), theta);
        }
    }
    return Sinogram(detector, angles, std::move(data));
}

}  // namespace tomopipe

#pragma once

// Analytic ellipsoid phantom: x(u) = rho inside
//   ((u1-c1)/A)^2 + ((u2-c2)/B)^2 <= 1 - ((s-cs)/C)^2
// and zero elsewhere, together with its exact parallel-beam sinogram.

#include <utility>

#include "tomopipe/core.hpp"

namespace tomopipe {

struct EllipsoidCenter {
    double u1 = 0.0;
    double u2 = 0.0;
    double s = 0.0;
};

class Ellipsoid {
public:
    /// Throws std::invalid_argument unless a, b, c > 0 and the body fits in [-1, 1]^3.
    Ellipsoid(double a, double b, double c, double rho, EllipsoidCenter center = {});

    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double c() const noexcept { return c_; }
    double rho() const noexcept { return rho_; }
    const EllipsoidCenter& center() const noexcept { return center_; }

    /// In-slice semi-axes at slice coordinate s; both zero when the slice misses the body.
    std::pair<double, double> slice_axes(double s) const noexcept;

    /// Exact line integral along {u : u . (cos theta, sin theta) = t} within slice s.
    double line_integral(double s, double t, double theta) const noexcept;

private:
    double a_, b_, c_, rho_;
    EllipsoidCenter center_;
};

ImageGrid render_slice(const Ellipsoid& e, double s, std::size_t n);

Sinogram analytic_sinogram(const Ellipsoid& e, double s, const DetectorAxis& detector,
                           const AngleAxis& angles);

}  // namespace tomopipe

#pragma once

// Discrete Radon transform and slant-stack backprojection. The pair serves as
// the reference against which the fast backprojector is checked.

#include "tomopipe/core.hpp"

namespace tomopipe {

enum class Interpolation { bilinear, nearest };

struct RayTraceConfig {
    /// Sampling step along each ray as a fraction of the pixel size, in (0, 1].
    double step_length = 0.5;
    Interpolation interpolation = Interpolation::bilinear;
};

/// y(t_i, theta_j) = integral of x along {u : u . xi_theta = t_i}.
Sinogram forward_radon(const ImageGrid& x, const DetectorAxis& detector, const AngleAxis& angles,
                       const RayTraceConfig& cfg = {}, unsigned workers = 1);

/// Slant-stack backprojection b(u) = (pi / V) sum_j y(u . xi_j, theta_j), linear
/// interpolation along t, zero outside [-1, 1]. Full-circle input is weighted so
/// that the result still approximates the integral over [0, pi).
ImageGrid backproject_ss(const Sinogram& y, std::size_t n, unsigned workers = 1);

/// Pixel-area weighted inner product. Throws std::invalid_argument on size mismatch.
double inner_product_image(const ImageGrid& a, const ImageGrid& b);

/// dt * dtheta weighted inner product. Throws std::invalid_argument on axis mismatch.
double inner_product_sino(const Sinogram& y, const Sinogram& z);

}  // namespace tomopipe

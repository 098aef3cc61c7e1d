#pragma once

// Fast backprojection through the backprojection-slice identity
//
//     b^(sigma cos theta, sigma sin theta) = y^(sigma, theta) / sigma,
//     sigma > 0, theta in [0, 2 pi),
//
// realized as a chain of independent stages:
//
//   P0      polar_reindex          full-circle sinogram -> signed radial layout
//   P1      split_origin_window    remove the per-angle mass with windows
//                                  centred on t = 0
//   P2      zero_pad               pad to the power-of-two radial length and
//                                  pre-compensate the radial gridding kernel
//   P3      radial_dft             one 1D DFT per angle
//   P4      apply_bst_kernel       divide by max(|sigma|, sigma_min)
//   P5      grid_to_cartesian      polar -> Cartesian interpolation in frequency
//   P6-P8   inverse_dft2_and_shift 2D inverse DFT, quadrant swap, crop to the
//                                  output grid, amplitude scale
//
// P1 removes everything that makes the 1/sigma kernel misbehave. The mean
// mass over angles goes with a Kaiser-Bessel window whose backprojection is a
// fixed radial profile tabulated by the plan. What is left of each row is then
// fitted by a low-order polynomial in t over the detector, so the remainder has
// vanishing low moments at every angle. Without that, data that is not an
// exact Radon transform (per-angle mass changes, moving first moments) would
// backproject to slowly decaying tails that alias through the periodic 2D DFT.
// The polynomial part backprojects to a polynomial in u inside the unit disk
// plus a few arc sums outside it, so it is added back exactly.
//
// The radial axis is sampled `radial_refinement` times finer than the
// Cartesian frequency grid so that bilinear gridding stays accurate.
//
// A plan is immutable after construction and can be shared by any number of
// threads; all scratch buffers belong to the call.

#include <complex>
#include <memory>

#include "tomopipe/core.hpp"
#include "tomopipe/fft.hpp"
#include "tomopipe/radon.hpp"

namespace tomopipe {

using Complex = std::complex<double>;

struct BstOptions {
    std::size_t pad_factor = 2;
    double kb_beta = 10.0;
    /// Half-width of the origin window in t units. Widened to at least eight
    /// detector bins so that the window stays resolved on coarse detectors.
    double kb_support = 0.1;
    std::size_t sigma_min_bins = 1;
    Interpolation interp = Interpolation::bilinear;
    /// Radial DFT length over Cartesian grid side; a power of two >= 1.
    std::size_t radial_refinement = 2;
    /// Degree of the per-angle polynomial fit removed in P1 (0..8).
    std::size_t moment_order = 6;
};

class BstPlan {
public:
    /// Throws std::invalid_argument for pad_factor < 2, sigma_min_bins < 1,
    /// radial_refinement not a power of two, moment_order > 8, n_t too small
    /// for the moment fit, non-positive window parameters or output_n == 0.
    BstPlan(const DetectorAxis& detector, const AngleAxis& angles, std::size_t output_n,
            BstOptions options = {});

    const DetectorAxis& detector() const noexcept { return detector_; }
    const AngleAxis& angles() const noexcept { return angles_; }
    const BstOptions& options() const noexcept { return options_; }
    std::size_t n_t() const noexcept { return detector_.size(); }
    std::size_t n_theta() const noexcept { return angles_.size(); }
    std::size_t output_n() const noexcept { return output_n_; }
    /// Number of angles on the full circle.
    std::size_t polar_angles() const noexcept { return polar_angles_; }
    /// Side of the Cartesian frequency grid; a power of two >= pad_factor * max(n_t, output_n).
    std::size_t cartesian_samples() const noexcept { return cartesian_; }
    /// Padded radial length, cartesian_samples() * radial_refinement.
    std::size_t radial_samples() const noexcept { return radial_; }

    /// Radial position of sample m (signed, DFT order) is (m + radial_offset()) * dt.
    double radial_offset() const noexcept { return radial_offset_; }
    /// |sigma| of radial DFT bin k, in cycles per unit t.
    double radial_frequency(std::size_t k) const noexcept;
    double radial_frequency_step() const noexcept { return radial_step_; }
    double sigma_min() const noexcept { return radial_step_ * static_cast<double>(options_.sigma_min_bins); }
    /// Spacing of the Cartesian frequency grid.
    double cartesian_frequency_step() const noexcept { return cartesian_step_; }
    double window_support() const noexcept { return window_support_; }

    /// Origin window sampled at the detector positions, normalized so dt * sum = 1.
    std::span<const double> origin_window() const noexcept { return window_; }
    /// Moment-fit basis: Legendre polynomials P_k(t_i), one row per degree.
    const RealArray& moment_basis() const noexcept { return basis_; }
    /// Monomial coefficients of P_k, [degree][power].
    const RealArray& moment_legendre() const noexcept { return legendre_; }
    /// Inverse Gram matrix of the basis under the plain sample sum.
    const RealArray& moment_gram_inverse() const noexcept { return gram_inverse_; }
    /// Radial gridding pre-compensation, per detector position.
    std::span<const double> precompensation() const noexcept { return precomp_; }
    /// Backprojection of the unit-mass origin window on the output grid.
    const RealArray& origin_profile() const noexcept { return origin_profile_; }
    /// Backprojection of the unit-mass origin window at radius r (continuous).
    double origin_profile_at(double r) const noexcept;

    const fft::PlanReal& radial_fft() const noexcept { return *radial_fft_; }
    const fft::Plan2D& cartesian_ifft() const noexcept { return *cartesian_ifft_; }

    /// Bytes of intermediate storage one bst_backproject call allocates.
    std::size_t scratch_bytes() const noexcept;

    /// Throws std::invalid_argument unless y has the axes this plan was built for
    /// (or their full-circle extension).
    void check_input(const Sinogram& y) const;

private:
    DetectorAxis detector_;
    AngleAxis angles_;
    std::size_t output_n_;
    BstOptions options_;
    std::size_t polar_angles_;
    std::size_t cartesian_;
    std::size_t radial_;
    double radial_offset_;
    double radial_step_;
    double cartesian_step_;
    double window_support_;
    std::vector<double> window_;
    RealArray legendre_;
    RealArray basis_;
    RealArray gram_inverse_;
    std::vector<double> precomp_;
    std::vector<double> profile_table_;
    double profile_table_step_;
    RealArray origin_profile_;
    std::shared_ptr<const fft::PlanReal> radial_fft_;
    std::shared_ptr<const fft::Plan2D> cartesian_ifft_;
};

/// Polar samples, one row per full-circle angle. Rows have either n_t entries
/// (before padding) or radial_samples entries in DFT order (after padding).
/// What split_origin_window removed: the mean mass over angles and the
/// per-angle polynomial as monomial coefficients, [angle][power] (empty until
/// the split).
struct OriginMass {
    double mean = 0.0;
    RealArray polynomial;
};

struct PolarSamples {
    RealArray data;
    bool padded = false;
    OriginMass origin;
};

/// Radial spectra, [angle][bin]. Rows hold either all radial_samples bins in
/// DFT order or, for real input, only the non-negative bins 0..radial_samples/2.
struct PolarSpectrum {
    Array2D<Complex> data;
    OriginMass origin;
};

/// Square spectrum on the Cartesian frequency grid, DFT order in both axes.
struct CartesianSpectrum {
    Array2D<Complex> data;
    OriginMass origin;
};

/// Uses y(t, theta + pi) = y(-t, theta) to cover [0, 2 pi). Full-circle input is
/// returned unchanged.
Sinogram extend_to_full_circle(const Sinogram& y);

PolarSamples polar_reindex(const Sinogram& y_ext, const BstPlan& plan);
PolarSamples split_origin_window(PolarSamples p, const BstPlan& plan);
PolarSamples zero_pad(const PolarSamples& p, const BstPlan& plan);
/// P0-P2.
PolarSamples resample_polar(const Sinogram& y_ext, const BstPlan& plan);

/// Unnormalized forward DFT of every padded row.
PolarSpectrum radial_dft(const PolarSamples& p, const BstPlan& plan, unsigned workers = 1);
/// Same transform keeping bins 0..radial_samples/2, the only ones the gridding
/// reads; the rest follow by conjugate symmetry. The full chain uses this.
PolarSpectrum radial_dft_half(const PolarSamples& p, const BstPlan& plan, unsigned workers = 1);
/// Both accept full or half rows.
PolarSpectrum apply_bst_kernel(PolarSpectrum sp, const BstPlan& plan, unsigned workers = 1);
CartesianSpectrum grid_to_cartesian(const PolarSpectrum& sp, const BstPlan& plan,
                                    unsigned workers = 1);
ImageGrid inverse_dft2_and_shift(CartesianSpectrum c, const BstPlan& plan, unsigned workers = 1);

/// Full chain. The result matches backproject_ss in scale; for y == c it is pi * c.
ImageGrid bst_backproject(const Sinogram& y, const BstPlan& plan, unsigned workers = 1);

}  // namespace tomopipe

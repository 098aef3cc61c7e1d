#pragma once

// Corrections applied before filtering: dark/flat normalization, rotation
// centre correction and ring (stripe) suppression. All work on one slice.

#include "tomopipe/core.hpp"

namespace tomopipe {

/// Flat (I0) and dark (D) fields. Either one row per detector, broadcast over
/// all angles, or a full [angle][detector] matrix.
struct FlatDarkFrames {
    RealArray flat;
    RealArray dark;
};

inline constexpr double kNormalizeEps = 1e-6;

/// y = -log(max(I - D, eps) / max(I0 - D, eps)). Throws std::invalid_argument on
/// shape mismatch or eps <= 0.
RealArray normalize(const RealArray& counts, const FlatDarkFrames& frames, double eps = kNormalizeEps);
Sinogram normalize(const Sinogram& counts, const FlatDarkFrames& frames, double eps = kNormalizeEps);

struct CenteringResult {
    /// Shift of the rotation axis along t, in t units.
    double beta = 0.0;
    /// Same shift in detector bins.
    double beta_bins = 0.0;
    /// Normalized correlation at the peak, in [0, 1].
    double confidence = 0.0;
};

/// Correlates the first projection with the mirrored last one; their offset is
/// twice the axis shift. Throws std::invalid_argument for fewer than two angles
/// and std::domain_error("centering undetermined") for constant projections.
CenteringResult estimate_center(const Sinogram& y);

/// out(t) = y(t + beta) by linear interpolation; zero where t + beta leaves the detector.
Sinogram apply_center(const Sinogram& y, double beta);

/// Column-mean stripe removal: m(t) = mean over theta, smoothed by the median of
/// the window - 1 neighbours of each sample; m - smooth(m) is subtracted from
/// every row.
/// Throws std::invalid_argument unless window is odd and >= 3.
Sinogram suppress_rings(const Sinogram& y, std::size_t window = 9);

}  // namespace tomopipe

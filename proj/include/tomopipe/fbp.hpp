#pragma once

// Ramp filtering along t and the filtered-backprojection driver.

#include <memory>
#include <optional>

#include "tomopipe/bst.hpp"
#include "tomopipe/core.hpp"
#include "tomopipe/fft.hpp"

namespace tomopipe {

enum class FilterKind { ramp, ramp_apodized };

struct FilterPlan {
    FilterKind kind = FilterKind::ramp;
    /// Raised-cosine rolloff: the taper starts at this fraction of Nyquist.
    /// 1.0 leaves the ramp untouched. Must lie in (0, 1].
    double rolloff = 1.0;
};

/// Multiplier 2 pi |sigma| (times the taper) on a padded row of `length` samples.
std::vector<double> ramp_multiplier(std::size_t length, double dt, const FilterPlan& plan);

/// Filters one row as a periodic signal of its own length, no padding.
std::vector<double> ramp_filter_periodic(std::span<const double> row, double dt,
                                         const FilterPlan& plan = {});

/// Reusable filter for a fixed detector axis. Rows are zero-padded to
/// 2 * next_pow2(n_t) before the transform and cropped afterwards.
class RampFilter {
public:
    RampFilter(const DetectorAxis& detector, FilterPlan plan = {});

    std::size_t padded_length() const noexcept { return length_; }
    const FilterPlan& plan() const noexcept { return plan_; }
    Sinogram apply(const Sinogram& y, unsigned workers = 1) const;

private:
    DetectorAxis detector_;
    FilterPlan plan_;
    std::size_t length_;
    std::vector<double> multiplier_;
    std::shared_ptr<const fft::Plan1D> forward_;
    std::shared_ptr<const fft::Plan1D> backward_;
};

Sinogram ramp_filter(const Sinogram& y, const FilterPlan& plan = {}, unsigned workers = 1);

enum class Kernel { ss, bst };

Kernel parse_kernel(const std::string& name);
const char* to_string(Kernel k) noexcept;

/// Overall scale applied after backprojection of the 2 pi |sigma| filtered data.
inline constexpr double kFbpScale = 1.0 / (2.0 * kPi);

/// x = B[F y] / (2 pi). `plan` is only consulted for the BST kernel.
ImageGrid fbp(const Sinogram& y, const BstPlan& plan, const FilterPlan& fplan, Kernel kernel,
              unsigned workers = 1);

/// Same, with a prebuilt filter. Used by the pipeline to avoid re-planning per slice.
ImageGrid fbp(const Sinogram& y, const BstPlan& plan, const RampFilter& filter, Kernel kernel,
              unsigned workers = 1);

}  // namespace tomopipe

#include "tomopipe/fbp.hpp"

#include <bit>

#include "tomopipe/parallel.hpp"
#include "tomopipe/radon.hpp"

namespace tomopipe {
namespace {

void check_filter_plan(const FilterPlan& plan) {
    if (!(plan.rolloff > 0.0 && plan.rolloff <= 1.0)) {
        throw std::invalid_argument("FilterPlan: rolloff must be in (0, 1]");
    }
}

double taper(double f, const FilterPlan& plan) {
    if (plan.kind == FilterKind::ramp || f <= plan.rolloff) return 1.0;
    return 0.5 * (1.0 + std::cos(kPi * (f - plan.rolloff) / (1.0 - plan.rolloff)));
}

}  // namespace

std::vector<double> ramp_multiplier(std::size_t length, double dt, const FilterPlan& plan) {
    check_filter_plan(plan);
    std::vector<double> m(length);
    const double half = static_cast<double>(length / 2);
    for (std::size_t k = 0; k < length; ++k) {
        const long signed_k =
            k <= length / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(length);
        const double f = std::abs(static_cast<double>(signed_k)) / half;
        const double sigma = std::abs(static_cast<double>(signed_k)) / (static_cast<double>(length) * dt);
        m[k] = 2.0 * kPi * sigma * taper(f, plan);
    }
    return m;
}

std::vector<double> ramp_filter_periodic(std::span<const double> row, double dt, const FilterPlan& plan) {
    const std::size_t n = row.size();
    const auto m = ramp_multiplier(n, dt, plan);
    const fft::Plan1D forward(n, fft::Direction::forward);
    const fft::Plan1D backward(n, fft::Direction::backward);
    std::vector<Complex> buf(row.begin(), row.end());
    forward.execute(buf.data());
    for (std::size_t k = 0; k < n; ++k) buf[k] *= m[k];
    backward.execute(buf.data());
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = buf[k].real() / static_cast<double>(n);
    return out;
}

RampFilter::RampFilter(const DetectorAxis& detector, FilterPlan plan)
    : detector_(detector), plan_(plan), length_(2 * std::bit_ceil(detector.size())) {
    multiplier_ = ramp_multiplier(length_, detector.spacing(), plan_);
    // Fold the 1/L of the inverse transform into the multiplier.
    for (double& v : multiplier_) v /= static_cast<double>(length_);
    forward_ = std::make_shared<const fft::Plan1D>(length_, fft::Direction::forward);
    backward_ = std::make_shared<const fft::Plan1D>(length_, fft::Direction::backward);
}

Sinogram RampFilter::apply(const Sinogram& y, unsigned workers) const {
    if (!(y.detector() == detector_)) throw std::invalid_argument("RampFilter: detector axis mismatch");
    const std::size_t n_t = y.n_t();
    RealArray out(y.n_theta(), n_t);
    parallel_for(y.n_theta(), workers, [&](std::size_t begin, std::size_t end) {
        std::vector<Complex> buf(length_);
        for (std::size_t j = begin; j < end; ++j) {
            std::fill(buf.begin(), buf.end(), Complex(0.0, 0.0));
            const auto src = y.row(j);
            std::copy(src.begin(), src.end(), buf.begin());
            forward_->execute(buf.data());
            for (std::size_t k = 0; k < length_; ++k) buf[k] *= multiplier_[k];
            backward_->execute(buf.data());
            auto dst = out.row(j);
            for (std::size_t i = 0; i < n_t; ++i) dst[i] = buf[i].real();
        }
    });
    return Sinogram(y.detector(), y.angles(), std::move(out));
}

Sinogram ramp_filter(const Sinogram& y, const FilterPlan& plan, unsigned workers) {
    return RampFilter(y.detector(), plan).apply(y, workers);
}

Kernel parse_kernel(const std::string& name) {
    if (name == "ss") return Kernel::ss;
    if (name == "bst") return Kernel::bst;
    throw std::invalid_argument("unknown kernel '" + name + "' (expected ss or bst)");
}

const char* to_string(Kernel k) noexcept { return k == Kernel::ss ? "ss" : "bst"; }

ImageGrid fbp(const Sinogram& y, const BstPlan& plan, const RampFilter& filter, Kernel kernel,
              unsigned workers) {
    const Sinogram h = filter.apply(y, workers);
    ImageGrid b = kernel == Kernel::ss ? backproject_ss(h, plan.output_n(), workers)
                                       : bst_backproject(h, plan, workers);
    RealArray data = b.data();
    for (double& v : data.values()) v *= kFbpScale;
    return ImageGrid(b.n(), std::move(data));
}

ImageGrid fbp(const Sinogram& y, const BstPlan& plan, const FilterPlan& fplan, Kernel kernel,
              unsigned workers) {
    return fbp(y, plan, RampFilter(y.detector(), fplan), kernel, workers);
}

}  // namespace tomopipe

#include "tomopipe/core.hpp"

#include <algorithm>

namespace tomopipe {

DetectorAxis::DetectorAxis(std::size_t n_t) : n_t_(n_t) {
    if (n_t < 2) throw std::invalid_argument("DetectorAxis: n_t must be >= 2");
}

double DetectorAxis::coordinate(std::size_t i) const {
    if (i >= n_t_) {
        throw std::out_of_range("detector index " + std::to_string(i) + " out of range [0, " +
                                std::to_string(n_t_) + ")");
    }
    // Evaluated as (2i - (n-1)) / (n-1) so that t_{n-1-i} == -t_i exactly.
    const double denom = static_cast<double>(n_t_ - 1);
    return (2.0 * static_cast<double>(i) - denom) / denom;
}

AngleAxis::AngleAxis(std::size_t n_theta, AngleSpan span) : n_theta_(n_theta), span_(span) {
    if (n_theta < 1) throw std::invalid_argument("AngleAxis: n_theta must be >= 1");
}

double AngleAxis::angle(std::size_t j) const {
    if (j >= n_theta_) {
        throw std::out_of_range("angle index " + std::to_string(j) + " out of range");
    }
    return extent() * static_cast<double>(j) / static_cast<double>(n_theta_);
}

void require_finite(std::span<const double> values, const char* what) {
    if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
        throw std::invalid_argument(std::string(what) + ": non-finite value");
    }
}

Sinogram::Sinogram(DetectorAxis detector, AngleAxis angles, RealArray data)
    : detector_(detector), angles_(angles), data_(std::move(data)) {
    if (data_.rows() != angles_.size() || data_.cols() != detector_.size()) {
        throw std::invalid_argument("Sinogram: data is " + std::to_string(data_.rows()) + "x" +
                                    std::to_string(data_.cols()) + ", axes require " +
                                    std::to_string(angles_.size()) + "x" +
                                    std::to_string(detector_.size()));
    }
    require_finite(data_.values(), "Sinogram");
}

Sinogram::Sinogram(DetectorAxis detector, AngleAxis angles)
    : detector_(detector), angles_(angles), data_(angles.size(), detector.size()) {}

ImageGrid::ImageGrid(std::size_t n, RealArray data) : n_(n), data_(std::move(data)) {
    if (n == 0) throw std::invalid_argument("ImageGrid: n must be >= 1");
    if (data_.rows() != n || data_.cols() != n) {
        throw std::invalid_argument("ImageGrid: data must be " + std::to_string(n) + "x" +
                                    std::to_string(n));
    }
    require_finite(data_.values(), "ImageGrid");
}

ImageGrid::ImageGrid(std::size_t n) : n_(n), data_(n, n) {
    if (n == 0) throw std::invalid_argument("ImageGrid: n must be >= 1");
}

Point2 pixel_center(const ImageGrid& grid, std::size_t row, std::size_t col) {
    if (row >= grid.n() || col >= grid.n()) {
        throw std::out_of_range("pixel (" + std::to_string(row) + ", " + std::to_string(col) +
                                ") outside " + std::to_string(grid.n()) + "x" +
                                std::to_string(grid.n()) + " grid");
    }
    return {pixel_coordinate(grid.n(), col), pixel_coordinate(grid.n(), row)};
}

double detector_coordinate(const DetectorAxis& axis, std::size_t i) { return axis.coordinate(i); }

const char* to_string(StageTag tag) noexcept {
    switch (tag) {
        case StageTag::read: return "read";
        case StageTag::normalized: return "normalized";
        case StageTag::centered: return "centered";
        case StageTag::rings_suppressed: return "rings_suppressed";
        case StageTag::filtered: return "filtered";
        case StageTag::backprojected: return "backprojected";
        case StageTag::written: return "written";
    }
    return "unknown";
}

std::size_t VolumeBlock::size() const noexcept {
    return std::visit([](const auto& v) { return v.size(); }, slices);
}

}  // namespace tomopipe

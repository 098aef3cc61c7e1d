#pragma once

// Grid conventions and array types shared by every module.
//
// Detector samples t_i = -1 + 2i/(n_t-1) cover [-1, 1] inclusive. Images cover
// [-1, 1]^2 with pixel centers u = -1 + 2(k + 1/2)/n; u1 runs along columns and
// u2 along rows. Sinograms are stored angle-major: data(angle, detector).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tomopipe {

inline constexpr double kPi = std::numbers::pi;

struct Point2 {
    double u1 = 0.0;
    double u2 = 0.0;
};

/// Dense row-major 2D array.
template <typename T>
class Array2D {
public:
    Array2D() = default;
    Array2D(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Array2D(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw std::invalid_argument("Array2D: data size " + std::to_string(data_.size()) +
                                        " does not match " + std::to_string(rows_) + "x" +
                                        std::to_string(cols_));
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }

    bool operator==(const Array2D&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using RealArray = Array2D<double>;

class DetectorAxis {
public:
    explicit DetectorAxis(std::size_t n_t);

    std::size_t size() const noexcept { return n_t_; }
    double spacing() const noexcept { return 2.0 / static_cast<double>(n_t_ - 1); }
    /// t_i; throws std::out_of_range for i >= size().
    double coordinate(std::size_t i) const;

    bool operator==(const DetectorAxis&) const = default;

private:
    std::size_t n_t_;
};

enum class AngleSpan { half_circle, full_circle };

/// theta_j = j * span / n_theta, half-open. The measured case is [0, pi).
class AngleAxis {
public:
    explicit AngleAxis(std::size_t n_theta, AngleSpan span = AngleSpan::half_circle);

    std::size_t size() const noexcept { return n_theta_; }
    AngleSpan span() const noexcept { return span_; }
    double extent() const noexcept { return span_ == AngleSpan::half_circle ? kPi : 2.0 * kPi; }
    double spacing() const noexcept { return extent() / static_cast<double>(n_theta_); }
    double angle(std::size_t j) const;

    bool operator==(const AngleAxis&) const = default;

private:
    std::size_t n_theta_;
    AngleSpan span_;
};

/// One slice of measured data y(t, theta). Immutable once built.
class Sinogram {
public:
    /// Throws std::invalid_argument on dimension mismatch or non-finite values.
    Sinogram(DetectorAxis detector, AngleAxis angles, RealArray data);
    Sinogram(DetectorAxis detector, AngleAxis angles);  // all zeros

    const DetectorAxis& detector() const noexcept { return detector_; }
    const AngleAxis& angles() const noexcept { return angles_; }
    const RealArray& data() const noexcept { return data_; }
    std::size_t n_t() const noexcept { return detector_.size(); }
    std::size_t n_theta() const noexcept { return angles_.size(); }
    double operator()(std::size_t angle, std::size_t i) const noexcept { return data_(angle, i); }
    std::span<const double> row(std::size_t angle) const noexcept { return data_.row(angle); }

    bool operator==(const Sinogram&) const = default;

private:
    DetectorAxis detector_;
    AngleAxis angles_;
    RealArray data_;
};

/// Square image on [-1, 1]^2, data(row, col). Immutable once built.
class ImageGrid {
public:
    ImageGrid(std::size_t n, RealArray data);
    explicit ImageGrid(std::size_t n);  // all zeros

    std::size_t n() const noexcept { return n_; }
    double pixel_size() const noexcept { return 2.0 / static_cast<double>(n_); }
    const RealArray& data() const noexcept { return data_; }
    double operator()(std::size_t row, std::size_t col) const noexcept { return data_(row, col); }

    bool operator==(const ImageGrid&) const = default;

private:
    std::size_t n_;
    RealArray data_;
};

/// Pixel-center coordinate of index k on an n-pixel axis.
inline double pixel_coordinate(std::size_t n, std::size_t k) noexcept {
    return -1.0 + (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(n);
}

Point2 pixel_center(const ImageGrid& grid, std::size_t row, std::size_t col);
double detector_coordinate(const DetectorAxis& axis, std::size_t i);

enum class StageTag : std::uint8_t {
    read, normalized, centered, rings_suppressed, filtered, backprojected, written
};

const char* to_string(StageTag tag) noexcept;

/// A block of Q contiguous slices travelling through the pipeline as one job.
struct VolumeBlock {
    std::size_t first_slice = 0;
    StageTag stage = StageTag::read;
    std::variant<std::vector<Sinogram>, std::vector<ImageGrid>> slices;

    std::size_t size() const noexcept;
    bool holds_sinograms() const noexcept { return slices.index() == 0; }
    std::vector<Sinogram>& sinograms() { return std::get<0>(slices); }
    const std::vector<Sinogram>& sinograms() const { return std::get<0>(slices); }
    std::vector<ImageGrid>& images() { return std::get<1>(slices); }
    const std::vector<ImageGrid>& images() const { return std::get<1>(slices); }
};

/// Throws std::invalid_argument if any value is NaN or infinite.
void require_finite(std::span<const double> values, const char* what);

}  // namespace tomopipe

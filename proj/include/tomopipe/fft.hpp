#pragma once

// Thin RAII layer over FFTW. Plans are created once (planner calls are
// serialized internally) and may then be executed concurrently from any number
// of threads on caller-owned buffers.

#include <complex>
#include <cstddef>
#include <memory>

namespace tomopipe::fft {

using Complex = std::complex<double>;

enum class Direction { forward, backward };

/// Unnormalized 1D complex transform of fixed length. Forward uses e^{-2 pi i k n / N}.
class Plan1D {
public:
    Plan1D(std::size_t n, Direction dir);
    ~Plan1D();
    Plan1D(const Plan1D&) = delete;
    Plan1D& operator=(const Plan1D&) = delete;

    std::size_t size() const noexcept { return n_; }
    /// In-place transform of n contiguous values.
    void execute(Complex* data) const;

private:
    std::size_t n_;
    void* plan_;
};

/// Forward transform of n real values, returning all n complex bins (the upper
/// half filled by conjugate symmetry).
class PlanReal {
public:
    explicit PlanReal(std::size_t n);
    ~PlanReal();
    PlanReal(const PlanReal&) = delete;
    PlanReal& operator=(const PlanReal&) = delete;

    std::size_t size() const noexcept { return n_; }
    void execute(const double* in, Complex* out) const;
    /// Bins 0..n/2 only; out holds n/2 + 1 values.
    void execute_half(const double* in, Complex* out) const;

private:
    std::size_t n_;
    void* plan_;
};

/// Unnormalized 2D transform of an n x n row-major array, computed as row
/// transforms followed by column transforms. The same arithmetic is used for
/// every worker count, so results do not depend on it.
class Plan2D {
public:
    Plan2D(std::size_t n, Direction dir);
    ~Plan2D();
    Plan2D(const Plan2D&) = delete;
    Plan2D& operator=(const Plan2D&) = delete;

    std::size_t size() const noexcept { return n_; }
    void execute(Complex* data, unsigned workers = 1) const;

private:
    std::size_t n_;
    std::size_t column_batch_;
    void* row_plan_;
    void* column_plan_;
};

}  // namespace tomopipe::fft

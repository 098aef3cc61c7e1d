#include "tomopipe/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

#include "tomopipe/parallel.hpp"

namespace tomopipe::fft {
namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

int sign_of(Direction dir) { return dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD; }

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

// Plans are made on scratch buffers; FFTW_UNALIGNED lets them run on any array.
constexpr unsigned kFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

fftw_plan make_strided(std::size_t n, std::size_t howmany, std::size_t stride, std::size_t dist,
                       Direction dir) {
    std::lock_guard lock(planner_mutex());
    const std::size_t span = (n - 1) * stride + (howmany - 1) * dist + 1;
    auto* scratch = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * span));
    const int len = static_cast<int>(n);
    fftw_plan p = fftw_plan_many_dft(1, &len, static_cast<int>(howmany), scratch, nullptr,
                                     static_cast<int>(stride), static_cast<int>(dist), scratch,
                                     nullptr, static_cast<int>(stride), static_cast<int>(dist),
                                     sign_of(dir), kFlags);
    fftw_free(scratch);
    if (p == nullptr) throw std::runtime_error("FFTW planning failed");
    return p;
}

void destroy(void* p) {
    if (p == nullptr) return;
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(p));
}

}  // namespace

Plan1D::Plan1D(std::size_t n, Direction dir) : n_(n), plan_(nullptr) {
    if (n == 0) throw std::invalid_argument("fft::Plan1D: length must be positive");
    plan_ = make_strided(n, 1, 1, 1, dir);
}

Plan1D::~Plan1D() { destroy(plan_); }

void Plan1D::execute(Complex* data) const {
    fftw_execute_dft(static_cast<fftw_plan>(plan_), as_fftw(data), as_fftw(data));
}

PlanReal::PlanReal(std::size_t n) : n_(n), plan_(nullptr) {
    if (n < 2) throw std::invalid_argument("fft::PlanReal: length must be >= 2");
    std::lock_guard lock(planner_mutex());
    auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, kFlags);
    fftw_free(in);
    fftw_free(out);
    if (plan_ == nullptr) throw std::runtime_error("FFTW planning failed");
}

PlanReal::~PlanReal() { destroy(plan_); }

void PlanReal::execute(const double* in, Complex* out) const {
    // FFTW may not write to the input of an out-of-place r2c transform without
    // FFTW_DESTROY_INPUT, which the plan does not request.
    fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_), const_cast<double*>(in), as_fftw(out));
    for (std::size_t k = n_ / 2 + 1; k < n_; ++k) out[k] = std::conj(out[n_ - k]);
}

void PlanReal::execute_half(const double* in, Complex* out) const {
    fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_), const_cast<double*>(in), as_fftw(out));
}

Plan2D::Plan2D(std::size_t n, Direction dir)
    : n_(n), column_batch_(std::min<std::size_t>(n, 16)), row_plan_(nullptr), column_plan_(nullptr) {
    if (n == 0) throw std::invalid_argument("fft::Plan2D: size must be positive");
    while (n % column_batch_ != 0) --column_batch_;
    row_plan_ = make_strided(n, 1, 1, 1, dir);
    column_plan_ = make_strided(n, column_batch_, n, 1, dir);
}

Plan2D::~Plan2D() {
    destroy(row_plan_);
    destroy(column_plan_);
}

void Plan2D::execute(Complex* data, unsigned workers) const {
    const auto rows = static_cast<fftw_plan>(row_plan_);
    const auto cols = static_cast<fftw_plan>(column_plan_);
    parallel_for(n_, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            fftw_execute_dft(rows, as_fftw(data + r * n_), as_fftw(data + r * n_));
        }
    });
    const std::size_t batches = n_ / column_batch_;
    parallel_for(batches, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b) {
            Complex* p = data + b * column_batch_;
            fftw_execute_dft(cols, as_fftw(p), as_fftw(p));
        }
    });
}

}  // namespace tomopipe::fft

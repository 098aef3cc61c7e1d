#include "tomopipe/bst.hpp"

#include <algorithm>
#include <bit>

#include "tomopipe/parallel.hpp"

namespace tomopipe {
namespace {

constexpr double kTwoPi = 2.0 * kPi;

// I0(beta sqrt(1 - x^2)) / I0(beta) tabulated on |x| <= 1.
class KaiserBesselTable {
public:
    explicit KaiserBesselTable(double beta) : values_(kSize + 1) {
        const double norm = std::cyl_bessel_i(0.0, beta);
        for (std::size_t k = 0; k <= kSize; ++k) {
            const double x = static_cast<double>(k) / kSize;
            values_[k] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - x * x))) / norm;
        }
    }

    double operator()(double x) const noexcept {
        x = std::abs(x);
        if (x >= 1.0) return 0.0;
        const double pos = x * kSize;
        const auto k = static_cast<std::size_t>(pos);
        const double w = pos - static_cast<double>(k);
        return values_[k] + w * (values_[k + 1] - values_[k]);
    }

private:
    static constexpr std::size_t kSize = 8192;
    std::vector<double> values_;
};

template <typename F>
double simpson(F&& f, double a, double b, std::size_t intervals) {
    const double h = (b - a) / static_cast<double>(intervals);
    double acc = f(a) + f(b);
    for (std::size_t k = 1; k < intervals; ++k) {
        acc += f(a + h * static_cast<double>(k)) * ((k % 2 == 1) ? 4.0 : 2.0);
    }
    return acc * h / 3.0;
}

double sinc(double x) noexcept {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

// Signed frequency index of DFT bin k for length n.
long signed_bin(std::size_t k, std::size_t n) noexcept {
    return k < n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

// Backprojection of sum_k c_jk t^k (on |t| <= 1) over the P full-circle angles:
//   (pi / P) sum_j sum_k c_jk (u . xi_j)^k   over the angles whose ray hits the detector.
// (u . xi)^k expands into terms u1^m u2^(k-m) cos^m sin^(k-m), so inside the unit
// disk each pixel needs only the angular sums of c_jk cos^m sin^(k-m). Outside it
// the missed angles form two arcs around the direction of u, taken from prefix sums.
void add_polynomial_part(RealArray& out, const OriginMass& origin, const BstPlan& plan,
                         unsigned workers) {
    const RealArray& coeffs = origin.polynomial;
    if (coeffs.size() == 0) return;
    const std::size_t n = plan.output_n();
    const std::size_t n_ang = coeffs.rows();
    const std::size_t order = coeffs.cols() - 1;
    const double weight = kPi / static_cast<double>(n_ang);
    const double d_theta = kTwoPi / static_cast<double>(n_ang);

    struct Term {
        std::size_t k, m;
        double binomial;
        std::vector<double> prefix;  // over two turns
    };
    std::vector<Term> terms;
    for (std::size_t k = 0; k <= order; ++k) {
        double binomial = 1.0;
        for (std::size_t m = 0; m <= k; ++m) {
            Term term{k, m, binomial, std::vector<double>(2 * n_ang + 1, 0.0)};
            for (std::size_t q = 0; q < 2 * n_ang; ++q) {
                const std::size_t j = q % n_ang;
                const double theta = d_theta * static_cast<double>(j);
                const double v = coeffs(j, k) * std::pow(std::cos(theta), static_cast<double>(m)) *
                                 std::pow(std::sin(theta), static_cast<double>(k - m));
                term.prefix[q + 1] = term.prefix[q] + v;
            }
            terms.push_back(std::move(term));
            binomial = binomial * static_cast<double>(k - m) / static_cast<double>(m + 1);
        }
    }
    // Integer angle indices in the open interval (lo, hi), as a range of the two-turn prefix.
    const auto turn = static_cast<long>(n_ang);
    auto arc = [&](double lo, double hi) -> std::pair<std::size_t, std::size_t> {
        long first = static_cast<long>(std::floor(lo)) + 1;
        long last = static_cast<long>(std::ceil(hi)) - 1;
        if (last < first) return {0, 0};
        const long shift = first >= 0 ? first / turn : -((-first + turn - 1) / turn);
        first -= shift * turn;
        last -= shift * turn;
        return {static_cast<std::size_t>(first), static_cast<std::size_t>(last) + 1};
    };

    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> u1_pow(order + 1), u2_pow(order + 1), row_poly(order + 1);
        for (std::size_t r = begin; r < end; ++r) {
            const double u2 = pixel_coordinate(n, r);
            u2_pow[0] = 1.0;
            for (std::size_t k = 1; k <= order; ++k) u2_pow[k] = u2_pow[k - 1] * u2;
            // Inside the unit disk every angle counts: a polynomial in u1 for this row.
            std::fill(row_poly.begin(), row_poly.end(), 0.0);
            for (const Term& term : terms) {
                row_poly[term.m] += term.binomial * u2_pow[term.k - term.m] * term.prefix[n_ang];
            }
            for (std::size_t c = 0; c < n; ++c) {
                const double u1 = pixel_coordinate(n, c);
                const double radius = std::hypot(u1, u2);
                double acc = 0.0;
                if (radius <= 1.0) {
                    for (std::size_t m = order + 1; m-- > 0;) acc = acc * u1 + row_poly[m];
                } else {
                    u1_pow[0] = 1.0;
                    for (std::size_t k = 1; k <= order; ++k) u1_pow[k] = u1_pow[k - 1] * u1;
                    double phi = std::atan2(u2, u1);
                    if (phi < 0.0) phi += kTwoPi;
                    const double half = std::acos(1.0 / radius);
                    const auto missed_a = arc((phi - half) / d_theta, (phi + half) / d_theta);
                    const auto missed_b = arc((phi + kPi - half) / d_theta, (phi + kPi + half) / d_theta);
                    for (const Term& term : terms) {
                        const double sum = term.prefix[n_ang] - (term.prefix[missed_a.second] - term.prefix[missed_a.first]) -
                                           (term.prefix[missed_b.second] - term.prefix[missed_b.first]);
                        acc += term.binomial * u1_pow[term.m] * u2_pow[term.k - term.m] * sum;
                    }
                }
                out(r, c) += weight * acc;
            }
        }
    });
}

constexpr std::size_t kProfileIntervals = 4096;
constexpr std::size_t kMaxMomentOrder = 8;
constexpr std::size_t kQuadratureIntervals = 256;

}  // namespace

BstPlan::BstPlan(const DetectorAxis& detector, const AngleAxis& angles, std::size_t output_n,
                 BstOptions options)
    : detector_(detector), angles_(angles), output_n_(output_n), options_(options) {
    if (output_n == 0) throw std::invalid_argument("BstPlan: output_n must be >= 1");
    if (options.pad_factor < 2) throw std::invalid_argument("BstPlan: pad_factor must be >= 2");
    if (options.sigma_min_bins < 1) throw std::invalid_argument("BstPlan: sigma_min_bins must be >= 1");
    if (options.radial_refinement == 0 || !std::has_single_bit(options.radial_refinement)) {
        throw std::invalid_argument("BstPlan: radial_refinement must be a power of two");
    }
    if (!(options.kb_beta > 0.0) || !(options.kb_support > 0.0)) {
        throw std::invalid_argument("BstPlan: Kaiser-Bessel parameters must be positive");
    }

    const std::size_t n_t = detector.size();
    const double dt = detector.spacing();
    const double h = 2.0 / static_cast<double>(output_n);
    polar_angles_ = angles.span() == AngleSpan::half_circle ? 2 * angles.size() : angles.size();
    if (angles.span() == AngleSpan::full_circle && angles.size() % 2 != 0) {
        throw std::invalid_argument("BstPlan: full-circle input needs an even angle count");
    }
    cartesian_ = std::bit_ceil(options.pad_factor * std::max(n_t, output_n));
    radial_ = cartesian_ * options.radial_refinement;
    radial_offset_ = (n_t % 2 == 0) ? 0.5 : 0.0;
    radial_step_ = 1.0 / (static_cast<double>(radial_) * dt);
    cartesian_step_ = 1.0 / (static_cast<double>(cartesian_) * h);
    window_support_ = std::min(std::max(options.kb_support, 8.0 * dt), 0.5);

    const KaiserBesselTable kb(options.kb_beta);
    const double s = window_support_;

    // Discrete window at the detector positions, unit mass under the dt-rectangle rule.
    window_.resize(n_t);
    double discrete_mass = 0.0;
    for (std::size_t i = 0; i < n_t; ++i) {
        window_[i] = kb(detector.coordinate(i) / s);
        discrete_mass += window_[i];
    }
    for (double& w : window_) w /= discrete_mass * dt;

    if (options.moment_order > kMaxMomentOrder) {
        throw std::invalid_argument("BstPlan: moment_order must be <= " + std::to_string(kMaxMomentOrder));
    }
    const std::size_t terms = options.moment_order + 1;
    if (n_t <= 2 * terms) throw std::invalid_argument("BstPlan: detector too small for the moment fit");
    // Legendre polynomials keep the fit well conditioned; monomial coefficients
    // are what the backprojection of the fit needs.
    legendre_ = RealArray(terms, terms);
    legendre_(0, 0) = 1.0;
    if (terms > 1) legendre_(1, 1) = 1.0;
    for (std::size_t k = 2; k < terms; ++k) {
        const double kk = static_cast<double>(k);
        for (std::size_t q = 0; q < terms; ++q) {
            const double up = q > 0 ? legendre_(k - 1, q - 1) : 0.0;
            legendre_(k, q) = ((2.0 * kk - 1.0) * up - (kk - 1.0) * legendre_(k - 2, q)) / kk;
        }
    }
    basis_ = RealArray(terms, n_t);
    for (std::size_t i = 0; i < n_t; ++i) {
        const double t = detector.coordinate(i);
        for (std::size_t k = 0; k < terms; ++k) {
            double v = 0.0;
            for (std::size_t q = terms; q-- > 0;) v = v * t + legendre_(k, q);
            basis_(k, i) = v;
        }
    }
    gram_inverse_ = RealArray(terms, terms);
    {
        // Gauss-Jordan on the small symmetric positive definite Gram matrix.
        RealArray a(terms, 2 * terms);
        for (std::size_t p = 0; p < terms; ++p) {
            for (std::size_t q = 0; q < terms; ++q) {
                double g = 0.0;
                for (std::size_t i = 0; i < n_t; ++i) g += basis_(p, i) * basis_(q, i);
                a(p, q) = g;
            }
            a(p, terms + p) = 1.0;
        }
        for (std::size_t p = 0; p < terms; ++p) {
            const double pivot = a(p, p);
            for (std::size_t q = 0; q < 2 * terms; ++q) a(p, q) /= pivot;
            for (std::size_t r = 0; r < terms; ++r) {
                if (r == p) continue;
                const double f = a(r, p);
                for (std::size_t q = 0; q < 2 * terms; ++q) a(r, q) -= f * a(p, q);
            }
        }
        for (std::size_t p = 0; p < terms; ++p) {
            for (std::size_t q = 0; q < terms; ++q) gram_inverse_(p, q) = a(p, terms + q);
        }
    }

    // Linear interpolation in sigma multiplies the periodic t-signal by sinc^2(t / P).
    const double period = static_cast<double>(radial_) * dt;
    const int power = options.interp == Interpolation::bilinear ? 2 : 1;
    precomp_.resize(n_t);
    for (std::size_t i = 0; i < n_t; ++i) {
        precomp_[i] = 1.0 / std::pow(sinc(detector.coordinate(i) / period), power);
    }

    // Backprojection over [0, pi) of the continuous unit-mass window:
    // G(r) = integral_0^pi g(r cos theta) d theta.
    const double window_mass = s * simpson([&](double x) { return kb(x); }, -1.0, 1.0, 4096);
    auto g = [&](double t) { return kb(t / s) / window_mass; };
    const double r_max = std::sqrt(2.0) + 2.0 * h;
    profile_table_step_ = r_max / static_cast<double>(kProfileIntervals);
    profile_table_.resize(kProfileIntervals + 1);
    for (std::size_t k = 0; k <= kProfileIntervals; ++k) {
        const double r = profile_table_step_ * static_cast<double>(k);
        auto integrand = [&](double theta) { return g(r * std::cos(theta)); };
        if (r <= s) {
            profile_table_[k] = simpson(integrand, 0.0, kPi, 2 * kQuadratureIntervals);
        } else {
            const double theta0 = std::acos(s / r);
            profile_table_[k] = 2.0 * simpson(integrand, theta0, 0.5 * kPi, kQuadratureIntervals);
        }
    }
    origin_profile_ = RealArray(output_n, output_n);
    for (std::size_t r = 0; r < output_n; ++r) {
        for (std::size_t c = 0; c < output_n; ++c) {
            origin_profile_(r, c) =
                origin_profile_at(std::hypot(pixel_coordinate(output_n, c), pixel_coordinate(output_n, r)));
        }
    }

    radial_fft_ = std::make_shared<const fft::PlanReal>(radial_);
    cartesian_ifft_ = std::make_shared<const fft::Plan2D>(cartesian_, fft::Direction::backward);
}

double BstPlan::radial_frequency(std::size_t k) const noexcept {
    return radial_step_ * static_cast<double>(std::abs(signed_bin(k, radial_)));
}

double BstPlan::origin_profile_at(double r) const noexcept {
    const double pos = r / profile_table_step_;
    if (pos >= static_cast<double>(kProfileIntervals)) return profile_table_.back();
    const auto k = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(k);
    return profile_table_[k] + w * (profile_table_[k + 1] - profile_table_[k]);
}

std::size_t BstPlan::scratch_bytes() const noexcept {
    const std::size_t n_t = detector_.size();
    const std::size_t extended = polar_angles_ * n_t * sizeof(double);
    const std::size_t reindexed = polar_angles_ * n_t * sizeof(double);
    const std::size_t padded = polar_angles_ * radial_ * sizeof(double);
    const std::size_t spectrum = polar_angles_ * radial_ * sizeof(Complex);
    const std::size_t cartesian = cartesian_ * cartesian_ * sizeof(Complex);
    return extended + reindexed + padded + spectrum + cartesian;
}

void BstPlan::check_input(const Sinogram& y) const {
    if (!(y.detector() == detector_)) throw std::invalid_argument("BstPlan: detector axis mismatch");
    const bool same = y.angles() == angles_;
    const bool extended = angles_.span() == AngleSpan::half_circle &&
                          y.angles() == AngleAxis(2 * angles_.size(), AngleSpan::full_circle);
    if (!same && !extended) throw std::invalid_argument("BstPlan: angle axis mismatch");
}

Sinogram extend_to_full_circle(const Sinogram& y) {
    if (y.angles().span() == AngleSpan::full_circle) return y;
    const std::size_t v = y.n_theta();
    const std::size_t n_t = y.n_t();
    RealArray out(2 * v, n_t);
    for (std::size_t j = 0; j < v; ++j) {
        const auto src = y.row(j);
        std::copy(src.begin(), src.end(), out.row(j).begin());
        // The detector grid is symmetric about 0, so t -> -t is an index reversal.
        std::reverse_copy(src.begin(), src.end(), out.row(j + v).begin());
    }
    return Sinogram(y.detector(), AngleAxis(2 * v, AngleSpan::full_circle), std::move(out));
}

PolarSamples polar_reindex(const Sinogram& y_ext, const BstPlan& plan) {
    if (y_ext.angles().span() != AngleSpan::full_circle) {
        throw std::invalid_argument("polar_reindex: input must cover [0, 2 pi)");
    }
    if (y_ext.n_theta() != plan.polar_angles() || y_ext.n_t() != plan.n_t()) {
        throw std::invalid_argument("polar_reindex: sinogram does not match plan");
    }
    // Row j is the radial profile along direction theta_j; sample i sits at radius t_i.
    return PolarSamples{y_ext.data(), false, {}};
}

PolarSamples split_origin_window(PolarSamples p, const BstPlan& plan) {
    if (p.padded) throw std::invalid_argument("split_origin_window: expects unpadded samples");
    if (p.origin.polynomial.size() != 0) throw std::invalid_argument("split_origin_window: already split");
    const double dt = plan.detector().spacing();
    const auto window = plan.origin_window();
    const RealArray& basis = plan.moment_basis();
    const RealArray& gram_inverse = plan.moment_gram_inverse();
    const std::size_t rows = p.data.rows();
    const std::size_t n_t = p.data.cols();
    const std::size_t terms = basis.rows();

    double total = 0.0;
    for (std::size_t j = 0; j < rows; ++j) {
        for (double v : p.data.row(j)) total += v;
    }
    const double mean_mass = total * dt / static_cast<double>(rows);

    const RealArray& legendre = plan.moment_legendre();
    RealArray coeffs(rows, terms);
    std::vector<double> moments(terms), fitted(terms);
    for (std::size_t j = 0; j < rows; ++j) {
        auto row = p.data.row(j);
        for (std::size_t i = 0; i < n_t; ++i) row[i] -= mean_mass * window[i];
        for (std::size_t k = 0; k < terms; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n_t; ++i) acc += basis(k, i) * row[i];
            moments[k] = acc;
        }
        for (std::size_t k = 0; k < terms; ++k) {
            double c = 0.0;
            for (std::size_t q = 0; q < terms; ++q) c += gram_inverse(k, q) * moments[q];
            fitted[k] = c;
        }
        for (std::size_t i = 0; i < n_t; ++i) {
            double fit = 0.0;
            for (std::size_t k = 0; k < terms; ++k) fit += fitted[k] * basis(k, i);
            row[i] -= fit;
        }
        for (std::size_t q = 0; q < terms; ++q) {
            double c = 0.0;
            for (std::size_t k = q; k < terms; ++k) c += fitted[k] * legendre(k, q);
            coeffs(j, q) = c;
        }
    }
    p.origin = OriginMass{mean_mass, std::move(coeffs)};
    return p;
}

PolarSamples zero_pad(const PolarSamples& p, const BstPlan& plan) {
    if (p.padded) throw std::invalid_argument("zero_pad: samples are already padded");
    const std::size_t n_t = plan.n_t();
    const std::size_t len = plan.radial_samples();
    const auto precomp = plan.precompensation();
    PolarSamples out{RealArray(p.data.rows(), len), true, p.origin};
    const std::size_t half = n_t / 2;
    for (std::size_t j = 0; j < p.data.rows(); ++j) {
        const auto src = p.data.row(j);
        auto dst = out.data.row(j);
        for (std::size_t i = 0; i < n_t; ++i) {
            // Signed radial index i - n_t/2, stored in DFT order.
            const std::size_t m = (i >= half) ? i - half : len - (half - i);
            dst[m] = src[i] * precomp[i];
        }
    }
    return out;
}

PolarSamples resample_polar(const Sinogram& y_ext, const BstPlan& plan) {
    return zero_pad(split_origin_window(polar_reindex(y_ext, plan), plan), plan);
}

namespace {

PolarSpectrum radial_transform(const PolarSamples& p, const BstPlan& plan, unsigned workers, bool half) {
    if (!p.padded || p.data.cols() != plan.radial_samples()) {
        throw std::invalid_argument("radial_dft: expects rows padded to radial_samples");
    }
    const std::size_t len = plan.radial_samples();
    const std::size_t bins = half ? len / 2 + 1 : len;
    // Samples sit at (m + offset) dt; this phase references the transform to t = 0.
    std::vector<Complex> phase(bins, Complex(1.0, 0.0));
    if (plan.radial_offset() != 0.0) {
        for (std::size_t k = 0; k < bins; ++k) {
            const double arg = -kTwoPi * static_cast<double>(signed_bin(k, len)) * plan.radial_offset() /
                               static_cast<double>(len);
            phase[k] = std::polar(1.0, arg);
        }
    }
    PolarSpectrum out{Array2D<Complex>(p.data.rows(), bins), p.origin};
    parallel_for(p.data.rows(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            auto dst = out.data.row(j);
            if (half) plan.radial_fft().execute_half(p.data.row(j).data(), dst.data());
            else plan.radial_fft().execute(p.data.row(j).data(), dst.data());
            for (std::size_t k = 0; k < bins; ++k) dst[k] *= phase[k];
        }
    });
    return out;
}

bool spectrum_width_ok(std::size_t cols, const BstPlan& plan) {
    return cols == plan.radial_samples() || cols == plan.radial_samples() / 2 + 1;
}

}  // namespace

PolarSpectrum radial_dft(const PolarSamples& p, const BstPlan& plan, unsigned workers) {
    return radial_transform(p, plan, workers, false);
}

PolarSpectrum radial_dft_half(const PolarSamples& p, const BstPlan& plan, unsigned workers) {
    return radial_transform(p, plan, workers, true);
}

PolarSpectrum apply_bst_kernel(PolarSpectrum sp, const BstPlan& plan, unsigned workers) {
    const std::size_t len = sp.data.cols();
    if (!spectrum_width_ok(len, plan)) throw std::invalid_argument("apply_bst_kernel: size mismatch");
    std::vector<double> inverse_sigma(len);
    const double floor_sigma = plan.sigma_min();
    for (std::size_t k = 0; k < len; ++k) {
        inverse_sigma[k] = 1.0 / std::max(plan.radial_frequency(k), floor_sigma);
    }
    parallel_for(sp.data.rows(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            auto row = sp.data.row(j);
            for (std::size_t k = 0; k < len; ++k) row[k] *= inverse_sigma[k];
        }
    });
    return sp;
}

CartesianSpectrum grid_to_cartesian(const PolarSpectrum& sp, const BstPlan& plan, unsigned workers) {
    const std::size_t len = plan.radial_samples();
    const std::size_t n_ang = sp.data.rows();
    if (!spectrum_width_ok(sp.data.cols(), plan) || n_ang != plan.polar_angles()) {
        throw std::invalid_argument("grid_to_cartesian: spectrum does not match plan");
    }
    const double d_omega = plan.cartesian_frequency_step();
    const double d_sigma = plan.radial_frequency_step();
    const double d_theta = kTwoPi / static_cast<double>(n_ang);
    // Highest usable radial bin; the Nyquist bin len/2 is excluded.
    const std::size_t k_max = len / 2 - 1;
    const std::size_t side = plan.cartesian_samples();
    const bool nearest = plan.options().interp == Interpolation::nearest;

    Complex dc(0.0, 0.0);
    for (std::size_t j = 0; j < n_ang; ++j) dc += sp.data(j, 0);
    dc /= static_cast<double>(n_ang);

    // rho in radial bins, a in angle bins.
    auto sample = [&](double rho, double a) -> Complex {
        if (nearest) {
            const auto k = static_cast<std::size_t>(rho + 0.5);
            const auto j = static_cast<std::size_t>(a + 0.5) % n_ang;
            return sp.data(j, std::min(k, k_max));
        }
        const auto k0 = static_cast<std::size_t>(rho);
        const auto k1 = std::min(k0 + 1, k_max);
        const double wk = rho - static_cast<double>(k0);
        const double a0 = std::floor(a);
        const auto j0 = static_cast<std::size_t>(a0) % n_ang;
        const auto j1 = (j0 + 1) % n_ang;
        const double wa = a - a0;
        const Complex lo = sp.data(j0, k0) + wk * (sp.data(j0, k1) - sp.data(j0, k0));
        const Complex hi = sp.data(j1, k0) + wk * (sp.data(j1, k1) - sp.data(j1, k0));
        return lo + wa * (hi - lo);
    };

    CartesianSpectrum out{Array2D<Complex>(side, side), sp.origin};
    out.data(0, 0) = dc;
    const auto wrap = [side](long k) { return static_cast<std::size_t>(k < 0 ? k + static_cast<long>(side) : k); };
    const double quarter = 0.25 * static_cast<double>(n_ang);
    // Nodes (a, b) with 0 <= b <= a < side/2 fix the angle phi in [0, pi/4]; the
    // other seven octants follow by reflection. The Nyquist row and column
    // (index -side/2) have no mirror image and stay zero. Each worker owns
    // whole values of a, so no node is written twice.
    const auto half = static_cast<long>(side / 2);
    parallel_for(static_cast<std::size_t>(half), workers, [&](std::size_t begin, std::size_t end) {
        for (auto a = static_cast<long>(std::max<std::size_t>(begin, 1)); a < static_cast<long>(end); ++a) {
            for (long b = 0; b <= a; ++b) {
                const double w1 = d_omega * static_cast<double>(a);
                const double w2 = d_omega * static_cast<double>(b);
                const double rho = std::hypot(w1, w2) / d_sigma;
                if (rho > static_cast<double>(k_max)) break;
                const double phi = std::atan2(w2, w1) / d_theta;  // in angle bins
                auto put = [&](long k1, long k2, double angle) {
                    out.data(wrap(k2), wrap(k1)) = sample(rho, angle);
                };
                put(a, b, phi);
                put(-b, a, quarter + phi);
                put(-a, -b, 2.0 * quarter + phi);
                put(b, -a, 3.0 * quarter + phi);
                // On the axes and the diagonal the mirrors coincide with the rotations.
                if (b != 0 && b != a) {
                    put(b, a, quarter - phi);
                    put(-a, b, 2.0 * quarter - phi);
                    put(-b, -a, 3.0 * quarter - phi);
                    put(a, -b, 4.0 * quarter - phi);
                }
            }
        }
    });
    return out;
}

ImageGrid inverse_dft2_and_shift(CartesianSpectrum c, const BstPlan& plan, unsigned workers) {
    const std::size_t len = plan.cartesian_samples();
    if (c.data.rows() != len || c.data.cols() != len) {
        throw std::invalid_argument("inverse_dft2_and_shift: spectrum does not match plan");
    }
    const std::size_t n = plan.output_n();
    const double h = 2.0 / static_cast<double>(n);
    const double d_omega = plan.cartesian_frequency_step();

    // Pixel centres of an even grid sit half a pixel off the DFT lattice.
    const double shift = (n % 2 == 0) ? 0.5 * h : 0.0;
    std::vector<Complex> phase(len, Complex(1.0, 0.0));
    if (shift != 0.0) {
        for (std::size_t k = 0; k < len; ++k) {
            phase[k] = std::polar(1.0, kTwoPi * d_omega * static_cast<double>(signed_bin(k, len)) * shift);
        }
    }
    parallel_for(len, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            auto row = c.data.row(r);
            for (std::size_t k = 0; k < len; ++k) row[k] *= phase[r] * phase[k];
        }
    });

    plan.cartesian_ifft().execute(c.data.data(), workers);  // P6

    // P7: quadrant swap moves u = 0 to index len/2. P8: crop the output grid.
    const std::size_t half = len / 2;
    const std::size_t first = half - n / 2;
    const double scale = plan.detector().spacing() * d_omega * d_omega;
    const RealArray& profile = plan.origin_profile();
    RealArray out(n, n);
    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            const std::size_t sr = (first + r + half) % len;
            for (std::size_t col = 0; col < n; ++col) {
                const std::size_t sc = (first + col + half) % len;
                out(r, col) = scale * c.data(sr, sc).real() + c.origin.mean * profile(r, col);
            }
        }
    });
    add_polynomial_part(out, c.origin, plan, workers);
    return ImageGrid(n, std::move(out));
}

ImageGrid bst_backproject(const Sinogram& y, const BstPlan& plan, unsigned workers) {
    plan.check_input(y);
    PolarSamples padded = resample_polar(extend_to_full_circle(y), plan);
    PolarSpectrum spectrum = apply_bst_kernel(radial_dft_half(padded, plan, workers), plan, workers);
    return inverse_dft2_and_shift(grid_to_cartesian(spectrum, plan, workers), plan, workers);
}

}  // namespace tomopipe

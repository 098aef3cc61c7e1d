#include "tomopipe/radon.hpp"

#include "tomopipe/parallel.hpp"

namespace tomopipe {
namespace {

// Image value at a continuous point; pixels outside the grid read as zero.
class ImageSampler {
public:
    ImageSampler(const ImageGrid& x, Interpolation mode)
        : img_(x.data()), n_(static_cast<long>(x.n())), inv_h_(x.n() / 2.0), mode_(mode) {}

    double operator()(double u1, double u2) const noexcept {
        // Continuous pixel index with pixel centers at integers.
        const double fc = (u1 + 1.0) * inv_h_ - 0.5;
        const double fr = (u2 + 1.0) * inv_h_ - 0.5;
        if (mode_ == Interpolation::nearest) {
            const long c = static_cast<long>(std::floor(fc + 0.5));
            const long r = static_cast<long>(std::floor(fr + 0.5));
            return at(r, c);
        }
        const double c0f = std::floor(fc);
        const double r0f = std::floor(fr);
        const long c0 = static_cast<long>(c0f);
        const long r0 = static_cast<long>(r0f);
        const double wc = fc - c0f;
        const double wr = fr - r0f;
        return (1.0 - wr) * ((1.0 - wc) * at(r0, c0) + wc * at(r0, c0 + 1)) +
               wr * ((1.0 - wc) * at(r0 + 1, c0) + wc * at(r0 + 1, c0 + 1));
    }

private:
    double at(long r, long c) const noexcept {
        if (r < 0 || c < 0 || r >= n_ || c >= n_) return 0.0;
        return img_(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    }

    const RealArray& img_;
    long n_;
    double inv_h_;
    Interpolation mode_;
};

}  // namespace

Sinogram forward_radon(const ImageGrid& x, const DetectorAxis& detector, const AngleAxis& angles,
                       const RayTraceConfig& cfg, unsigned workers) {
    if (!(cfg.step_length > 0.0 && cfg.step_length <= 1.0)) {
        throw std::invalid_argument("RayTraceConfig: step_length must be in (0, 1]");
    }
    const ImageSampler sample(x, cfg.interpolation);
    const double h = x.pixel_size();
    const double step = cfg.step_length * h;
    // Rays are traced across the full circumscribed disk of the image plus one pixel.
    const double half_length = std::sqrt(2.0) + h;
    const auto n_steps = static_cast<std::size_t>(std::ceil(2.0 * half_length / step));

    RealArray out(angles.size(), detector.size());
    parallel_for(angles.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            const double theta = angles.angle(j);
            const double c = std::cos(theta);
            const double s = std::sin(theta);
            for (std::size_t i = 0; i < detector.size(); ++i) {
                const double t = detector.coordinate(i);
                double acc = 0.0;
                for (std::size_t k = 0; k < n_steps; ++k) {
                    const double along = -half_length + (static_cast<double>(k) + 0.5) * step;
                    acc += sample(t * c - along * s, t * s + along * c);
                }
                out(j, i) = acc * step;
            }
        }
    });
    return Sinogram(detector, angles, std::move(out));
}

ImageGrid backproject_ss(const Sinogram& y, std::size_t n, unsigned workers) {
    const std::size_t n_t = y.n_t();
    const std::size_t n_theta = y.n_theta();
    const double dt = y.detector().spacing();
    const double h = 2.0 / static_cast<double>(n);
    const double weight = kPi / static_cast<double>(n_theta);
    const double last = static_cast<double>(n_t - 1);

    std::vector<double> cosines(n_theta), sines(n_theta);
    for (std::size_t j = 0; j < n_theta; ++j) {
        cosines[j] = std::cos(y.angles().angle(j));
        sines[j] = std::sin(y.angles().angle(j));
    }

    RealArray out(n, n);
    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> acc(n);
        for (std::size_t r = begin; r < end; ++r) {
            std::fill(acc.begin(), acc.end(), 0.0);
            const double u2 = pixel_coordinate(n, r);
            for (std::size_t j = 0; j < n_theta; ++j) {
                const auto row = y.row(j);
                // Fractional detector index of the first pixel and its per-column increment.
                const double p0 = (pixel_coordinate(n, 0) * cosines[j] + u2 * sines[j] + 1.0) / dt;
                const double dp = h * cosines[j] / dt;
                for (std::size_t c = 0; c < n; ++c) {
                    const double p = p0 + static_cast<double>(c) * dp;
                    if (p < 0.0 || p > last) continue;
                    const auto i0 = static_cast<std::size_t>(p);
                    if (i0 + 1 >= n_t) {
                        acc[c] += row[n_t - 1];
                        continue;
                    }
                    const double w = p - static_cast<double>(i0);
                    acc[c] += row[i0] + w * (row[i0 + 1] - row[i0]);
                }
            }
            for (std::size_t c = 0; c < n; ++c) out(r, c) = weight * acc[c];
        }
    });
    return ImageGrid(n, std::move(out));
}

double inner_product_image(const ImageGrid& a, const ImageGrid& b) {
    if (a.n() != b.n()) throw std::invalid_argument("inner_product_image: grid size mismatch");
    double acc = 0.0;
    const auto av = a.data().values();
    const auto bv = b.data().values();
    for (std::size_t k = 0; k < av.size(); ++k) acc += av[k] * bv[k];
    return acc * a.pixel_size() * a.pixel_size();
}

double inner_product_sino(const Sinogram& y, const Sinogram& z) {
    if (!(y.detector() == z.detector()) || !(y.angles() == z.angles())) {
        throw std::invalid_argument("inner_product_sino: axis mismatch");
    }
    double acc = 0.0;
    const auto yv = y.data().values();
    const auto zv = z.data().values();
    for (std::size_t k = 0; k < yv.size(); ++k) acc += yv[k] * zv[k];
    // Angular cell pi/V matches the backprojection quadrature weight.
    return acc * y.detector().spacing() * (kPi / static_cast<double>(y.n_theta()));
}

}  // namespace tomopipe

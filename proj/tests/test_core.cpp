#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <limits>
#include <numeric>

#include "tomopipe/core.hpp"
#include "tomopipe/fft.hpp"
#include "tomopipe/parallel.hpp"

using namespace tomopipe;

TEST_CASE("pixel centres follow the [-1, 1]^2 convention") {
    const ImageGrid g2(2), g3(3);
    CHECK(pixel_center(g2, 0, 0).u1 == -0.5);
    CHECK(pixel_center(g2, 0, 0).u2 == -0.5);
    CHECK(pixel_center(g2, 1, 1).u1 == 0.5);
    CHECK(pixel_center(g2, 1, 1).u2 == 0.5);
    CHECK(pixel_center(g3, 1, 1).u1 == 0.0);
    CHECK(pixel_center(g3, 1, 1).u2 == 0.0);
    // Column drives u1, row drives u2.
    CHECK(pixel_center(g3, 0, 2).u1 == doctest::Approx(2.0 / 3.0));
    CHECK(pixel_center(g3, 0, 2).u2 == doctest::Approx(-2.0 / 3.0));
    CHECK_THROWS_AS(pixel_center(g3, 3, 0), std::out_of_range);
    CHECK_THROWS_AS(pixel_center(g3, 0, 3), std::out_of_range);
}

TEST_CASE("detector coordinates cover [-1, 1] inclusive") {
    CHECK(detector_coordinate(DetectorAxis(3), 0) == -1.0);
    CHECK(detector_coordinate(DetectorAxis(3), 1) == 0.0);
    CHECK(detector_coordinate(DetectorAxis(5), 3) == 0.5);
    CHECK(detector_coordinate(DetectorAxis(7), 6) == 1.0);
    CHECK_THROWS_AS(detector_coordinate(DetectorAxis(3), 3), std::out_of_range);
    CHECK_THROWS_AS(DetectorAxis(1), std::invalid_argument);
}

TEST_CASE("coordinates are strictly increasing and symmetric") {
    const DetectorAxis axis(64);
    for (std::size_t i = 1; i < axis.size(); ++i) CHECK(axis.coordinate(i) > axis.coordinate(i - 1));
    for (std::size_t i = 0; i < axis.size(); ++i) {
        CHECK(axis.coordinate(i) == doctest::Approx(-axis.coordinate(axis.size() - 1 - i)).epsilon(1e-15));
    }
    const ImageGrid g(16);
    for (std::size_t k = 1; k < 16; ++k) {
        CHECK(pixel_center(g, 0, k).u1 > pixel_center(g, 0, k - 1).u1);
        CHECK(pixel_center(g, k, 0).u2 > pixel_center(g, k - 1, 0).u2);
    }
}

TEST_CASE("angle axis is half-open") {
    const AngleAxis a(4);
    CHECK(a.angle(0) == 0.0);
    CHECK(a.angle(2) == doctest::Approx(kPi / 2));
    CHECK(a.angle(3) < kPi);
    const AngleAxis full(4, AngleSpan::full_circle);
    CHECK(full.angle(2) == doctest::Approx(kPi));
    CHECK_THROWS_AS(AngleAxis(0), std::invalid_argument);
    CHECK_THROWS_AS(a.angle(4), std::out_of_range);
}

TEST_CASE("sinograms reject bad shapes and non-finite values") {
    const DetectorAxis d(4);
    const AngleAxis a(3);
    CHECK_THROWS_AS(Sinogram(d, a, RealArray(4, 3)), std::invalid_argument);
    RealArray bad(3, 4);
    bad(1, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Sinogram(d, a, bad), std::invalid_argument);
    bad(1, 2) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(Sinogram(d, a, bad), std::invalid_argument);
    CHECK_THROWS_AS(ImageGrid(3, RealArray(3, 4)), std::invalid_argument);
    CHECK_THROWS_AS(Array2D<double>(2, 2, std::vector<double>(3)), std::invalid_argument);

    const Sinogram y(d, a);
    CHECK(y.n_t() == 4);
    CHECK(y.n_theta() == 3);
    CHECK(y(2, 3) == 0.0);
}

TEST_CASE("volume blocks report their length and payload kind") {
    VolumeBlock b;
    b.slices = std::vector<Sinogram>(3, Sinogram(DetectorAxis(4), AngleAxis(2)));
    CHECK(b.size() == 3);
    CHECK(b.holds_sinograms());
    b.slices = std::vector<ImageGrid>(2, ImageGrid(4));
    CHECK(b.size() == 2);
    CHECK_FALSE(b.holds_sinograms());
    CHECK(std::string(to_string(StageTag::filtered)) == "filtered");
}

TEST_CASE("parallel_for visits every index once with fixed chunks") {
    for (unsigned workers : {1u, 2u, 3u, 8u}) {
        std::vector<std::atomic<int>> hits(101);
        parallel_for(hits.size(), workers, [&](std::size_t b, std::size_t e) {
            for (std::size_t k = b; k < e; ++k) hits[k]++;
        });
        for (auto& h : hits) CHECK(h.load() == 1);
    }
    CHECK_THROWS_AS(parallel_for(10, 4, [](std::size_t b, std::size_t) {
                        if (b > 0) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
}

TEST_CASE("fft plans: inverse undoes forward and r2c matches c2c") {
    const std::size_t n = 32;
    std::vector<fft::Complex> x(n);
    std::vector<double> real(n);
    for (std::size_t k = 0; k < n; ++k) {
        real[k] = std::sin(0.3 * static_cast<double>(k)) + 0.1 * static_cast<double>(k % 5);
        x[k] = real[k];
    }
    fft::Plan1D fwd(n, fft::Direction::forward), bwd(n, fft::Direction::backward);
    auto y = x;
    fwd.execute(y.data());
    std::vector<fft::Complex> r(n);
    fft::PlanReal(n).execute(real.data(), r.data());
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(r[k] - y[k]) < 1e-12);
    // DC bin is the plain sum.
    CHECK(y[0].real() == doctest::Approx(std::accumulate(real.begin(), real.end(), 0.0)));
    bwd.execute(y.data());
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(y[k] / static_cast<double>(n) - x[k]) < 1e-12);

    // 2D: same result for any worker count.
    const std::size_t m = 16;
    std::vector<fft::Complex> a(m * m);
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = fft::Complex(std::cos(0.01 * k * k), 0.5);
    auto b = a;
    fft::Plan2D p2(m, fft::Direction::forward);
    p2.execute(a.data(), 1);
    p2.execute(b.data(), 4);
    CHECK(a == b);
}

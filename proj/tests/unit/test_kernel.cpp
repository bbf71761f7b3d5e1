#include "doctest.h"

#include "kacgame/convolution.hpp"
#include "kacgame/kernel.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

using namespace kacgame;
using std::numbers::pi;

namespace {

bool symmetric(const DiscreteKernel& k)
{
    for (const auto& t : k.taps) {
        bool found = false;
        for (const auto& u : k.taps) {
            if (u.dx == -t.dx && u.dy == -t.dy) {
                found = std::abs(u.w - t.w) < 1e-15;
                break;
            }
        }
        if (!found) {
            return false;
        }
    }
    return true;
}

// W(z) = W(-z) on the torus.
bool circular_symmetric(const DiscreteKernel& k, const Grid& g)
{
    const auto w = circular_weights(k, g);
    const std::size_t n = w.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(w[i] - w[(n - i) % n]) > 1e-15) {
            return false;
        }
    }
    return true;
}

// Naive DFT; the oracle for the FFTW paths.
std::vector<std::complex<double>> naive_dft_1d(const std::vector<double>& x, int sign)
{
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t m = 0; m < n; ++m) {
        std::complex<double> s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            s += x[j] * std::polar(1.0, sign * 2.0 * pi * static_cast<double>(m * j) / static_cast<double>(n));
        }
        out[m] = s;
    }
    return out;
}

} // namespace

TEST_SUITE("kernels")
{
    TEST_CASE("uniform Kac kernel has equal weights")
    {
        const auto k = kac_discretize(Kernel::uniform(1), {1, {50, 1}, {0.1, 1.0}, true, 0.0});
        CHECK(k.taps.size() == 50);
        CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-15));
        for (const auto& t : k.taps) {
            CHECK(t.w == doctest::Approx(1.0 / 50.0).epsilon(1e-15));
        }
        CHECK(k.uniform);
    }

    TEST_CASE("Gaussian Kac kernel in 2-D covers the mass")
    {
        const double h = 2.0 * pi / 64.0;
        const auto k = kac_discretize(Kernel::gaussian(15.0, 2), {2, {64, 64}, {h, h}, true, 0.0});
        CHECK(k.raw_sum >= 0.999);
        CHECK(k.raw_sum <= 1.001);
        CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-14));
        // Radius holding 99.9% of a 2-D Gaussian: 1 - exp(-b R^2) = 0.999.
        const double r999 = std::sqrt(std::log(1000.0) / 15.0);
        CHECK(k.support_radius[0] * h >= r999);
        CHECK(symmetric(k));
    }

    TEST_CASE("indicator kernel vanishes outside its radius")
    {
        const double h = 0.01;
        const auto k = kac_discretize(Kernel::indicator_ball(0.3, 1), {1, {1000, 1}, {h, 1.0}, true, 0.0});
        for (const auto& t : k.taps) {
            CHECK(std::abs(t.dx) * h < 0.3);
        }
        CHECK(k.support_radius[0] == 29);
        CHECK(symmetric(k));
    }

    TEST_CASE("Kac support beyond half the torus is rejected")
    {
        CHECK_THROWS_AS(kac_discretize(Kernel::gaussian(0.01, 1), {1, {32, 1}, {0.1, 1.0}, true, 0.0}), Error);
    }

    TEST_CASE("grid discretization examples")
    {
        const auto g256 = Grid::periodic_1d(256, -pi, pi);
        const auto k = grid_discretize(Kernel::gaussian(2.0, 1), g256);
        CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(circular_symmetric(k, g256));

        const auto u = grid_discretize(Kernel::uniform(1), Grid::periodic_1d(64, -pi, pi));
        CHECK(u.taps.size() == 64);
        for (const auto& t : u.taps) {
            CHECK(t.w == doctest::Approx(1.0 / 64.0).epsilon(1e-15));
        }

        const auto j20 = Kernel::gaussian(20.0, 1);
        // exp(-20 x^2) = 1e-9 at x = sqrt(ln(1e9) / 20).
        CHECK(j20.effective_radius() == doctest::Approx(std::sqrt(std::log(1e9) / 20.0)));
        CHECK(j20.effective_radius() == doctest::Approx(1.0).epsilon(0.05));
        const auto k20 = grid_discretize(j20, Grid::periodic_1d(512, -pi, pi));
        const double h = 2.0 * pi / 512.0;
        double peak = 0.0;
        for (const auto& t : k20.taps) {
            peak = std::max(peak, t.w);
        }
        for (const auto& t : k20.taps) {
            if (std::abs(t.dx) * h > 1.02) {
                CHECK(t.w < 1e-9 * peak);
            }
        }

        CHECK_THROWS_AS(grid_discretize(j20, Grid::periodic_1d(8, -pi, pi)), Error);
        try {
            grid_discretize(j20, Grid::periodic_1d(8, -pi, pi));
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Resolution);
        }
    }

    TEST_CASE("fixed grids truncate at the boundary width")
    {
        const auto g = Grid::fixed_1d(256, -3.0, 3.0, 2.0);
        const auto k = grid_discretize(Kernel::gaussian(2.0, 1), g);
        const double h = g.spacing();
        for (const auto& t : k.taps) {
            CHECK(std::abs(t.dx) * h <= 2.0 + 1e-12);
        }
        CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(g.active_count() > 0);
        for (std::size_t v = 0; v < g.size(); ++v) {
            const double x = g.coord(0, static_cast<int>(v));
            CHECK(g.active(v) == (x >= -1.0 && x <= 1.0));
        }
    }

    TEST_CASE("Fourier coefficients")
    {
        const auto g = Grid::periodic_1d(64, -pi, pi);
        const auto u = fourier_coeffs(grid_discretize(Kernel::uniform(1), g), g);
        CHECK(u(0) == doctest::Approx(1.0).epsilon(1e-12));
        for (int k = 1; k < 64; ++k) {
            CHECK(std::abs(u(k)) < 1e-10);
        }

        const auto g512 = Grid::periodic_1d(512, -pi, pi);
        const auto jd = grid_discretize(Kernel::gaussian(20.0, 1), g512);
        const auto c = fourier_coeffs(jd, g512);
        CHECK(std::abs(c(0) - 1.0) < 1e-10);
        CHECK(c.max_imag() < 1e-10);
        // Oracle: grid mode m on [-pi, pi] is frequency m / (2 pi), transform exp(-m^2 / (4 b)).
        double prev = 2.0;
        for (int m = 0; m <= 8; ++m) {
            CHECK(c(m) > 0.0);
            CHECK(c(m) < prev);
            CHECK(c(m) == doctest::Approx(std::exp(-m * m / 80.0)).epsilon(1e-9));
            CHECK(c(m) == doctest::Approx(c(-m)).epsilon(1e-14));
            prev = c(m);
        }
        for (int m = 1; m < 256; ++m) {
            CHECK(std::abs(c(m)) < 1.0);
        }

        CHECK_THROWS_AS(fourier_coeffs(jd, Grid::fixed_1d(64, -3, 3, 1)), Error);
    }

    TEST_CASE("Fourier round trip reproduces the weights")
    {
        const auto g = Grid::periodic_1d(128, -pi, pi);
        const auto jd = grid_discretize(Kernel::gaussian(3.0, 1), g);
        const auto c = fourier_coeffs(jd, g);
        const auto w = circular_weights(jd, g);
        const auto back = naive_dft_1d(c.values(), +1);
        for (std::size_t v = 0; v < w.size(); ++v) {
            CHECK(std::abs(back[v].real() / 128.0 - w[v]) < 1e-10);
        }
        const auto fwd = naive_dft_1d(w, -1);
        for (std::size_t m = 0; m < w.size(); ++m) {
            CHECK(std::abs(fwd[m].real() - c.values()[m]) < 1e-12);
        }
    }

    TEST_CASE("unit-frequency and grid-mode conventions")
    {
        const auto g = Grid::periodic_1d(512, -pi, pi);
        const auto jd = grid_discretize(Kernel::gaussian(20.0, 1), g);
        // Continuous transform of the normalized Gaussian at frequency xi: exp(-pi^2 xi^2 / b).
        for (int k = 0; k <= 4; ++k) {
            CHECK(kernel_hat(jd, g, FourierConvention::UnitFrequency, {k, 0})
                  == doctest::Approx(std::exp(-pi * pi * k * k / 20.0)).epsilon(1e-9));
        }
        const auto c = fourier_coeffs(jd, g);
        for (int k = 0; k <= 10; ++k) {
            CHECK(kernel_hat(jd, g, FourierConvention::GridMode, {k, 0}) == doctest::Approx(c(k)).epsilon(1e-12));
        }
    }

    TEST_CASE("convolution paths agree")
    {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (const auto& g : {Grid::periodic_1d(256, -pi, pi), Grid::periodic_2d(48, -pi, pi)}) {
            const auto jd = grid_discretize(Kernel::gaussian(4.0, g.dim), g);
            std::vector<double> f(g.size()), a(g.size()), b(g.size()), c(g.size());
            for (auto& x : f) {
                x = u(rng);
            }
            conv::direct_serial(jd, g, f, a);
            conv::direct_parallel(jd, g, f, b);
            conv::FftConvolver fft(jd, g);
            fft.apply(f, c);
            for (std::size_t v = 0; v < g.size(); ++v) {
                CHECK(a[v] == b[v]);
                CHECK(std::abs(c[v] - a[v]) <= 1e-8 * std::abs(a[v]));
            }
        }
        CHECK_THROWS_AS(conv::FftConvolver(DiscreteKernel::identity(), Grid::fixed_1d(32, -1, 1, 0.2)), Error);
    }

    TEST_CASE("Kac and grid discretizations agree at matching spacing")
    {
        const auto g = Grid::periodic_1d(256, -pi, pi);
        const auto j = Kernel::gaussian(2.0, 1, 1e-8);
        const auto grid_k = grid_discretize(j, g);
        const auto kac_k = kac_discretize(j, {1, {256, 1}, {g.spacing(), 1.0}, true, 0.0});
        const auto wg = circular_weights(grid_k, g);
        const auto wk = circular_weights(kac_k, g);
        const double h = g.spacing();
        for (std::size_t v = 0; v < wg.size(); ++v) {
            CHECK(std::abs(wg[v] - wk[v]) <= h * h);
        }
    }

    TEST_CASE("second moments")
    {
        CHECK(second_moment(Kernel::uniform(1), 1.0) == doctest::Approx(1.0 / 12.0));
        CHECK(second_moment(Kernel::gaussian(2.0, 1)) == doctest::Approx(0.25).epsilon(1e-9));
        CHECK(second_moment(Kernel::gaussian(2.0, 2)) == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(second_moment(Kernel::indicator_ball(1.5, 1)) == doctest::Approx(0.75).epsilon(1e-6));
    }
}

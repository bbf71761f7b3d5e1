#include "doctest.h"

#include "kacgame/stability.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace kacgame;
using std::numbers::pi;

namespace {

// Independent beta_C: count sign changes of l(beta (p - zeta)) - p on a fine
// grid, then bisect on the count.
int count_logit_roots(double beta, double zeta)
{
    const int n = 200000;
    int changes = 0;
    double prev = 1.0 / (1.0 + std::exp(beta * zeta));
    for (int i = 1; i <= n; ++i) {
        const double p = static_cast<double>(i) / n;
        const double v = 1.0 / (1.0 + std::exp(-beta * (p - zeta))) - p;
        if ((v > 0) != (prev > 0)) {
            ++changes;
        }
        prev = v;
    }
    return changes;
}

double beta_c_oracle(double zeta)
{
    double lo = 4.0;
    double hi = 40.0;
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (count_logit_roots(mid, zeta) >= 3 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_SUITE("stability")
{
    TEST_CASE("homogeneous stationary solutions")
    {
        const CoordinationParams p{1.0 / 3.0, 10.0};
        const auto pp = ResponseFunction::positive_part();
        const auto rep = stationary_homogeneous(Dynamic::TwoStrategyReducedReplicator, p, pp);
        REQUIRE(rep.roots.size() == 3);
        CHECK(rep.roots[0] == 0.0);
        CHECK(rep.roots[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
        CHECK(rep.roots[2] == 1.0);

        const auto one = stationary_homogeneous(Dynamic::TwoStrategyReducedLogit, {1.0 / 3.0, 1.0}, pp);
        REQUIRE(one.roots.size() == 1);
        CHECK(std::abs(one.residuals[0]) < 1e-10);
        double lo = 0.0;
        double hi = 1.0;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            (1.0 / (1.0 + std::exp(-(mid - 1.0 / 3.0))) - mid > 0 ? lo : hi) = mid;
        }
        CHECK(one.roots[0] == doctest::Approx(lo).epsilon(1e-10));

        const auto three = stationary_homogeneous(Dynamic::TwoStrategyReducedLogit, {0.5, 10.0}, pp);
        REQUIRE(three.roots.size() == 3);
        CHECK(three.roots[1] == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(three.roots[0] == doctest::Approx(1.0 - three.roots[2]).epsilon(1e-9));
    }

    TEST_CASE("critical beta")
    {
        CHECK(critical_beta(0.5) == doctest::Approx(4.0).epsilon(1e-8));
        CHECK(critical_beta(1.0 / 3.0) == doctest::Approx(9.338921776992514).epsilon(1e-9));
        for (double zeta : {0.3, 1.0 / 3.0, 0.4}) {
            const double bc = critical_beta(zeta);
            CHECK(bc == doctest::Approx(beta_c_oracle(zeta)).epsilon(1e-4));
            CHECK(logit_root_count(bc * 0.99, zeta) == 1);
            CHECK(logit_root_count(bc * 1.01, zeta) == 3);
            CHECK(stationary_homogeneous(Dynamic::TwoStrategyReducedLogit, {zeta, bc * 0.99},
                                         ResponseFunction::positive_part())
                      .roots.size()
                  == 1);
            CHECK(stationary_homogeneous(Dynamic::TwoStrategyReducedLogit, {zeta, bc * 1.01},
                                         ResponseFunction::positive_part())
                      .roots.size()
                  == 3);
        }
        CHECK(logit_root_count(3.9, 0.5) == 1);
    }

    TEST_CASE("dispersion relation properties")
    {
        const CoordinationParams p{1.0 / 3.0, 10.0};
        const auto g = Grid::periodic_1d(512, -pi, pi);
        const auto jd = grid_discretize(Kernel::gaussian(20.0, 1), g);
        const auto modes = mode_samples_1d(jd, g, FourierConvention::GridMode, 20);
        const auto pp = ResponseFunction::positive_part();
        for (double p0 : {0.0, 1.0 / 3.0, 1.0}) {
            const auto t = dispersion(Dynamic::TwoStrategyReducedReplicator, p0, p, pp, modes);
            REQUIRE(t.has_closed_form);
            CHECK(t.closed_form_gap < 1e-12);
            for (std::size_t m = 0; m < modes.size(); ++m) {
                // Even in k and equal to M J-hat + N.
                const auto mirror = modes.size() - 1 - m;
                CHECK(t.lambda[m] == doctest::Approx(t.lambda[mirror]).epsilon(1e-13));
                CHECK(t.lambda[m] == doctest::Approx(t.M * modes[m].jhat + t.N).epsilon(1e-13));
            }
        }
        // The pure states are stable, the mixed equilibrium is not.
        CHECK(dispersion(Dynamic::TwoStrategyReducedReplicator, 0.0, p, pp, modes).stable());
        CHECK(dispersion(Dynamic::TwoStrategyReducedReplicator, 1.0, p, pp, modes).stable());
        const auto mixed = dispersion(Dynamic::TwoStrategyReducedReplicator, 1.0 / 3.0, p, pp, modes);
        CHECK_FALSE(mixed.stable());
        CHECK(mixed.max_lambda() == doctest::Approx(mixed.lambda[20]));
        CHECK(mixed.to_csv().find("lambda") != std::string::npos);

        CHECK_THROWS_AS(dispersion(Dynamic::TwoStrategyReducedReplicator, 0.5, p, pp, modes), Error);
        try {
            dispersion(Dynamic::TwoStrategyReducedReplicator, 0.5, p, pp, modes);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::NotStationary);
        }
    }

    TEST_CASE("closed forms match M J-hat + N")
    {
        std::mt19937_64 rng(21);
        std::uniform_real_distribution<double> z(0.05, 0.95);
        std::uniform_real_distribution<double> b(0.5, 30.0);
        std::uniform_real_distribution<double> jh(-0.2, 1.0);
        std::uniform_real_distribution<double> kap(0.5, 50.0);
        for (int draw = 0; draw < 50; ++draw) {
            const CoordinationParams p{z(rng), b(rng)};
            const auto f = ResponseFunction::regularized(kap(rng));
            const std::vector<ModeSample> modes{{0, 0, 1.0}, {1, 0, jh(rng)}, {2, 0, jh(rng)}};
            for (double p0 : {0.0, p.zeta, 1.0}) {
                const auto t = dispersion(Dynamic::TwoStrategyReducedReplicator, p0, p, f, modes);
                for (std::size_t m = 0; m < modes.size(); ++m) {
                    const double cf = closed_form_lambda(Dynamic::TwoStrategyReducedReplicator, p0, p, f, modes[m].jhat);
                    CHECK(std::abs(cf - t.lambda[m]) <= 1e-10 * std::max(1.0, std::abs(cf)));
                }
            }
            const auto roots = stationary_homogeneous(Dynamic::TwoStrategyReducedLogit, p, f);
            for (double r : roots.roots) {
                const auto t = dispersion(Dynamic::TwoStrategyReducedLogit, r, p, f, modes);
                for (std::size_t m = 0; m < modes.size(); ++m) {
                    const double cf = closed_form_lambda(Dynamic::TwoStrategyReducedLogit, r, p, f, modes[m].jhat);
                    CHECK(std::abs(cf - t.lambda[m]) <= 1e-10 * std::max(1.0, std::abs(cf)));
                }
            }
        }
    }

    TEST_CASE("linearization matches finite differences")
    {
        const CoordinationParams p{0.4, 7.0};
        const auto f = ResponseFunction::regularized(3.0);
        for (Dynamic d : {Dynamic::TwoStrategyReducedReplicator, Dynamic::TwoStrategyReducedLogit}) {
            for (double r : {0.1, 0.45, 0.8}) {
                for (double s : {0.2, 0.6}) {
                    const auto lin = reduced_linearization(d, r, s, p, f);
                    const double h = 1e-6;
                    const double dr = (reduced_F(d, r + h, s, p, f) - reduced_F(d, r - h, s, p, f)) / (2 * h);
                    const double ds = (reduced_F(d, r, s + h, p, f) - reduced_F(d, r, s - h, p, f)) / (2 * h);
                    CHECK(std::abs(lin.M - dr) <= 1e-6 * std::max(1.0, std::abs(dr)));
                    CHECK(std::abs(lin.N - ds) <= 1e-6 * std::max(1.0, std::abs(ds)));
                }
            }
        }
    }

    TEST_CASE("logit dispersion is larger for the lower kernel transform")
    {
        // lambda = M J-hat + N with M > 0 at every logit root.
        const CoordinationParams p{1.0 / 3.0, 1.0};
        const auto roots = stationary_homogeneous(Dynamic::TwoStrategyReducedLogit, p, ResponseFunction::positive_part());
        REQUIRE(roots.roots.size() == 1);
        const std::vector<ModeSample> modes{{0, 0, 1.0}, {1, 0, 0.5}, {2, 0, -0.1}};
        const auto t = dispersion(Dynamic::TwoStrategyReducedLogit, roots.roots[0], p, ResponseFunction::positive_part(), modes);
        CHECK(t.M > 0.0);
        CHECK(t.N == -1.0);
        CHECK(t.lambda[0] > t.lambda[1]);
        CHECK(t.lambda[1] > t.lambda[2]);
        CHECK(t.stable());
    }

    TEST_CASE("modal solution of the linear IDE")
    {
        const auto g = Grid::periodic_1d(256, -pi, pi);
        const auto jd = grid_discretize(Kernel::gaussian(4.0, 1), g);
        const auto c = fourier_coeffs(jd, g);
        std::vector<double> g0(256);
        for (int v = 0; v < 256; ++v) {
            g0[static_cast<std::size_t>(v)] = 1e-3 * std::cos(3.0 * g.coord(0, v));
        }
        const double M = 1.5;
        const double N = -0.7;
        const auto out = linear_ide_solution(M, N, jd, g, g0, 2.0);
        const double growth = std::exp((M * c(3) + N) * 2.0);
        for (std::size_t v = 0; v < 256; ++v) {
            CHECK(std::abs(out[v] - growth * g0[v]) < 1e-13);
        }
        const auto same = linear_ide_solution(M, N, jd, g, g0, 0.0);
        for (std::size_t v = 0; v < 256; ++v) {
            CHECK(std::abs(same[v] - g0[v]) < 1e-15);
        }
    }

    TEST_CASE("general dispersion agrees with the scalar path")
    {
        const Game game = Game::coordination(20.0 / 3.0, 10.0 / 3.0);
        const auto cp = coordination_params(game);
        const std::vector<ModeSample> modes{{0, 0, 1.0}, {1, 0, 0.6}, {2, 0, 0.1}};
        // Smooth response: central differences are second-order accurate.
        const auto smooth = ResponseFunction::regularized(20.0);
        const auto gen = dispersion_general(Dynamic::ImitativeReplicator, RateRule::imitative(smooth), game,
                                            {1.0 / 3.0, 2.0 / 3.0}, modes);
        const auto scalar = dispersion(Dynamic::TwoStrategyReducedReplicator, 1.0 / 3.0, cp, smooth, modes);
        for (std::size_t m = 0; m < modes.size(); ++m) {
            REQUIRE(gen.eigenvalues[m].size() == 1);
            CHECK(gen.eigenvalues[m][0].real() == doctest::Approx(scalar.lambda[m]).epsilon(1e-7));
        }
        CHECK(gen.max_real() == doctest::Approx(scalar.max_lambda()).epsilon(1e-7));

        // The positive part has a kink at the mixed equilibrium, so differences are only first order.
        const auto rule = RateRule::imitative(ResponseFunction::positive_part());
        const auto kink = dispersion_general(Dynamic::ImitativeReplicator, rule, game, {1.0 / 3.0, 2.0 / 3.0}, modes);
        const auto kink_scalar = dispersion(Dynamic::TwoStrategyReducedReplicator, 1.0 / 3.0, cp,
                                            ResponseFunction::positive_part(), modes);
        for (std::size_t m = 0; m < modes.size(); ++m) {
            CHECK(kink.eigenvalues[m][0].real() == doctest::Approx(kink_scalar.lambda[m]).epsilon(1e-4));
        }

        const Game g1 = Game::coordination(2.0 / 3.0, 1.0 / 3.0);
        const auto lroot = stationary_homogeneous(Dynamic::TwoStrategyReducedLogit, coordination_params(g1),
                                                  ResponseFunction::positive_part())
                               .roots.at(0);
        const auto lg = dispersion_general(Dynamic::Logit, RateRule::logit(), g1, {lroot, 1.0 - lroot}, modes);
        const auto ls = dispersion(Dynamic::TwoStrategyReducedLogit, lroot, coordination_params(g1),
                                   ResponseFunction::positive_part(), modes);
        for (std::size_t m = 0; m < modes.size(); ++m) {
            CHECK(lg.eigenvalues[m][0].real() == doctest::Approx(ls.lambda[m]).epsilon(1e-7));
        }
        CHECK_THROWS_AS(dispersion_general(Dynamic::Logit, RateRule::logit(), g1, {1.0, 0.0}, modes), Error);
        // Three strategies: two tangent directions.
        const Game g3(3, {1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0});
        const auto g3d = dispersion_general(Dynamic::ImitativeReplicator, rule, g3, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, modes);
        for (const auto& ev : g3d.eigenvalues) {
            CHECK(ev.size() == 2);
            CHECK(ev[0].real() == doctest::Approx(ev[1].real()).epsilon(1e-6));
        }
    }

    TEST_CASE("PDE coefficients")
    {
        const CoordinationParams p{1.0 / 3.0, 10.0};
        const auto pp = ResponseFunction::positive_part();
        const auto c = pde_coefficients(Dynamic::TwoStrategyReducedReplicator, p, pp, Kernel::uniform(1), 0.1);
        CHECK(c.j2 == doctest::Approx(1.0 / 12.0));
        for (double f : {0.0, 0.2, 1.0 / 3.0, 0.7, 1.0}) {
            CHECK(c.reaction(f) == doctest::Approx(reduced_F(Dynamic::TwoStrategyReducedReplicator, f, f, p, pp)));
            const auto lin = reduced_linearization(Dynamic::TwoStrategyReducedReplicator, f, f, p, pp);
            CHECK(c.diffusion(f) == doctest::Approx(0.01 * (1.0 / 12.0) / 2.0 * lin.M));
        }
        const auto g2 = pde_coefficients(Dynamic::TwoStrategyReducedLogit, p, pp, Kernel::gaussian(2.0, 2), 1.0);
        CHECK(g2.j2 == doctest::Approx(0.5).epsilon(1e-9));
        const auto lin = reduced_linearization(Dynamic::TwoStrategyReducedLogit, 0.4, 0.4, p, pp);
        CHECK(g2.diffusion(0.4) == doctest::Approx(0.5 / 4.0 * lin.M).epsilon(1e-9));
    }

    TEST_CASE("logit growth rates lie below the replicator's at the mixed equilibrium")
    {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> z(0.1, 0.9);
        std::uniform_real_distribution<double> b(0.5, 25.0);
        std::uniform_real_distribution<double> jh(-0.2, 1.0);
        const auto pp = ResponseFunction::positive_part();
        for (int draw = 0; draw < 30; ++draw) {
            const CoordinationParams p{z(rng), b(rng)};
            const std::vector<ModeSample> modes{{0, 0, 1.0}, {1, 0, jh(rng)}, {2, 0, jh(rng)}};
            const auto rep = dispersion(Dynamic::TwoStrategyReducedReplicator, p.zeta, p, pp, modes);
            for (double r : stationary_homogeneous(Dynamic::TwoStrategyReducedLogit, p, pp).roots) {
                const auto lg = dispersion(Dynamic::TwoStrategyReducedLogit, r, p, pp, modes);
                for (std::size_t m = 0; m < modes.size(); ++m) {
                    CHECK(lg.lambda[m] < rep.lambda[m]);
                }
            }
        }
    }

    TEST_CASE("PDE reaction and saturation")
    {
        const CoordinationParams p{1.0 / 3.0, 10.0};
        const auto pp = ResponseFunction::positive_part();
        const auto rep = pde_coefficients(Dynamic::TwoStrategyReducedReplicator, p, pp, Kernel::gaussian(2.0, 1), 0.1);
        CHECK(rep.reaction(1.0 / 3.0) == doctest::Approx(0.0));
        const auto lg = pde_coefficients(Dynamic::TwoStrategyReducedLogit, {1.0 / 3.0, 200.0}, pp, Kernel::gaussian(2.0, 1), 0.1);
        CHECK(std::abs(lg.diffusion(0.0)) < 1e-20);
        CHECK(std::abs(lg.diffusion(1.0)) < 1e-20);
        CHECK(lg.diffusion(1.0 / 3.0) > 1e-3);
    }
}

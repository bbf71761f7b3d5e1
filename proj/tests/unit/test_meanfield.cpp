#include "doctest.h"

#include "kacgame/meanfield.hpp"
#include "kacgame/micro.hpp"
#include "kacgame/stats.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

using namespace kacgame;
using std::numbers::pi;

namespace {

// Exact jump probabilities of a two-strategy population with fraction m0 on
// strategy 0: (probability that the first jump is 0 -> 1, total rate / agents).
std::pair<double, double> first_jump(const RateRule& rule, const Game& g, double m0)
{
    const std::vector<double> m{m0, 1.0 - m0};
    std::vector<double> u(2);
    g.payoff_vector(m, u);
    const double r01 = m0 * mean_rate(rule, 0, 1, u, m);
    const double r10 = (1.0 - m0) * mean_rate(rule, 1, 0, u, m);
    return {r01 / (r01 + r10), r01 + r10};
}

} // namespace

TEST_SUITE("meanfield")
{
    TEST_CASE("aggregate state from a density")
    {
        const std::vector<double> rho{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        const auto s = AggregateState::from_density(rho, 100);
        CHECK(std::accumulate(s.counts.begin(), s.counts.end(), 0L) == 100);
        for (long c : s.counts) {
            CHECK((c == 33 || c == 34));
        }
        const std::vector<double> half{0.5, 0.5};
        const auto h = AggregateState::from_density(half, 64);
        CHECK(h.counts[0] == 32);
        CHECK(h.eta(1) == 0.5);
    }

    TEST_CASE("absorbing states of the lumped chain")
    {
        const Game g = Game::coordination(20.0 / 3.0, 10.0 / 3.0);
        std::mt19937_64 rng(1);
        const auto cni = RateRule::imitative(ResponseFunction::positive_part());
        AggregateState mono{{100, 0}, 100};
        CHECK(std::isinf(lumped_step(mono, cni, g, rng)));
        CHECK(mono.counts[0] == 100);
        run_lumped(mono, cni, g, 10.0, rng);
        CHECK(mono.counts[0] == 100);

        std::vector<double> out(2);
        ode_rhs(std::vector<double>{1.0, 0.0}, cni, g, out);
        CHECK(out[0] == 0.0);
        CHECK(out[1] == 0.0);
        // Logit is never absorbing.
        AggregateState l{{100, 0}, 100};
        CHECK(std::isfinite(lumped_step(l, RateRule::logit(), g, rng)));
    }

    TEST_CASE("first jumps of the micro chain and the lumped chain agree")
    {
        // With a uniform kernel every site sees the global histogram, so the
        // micro process lumps exactly.
        const Game g = Game::coordination(2.0, 1.0);
        const auto rule = RateRule::imitative(ResponseFunction::regularized(1.0));
        const auto meso = Grid::periodic_1d(4, 0.0, 1.0);
        auto d = std::make_shared<const LatticeDomain>(LatticeDomain::make(Kernel::uniform(1), meso, 20));
        std::vector<std::uint8_t> sigma(20, 1);
        for (int x = 0; x < 7; ++x) {
            sigma[static_cast<std::size_t>(x)] = 0;
        }
        const auto [p01, rate] = first_jump(rule, g, 7.0 / 20.0);

        const int reps = 20000;
        long micro01 = 0;
        long lumped01 = 0;
        double micro_wait = 0.0;
        double lumped_wait = 0.0;
        std::mt19937_64 rng(5);
        for (int r = 0; r < reps; ++r) {
            LatticeState s(d, 2, sigma);
            MicroRunOptions opt;
            opt.record_events = true;
            opt.max_events = 1;
            const auto res = run(s, rule, g, 1e9, stats::child_seed(9, static_cast<std::uint64_t>(r)), opt);
            micro01 += res.events.at(0).strategy == 1 ? 1 : 0;
            micro_wait += res.events.at(0).time;

            AggregateState a{{7, 13}, 20};
            lumped_wait += lumped_step(a, rule, g, rng);
            lumped01 += a.counts[0] == 6 ? 1 : 0;
        }
        const double sd = std::sqrt(p01 * (1.0 - p01) / reps);
        CHECK(std::abs(static_cast<double>(micro01) / reps - p01) <= 3.0 * sd);
        CHECK(std::abs(static_cast<double>(lumped01) / reps - p01) <= 3.0 * sd);
        // Waiting times are exponential with mean 1 / (20 rate).
        const double mean_wait = 1.0 / (20.0 * rate);
        const double wsd = mean_wait / std::sqrt(static_cast<double>(reps));
        CHECK(std::abs(micro_wait / reps - mean_wait) <= 3.5 * wsd);
        CHECK(std::abs(lumped_wait / reps - mean_wait) <= 3.5 * wsd);
    }

    TEST_CASE("mean-field vector fields")
    {
        const Game g = Game::coordination(20.0 / 3.0, 10.0 / 3.0);
        const auto cni = RateRule::imitative(ResponseFunction::positive_part());
        std::vector<double> out(2);
        for (double p : {0.1, 1.0 / 3.0, 0.5, 0.9}) {
            ode_rhs(std::vector<double>{p, 1.0 - p}, cni, g, out);
            CHECK(out[0] == doctest::Approx(10.0 * p * (1.0 - p) * (p - 1.0 / 3.0)).epsilon(1e-13));
            CHECK(std::abs(out[0] + out[1]) < 1e-14);
        }
        // kappa only enters through F(s) - F(-s) = s.
        for (double kappa : {0.5, 5.0, 50.0}) {
            ode_rhs(std::vector<double>{0.7, 0.3}, RateRule::imitative(ResponseFunction::regularized(kappa)), g, out);
            CHECK(out[0] == doctest::Approx(10.0 * 0.7 * 0.3 * (0.7 - 1.0 / 3.0)).epsilon(1e-12));
        }
        // Logit: rest point where p = l(beta (p - zeta)).
        const Game g1 = Game::coordination(2.0 / 3.0, 1.0 / 3.0);
        double lo = 0.0;
        double hi = 1.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (logistic(mid - 1.0 / 3.0) - mid > 0 ? lo : hi) = mid;
        }
        ode_rhs(std::vector<double>{lo, 1.0 - lo}, RateRule::logit(), g1, out);
        CHECK(std::abs(out[0]) < 1e-14);

        // Three-strategy replicator: rho_i (u_i - average payoff).
        const Game g3(3, {1.0, 0.2, 0.0, 0.0, 2.0, 0.5, 0.3, 0.0, 1.5});
        const std::vector<double> rho{0.2, 0.5, 0.3};
        std::vector<double> u(3), out3(3);
        g3.payoff_vector(rho, u);
        const double avg = rho[0] * u[0] + rho[1] * u[1] + rho[2] * u[2];
        ode_rhs(rho, cni, g3, out3);
        for (int i = 0; i < 3; ++i) {
            CHECK(out3[static_cast<std::size_t>(i)] == doctest::Approx(rho[static_cast<std::size_t>(i)] * (u[static_cast<std::size_t>(i)] - avg)).epsilon(1e-13));
        }
        CHECK(std::abs(out3[0] + out3[1] + out3[2]) < 1e-14);
    }

    TEST_CASE("ODE solution")
    {
        const Game g = Game::coordination(20.0 / 3.0, 10.0 / 3.0);
        const std::vector<double> rho0{0.5, 0.5};
        const auto sol = integrate_ode(rho0, RateRule::imitative(ResponseFunction::positive_part()),
                                       Dynamic::ImitativeReplicator, g, 2.0, 1e-3);
        CHECK(sol.times.front() == 0.0);
        CHECK(sol.times.back() == doctest::Approx(2.0));
        double prev = 0.5;
        for (const auto& s : sol.states) {
            CHECK(s[0] >= prev - 1e-15);
            CHECK(std::abs(s[0] + s[1] - 1.0) < 1e-12);
            prev = s[0];
        }
        const auto mid = sol.at(1.0);
        CHECK(mid[0] > 0.5);
        CHECK(mid[0] < sol.states.back()[0]);
    }

    TEST_CASE("deviation harness")
    {
        const Game g = Game::coordination(2.0 / 3.0, 1.0 / 3.0);
        const std::vector<double> rho0{1.0 / 6.0, 5.0 / 6.0};
        const auto wide = deviation_harness(RateRule::logit(), g, rho0, {4, 8}, 1, 1.0, 1.5, 20, 3);
        for (const auto& row : wide.rows) {
            CHECK(row.exceedance == 0.0);
        }
        const auto t = deviation_harness(RateRule::logit(), g, rho0, {8, 16, 32}, 1, 1.0, 0.1, 200, 4);
        REQUIRE(t.rows.size() == 3);
        CHECK(t.rows[0].exceedance >= t.rows[2].exceedance);
        CHECK(t.rows[0].mean_sup_deviation > t.rows[2].mean_sup_deviation);
        CHECK(t.to_csv().find("exceedance") != std::string::npos);

        const auto again = deviation_harness(RateRule::logit(), g, rho0, {8, 16, 32}, 1, 1.0, 0.1, 200, 4);
        for (std::size_t r = 0; r < 3; ++r) {
            CHECK(again.rows[r].exceedance == t.rows[r].exceedance);
        }
    }

    TEST_CASE("statistics helpers")
    {
        std::mt19937_64 rng(2);
        std::normal_distribution<double> n01(0.0, 1.0);
        std::vector<double> a(2000), b(2000), c(2000);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = n01(rng);
            b[i] = n01(rng);
            c[i] = n01(rng) + 0.5;
        }
        CHECK(stats::ks_two_sample(a, b).p_value > 0.001);
        CHECK(stats::ks_two_sample(a, c).p_value < 1e-6);
        CHECK(stats::ks_two_sample(a, a).statistic == 0.0);

        const auto fit = stats::linear_fit({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
        CHECK(fit.slope == doctest::Approx(2.0));
        CHECK(fit.intercept == doctest::Approx(1.0));
        CHECK(fit.residual < 1e-12);
        CHECK(stats::child_seed(1, 0) != stats::child_seed(1, 1));
        CHECK(stats::child_seed(1, 0) == stats::child_seed(1, 0));
    }
}

#include "doctest.h"

#include "kacgame/micro.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>

using namespace kacgame;
using std::numbers::pi;

namespace {

std::shared_ptr<const LatticeDomain> make_domain(const Kernel& j, const Grid& g, int n)
{
    return std::make_shared<const LatticeDomain>(LatticeDomain::make(j, g, n));
}

DensityField constant2(const Grid& g, double p1)
{
    const std::vector<double> rho{p1, 1.0 - p1};
    return DensityField::constant(g, rho);
}

} // namespace

TEST_SUITE("micro")
{
    TEST_CASE("sampling product measures")
    {
        const auto meso = Grid::periodic_1d(64, -pi, pi);
        auto d = make_domain(Kernel::indicator_ball(1e-5, 1), meso, 1000000);
        const auto pure = sample_initial(constant2(meso, 1.0), d, 1);
        CHECK(pure.counts()[0] == 1000000);

        const auto mixed = sample_initial(constant2(meso, 1.0 / 3.0), d, 2);
        const double n = 1e6;
        const double eta = static_cast<double>(mixed.counts()[0]) / n;
        const double sd = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / n);
        CHECK(std::abs(eta - 1.0 / 3.0) <= 3.0 * sd);

        // Island 1{-pi/6 < x < pi/6}.
        const auto meso512 = Grid::periodic_1d(512, -pi, pi);
        std::vector<double> p(512);
        for (int v = 0; v < 512; ++v) {
            const double x = meso512.coord(0, v);
            p[static_cast<std::size_t>(v)] = (x > -pi / 6 && x < pi / 6) ? 1.0 : 0.0;
        }
        auto d2 = make_domain(Kernel::gaussian(2.0, 1, 1e-8), meso512, 2048);
        const auto island = sample_initial(DensityField::from_p(meso512, p), d2, 3);
        for (std::size_t x = 0; x < island.size(); ++x) {
            const double pos = d2->lattice.coord(0, static_cast<int>(x));
            if (island.strategy(x) == 0) {
                CHECK(std::abs(pos) < pi / 6 + meso512.spacing());
            }
            if (std::abs(pos) < pi / 6 - meso512.spacing()) {
                CHECK(island.strategy(x) == 0);
            }
        }
        const auto em = empirical(island, meso512);
        for (int v = 0; v < 512; ++v) {
            CHECK(em.density.at(0, static_cast<std::size_t>(v)) == p[static_cast<std::size_t>(v)]);
        }

        std::vector<double> bad(512, 1.5);
        CHECK_THROWS_AS(sample_initial(DensityField::from_p(meso512, bad), d2, 1), Error);
    }

    TEST_CASE("local field cache")
    {
        const auto meso = Grid::periodic_2d(16, -pi, pi);
        auto d = make_domain(Kernel::gaussian(15.0, 2), meso, 32);
        const std::vector<double> rho{0.3, 0.3, 0.4};
        auto s = sample_initial(DensityField::constant(meso, rho), d, 4);
        for (std::size_t x = 0; x < s.size(); ++x) {
            double sum = 0.0;
            for (double w : s.local_field(x)) {
                sum += w;
            }
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
        std::mt19937_64 rng(8);
        std::uniform_int_distribution<std::size_t> site(0, s.size() - 1);
        std::uniform_int_distribution<int> strat(0, 2);
        for (int flip = 0; flip < 10000; ++flip) {
            s.set(site(rng), strat(rng));
        }
        CHECK(s.cache_error() < 1e-9);
        long total = 0;
        for (long c : s.counts()) {
            total += c;
        }
        CHECK(total == static_cast<long>(s.size()));
    }

    TEST_CASE("site rates")
    {
        const auto meso = Grid::periodic_1d(8, -pi, pi);
        const Game g = Game::coordination(2.0 / 3.0, 1.0 / 3.0);
        auto d = make_domain(Kernel::uniform(1), meso, 40);
        std::vector<std::uint8_t> sigma(40, 0);
        for (int x = 0; x < 40; x += 3) {
            sigma[static_cast<std::size_t>(x)] = 1;
        }
        LatticeState a(d, 2, sigma);
        std::reverse(sigma.begin(), sigma.end());
        LatticeState b(d, 2, sigma);
        const auto rule = RateRule::imitative(ResponseFunction::regularized(2.0));
        const double ref = site_rate(a, 1, 1, rule, g);
        for (std::size_t x = 0; x < 40; ++x) {
            if (a.strategy(x) == 0) {
                CHECK(site_rate(a, x, 1, rule, g) == doctest::Approx(ref).epsilon(1e-14));
            }
            if (b.strategy(x) == 0) {
                CHECK(site_rate(b, x, 1, rule, g) == doctest::Approx(ref).epsilon(1e-14));
            }
        }

        LatticeState mono(d, 2, std::vector<std::uint8_t>(40, 0));
        CHECK(site_rate(mono, 5, 1, rule, g) == 0.0);
        // Logit in an all-strategy-1 neighborhood: probability of 1 is e^{2/3} / (e^{2/3} + 1).
        const double to_two = site_rate(mono, 5, 1, RateRule::logit(), g);
        CHECK(1.0 - to_two == doctest::Approx(0.660756368765817).epsilon(1e-13));
    }

    TEST_CASE("absorbing states and determinism")
    {
        const auto meso = Grid::periodic_1d(16, -pi, pi);
        const Game g = Game::coordination(20.0 / 3.0, 10.0 / 3.0);
        auto d = make_domain(Kernel::gaussian(2.0, 1, 1e-8), meso, 128);
        LatticeState mono(d, 2, std::vector<std::uint8_t>(128, 1));
        const auto res = run(mono, RateRule::imitative(ResponseFunction::positive_part()), g, 50.0, 1);
        CHECK(res.accepted == 0);
        CHECK(mono.counts()[1] == 128);

        MicroRunOptions opt;
        opt.record_events = true;
        auto s1 = sample_initial(constant2(meso, 0.5), d, 9);
        auto s2 = sample_initial(constant2(meso, 0.5), d, 9);
        const auto r1 = run(s1, RateRule::logit(), g, 2.0, 77, opt);
        const auto r2 = run(s2, RateRule::logit(), g, 2.0, 77, opt);
        REQUIRE(r1.events.size() == r2.events.size());
        CHECK(r1.events.size() > 20);
        for (std::size_t e = 0; e < r1.events.size(); ++e) {
            CHECK(r1.events[e].time == r2.events[e].time);
            CHECK(r1.events[e].site == r2.events[e].site);
            CHECK(r1.events[e].strategy == r2.events[e].strategy);
        }
        CHECK(s1.sigma() == s2.sigma());
        CHECK(s1.cache_error() < 1e-9);
        CHECK_THROWS_AS(run(s1, RateRule::logit(), g, -1.0, 1), Error);
    }

    TEST_CASE("frozen sites never change and counts are conserved")
    {
        const auto meso = Grid::fixed_1d(48, -3.0, 3.0, 2.0);
        const Game g = Game::coordination(20.0 / 3.0, 10.0 / 3.0);
        auto d = make_domain(Kernel::gaussian(2.0, 1), meso, 300);
        std::vector<double> p(48);
        for (int v = 0; v < 48; ++v) {
            p[static_cast<std::size_t>(v)] = meso.coord(0, v) > 0 ? 1.0 : 0.0;
        }
        auto s = sample_initial(DensityField::from_p(meso, p), d, 5);
        const auto before = s.sigma();
        MicroRunOptions opt;
        opt.snapshot_times = {0.5, 1.0, 1.5};
        int snaps = 0;
        opt.on_snapshot = [&](double, const LatticeState& st) {
            ++snaps;
            CHECK(st.counts()[0] + st.counts()[1] == 300);
        };
        const auto res = run(s, RateRule::logit(), g, 2.0, 3, opt);
        CHECK(snaps == 3);
        CHECK(res.accepted > 0);
        for (std::size_t x = 0; x < s.size(); ++x) {
            if (d->active[x] == 0) {
                CHECK(s.strategy(x) == before[x]);
            }
        }
        for (std::size_t x : d->active_sites) {
            double sum = 0.0;
            for (double w : s.local_field(x)) {
                sum += w;
            }
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
    }

    TEST_CASE("thinning reproduces the generator's jump probabilities")
    {
        // Two sites, uniform kernel: the local field is the histogram of both sites.
        const auto meso = Grid::periodic_1d(2, 0.0, 2.0);
        const Game g = Game::coordination(2.0, 1.0);
        auto d = make_domain(Kernel::uniform(1), meso, 2);
        LatticeState s(d, 2, {0, 1});
        MicroRunOptions opt;
        opt.record_events = true;
        opt.max_events = 100000;
        const auto res = run(s, RateRule::logit(), g, 1e9, 12, opt);
        REQUIRE(res.events.size() == 100000);

        // Exact generator: from each state, probabilities of the possible flips.
        auto logit2 = [&](double m0) {
            const double u0 = 2.0 * m0;
            const double u1 = 1.0 * (1.0 - m0);
            return std::exp(u0) / (std::exp(u0) + std::exp(u1));
        };
        std::map<std::pair<int, int>, std::map<int, long>> seen;
        std::vector<std::uint8_t> sigma{0, 1};
        for (const auto& e : res.events) {
            const int state = sigma[0] * 2 + sigma[1];
            seen[{state, 0}][static_cast<int>(e.site)] += 1;
            sigma[e.site] = e.strategy;
        }
        for (int state = 0; state < 4; ++state) {
            const int s0 = state / 2;
            const int s1 = state % 2;
            const double m0 = ((s0 == 0) + (s1 == 0)) / 2.0;
            const double p_to0 = logit2(m0);
            const double r0 = s0 == 0 ? 1.0 - p_to0 : p_to0;
            const double r1 = s1 == 0 ? 1.0 - p_to0 : p_to0;
            const double prob_site0 = r0 / (r0 + r1);
            const auto& counts = seen[{state, 0}];
            const long n = (counts.count(0) ? counts.at(0) : 0) + (counts.count(1) ? counts.at(1) : 0);
            if (n < 100) {
                continue;
            }
            const double freq = static_cast<double>(counts.count(0) ? counts.at(0) : 0) / static_cast<double>(n);
            const double sd = std::sqrt(prob_site0 * (1.0 - prob_site0) / static_cast<double>(n));
            CHECK(std::abs(freq - prob_site0) <= 3.0 * sd + 1e-12);
        }
    }

    TEST_CASE("empirical measures")
    {
        const auto meso = Grid::periodic_2d(4, 0.0, 4.0);
        auto d = make_domain(Kernel::indicator_ball(0.3, 2), meso, 8);
        std::vector<std::uint8_t> checker(64);
        for (int i = 0; i < 8; ++i) {
            for (int j = 0; j < 8; ++j) {
                checker[static_cast<std::size_t>(i * 8 + j)] = static_cast<std::uint8_t>((i + j) % 2);
            }
        }
        LatticeState s(d, 2, checker);
        const auto em = empirical(s, meso);
        for (std::size_t v = 0; v < meso.size(); ++v) {
            CHECK(em.density.at(0, v) == 0.5);
            CHECK(em.density.at(1, v) == 0.5);
        }
        CHECK(em.eta[0] + em.eta[1] == 1.0);

        LatticeState mono(d, 2, std::vector<std::uint8_t>(64, 1));
        const auto em2 = empirical(mono, meso);
        for (std::size_t v = 0; v < meso.size(); ++v) {
            CHECK(em2.density.at(1, v) == 1.0);
        }
    }

    TEST_CASE("thinning bound violations are reported")
    {
        const auto meso = Grid::periodic_1d(4, 0.0, 4.0);
        auto d = make_domain(Kernel::uniform(1), meso, 10);
        const Game g = Game::coordination(2.0, 1.0);
        std::vector<std::uint8_t> sigma(10, 0);
        sigma[0] = 1;
        LatticeState s(d, 2, sigma);
        MicroRunOptions opt;
        opt.rate_bound = 1e-3;
        CHECK_THROWS_AS(run(s, RateRule::logit(), g, 1e6, 1, opt), Error);
    }

    TEST_CASE("rate limit discrepancy shrinks with gamma")
    {
        const Game g = Game::coordination(2.0 / 3.0, 1.0 / 3.0);
        const auto rule = RateRule::imitative(ResponseFunction::regularized(20.0));

        const auto uni = rate_limit_check(rule, g, Kernel::uniform(1), Grid::periodic_1d(8, -pi, pi), {32, 64}, 50, 1);
        for (double v : uni.discrepancy) {
            CHECK(v < 1e-12);
        }

        const auto gauss = rate_limit_check(rule, g, Kernel::gaussian(15.0, 2), Grid::periodic_2d(8, -pi, pi),
                                            {32, 64, 128}, 40, 2);
        CHECK(gauss.decreasing());
        CHECK(gauss.discrepancy.back() < 1e-6);

        const auto ball = rate_limit_check(rule, g, Kernel::indicator_ball(1.0, 1), Grid::periodic_1d(8, -pi, pi),
                                           {32, 64, 128}, 200, 3);
        CHECK(ball.discrepancy[1] < ball.discrepancy[0]);
        CHECK(ball.discrepancy[2] < ball.discrepancy[1]);

        const auto fixed = rate_limit_check(rule, g, Kernel::indicator_ball(1.0, 1), Grid::fixed_1d(8, -3.0, 3.0, 1.0),
                                            {96, 192, 384}, 200, 4);
        CHECK(fixed.discrepancy[1] < fixed.discrepancy[0]);
        CHECK(fixed.discrepancy[2] < fixed.discrepancy[1]);
    }
}

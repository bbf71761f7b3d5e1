#include "kacgame/meanfield.hpp"
#include "kacgame/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace kacgame {

AggregateState AggregateState::from_density(std::span<const double> rho, long total)
{
    if (total < 1) {
        throw Error(ErrorKind::InvalidArgument, "aggregate state needs at least one agent");
    }
    AggregateState s;
    s.total = total;
    s.counts.resize(rho.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    long assigned = 0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        const double exact = rho[i] * static_cast<double>(total);
        s.counts[i] = static_cast<long>(std::floor(exact));
        assigned += s.counts[i];
        remainders.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < total && r < remainders.size(); ++r, ++assigned) {
        ++s.counts[remainders[r].second];
    }
    return s;
}

std::vector<double> AggregateState::eta() const
{
    std::vector<double> e(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        e[i] = eta(static_cast<int>(i));
    }
    return e;
}

double lumped_step(AggregateState& state, const RateRule& rule, const Game& game, std::mt19937_64& rng)
{
    const int ns = game.num_strategies();
    const auto un = static_cast<std::size_t>(ns);
    const auto eta = state.eta();
    std::vector<double> payoff(un);
    game.payoff_vector(eta, payoff);
    std::vector<double> rates(un * un, 0.0);
    double total = 0.0;
    for (int j = 0; j < ns; ++j) {
        if (state.counts[static_cast<std::size_t>(j)] == 0) {
            continue;
        }
        for (int k = 0; k < ns; ++k) {
            if (k == j) {
                continue;
            }
            const double r = static_cast<double>(state.counts[static_cast<std::size_t>(j)])
                * mean_rate(rule, j, k, payoff, eta);
            rates[static_cast<std::size_t>(j * ns + k)] = r;
            total += r;
        }
    }
    if (!(total > 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    std::exponential_distribution<double> wait(total);
    const double dt = wait(rng);
    std::uniform_real_distribution<double> unif(0.0, total);
    const double u = unif(rng);
    double acc = 0.0;
    std::size_t pick = 0;
    for (std::size_t m = 0; m < rates.size(); ++m) {
        if (rates[m] <= 0.0) {
            continue;
        }
        pick = m;
        acc += rates[m];
        if (u < acc) {
            break;
        }
    }
    --state.counts[pick / un];
    ++state.counts[pick % un];
    return dt;
}

void run_lumped(AggregateState& state, const RateRule& rule, const Game& game, double t_end, std::mt19937_64& rng,
                const std::function<void(double, const AggregateState&)>& observer)
{
    if (observer) {
        observer(0.0, state);
    }
    double t = 0.0;
    while (true) {
        // Peek on a copy so that a jump past t_end is discarded.
        AggregateState next = state;
        const double dt = lumped_step(next, rule, game, rng);
        if (!std::isfinite(dt) || t + dt > t_end) {
            return;
        }
        t += dt;
        state = std::move(next);
        if (observer) {
            observer(t, state);
        }
    }
}

void ode_rhs(std::span<const double> rho, const RateRule& rule, const Game& game, std::span<double> out)
{
    const int ns = game.num_strategies();
    const auto un = static_cast<std::size_t>(ns);
    std::vector<double> payoff(un);
    game.payoff_vector(rho, payoff);
    std::vector<double> c(un * un, 0.0);
    for (int i = 0; i < ns; ++i) {
        for (int k = 0; k < ns; ++k) {
            c[static_cast<std::size_t>(i * ns + k)] = i == k ? 0.0 : mean_rate(rule, i, k, payoff, rho);
        }
    }
    for (int i = 0; i < ns; ++i) {
        double in = 0.0;
        double outflow = 0.0;
        for (int k = 0; k < ns; ++k) {
            in += c[static_cast<std::size_t>(k * ns + i)] * rho[static_cast<std::size_t>(k)];
            outflow += c[static_cast<std::size_t>(i * ns + k)];
        }
        out[static_cast<std::size_t>(i)] = in - rho[static_cast<std::size_t>(i)] * outflow;
    }
}

std::vector<double> OdeSolution::at(double t) const
{
    if (times.empty()) {
        throw Error(ErrorKind::InvalidArgument, "empty ODE solution");
    }
    if (t <= times.front()) {
        return states.front();
    }
    if (t >= times.back()) {
        return states.back();
    }
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto hi = static_cast<std::size_t>(it - times.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    std::vector<double> out(states[lo].size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (1.0 - w) * states[lo][i] + w * states[hi][i];
    }
    return out;
}

OdeSolution integrate_ode(std::span<const double> rho0, const RateRule& rule, Dynamic dynamic, const Game& game,
                          double t_end, double dt)
{
    const Grid g = Grid::single_node();
    IdeSystem sys(game, rule, dynamic, DiscreteKernel::identity(1), g, ConvolutionMethod::DirectSerial);
    OdeSolution sol;
    integrate(sys, DensityField::constant(g, rho0), t_end, dt, {}, [&](double t, const DensityField& f) {
        sol.times.push_back(t);
        std::vector<double> s(static_cast<std::size_t>(f.num_strategies()));
        for (int i = 0; i < f.num_strategies(); ++i) {
            s[static_cast<std::size_t>(i)] = f.at(i, 0);
        }
        sol.states.push_back(std::move(s));
    });
    return sol;
}

std::string DeviationTable::to_csv() const
{
    std::ostringstream os;
    os.precision(10);
    os << "n,agents,exceedance,mean_sup_deviation\n";
    for (const auto& r : rows) {
        os << r.n << ',' << r.agents << ',' << r.exceedance << ',' << r.mean_sup_deviation << '\n';
    }
    return os.str();
}

namespace {

double sup_gap(std::span<const double> a, std::span<const double> b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

} // namespace

DeviationTable deviation_harness(const RateRule& rule, const Game& game, std::span<const double> rho0,
                                 const std::vector<int>& n_list, int dim, double horizon, double eps, int replicas,
                                 std::uint64_t seed)
{
    if (replicas < 1) {
        throw Error(ErrorKind::InvalidArgument, "deviation harness needs replicas");
    }
    DeviationTable table;
    table.eps = eps;
    table.horizon = horizon;
    for (std::size_t row = 0; row < n_list.size(); ++row) {
        const int n = n_list[row];
        const long agents = dim == 1 ? n : static_cast<long>(n) * n;
        const AggregateState start = AggregateState::from_density(rho0, agents);
        const auto eta0 = start.eta();
        const OdeSolution ode = integrate_ode(eta0, rule, Dynamic::GeneralInputOutput, game, horizon, 1e-3);

        std::vector<double> sup_dev(static_cast<std::size_t>(replicas), 0.0);
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < replicas; ++r) {
            std::mt19937_64 rng(stats::child_seed(seed, row * 1000003ULL + static_cast<std::uint64_t>(r)));
            AggregateState s = start;
            std::vector<double> prev = s.eta();
            double worst = 0.0;
            std::size_t grid_pos = 0;
            // Piecewise-constant eta: check ODE steps inside each holding interval
            // and both one-sided limits at every jump.
            auto advance_grid = [&](double until, const std::vector<double>& held) {
                while (grid_pos < ode.times.size() && ode.times[grid_pos] < until) {
                    worst = std::max(worst, sup_gap(held, ode.states[grid_pos]));
                    ++grid_pos;
                }
            };
            run_lumped(s, rule, game, horizon, rng, [&](double t, const AggregateState& st) {
                const auto now = st.eta();
                const auto rho = ode.at(t);
                advance_grid(t, prev);
                worst = std::max({worst, sup_gap(prev, rho), sup_gap(now, rho)});
                prev = now;
            });
            advance_grid(horizon + 1.0, prev);
            sup_dev[static_cast<std::size_t>(r)] = worst;
        }
        DeviationRow out;
        out.n = n;
        out.agents = agents;
        out.mean_sup_deviation = stats::mean(sup_dev);
        out.exceedance = static_cast<double>(std::count_if(sup_dev.begin(), sup_dev.end(),
                                                           [&](double v) { return v >= eps; }))
            / static_cast<double>(replicas);
        table.rows.push_back(out);
    }

    // Fit over rows in the tail regime; fall back to every nonzero row.
    std::vector<double> xs, ys;
    for (const auto& r : table.rows) {
        if (r.exceedance > 0.0 && r.exceedance <= 0.5) {
            xs.push_back(static_cast<double>(r.agents));
            ys.push_back(std::log(r.exceedance));
        }
    }
    if (xs.size() < 2) {
        xs.clear();
        ys.clear();
        for (const auto& r : table.rows) {
            if (r.exceedance > 0.0) {
                xs.push_back(static_cast<double>(r.agents));
                ys.push_back(std::log(r.exceedance));
            }
        }
    }
    table.fitted_rows = static_cast<int>(xs.size());
    if (xs.size() >= 2) {
        table.slope = stats::linear_fit(xs, ys).slope;
    }
    return table;
}

} // namespace kacgame

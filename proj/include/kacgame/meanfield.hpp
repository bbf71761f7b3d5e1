#pragma once

// Mean-field tier: the lumped aggregate chain, the mean-field ODE and the
// deviation-probability harness.

#include "kacgame/game.hpp"
#include "kacgame/ide.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace kacgame {

/// Strategy histogram of a population of `total` = n^d agents.
struct AggregateState {
    std::vector<long> counts;
    long total = 0;

    /// Counts closest to rho (largest remainders), summing to total.
    static AggregateState from_density(std::span<const double> rho, long total);
    double eta(int i) const { return static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(total); }
    std::vector<double> eta() const;
};

/// Next jump of the lumped chain: pair (j, k) at rate total eta(j) c(j, k, eta),
/// moving one agent from j to k. Returns the waiting time, or +inf when the
/// state is absorbing (the state is then unchanged).
double lumped_step(AggregateState& state, const RateRule& rule, const Game& game, std::mt19937_64& rng);

/// Runs the chain to t_end; observer(t, state) sees the state after each jump
/// and at t = 0.
void run_lumped(AggregateState& state, const RateRule& rule, const Game& game, double t_end, std::mt19937_64& rng,
                const std::function<void(double, const AggregateState&)>& observer = {});

/// sum_k c(k, i, rho) rho(k) - rho(i) sum_k c(i, k, rho).
void ode_rhs(std::span<const double> rho, const RateRule& rule, const Game& game, std::span<double> out);

struct OdeSolution {
    std::vector<double> times;
    /// states[t][i]
    std::vector<std::vector<double>> states;

    /// Linear interpolation in t.
    std::vector<double> at(double t) const;
};

/// Mean-field ODE through the IDE integrator on a one-node grid, recording
/// every step.
OdeSolution integrate_ode(std::span<const double> rho0, const RateRule& rule, Dynamic dynamic, const Game& game,
                          double t_end, double dt);

struct DeviationRow {
    int n = 0;
    long agents = 0;
    double exceedance = 0.0;
    double mean_sup_deviation = 0.0;
};

struct DeviationTable {
    std::vector<DeviationRow> rows;
    /// Slope of log(exceedance) against n^d.
    double slope = 0.0;
    int fitted_rows = 0;
    double eps = 0.0;
    double horizon = 0.0;

    std::string to_csv() const;
};

/// For each n, `replicas` independent lumped chains of n^d agents from the
/// histogram nearest rho0, against the ODE started from that histogram.
/// sup_t max_i |eta_t(i) - rho_t(i)| is evaluated at the ODE steps and on
/// both sides of every jump. Replicas run in parallel.
DeviationTable deviation_harness(const RateRule& rule, const Game& game, std::span<const double> rho0,
                                 const std::vector<int>& n_list, int dim, double horizon, double eps, int replicas,
                                 std::uint64_t seed);

} // namespace kacgame

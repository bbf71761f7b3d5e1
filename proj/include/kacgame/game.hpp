#pragma once

// Normal-form games, response functions and the strategy-revision rate
// catalog shared by the microscopic, mesoscopic and mean-field tiers.

#include "kacgame/errors.hpp"

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace kacgame {

/// Symmetric normal-form game with payoff a(i, j) for playing i against j.
/// Strategies are indexed 0..n-1; the 1-based labels only appear in I/O.
class Game {
public:
    Game(int num_strategies, std::vector<double> payoff);

    /// Two-strategy coordination game with a(1,2) = a(2,1) = 0.
    static Game coordination(double a11, double a22);

    int num_strategies() const { return n_; }
    double a(int i, int j) const { return payoff_[static_cast<size_t>(i * n_ + j)]; }
    const std::vector<double>& payoff() const { return payoff_; }

    double min_payoff() const;
    double max_payoff() const;

    /// out[k] = sum_l a(k, l) * m[l].
    void payoff_vector(std::span<const double> m, std::span<double> out) const;

private:
    int n_;
    std::vector<double> payoff_;
};

struct CoordinationParams {
    double zeta; ///< mixed Nash equilibrium a22 / (a11 + a22)
    double beta; ///< payoff scale a11 + a22
};

/// Throws Error(NotCoordinationGame) unless off-diagonals vanish and the
/// diagonal is positive.
CoordinationParams coordination_params(const Game& g);

/// Inverse of coordination_params: a11 = beta (1 - zeta), a22 = beta zeta.
Game game_from_coordination(CoordinationParams p);

enum class ResponseKind { PositivePart, Regularized, Exponential, Metropolis, Affine };

/// Nonnegative response F applied to a payoff (or payoff difference).
struct ResponseFunction {
    ResponseKind kind = ResponseKind::PositivePart;
    double kappa = std::numeric_limits<double>::infinity();
    double slope = 1.0;
    double offset = 0.0;

    static ResponseFunction positive_part();
    /// F_kappa(s) = log(exp(kappa s) + 1) / kappa. kappa = inf gives [s]_+.
    static ResponseFunction regularized(double kappa);
    static ResponseFunction exponential();
    /// min(1, exp(s)).
    static ResponseFunction metropolis();
    /// max(0, slope * s + offset).
    static ResponseFunction affine(double slope, double offset);

    double operator()(double s) const;
    /// dF/ds. At the kink of [s]_+ the symmetric value 1/2 is returned,
    /// which is the kappa -> inf limit of F_kappa'(0).
    double derivative(double s) const;
    /// Global Lipschitz constant on [-range, range].
    double lipschitz(double range) const;

    std::string describe() const;
};

double eval_response(const ResponseFunction& f, double s);

enum class RateFamily {
    TargetingInnovative,
    ComparingInnovative,
    TargetingNonInnovative,
    ComparingNonInnovative,
    Logit,
};

struct RateRule {
    RateFamily family = RateFamily::Logit;
    ResponseFunction response{};

    static RateRule logit() { return {RateFamily::Logit, {}}; }
    static RateRule imitative(ResponseFunction f) { return {RateFamily::ComparingNonInnovative, f}; }

    bool innovative() const;
    std::string describe() const;
};

/// Limiting rate c(u, i, k, .) of switching from i to k, given the payoff
/// vector and neighbor weights (J * f or the local field w).
double mean_rate(const RateRule& rule, int i, int k, std::span<const double> payoff,
                 std::span<const double> neighbor_weights);

/// Softmax of payoffs with log-sum-exp stabilization.
void logit_probabilities(std::span<const double> payoff, std::span<double> out);

/// Analytic sup of mean_rate over the payoff polytope (monotone F).
double rate_bound_analytic(const RateRule& rule, const Game& game);

/// Measured sup of mean_rate over a lattice on the local-field simplex.
double rate_sup_measured(const RateRule& rule, const Game& game, int resolution = 40);

/// Thinning bound: measured sup times 1.05, never above the analytic bound.
double thinning_bound(const RateRule& rule, const Game& game);

/// Finite-difference estimate of the L1 Lipschitz constant of mean_rate in
/// the local field, sampled over the simplex.
double rate_lipschitz_measured(const RateRule& rule, const Game& game, int samples = 2000,
                               unsigned long long seed = 1);

} // namespace kacgame

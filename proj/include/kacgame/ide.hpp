#pragma once

// Method-of-lines solver for the mesoscopic integro-differential equations.

#include "kacgame/convolution.hpp"
#include "kacgame/density.hpp"
#include "kacgame/game.hpp"
#include "kacgame/kernel.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace kacgame {

enum class Dynamic {
    GeneralInputOutput,
    Logit,
    ImitativeReplicator,
    BiologicalReplicator,
    TwoStrategyReducedReplicator,
    TwoStrategyReducedLogit,
};

enum class ConvolutionMethod { Fft, DirectParallel, DirectSerial };

const char* to_string(Dynamic d);
Dynamic dynamic_from_string(const std::string& s);

/// F_R(r, s) = (1-s) r F(beta (r - zeta)) - s (1-r) F(beta (zeta - r)) for the
/// replicator, F_L(r, s) = l(beta (r - zeta)) - s for logit; r stands for J*p
/// and s for p.
double reduced_F(Dynamic dynamic, double r, double s, CoordinationParams params, const ResponseFunction& response);

/// Logistic function l(x) = 1 / (1 + exp(-x)), overflow-safe.
double logistic(double x);

/// Tendency at one node given g = J * f and f there. `rule` must already be
/// the dynamic's effective rule; `params` is only read by reduced dynamics.
void local_tendency(Dynamic dynamic, const RateRule& rule, const Game& game, CoordinationParams params,
                    std::span<const double> g, std::span<const double> f, std::span<double> out);

class IdeSystem {
public:
    IdeSystem(Game game, RateRule rule, Dynamic dynamic, DiscreteKernel kernel, Grid grid,
              ConvolutionMethod method = ConvolutionMethod::Fft);
    ~IdeSystem();
    IdeSystem(IdeSystem&&) noexcept;

    const Game& game() const { return game_; }
    const RateRule& rule() const { return rule_; }
    Dynamic dynamic() const { return dynamic_; }
    const DiscreteKernel& kernel() const { return kernel_; }
    const Grid& grid() const { return grid_; }
    ConvolutionMethod method() const { return method_; }
    /// Only for two-strategy coordination games.
    CoordinationParams params() const;

    /// Rate rule equivalent to the dynamic, used for rate bounds.
    RateRule effective_rule() const;

    /// df/dt at every node; frozen nodes of a fixed grid get zero.
    void rhs(const DensityField& f, DensityField& out) const;
    /// J * f for one channel through the configured convolution path.
    void convolve(std::span<const double> in, std::span<double> out) const;

private:
    Game game_;
    RateRule rule_;
    Dynamic dynamic_;
    DiscreteKernel kernel_;
    Grid grid_;
    ConvolutionMethod method_;
    CoordinationParams params_{};
    std::unique_ptr<conv::FftConvolver> fft_;
};

struct IntegrationStats {
    long steps = 0;
    long projections = 0;
    /// Largest |sum_i f - 1| seen before any projection.
    double max_sum_drift = 0.0;
    /// Total drift removed by projection.
    double projected_drift = 0.0;
    double dt = 0.0;
};

struct IntegrationResult {
    std::vector<double> times;
    std::vector<DensityField> snapshots;
    IntegrationStats stats;
};

/// Called after every accepted step with (t, f).
using StepObserver = std::function<void(double, const DensityField&)>;

/// Classical RK4 from t = 0 to t_end, landing exactly on each snapshot time.
/// Throws Error(Instability) once a node leaves the simplex by more than 1e-6.
IntegrationResult integrate(const IdeSystem& system, const DensityField& f0, double t_end, double dt,
                            const std::vector<double>& snapshot_times, const StepObserver& observer = {});

/// Default step: min(0.05, 0.5 / L_rhs) with L_rhs = 2 |S| (M + L_rate).
double stable_dt(const IdeSystem& system);

} // namespace kacgame

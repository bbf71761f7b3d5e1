#pragma once

// Exact simulation of the microscopic strategy-revision process on a lattice
// with Kac interactions.

#include "kacgame/density.hpp"
#include "kacgame/game.hpp"
#include "kacgame/kernel.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace kacgame {

/// Lattice with one site per cell of `lattice` (a Grid whose nodes are the
/// sites), so site x sits at mesoscopic position lower + (x + 1/2) h.
/// With Fixed boundaries the sites outside the active region are frozen.
struct LatticeDomain {
    Grid lattice;
    DiscreteKernel kernel;
    std::vector<std::uint8_t> active;
    std::vector<std::size_t> active_sites;

    /// n sites per axis over the mesoscopic box of `meso`; the Kac parameter
    /// is the spacing h = L / n. Fixed grids keep their boundary width.
    static LatticeDomain make(const Kernel& j, const Grid& meso, int sites_per_axis);

    std::size_t size() const { return lattice.size(); }
    double gamma() const { return lattice.spacing(0); }
};

class LatticeState {
public:
    LatticeState(std::shared_ptr<const LatticeDomain> domain, int num_strategies, std::vector<std::uint8_t> sigma);

    const LatticeDomain& domain() const { return *domain_; }
    std::shared_ptr<const LatticeDomain> domain_ptr() const { return domain_; }
    int num_strategies() const { return strategies_; }
    std::size_t size() const { return sigma_.size(); }

    int strategy(std::size_t x) const { return sigma_[x]; }
    const std::vector<std::uint8_t>& sigma() const { return sigma_; }
    /// w(x, sigma, .) from the cache.
    std::span<const double> local_field(std::size_t x) const
    {
        return {field_.data() + x * static_cast<std::size_t>(strategies_), static_cast<std::size_t>(strategies_)};
    }
    /// Sites with each strategy (all sites, frozen included).
    const std::vector<long>& counts() const { return counts_; }

    /// Switch site x to strategy k, updating the cache over the kernel support.
    void set(std::size_t x, int k);
    /// Recompute the cache from scratch.
    void refresh();
    /// max |cached - recomputed| over all sites and strategies.
    double cache_error() const;

private:
    std::vector<double> compute_field() const;

    std::shared_ptr<const LatticeDomain> domain_;
    int strategies_;
    std::vector<std::uint8_t> sigma_;
    std::vector<double> field_;
    std::vector<long> counts_;
};

/// Independent draws with P(sigma(x) = i) = f(position of x, i), reading f
/// from the mesoscopic cell that contains the site.
LatticeState sample_initial(const DensityField& profile, std::shared_ptr<const LatticeDomain> domain,
                            std::uint64_t seed);

/// c(x, sigma, k) from the cached local field; 0 for k = sigma(x).
double site_rate(const LatticeState& state, std::size_t x, int k, const RateRule& rule, const Game& game);

struct MicroEvent {
    double time;
    std::uint32_t site;
    std::uint8_t strategy;
};

struct MicroRunOptions {
    bool record_events = false;
    std::vector<double> snapshot_times;
    /// Called with (t, state) at every snapshot time.
    std::function<void(double, const LatticeState&)> on_snapshot;
    /// Thinning bound; 0 selects thinning_bound(rule, game).
    double rate_bound = 0.0;
    /// Stop after this many accepted events (0: no limit).
    long max_events = 0;
};

struct MicroRunResult {
    std::vector<MicroEvent> events;
    long proposals = 0;
    long accepted = 0;
    double rate_bound = 0.0;
    double acceptance() const { return proposals > 0 ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0; }
};

/// Thinning: proposals at rate |active| |S| M, (x, k) uniform, accepted with
/// probability c / M. Throws Error(RateBound) if a rate exceeds M.
MicroRunResult run(LatticeState& state, const RateRule& rule, const Game& game, double t_end, std::uint64_t seed,
                   const MicroRunOptions& options = {});

struct EmpiricalMeasure {
    DensityField density;
    std::vector<double> eta;
};

/// Block averages of delta(sigma(x), i) over the cells of `grid`, plus the
/// global histogram over all sites.
EmpiricalMeasure empirical(const LatticeState& state, const Grid& grid);

struct RateLimitReport {
    std::vector<double> gammas;
    std::vector<double> discrepancy;
    /// Discrepancies below this are treated as roundoff.
    double floor = 1e-11;
    bool decreasing() const;
};

/// For each lattice size, sup over sampled (x, k) of |c^gamma(x, sigma, k) -
/// c(gamma x, sigma(x), k, pi^gamma)|, the limit rate evaluated against the
/// untruncated, unnormalized kernel over the whole domain (periodized on a
/// torus). Configurations are drawn uniformly at random.
RateLimitReport rate_limit_check(const RateRule& rule, const Game& game, const Kernel& j, const Grid& meso,
                                 const std::vector<int>& sites_per_axis, int samples, std::uint64_t seed);

} // namespace kacgame

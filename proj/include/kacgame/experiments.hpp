#pragma once

// Experiment orchestration: runs the configured scenarios through the right
// tier, computes the summary metrics and writes every artifact.

#include "kacgame/config.hpp"
#include "kacgame/density.hpp"
#include "kacgame/ide.hpp"
#include "kacgame/interface.hpp"
#include "kacgame/meanfield.hpp"
#include "kacgame/stability.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kacgame {

/// Time series of one IDE run, sampled after every step.
struct IdeTrajectory {
    std::string scenario;
    double dt = 0.0;
    std::vector<double> times;
    /// averages[t][i]: spatial average of strategy i over active nodes.
    std::vector<std::vector<double>> averages;
    std::vector<double> variance;
    /// NaN where the profile had no single interface.
    std::vector<double> interface_position;
    std::vector<double> interface_width;
    int interface_failures = 0;
    DensityField initial;
    std::vector<double> snapshot_times;
    std::vector<DensityField> snapshots;
    DensityField final_field;
    IntegrationStats stats;
    /// Mean-field ODE from the initial spatial average, at the same times.
    std::vector<std::vector<double>> meanfield;
    std::map<std::string, double> metrics;
};

/// Integrates one scenario and fills the metrics.
IdeTrajectory run_ide(const Scenario& s, std::uint64_t seed);

struct ConvergenceRow {
    int sites = 0;
    double gamma = 0.0;
    double mean_l1 = 0.0;
    double sd_l1 = 0.0;
    std::vector<double> replica_l1;
};

/// Ensemble-mean L1 distance between the block-averaged empirical density at
/// t_end and the IDE solution, per lattice size.
std::vector<ConvergenceRow> convergence_harness(const Scenario& s, const std::vector<int>& sites, int replicas,
                                                int cells, std::uint64_t seed);

struct LumpabilityResult {
    int agents = 0;
    std::vector<double> micro_eta;
    std::vector<double> lumped_eta;
    double ks_statistic = 0.0;
    double p_value = 0.0;
};

/// eta(strategy 1) at t_end from the lattice process with the scenario's
/// kernel and from the lumped chain, both started from the histogram nearest
/// init.rho.
LumpabilityResult lumpability_check(const Scenario& s, int sites, int replicas, std::uint64_t seed);

/// Dispersion tables at every homogeneous stationary state of a two-strategy
/// coordination scenario.
std::vector<DispersionTable> scenario_dispersion(const Scenario& s, int max_mode, FourierConvention conv);

/// Reduced dynamic matching the scenario, for the scalar stability path.
Dynamic reduced_dynamic(const Scenario& s);

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
    int threads = 0;
    /// Wall clock and host-specific fields are dropped when false.
    bool timing = true;
};

struct RunManifest {
    nlohmann::json json;
    std::filesystem::path directory;
    /// scenario -> metric -> value, as written to summary.csv.
    std::map<std::string, std::map<std::string, double>> summary;
};

/// Dispatches on run.kind, writes outputs under the output directory and
/// returns the manifest (also written as manifest.json).
RunManifest run_experiment(const RunConfig& cfg, const RunOptions& options = {});

struct SweepPoint {
    std::string value;
    RunManifest manifest;
};

/// One run per value of `key`, each in its own subdirectory, plus sweep.csv.
std::vector<SweepPoint> run_sweep(const RunConfig& cfg, const std::string& key, const std::vector<std::string>& values,
                                  const RunOptions& options = {});

} // namespace kacgame

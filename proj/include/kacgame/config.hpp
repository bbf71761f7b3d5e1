#pragma once

// Run configuration: INI files with one section per concern, plus optional
// [variant:NAME] sections that override base keys for one scenario each.

#include "kacgame/game.hpp"
#include "kacgame/grid.hpp"
#include "kacgame/ide.hpp"
#include "kacgame/kernel.hpp"

#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace kacgame {

/// Arithmetic over numbers, + - * / ^, parentheses, `pi` and caller-supplied
/// variables. Throws Error(Config) on malformed input.
double eval_expression(const std::string& text, const std::map<std::string, double>& vars = {});

enum class ExperimentKind { Ide, MeanField, Micro, Dispersion, Phase, Convergence, Lumpability, Deviation };

const char* to_string(ExperimentKind k);

struct KernelSpec {
    KernelProfile profile = KernelProfile::Gaussian;
    double b = 1.0;
    double radius = 1.0;
    double truncation = 1e-12;

    Kernel make(int dim) const;
};

struct DomainSpec {
    int dim = 1;
    int nodes = 256;
    double lower = -3.141592653589793;
    double upper = 3.141592653589793;
    Boundary bc = Boundary::Periodic;
    double boundary_width = 0.0;
    /// Frozen values of p (strategy 1) on the two sides of a fixed domain.
    double left_value = 0.0;
    double right_value = 1.0;

    Grid make() const;
};

struct DynamicsSpec {
    Dynamic dynamic = Dynamic::Logit;
    RateFamily family = RateFamily::ComparingNonInnovative;
    ResponseFunction response = ResponseFunction::positive_part();
    ConvolutionMethod method = ConvolutionMethod::Fft;

    RateRule rule() const { return {family, response}; }
};

struct TimeSpec {
    /// 0 selects stable_dt.
    double dt = 0.0;
    double t_end = 1.0;
    std::vector<double> snapshots;
    /// Step quoted by the source of the experiment, recorded but not used.
    std::string quoted_dt;
};

enum class InitProfile { Constant, Indicator, CosineSeed, Step, Logistic, Cosine };

/// Initial datum for strategy 1 (two strategies) or a constant histogram.
/// Indicator: 1 on (lo, hi). CosineSeed: base + U[0,1] amplitude cos(k0 x) cos(k1 y)
/// with an independent uniform per node. Cosine: base + amplitude cos(k0 x).
/// Step: 1 for x > lo. Logistic: l((x - lo) / width).
struct InitSpec {
    InitProfile profile = InitProfile::Constant;
    std::vector<double> rho{0.5, 0.5};
    double base = 0.5;
    double amplitude = 0.0;
    int k0 = 1;
    int k1 = 1;
    double lo = 0.0;
    double hi = 0.0;
    double width = 1.0;
};

/// Everything one dynamical run needs.
struct Scenario {
    std::string name;
    Game game = Game::coordination(1.0, 1.0);
    KernelSpec kernel;
    DomainSpec domain;
    DynamicsSpec dynamics;
    TimeSpec time;
    InitSpec init;
    /// Half-open x window [lo, hi) scanned for a single interface.
    std::vector<double> interface_window;
};

struct RunSettings {
    ExperimentKind kind = ExperimentKind::Ide;
    std::string name = "run";
    std::uint64_t seed = 1;
    std::string output = "out";
    int threads = 0;
    int replicas = 1;
    /// Micro lattice sizes (sites per axis) for micro/convergence kinds.
    std::vector<int> sites;
    /// Coarse cells per axis for empirical densities.
    int cells = 8;
    /// Deviation harness.
    std::vector<int> n_list;
    double eps = 0.05;
    /// Dispersion: modes |k| <= max_mode (0 selects Nyquist) and convention.
    int max_mode = 0;
    FourierConvention convention = FourierConvention::GridMode;
    /// Phase diagram ranges.
    std::vector<double> beta_range;
    std::vector<double> zeta_range;
    int beta_count = 0;
    int zeta_count = 0;
    /// Write rendered images next to the data.
    bool images = true;
};

struct RunConfig {
    RunSettings run;
    std::vector<Scenario> scenarios;
    /// Merged tree, echoed into the manifest.
    boost::property_tree::ptree tree;
    std::string source;
};

/// Parses and validates; every error names the offending key path.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& source = "<string>");

/// `key` is section.name (or variant:x.section.name); the value replaces or adds it.
void apply_override(boost::property_tree::ptree& tree, const std::string& key, const std::string& value);
RunConfig config_from_tree(const boost::property_tree::ptree& tree, const std::string& source);

/// Initial field for a scenario; frozen nodes of fixed domains take the boundary values.
DensityField initial_field(const Scenario& s, const Grid& grid, std::uint64_t seed);

} // namespace kacgame

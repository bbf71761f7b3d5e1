// Figure configs at reduced resolution, each checked against its headline
// qualitative claim.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kacgame/config.hpp"
#include "kacgame/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

using namespace kacgame;
namespace fs = std::filesystem;

namespace {

using Metrics = std::map<std::string, std::map<std::string, double>>;

RunConfig figure(const std::string& name, const std::vector<std::pair<std::string, std::string>>& overrides = {})
{
    auto cfg = load_config((fs::path(KACGAME_CONFIG_DIR) / (name + ".cfg")).string());
    auto tree = cfg.tree;
    for (const auto& [k, v] : overrides) {
        apply_override(tree, k, v);
    }
    return config_from_tree(tree, cfg.source);
}

Metrics run(const RunConfig& cfg)
{
    const auto dir = fs::temp_directory_path() / ("kacgame_it_" + cfg.run.name);
    fs::remove_all(dir);
    RunOptions o;
    o.output = dir.string();
    o.timing = false;
    const auto m = run_experiment(cfg, o);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "summary.csv"));
    return m.summary;
}

// Simplex drift of every IDE scenario stays at rounding level.
void check_conservation(const Metrics& m)
{
    for (const auto& [name, mt] : m) {
        INFO(name);
        CHECK(mt.at("sum_drift_per_time") <= 1e-9);
    }
}

} // namespace

TEST_SUITE("figures")
{
    TEST_CASE("fig2: replicator patterns follow the seeded wavenumber")
    {
        const auto m = run(figure("fig2", {{"domain.nodes", "32"}}));
        check_conservation(m);
        for (const auto& [name, k] : {std::pair{"k1", 1}, std::pair{"k2", 2}}) {
            INFO(name);
            const auto& mt = m.at(name);
            CHECK(mt.at("dominant_k0") == k);
            CHECK(mt.at("dominant_k1") == k);
            CHECK(mt.at("variance_ratio") > 1.0);
            CHECK(mt.at("persistent") == 1.0);
        }
    }

    TEST_CASE("fig3: unstable band k = 0, +-1, +-2 at p = zeta")
    {
        const auto m = run(figure("fig3"));
        const auto& mt = m.at("fig3");
        CHECK(mt.at("roots") == 3);
        CHECK(mt.at("root1_p0") == doctest::Approx(1.0 / 3.0));
        CHECK(mt.at("root1_unstable_modes") == 5);
        CHECK(mt.at("root0_stable") == 1);
        CHECK(mt.at("root2_stable") == 1);
    }

    TEST_CASE("fig5: an island of 1-strategists selects strategy 1 under logit")
    {
        const auto m = run(figure("fig5", {{"domain.nodes", "256"}}));
        check_conservation(m);
        const auto& logit = m.at("logit");
        const auto& rep = m.at("replicator");
        CHECK(logit.at("meanfield_final_1") < 0.1);
        CHECK(logit.at("final_average_1") > 0.9);
        CHECK(rep.at("meanfield_final_1") < 0.01);
        CHECK(rep.at("min_average_1") > 0.1);
        CHECK(rep.at("max_average_1") < 0.9);
    }

    TEST_CASE("fig7: replicator standing wave is sharper than logit")
    {
        const auto m = run(figure("fig7", {{"domain.nodes", "128"}}));
        check_conservation(m);
        const double wr = m.at("replicator").at("interface_width");
        const double wl = m.at("logit").at("interface_width");
        CHECK(wl > 1.5 * wr);
        // Equal payoffs: the waves stand still.
        CHECK(std::abs(m.at("logit").at("front_speed")) < 1e-6);
        CHECK(std::abs(m.at("replicator").at("front_speed")) < 1e-6);
    }

    TEST_CASE("fig8: logit fronts travel fastest, toward strategy 2")
    {
        const auto m = run(figure("fig8", {{"domain.nodes", "128"}}));
        check_conservation(m);
        const double sl = m.at("logit").at("front_speed");
        const double s1 = m.at("replicator_k1").at("front_speed");
        const double si = m.at("replicator").at("front_speed");
        CHECK(sl < 0);
        CHECK(std::abs(sl) > std::abs(s1));
        CHECK(std::abs(s1) > std::abs(si));
        CHECK(std::abs(si) >= 0);
        CHECK(m.at("logit").at("interface_failures") == 0);
    }

    TEST_CASE("fig9: replicator amplifies the seeded pattern, logit smooths it")
    {
        const auto m = run(figure("fig9", {{"domain.nodes", "256"}}));
        check_conservation(m);
        const auto& rep = m.at("replicator");
        const auto& logit = m.at("logit");
        CHECK(rep.at("initial_dominant_k0") == 2);
        CHECK(rep.at("peak_variance") > 1.5 * rep.at("initial_variance"));
        CHECK(logit.at("peak_variance_time") == 0);
        CHECK(logit.at("final_average_1") > 0.99);
    }

    TEST_CASE("convergence: L1 distance decreases with the Kac range")
    {
        const auto m = run(figure("convergence"));
        CHECK(m.at("convergence").at("l1_decreasing") == 1);
    }

    TEST_CASE("lumpability: aggregated lattice and lumped chain agree")
    {
        const auto m = run(figure("lumpability", {{"run.replicas", "200"}}));
        CHECK(m.at("lumpability").at("agents_64_ks_p_value") > 0.01);
    }

    TEST_CASE("deviation: exceedance fractions fall with n")
    {
        const auto m = run(figure("deviation"));
        CHECK(m.at("deviation").at("strictly_decreasing") == 1);
        CHECK(m.at("deviation").at("slope") < 0);
    }

    TEST_CASE("phase: every (beta, zeta) keeps a stable homogeneous root")
    {
        const auto m = run(figure("phase", {{"run.beta_count", "6"}, {"run.zeta_count", "5"}}));
        CHECK(m.at("phase").at("points") == 30);
        CHECK(m.at("phase").at("points_without_stable_root") == 0);
    }
}

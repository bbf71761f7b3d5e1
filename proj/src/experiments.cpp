#include "kacgame/experiments.hpp"

#include "kacgame/errors.hpp"
#include "kacgame/micro.hpp"
#include "kacgame/output.hpp"
#include "kacgame/stats.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace kacgame {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

IdeSystem make_system(const Scenario& s, const Grid& grid)
{
    const Kernel j = s.kernel.make(grid.dim);
    return IdeSystem(s.game, s.dynamics.rule(), s.dynamics.dynamic, grid_discretize(j, grid), grid, s.dynamics.method);
}

// Rate rule of the lattice process behind the scenario's dynamic.
RateRule micro_rule(const Scenario& s)
{
    return IdeSystem(s.game, s.dynamics.rule(), s.dynamics.dynamic, DiscreteKernel::identity(1), Grid::single_node(),
                     ConvolutionMethod::DirectSerial)
        .effective_rule();
}

bool is_coordination(const Game& g)
{
    try {
        coordination_params(g);
        return true;
    } catch (const Error&) {
        return false;
    }
}

Grid coarse_grid(const Grid& g, int cells)
{
    Grid c = g;
    c.bc = Boundary::Periodic;
    c.boundary_width = 0.0;
    c.n = {cells, g.dim == 2 ? cells : 1};
    return c;
}

std::string snapshot_name(double t)
{
    return "t_" + fmt_num(t) + ".txt";
}

void with_context(const std::string& ctx, const std::function<void()>& body)
{
    try {
        body();
    } catch (const Error& e) {
        throw Error(e.kind(), ctx + ": " + e.what());
    }
}

class Writer {
public:
    explicit Writer(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void text(const std::string& rel, const std::string& content)
    {
        write_text(dir_ / rel, content);
        add(rel);
    }
    void snapshot(const std::string& rel, double t, const DensityField& f)
    {
        write_snapshot(dir_ / rel, t, f);
        add(rel);
    }
    void heatmap(const std::string& rel, const DensityField& f)
    {
        const auto ch = f.channel(0);
        write_heatmap_ppm(dir_ / rel, std::vector<double>(ch.begin(), ch.end()), f.grid().n[1], f.grid().n[0]);
        add(rel);
    }
    void plot(const std::string& rel, const std::string& title, const std::string& xl, const std::string& yl,
              const std::vector<Series>& series)
    {
        write_line_plot_svg(dir_ / rel, title, xl, yl, series);
        add(rel);
    }

    nlohmann::json index() const
    {
        nlohmann::json files = nlohmann::json::array();
        for (const auto& rel : files_) {
            files.push_back({{"path", rel}, {"sha256", sha256_file(dir_ / rel)}, {"bytes", fs::file_size(dir_ / rel)}});
        }
        return files;
    }
    const fs::path& dir() const { return dir_; }

private:
    void add(const std::string& rel)
    {
        if (std::find(files_.begin(), files_.end(), rel) == files_.end()) {
            files_.push_back(rel);
        }
    }

    fs::path dir_;
    std::vector<std::string> files_;
};

nlohmann::json tree_to_json(const boost::property_tree::ptree& t)
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : t) {
        if (v.empty()) {
            j[k] = v.data();
        } else {
            j[k] = tree_to_json(v);
        }
    }
    return j;
}

nlohmann::json json_number(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(fmt_num(v));
}

// Constants the run depends on, for the manifest.
nlohmann::json measured_constants(const Scenario& s)
{
    nlohmann::json c;
    try {
        const RateRule rule = micro_rule(s);
        if (s.dynamics.dynamic != Dynamic::BiologicalReplicator) {
            c["thinning_bound_M"] = json_number(thinning_bound(rule, s.game));
            c["rate_bound_analytic"] = json_number(rate_bound_analytic(rule, s.game));
            c["rate_lipschitz_L"] = json_number(rate_lipschitz_measured(rule, s.game));
        }
    } catch (const Error& e) {
        c["rate_constants_error"] = e.what();
    }
    if (s.kernel.profile != KernelProfile::Uniform || s.domain.dim == 1) {
        c["kernel_J2"] = json_number(second_moment(s.kernel.make(s.domain.dim), s.domain.upper - s.domain.lower));
    }
    if (is_coordination(s.game)) {
        const auto p = coordination_params(s.game);
        c["zeta"] = p.zeta;
        c["beta"] = p.beta;
        if (s.dynamics.dynamic == Dynamic::Logit || s.dynamics.dynamic == Dynamic::TwoStrategyReducedLogit) {
            c["beta_C"] = critical_beta(p.zeta);
        }
    }
    return c;
}

std::string csv_row(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? "," : "") + fmt_num(v[i]);
    }
    return s;
}

void write_summary(Writer& w, const std::map<std::string, std::map<std::string, double>>& summary)
{
    std::ostringstream os;
    os << "scenario,metric,value\n";
    for (const auto& [scenario, metrics] : summary) {
        for (const auto& [k, v] : metrics) {
            os << scenario << ',' << k << ',' << fmt_num(v) << '\n';
        }
    }
    w.text("summary.csv", os.str());
}

// ---- kinds ----

void run_ide_kind(const RunConfig& cfg, std::uint64_t seed, Writer& w, RunManifest& m)
{
    std::ostringstream avg;
    std::vector<Series> avg_series;
    std::vector<Series> interface_series;
    for (const auto& s : cfg.scenarios) {
        IdeTrajectory tr;
        with_context("scenario " + s.name, [&] { tr = run_ide(s, seed); });
        m.summary[s.name] = tr.metrics;
        const int ns = tr.final_field.num_strategies();
        if (avg.tellp() == 0) {
            avg << "scenario,t";
            for (int i = 0; i < ns; ++i) {
                avg << ",avg_" << i + 1;
            }
            avg << ",variance,meanfield_1,interface_position,interface_width\n";
        }
        Series a{s.name + " IDE", {}, {}};
        Series mf{s.name + " ODE", {}, {}};
        Series ip{s.name, {}, {}};
        for (std::size_t k = 0; k < tr.times.size(); ++k) {
            avg << s.name << ',' << fmt_num(tr.times[k]) << ',' << csv_row(tr.averages[k]) << ','
                << fmt_num(tr.variance[k]) << ',' << fmt_num(tr.meanfield.empty() ? kNaN : tr.meanfield[k][0]) << ','
                << fmt_num(tr.interface_position[k]) << ',' << fmt_num(tr.interface_width[k]) << '\n';
            a.x.push_back(tr.times[k]);
            a.y.push_back(tr.averages[k][0]);
            if (!tr.meanfield.empty()) {
                mf.x.push_back(tr.times[k]);
                mf.y.push_back(tr.meanfield[k][0]);
            }
            ip.x.push_back(tr.times[k]);
            ip.y.push_back(tr.interface_position[k]);
        }
        avg_series.push_back(a);
        if (!mf.x.empty()) {
            avg_series.push_back(mf);
        }
        if (std::any_of(ip.y.begin(), ip.y.end(), [](double v) { return std::isfinite(v); })) {
            interface_series.push_back(ip);
        }

        for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
            w.snapshot("snapshots/" + s.name + "/" + snapshot_name(tr.snapshot_times[k]), tr.snapshot_times[k],
                       tr.snapshots[k]);
        }
        if (cfg.run.images) {
            const Grid& g = tr.final_field.grid();
            if (g.dim == 2) {
                for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
                    w.heatmap("images/" + s.name + "_t" + fmt_num(tr.snapshot_times[k]) + ".ppm", tr.snapshots[k]);
                }
            } else {
                std::vector<Series> prof;
                for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
                    Series p{"t=" + fmt_num(tr.snapshot_times[k]), {}, {}};
                    for (int v = 0; v < g.n[0]; ++v) {
                        p.x.push_back(g.coord(0, v));
                        p.y.push_back(tr.snapshots[k].at(0, static_cast<std::size_t>(v)));
                    }
                    prof.push_back(std::move(p));
                }
                w.plot("images/" + s.name + "_profiles.svg", s.name + ": density of strategy 1", "x", "p", prof);
            }
        }
    }
    w.text("averages.csv", avg.str());
    if (cfg.run.images) {
        w.plot("images/averages.svg", cfg.run.name + ": spatial average of strategy 1", "t", "average", avg_series);
        if (!interface_series.empty()) {
            w.plot("images/interfaces.svg", cfg.run.name + ": interface position", "t", "x", interface_series);
        }
    }
}

void run_meanfield_kind(const RunConfig& cfg, std::uint64_t seed, Writer& w, RunManifest& m)
{
    std::ostringstream os;
    std::vector<Series> series;
    for (std::size_t si = 0; si < cfg.scenarios.size(); ++si) {
        const auto& s = cfg.scenarios[si];
        const Grid grid = s.domain.make();
        const DensityField f0 = initial_field(s, grid, seed);
        std::vector<double> rho0(static_cast<std::size_t>(f0.num_strategies()));
        for (int i = 0; i < f0.num_strategies(); ++i) {
            rho0[static_cast<std::size_t>(i)] = f0.spatial_average(i, true);
        }
        const double dt = s.time.dt > 0 ? s.time.dt : 1e-3;
        OdeSolution sol;
        with_context("scenario " + s.name,
                     [&] { sol = integrate_ode(rho0, s.dynamics.rule(), s.dynamics.dynamic, s.game, s.time.t_end, dt); });
        if (os.tellp() == 0) {
            os << "scenario,source,replica,t";
            for (std::size_t i = 0; i < rho0.size(); ++i) {
                os << ",rho_" << i + 1;
            }
            os << '\n';
        }
        Series line{s.name + " ODE", {}, {}};
        for (std::size_t k = 0; k < sol.times.size(); ++k) {
            os << s.name << ",ode,0," << fmt_num(sol.times[k]) << ',' << csv_row(sol.states[k]) << '\n';
            line.x.push_back(sol.times[k]);
            line.y.push_back(sol.states[k][0]);
        }
        series.push_back(line);
        auto& sum = m.summary[s.name];
        sum["ode_initial_1"] = rho0[0];
        sum["ode_final_1"] = sol.states.back()[0];

        // Lumped chains of sites^d agents, when requested.
        const RateRule rule = micro_rule(s);
        for (int n : cfg.run.sites) {
            long agents = 1;
            for (int d = 0; d < s.domain.dim; ++d) {
                agents *= n;
            }
            std::vector<double> finals(static_cast<std::size_t>(cfg.run.replicas));
            std::vector<std::string> rows(static_cast<std::size_t>(cfg.run.replicas));
#pragma omp parallel for schedule(dynamic)
            for (int r = 0; r < cfg.run.replicas; ++r) {
                std::mt19937_64 rng(stats::child_seed(seed + static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r)));
                auto st = AggregateState::from_density(rho0, agents);
                std::ostringstream rs;
                std::size_t next = 0;
                const auto& snaps = s.time.snapshots;
                std::vector<double> last = st.eta();
                auto emit = [&](double t_snap, const std::vector<double>& eta) {
                    rs << s.name << ",lumped_" << n << ',' << r << ',' << fmt_num(t_snap) << ',' << csv_row(eta) << '\n';
                };
                run_lumped(st, rule, s.game, s.time.t_end, rng, [&](double t, const AggregateState& a) {
                    // Snapshots before this jump see the previous state.
                    while (next < snaps.size() && snaps[next] < t) {
                        emit(snaps[next++], last);
                    }
                    last = a.eta();
                });
                finals[static_cast<std::size_t>(r)] = st.eta(0);
                while (next < snaps.size()) {
                    emit(snaps[next++], st.eta());
                }
                rows[static_cast<std::size_t>(r)] = rs.str();
            }
            for (const auto& r : rows) {
                os << r;
            }
            sum["lumped_" + std::to_string(n) + "_mean_final_1"] = stats::mean(finals);
        }
    }
    w.text("meanfield.csv", os.str());
    if (cfg.run.images) {
        w.plot("images/meanfield.svg", cfg.run.name + ": mean-field ODE", "t", "rho_1", series);
    }
}

// Exceptions cannot leave an OpenMP region; the first one is kept and
// rethrown after the loop.
class ParallelErrors {
public:
    template <class F>
    void guard(F&& body)
    {
        try {
            body();
        } catch (...) {
#pragma omp critical(kacgame_parallel_errors)
            if (!first_) {
                first_ = std::current_exception();
            }
        }
    }
    void rethrow() const
    {
        if (first_) {
            std::rethrow_exception(first_);
        }
    }

private:
    std::exception_ptr first_;
};

std::vector<double> with_end(std::vector<double> snaps, double t_end)
{
    if (snaps.empty() || snaps.back() < t_end) {
        snaps.push_back(t_end);
    }
    return snaps;
}

void run_micro_kind(const RunConfig& cfg, std::uint64_t seed, Writer& w, RunManifest& m)
{
    std::ostringstream os;
    for (const auto& s : cfg.scenarios) {
        const Grid grid = s.domain.make();
        const Kernel j = s.kernel.make(grid.dim);
        const DensityField f0 = initial_field(s, grid, seed);
        const RateRule rule = micro_rule(s);
        const Grid coarse = coarse_grid(grid, cfg.run.cells);
        const auto snaps = with_end(s.time.snapshots, s.time.t_end);
        const int ns = s.game.num_strategies();
        if (os.tellp() == 0) {
            os << "scenario,sites,replica,t";
            for (int i = 0; i < ns; ++i) {
                os << ",eta_" << i + 1;
            }
            os << '\n';
        }
        auto& sum = m.summary[s.name];
        for (int n : cfg.run.sites) {
            std::shared_ptr<const LatticeDomain> dom;
            with_context("scenario " + s.name + ", " + std::to_string(n) + " sites",
                         [&] { dom = std::make_shared<const LatticeDomain>(LatticeDomain::make(j, grid, n)); });
            const auto reps = static_cast<std::size_t>(cfg.run.replicas);
            std::vector<std::string> rows(reps);
            std::vector<double> accept(reps), final_eta(reps);
            std::vector<std::pair<double, DensityField>> fields;
            ParallelErrors errors;
#pragma omp parallel for schedule(dynamic)
            for (int r = 0; r < cfg.run.replicas; ++r) {
                errors.guard([&] {
                    const auto ur = static_cast<std::uint64_t>(r);
                    auto st = sample_initial(f0, dom, stats::child_seed(seed + static_cast<std::uint64_t>(n), 2 * ur));
                    std::ostringstream rs;
                    MicroRunOptions opt;
                    opt.snapshot_times = snaps;
                    opt.on_snapshot = [&](double t, const LatticeState& state) {
                        const auto em = empirical(state, coarse);
                        rs << s.name << ',' << n << ',' << r << ',' << fmt_num(t) << ',' << csv_row(em.eta) << '\n';
                        if (r == 0) {
                            fields.emplace_back(t, em.density);
                        }
                    };
                    const auto res = run(st, rule, s.game, s.time.t_end,
                                         stats::child_seed(seed + static_cast<std::uint64_t>(n), 2 * ur + 1), opt);
                    rows[static_cast<std::size_t>(r)] = rs.str();
                    accept[static_cast<std::size_t>(r)] = res.acceptance();
                    final_eta[static_cast<std::size_t>(r)] =
                        static_cast<double>(st.counts()[0]) / static_cast<double>(st.size());
                });
            }
            errors.rethrow();
            for (const auto& r : rows) {
                os << r;
            }
            for (const auto& [t, f] : fields) {
                w.snapshot("micro/" + s.name + "/n" + std::to_string(n) + "/" + snapshot_name(t), t, f);
            }
            const std::string key = "sites_" + std::to_string(n);
            sum[key + "_acceptance"] = stats::mean(accept);
            sum[key + "_mean_final_eta_1"] = stats::mean(final_eta);
        }
    }
    w.text("micro.csv", os.str());
}

void run_convergence_kind(const RunConfig& cfg, std::uint64_t seed, Writer& w, RunManifest& m)
{
    std::ostringstream os;
    os << "scenario,sites,gamma,mean_l1,sd_l1\n";
    std::ostringstream reps;
    reps << "scenario,sites,replica,l1\n";
    std::vector<Series> series;
    for (const auto& s : cfg.scenarios) {
        std::vector<ConvergenceRow> rows;
        with_context("scenario " + s.name,
                     [&] { rows = convergence_harness(s, cfg.run.sites, cfg.run.replicas, cfg.run.cells, seed); });
        Series line{s.name, {}, {}};
        bool decreasing = true;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto& r = rows[k];
            os << s.name << ',' << r.sites << ',' << fmt_num(r.gamma) << ',' << fmt_num(r.mean_l1) << ','
               << fmt_num(r.sd_l1) << '\n';
            for (std::size_t i = 0; i < r.replica_l1.size(); ++i) {
                reps << s.name << ',' << r.sites << ',' << i << ',' << fmt_num(r.replica_l1[i]) << '\n';
            }
            line.x.push_back(std::log2(r.gamma));
            line.y.push_back(r.mean_l1);
            m.summary[s.name]["mean_l1_sites_" + std::to_string(r.sites)] = r.mean_l1;
            if (k > 0 && !(r.mean_l1 < rows[k - 1].mean_l1)) {
                decreasing = false;
            }
        }
        m.summary[s.name]["l1_decreasing"] = decreasing ? 1.0 : 0.0;
        series.push_back(line);
    }
    w.text("convergence.csv", os.str());
    w.text("convergence_replicas.csv", reps.str());
    if (cfg.run.images) {
        w.plot("images/convergence.svg", cfg.run.name + ": micro vs IDE", "log2 gamma", "mean L1", series);
    }
}

void run_lumpability_kind(const RunConfig& cfg, std::uint64_t seed, Writer& w, RunManifest& m)
{
    std::ostringstream os;
    os << "scenario,agents,source,replica,eta_1\n";
    for (const auto& s : cfg.scenarios) {
        for (int n : cfg.run.sites) {
            LumpabilityResult res;
            with_context("scenario " + s.name, [&] { res = lumpability_check(s, n, cfg.run.replicas, seed); });
            for (std::size_t r = 0; r < res.micro_eta.size(); ++r) {
                os << s.name << ',' << res.agents << ",micro," << r << ',' << fmt_num(res.micro_eta[r]) << '\n';
            }
            for (std::size_t r = 0; r < res.lumped_eta.size(); ++r) {
                os << s.name << ',' << res.agents << ",lumped," << r << ',' << fmt_num(res.lumped_eta[r]) << '\n';
            }
            const std::string key = "agents_" + std::to_string(res.agents);
            m.summary[s.name][key + "_ks_statistic"] = res.ks_statistic;
            m.summary[s.name][key + "_ks_p_value"] = res.p_value;
        }
    }
    w.text("lumpability.csv", os.str());
}

void run_deviation_kind(const RunConfig& cfg, std::uint64_t seed, Writer& w, RunManifest& m)
{
    std::ostringstream os;
    for (const auto& s : cfg.scenarios) {
        if (s.init.profile != InitProfile::Constant) {
            throw Error(ErrorKind::Config, "init.profile: the deviation harness needs a constant rho");
        }
        DeviationTable t;
        with_context("scenario " + s.name, [&] {
            t = deviation_harness(micro_rule(s), s.game, s.init.rho, cfg.run.n_list, s.domain.dim, s.time.t_end,
                                  cfg.run.eps, cfg.run.replicas, seed);
        });
        os << "# scenario " << s.name << '\n' << t.to_csv();
        auto& sum = m.summary[s.name];
        sum["slope"] = t.slope;
        sum["fitted_rows"] = t.fitted_rows;
        bool strict = true;
        for (std::size_t k = 1; k < t.rows.size(); ++k) {
            strict = strict && t.rows[k].exceedance < t.rows[k - 1].exceedance;
        }
        sum["strictly_decreasing"] = strict ? 1.0 : 0.0;
        for (const auto& r : t.rows) {
            sum["exceedance_n" + std::to_string(r.n)] = r.exceedance;
        }
    }
    w.text("deviation.csv", os.str());
}

std::vector<ModeSample> scenario_modes(const Scenario& s, int max_mode, FourierConvention conv)
{
    const Grid grid = s.domain.make();
    if (grid.bc != Boundary::Periodic) {
        throw Error(ErrorKind::Unsupported, "dispersion relations need a periodic domain");
    }
    const auto jd = grid_discretize(s.kernel.make(grid.dim), grid);
    const int k = max_mode > 0 ? max_mode : grid.n[0] / 2;
    return grid.dim == 1 ? mode_samples_1d(jd, grid, conv, k) : mode_samples_2d(jd, grid, conv, k);
}

void run_dispersion_kind(const RunConfig& cfg, Writer& w, RunManifest& m)
{
    std::ostringstream unstable;
    unstable << "scenario,p0,k0,k1,jhat,lambda\n";
    for (const auto& s : cfg.scenarios) {
        auto& sum = m.summary[s.name];
        bool reduced = true;
        try {
            reduced_dynamic(s);
        } catch (const Error&) {
            reduced = false;
        }
        if (reduced) {
            std::vector<DispersionTable> tables;
            with_context("scenario " + s.name,
                         [&] { tables = scenario_dispersion(s, cfg.run.max_mode, cfg.run.convention); });
            std::vector<Series> series;
            for (std::size_t i = 0; i < tables.size(); ++i) {
                const auto& t = tables[i];
                const std::string tag = "root" + std::to_string(i);
                w.text("dispersion/" + s.name + "_" + tag + ".csv", t.to_csv());
                sum[tag + "_p0"] = t.p0;
                sum[tag + "_max_lambda"] = t.max_lambda();
                sum[tag + "_unstable_modes"] = static_cast<double>(t.unstable_modes().size());
                sum[tag + "_stable"] = t.stable() ? 1.0 : 0.0;
                if (t.has_closed_form) {
                    sum[tag + "_closed_form_gap"] = t.closed_form_gap;
                }
                for (std::size_t k = 0; k < t.modes.size(); ++k) {
                    if (t.lambda[k] > 0) {
                        unstable << s.name << ',' << fmt_num(t.p0) << ',' << t.modes[k].k0 << ',' << t.modes[k].k1 << ','
                                 << fmt_num(t.modes[k].jhat) << ',' << fmt_num(t.lambda[k]) << '\n';
                    }
                }
                Series line{"p0=" + fmt_num(std::round(t.p0 * 1e4) / 1e4), {}, {}};
                for (std::size_t k = 0; k < t.modes.size(); ++k) {
                    if (t.modes[k].k1 == 0) {
                        line.x.push_back(t.modes[k].k0);
                        line.y.push_back(t.lambda[k]);
                    }
                }
                series.push_back(line);
            }
            sum["roots"] = static_cast<double>(tables.size());
            if (cfg.run.images) {
                w.plot("images/" + s.name + "_dispersion.svg", s.name + ": dispersion relation", "k", "lambda(k)",
                       series);
            }
            continue;
        }
        // Multi-strategy or non-coordination: eigenvalues at init.rho.
        if (s.init.profile != InitProfile::Constant) {
            throw Error(ErrorKind::Config, "init.profile: general dispersion needs a constant rho");
        }
        GeneralDispersion gd;
        with_context("scenario " + s.name, [&] {
            gd = dispersion_general(s.dynamics.dynamic, s.dynamics.rule(), s.game, s.init.rho,
                                    scenario_modes(s, cfg.run.max_mode, cfg.run.convention));
        });
        std::ostringstream os;
        os << "k0,k1,jhat,index,re,im\n";
        for (std::size_t k = 0; k < gd.modes.size(); ++k) {
            for (std::size_t e = 0; e < gd.eigenvalues[k].size(); ++e) {
                os << gd.modes[k].k0 << ',' << gd.modes[k].k1 << ',' << fmt_num(gd.modes[k].jhat) << ',' << e << ','
                   << fmt_num(gd.eigenvalues[k][e].real()) << ',' << fmt_num(gd.eigenvalues[k][e].imag()) << '\n';
            }
        }
        w.text("dispersion/" + s.name + "_general.csv", os.str());
        sum["max_real_eigenvalue"] = gd.max_real();
    }
    w.text("dispersion/unstable_modes.csv", unstable.str());
}

void run_phase_kind(const RunConfig& cfg, Writer& w, RunManifest& m)
{
    const auto& r = cfg.run;
    auto axis = [](const std::vector<double>& range, int count) {
        std::vector<double> v;
        for (int i = 0; i < count; ++i) {
            v.push_back(count == 1 ? range[0] : range[0] + (range[1] - range[0]) * i / (count - 1));
        }
        return v;
    };
    std::ostringstream os;
    os << "scenario,beta,zeta,root,p0,max_lambda,stable\n";
    for (const auto& s : cfg.scenarios) {
        const Dynamic rd = reduced_dynamic(s);
        const auto modes = scenario_modes(s, r.max_mode, r.convention);
        long unstable_points = 0;
        for (double beta : axis(r.beta_range, r.beta_count)) {
            for (double zeta : axis(r.zeta_range, r.zeta_count)) {
                const CoordinationParams p{zeta, beta};
                const auto roots = stationary_homogeneous(rd, p, s.dynamics.response);
                bool any_stable = false;
                for (std::size_t i = 0; i < roots.roots.size(); ++i) {
                    const auto t = dispersion(rd, roots.roots[i], p, s.dynamics.response, modes);
                    any_stable = any_stable || t.stable();
                    os << s.name << ',' << fmt_num(beta) << ',' << fmt_num(zeta) << ',' << i << ',' << fmt_num(t.p0)
                       << ',' << fmt_num(t.max_lambda()) << ',' << (t.stable() ? 1 : 0) << '\n';
                }
                unstable_points += any_stable ? 0 : 1;
            }
        }
        m.summary[s.name]["points"] = static_cast<double>(r.beta_count) * r.zeta_count;
        m.summary[s.name]["points_without_stable_root"] = static_cast<double>(unstable_points);
    }
    w.text("phase.csv", os.str());
}

} // namespace

IdeTrajectory run_ide(const Scenario& s, std::uint64_t seed)
{
    IdeTrajectory tr;
    tr.scenario = s.name;
    const Grid grid = s.domain.make();
    const IdeSystem sys = make_system(s, grid);
    tr.initial = initial_field(s, grid, seed);
    tr.dt = s.time.dt > 0 ? s.time.dt : stable_dt(sys);
    const int ns = s.game.num_strategies();
    const bool track = grid.dim == 1 && ns == 2 && (grid.bc == Boundary::Fixed || !s.interface_window.empty());
    double wlo = grid.lower[0];
    double whi = grid.lower[0] + grid.length[0];
    if (!s.interface_window.empty()) {
        wlo = s.interface_window[0];
        whi = s.interface_window[1];
    }
    auto observe = [&](double t, const DensityField& f) {
        tr.times.push_back(t);
        std::vector<double> a(static_cast<std::size_t>(ns));
        for (int i = 0; i < ns; ++i) {
            a[static_cast<std::size_t>(i)] = f.spatial_average(i, true);
        }
        tr.averages.push_back(std::move(a));
        tr.variance.push_back(f.spatial_variance(0));
        double pos = kNaN;
        double width = kNaN;
        if (track) {
            try {
                const auto im = interface_metrics(f, wlo, whi);
                pos = im.position;
                width = im.width;
            } catch (const Error&) {
                ++tr.interface_failures;
            }
        }
        tr.interface_position.push_back(pos);
        tr.interface_width.push_back(width);
    };
    auto res = integrate(sys, tr.initial, s.time.t_end, tr.dt, with_end(s.time.snapshots, s.time.t_end), observe);
    tr.snapshot_times = res.times;
    tr.snapshots = std::move(res.snapshots);
    tr.final_field = tr.snapshots.back();
    tr.stats = res.stats;

    if (grid.bc == Boundary::Periodic) {
        const auto sol = integrate_ode(tr.averages.front(), s.dynamics.rule(), s.dynamics.dynamic, s.game,
                                       s.time.t_end, tr.dt);
        for (double t : tr.times) {
            tr.meanfield.push_back(sol.at(t));
        }
    }

    auto& mt = tr.metrics;
    mt["dt"] = tr.dt;
    mt["steps"] = static_cast<double>(tr.stats.steps);
    mt["projections"] = static_cast<double>(tr.stats.projections);
    mt["max_sum_drift"] = tr.stats.max_sum_drift;
    mt["sum_drift_per_time"] = s.time.t_end > 0 ? tr.stats.max_sum_drift / s.time.t_end : 0.0;
    mt["initial_average_1"] = tr.averages.front()[0];
    mt["final_average_1"] = tr.averages.back()[0];
    double lo = 1.0;
    double hi = 0.0;
    for (const auto& a : tr.averages) {
        lo = std::min(lo, a[0]);
        hi = std::max(hi, a[0]);
    }
    mt["min_average_1"] = lo;
    mt["max_average_1"] = hi;
    mt["initial_variance"] = tr.variance.front();
    mt["final_variance"] = tr.variance.back();
    mt["variance_ratio"] = tr.variance.front() > 0 ? tr.variance.back() / tr.variance.front() : kNaN;
    const auto pers = persistence(tr.times, tr.variance);
    mt["peak_variance"] = pers.peak_variance;
    mt["peak_variance_time"] = pers.peak_time;
    mt["persistent"] = pers.persistent ? 1.0 : 0.0;
    if (!tr.meanfield.empty()) {
        mt["meanfield_final_1"] = tr.meanfield.back()[0];
    }
    if (grid.bc == Boundary::Periodic) {
        const auto dm = dominant_mode(tr.final_field);
        mt["dominant_k0"] = dm.k0;
        mt["dominant_k1"] = dm.k1;
        mt["dominant_share"] = dm.share;
        const auto im = dominant_mode(tr.initial);
        mt["initial_dominant_k0"] = im.k0;
        mt["initial_dominant_k1"] = im.k1;
    }
    if (track) {
        mt["interface_failures"] = tr.interface_failures;
        mt["interface_position"] = tr.interface_position.back();
        mt["interface_width"] = tr.interface_width.back();
        try {
            const auto fs = front_speed(tr.times, tr.interface_position, 0.5 * s.time.t_end);
            mt["front_speed"] = fs.speed;
            mt["front_residual"] = fs.residual;
        } catch (const Error&) {
            mt["front_speed"] = kNaN;
        }
    }
    return tr;
}

std::vector<ConvergenceRow> convergence_harness(const Scenario& s, const std::vector<int>& sites, int replicas,
                                                int cells, std::uint64_t seed)
{
    const Grid grid = s.domain.make();
    if (grid.bc != Boundary::Periodic) {
        throw Error(ErrorKind::Unsupported, "the convergence harness needs a periodic domain");
    }
    if (cells < 1 || grid.n[0] % cells != 0) {
        throw Error(ErrorKind::Config, "run.cells must divide domain.nodes");
    }
    const Grid coarse = coarse_grid(grid, cells);
    const DensityField f0 = initial_field(s, grid, seed);
    const IdeSystem sys = make_system(s, grid);
    const double dt = s.time.dt > 0 ? s.time.dt : stable_dt(sys);
    const auto ide = integrate(sys, f0, s.time.t_end, dt, {s.time.t_end});
    const DensityField ref = coarsen(ide.snapshots.back(), coarse);
    const Kernel j = s.kernel.make(grid.dim);
    const RateRule rule = micro_rule(s);

    std::vector<ConvergenceRow> rows;
    for (int n : sites) {
        if (n % cells != 0) {
            throw Error(ErrorKind::Config, "run.sites: " + std::to_string(n) + " is not a multiple of run.cells");
        }
        const auto dom = std::make_shared<const LatticeDomain>(LatticeDomain::make(j, grid, n));
        ConvergenceRow row;
        row.sites = n;
        row.gamma = dom->gamma() / grid.length[0];
        row.replica_l1.assign(static_cast<std::size_t>(replicas), 0.0);
        ParallelErrors errors;
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < replicas; ++r) {
            errors.guard([&] {
                const auto ur = static_cast<std::uint64_t>(r);
                const auto base = seed + static_cast<std::uint64_t>(n);
                auto st = sample_initial(f0, dom, stats::child_seed(base, 2 * ur));
                run(st, rule, s.game, s.time.t_end, stats::child_seed(base, 2 * ur + 1));
                row.replica_l1[static_cast<std::size_t>(r)] = l1_distance(empirical(st, coarse).density, ref);
            });
        }
        errors.rethrow();
        row.mean_l1 = stats::mean(row.replica_l1);
        double var = 0.0;
        for (double v : row.replica_l1) {
            var += (v - row.mean_l1) * (v - row.mean_l1);
        }
        row.sd_l1 = replicas > 1 ? std::sqrt(var / (replicas - 1)) : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

LumpabilityResult lumpability_check(const Scenario& s, int sites, int replicas, std::uint64_t seed)
{
    const Grid grid = s.domain.make();
    const auto dom =
        std::make_shared<const LatticeDomain>(LatticeDomain::make(s.kernel.make(grid.dim), grid, sites));
    const RateRule rule = micro_rule(s);
    const int ns = s.game.num_strategies();
    std::vector<double> rho(static_cast<std::size_t>(ns));
    const DensityField f0 = initial_field(s, grid, seed);
    for (int i = 0; i < ns; ++i) {
        rho[static_cast<std::size_t>(i)] = f0.spatial_average(i);
    }
    const auto agents = static_cast<long>(dom->size());
    const AggregateState a0 = AggregateState::from_density(rho, agents);
    // Same histogram on the lattice, laid out in blocks.
    std::vector<std::uint8_t> sigma0;
    for (int i = 0; i < ns; ++i) {
        sigma0.insert(sigma0.end(), static_cast<std::size_t>(a0.counts[static_cast<std::size_t>(i)]),
                      static_cast<std::uint8_t>(i));
    }

    LumpabilityResult res;
    res.agents = static_cast<int>(agents);
    res.micro_eta.assign(static_cast<std::size_t>(replicas), 0.0);
    res.lumped_eta.assign(static_cast<std::size_t>(replicas), 0.0);
    ParallelErrors errors;
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < replicas; ++r) {
        errors.guard([&] {
            const auto ur = static_cast<std::uint64_t>(r);
            LatticeState st(dom, ns, sigma0);
            run(st, rule, s.game, s.time.t_end, stats::child_seed(seed, 2 * ur));
            res.micro_eta[static_cast<std::size_t>(r)] =
                static_cast<double>(st.counts()[0]) / static_cast<double>(agents);
            std::mt19937_64 rng(stats::child_seed(seed, 2 * ur + 1));
            AggregateState a = a0;
            run_lumped(a, rule, s.game, s.time.t_end, rng);
            res.lumped_eta[static_cast<std::size_t>(r)] = a.eta(0);
        });
    }
    errors.rethrow();
    const auto ks = stats::ks_two_sample(res.micro_eta, res.lumped_eta);
    res.ks_statistic = ks.statistic;
    res.p_value = ks.p_value;
    return res;
}

Dynamic reduced_dynamic(const Scenario& s)
{
    if (!is_coordination(s.game)) {
        throw Error(ErrorKind::Unsupported, "reduced dynamics need a two-strategy coordination game");
    }
    switch (s.dynamics.dynamic) {
    case Dynamic::Logit:
    case Dynamic::TwoStrategyReducedLogit: return Dynamic::TwoStrategyReducedLogit;
    case Dynamic::ImitativeReplicator:
    case Dynamic::TwoStrategyReducedReplicator: return Dynamic::TwoStrategyReducedReplicator;
    case Dynamic::GeneralInputOutput:
        if (s.dynamics.family == RateFamily::Logit) {
            return Dynamic::TwoStrategyReducedLogit;
        }
        if (s.dynamics.family == RateFamily::ComparingNonInnovative) {
            return Dynamic::TwoStrategyReducedReplicator;
        }
        break;
    case Dynamic::BiologicalReplicator: break;
    }
    throw Error(ErrorKind::Unsupported, std::string("no reduced form for dynamic ") + to_string(s.dynamics.dynamic));
}

std::vector<DispersionTable> scenario_dispersion(const Scenario& s, int max_mode, FourierConvention conv)
{
    const Dynamic rd = reduced_dynamic(s);
    const auto modes = scenario_modes(s, max_mode, conv);
    const auto p = coordination_params(s.game);
    std::vector<DispersionTable> out;
    for (double r : stationary_homogeneous(rd, p, s.dynamics.response).roots) {
        out.push_back(dispersion(rd, r, p, s.dynamics.response, modes));
    }
    return out;
}

RunManifest run_experiment(const RunConfig& cfg, const RunOptions& options)
{
    const auto start = std::chrono::steady_clock::now();
    const int threads = options.threads > 0 ? options.threads : cfg.run.threads;
    if (threads > 0) {
        omp_set_num_threads(threads);
    }
    const std::uint64_t seed = options.seed.value_or(cfg.run.seed);
    RunManifest m;
    m.directory = options.output.value_or(cfg.run.output);
    Writer w(m.directory);

    switch (cfg.run.kind) {
    case ExperimentKind::Ide: run_ide_kind(cfg, seed, w, m); break;
    case ExperimentKind::MeanField: run_meanfield_kind(cfg, seed, w, m); break;
    case ExperimentKind::Micro: run_micro_kind(cfg, seed, w, m); break;
    case ExperimentKind::Dispersion: run_dispersion_kind(cfg, w, m); break;
    case ExperimentKind::Phase: run_phase_kind(cfg, w, m); break;
    case ExperimentKind::Convergence: run_convergence_kind(cfg, seed, w, m); break;
    case ExperimentKind::Lumpability: run_lumpability_kind(cfg, seed, w, m); break;
    case ExperimentKind::Deviation: run_deviation_kind(cfg, seed, w, m); break;
    }
    write_summary(w, m.summary);

    auto& j = m.json;
    j["name"] = cfg.run.name;
    j["kind"] = to_string(cfg.run.kind);
    j["version"] = KACGAME_VERSION;
    j["source"] = cfg.source;
    j["seed"] = seed;
    j["config"] = tree_to_json(cfg.tree);
    nlohmann::json notes = nlohmann::json::array();
    nlohmann::json scenarios = nlohmann::json::array();
    for (const auto& s : cfg.scenarios) {
        nlohmann::json sc{{"name", s.name}, {"constants", measured_constants(s)}};
        const auto it = m.summary.find(s.name);
        if (it != m.summary.end() && it->second.count("dt")) {
            sc["dt_used"] = it->second.at("dt");
        }
        if (!s.time.quoted_dt.empty()) {
            const double quoted = eval_expression(s.time.quoted_dt, {{"N", s.domain.nodes}});
            sc["quoted_dt"] = s.time.quoted_dt;
            sc["quoted_dt_value"] = quoted;
            notes.push_back("scenario " + s.name + ": the quoted step " + s.time.quoted_dt + " = " + fmt_num(quoted) +
                            " is recorded only; RK4 runs at dt_used, a step inside its stability region");
        }
        scenarios.push_back(std::move(sc));
    }
    j["scenarios"] = scenarios;
    j["notes"] = notes;
    j["threads"] = omp_get_max_threads();
    if (options.timing) {
        j["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    j["files"] = w.index();
    write_text(m.directory / "manifest.json", j.dump(2) + "\n");
    return m;
}

std::vector<SweepPoint> run_sweep(const RunConfig& cfg, const std::string& key, const std::vector<std::string>& values,
                                  const RunOptions& options)
{
    if (values.empty()) {
        throw Error(ErrorKind::Config, "sweep needs at least one value for " + key);
    }
    const fs::path base = options.output.value_or(cfg.run.output);
    std::vector<SweepPoint> points;
    std::ostringstream os;
    os << "key,value,scenario,metric,metric_value\n";
    for (const auto& v : values) {
        auto tree = cfg.tree;
        apply_override(tree, key, v);
        RunConfig c = config_from_tree(tree, cfg.source);
        RunOptions o = options;
        o.output = (base / (key + "=" + v)).string();
        SweepPoint p{v, run_experiment(c, o)};
        for (const auto& [scenario, metrics] : p.manifest.summary) {
            for (const auto& [mk, mv] : metrics) {
                os << key << ',' << v << ',' << scenario << ',' << mk << ',' << fmt_num(mv) << '\n';
            }
        }
        points.push_back(std::move(p));
    }
    write_text(base / "sweep.csv", os.str());
    return points;
}

} // namespace kacgame

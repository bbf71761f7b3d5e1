// Command-line front end: run, dispersion, converge and sweep.

#include "kacgame/config.hpp"
#include "kacgame/errors.hpp"
#include "kacgame/experiments.hpp"
#include "kacgame/output.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <boost/algorithm/string.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace kacgame;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    int threads = 0;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("config", c.config, "configuration file")->required();
    cmd->add_option("--seed", c.seed, "override run.seed");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--threads", c.threads, "OpenMP threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--set", c.overrides, "override a key, section.key=value (repeatable)");
}

RunConfig load(const Common& c, std::optional<ExperimentKind> force)
{
    RunConfig cfg = load_config(c.config);
    if (c.overrides.empty() && !force) {
        return cfg;
    }
    auto tree = cfg.tree;
    for (const auto& o : c.overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::Config, o + ": expected section.key=value");
        }
        apply_override(tree, o.substr(0, eq), o.substr(eq + 1));
    }
    if (force) {
        apply_override(tree, "run.kind", to_string(*force));
    }
    return config_from_tree(tree, cfg.source);
}

RunOptions options(const Common& c)
{
    RunOptions o;
    o.seed = c.seed;
    o.output = c.out;
    o.threads = c.threads;
    return o;
}

void report(const RunManifest& m)
{
    std::cout << "wrote " << m.directory.string() << '\n';
    for (const auto& [scenario, metrics] : m.summary) {
        for (const auto& [k, v] : metrics) {
            std::cout << "  " << scenario << ' ' << k << " = " << fmt_num(v) << '\n';
        }
    }
}

int exit_code(ErrorKind k)
{
    switch (k) {
    case ErrorKind::Config:
    case ErrorKind::InvalidArgument: return 2;
    case ErrorKind::Io: return 3;
    default: return 4;
    }
}

int fail(const std::string& command, const std::string& kind, const std::string& message, int code)
{
    const nlohmann::json rec{{"status", "error"}, {"command", command}, {"error", kind}, {"message", message},
                             {"exit_code", code}};
    std::cerr << rec.dump() << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spatial evolutionary games with Kac interactions"};
    app.require_subcommand(1);

    Common run_opts;
    auto* run_cmd = app.add_subcommand("run", "run the experiment a config describes");
    add_common(run_cmd, run_opts);

    Common disp_opts;
    auto* disp_cmd = app.add_subcommand("dispersion", "dispersion tables for every scenario of a config");
    add_common(disp_cmd, disp_opts);
    std::optional<int> max_mode;
    std::optional<std::string> convention;
    disp_cmd->add_option("--max-mode", max_mode, "largest |k| (0 selects Nyquist)");
    disp_cmd->add_option("--convention", convention, "grid or unit")->check(CLI::IsMember({"grid", "unit"}));

    Common conv_opts;
    auto* conv_cmd = app.add_subcommand("converge", "micro vs IDE convergence harness");
    add_common(conv_cmd, conv_opts);

    Common sweep_opts;
    std::string param;
    auto* sweep_cmd = app.add_subcommand("sweep", "one run per value of a parameter");
    add_common(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--param", param, "section.key=a,b,c")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("parse", "usage", e.what(), 2);
    }

    std::string command = "run";
    try {
        if (*run_cmd) {
            report(run_experiment(load(run_opts, std::nullopt), options(run_opts)));
        } else if (*disp_cmd) {
            command = "dispersion";
            if (max_mode) {
                disp_opts.overrides.push_back("run.max_mode=" + std::to_string(*max_mode));
            }
            if (convention) {
                disp_opts.overrides.push_back("run.convention=" + *convention);
            }
            report(run_experiment(load(disp_opts, ExperimentKind::Dispersion), options(disp_opts)));
        } else if (*conv_cmd) {
            command = "converge";
            report(run_experiment(load(conv_opts, ExperimentKind::Convergence), options(conv_opts)));
        } else if (*sweep_cmd) {
            command = "sweep";
            const auto eq = param.find('=');
            if (eq == std::string::npos || eq + 1 == param.size()) {
                throw Error(ErrorKind::Config, "--param: expected section.key=a,b,c");
            }
            std::vector<std::string> values;
            boost::split(values, param.substr(eq + 1), boost::is_any_of(","));
            for (auto& v : values) {
                boost::trim(v);
            }
            const auto points = run_sweep(load(sweep_opts, std::nullopt), param.substr(0, eq), values,
                                          options(sweep_opts));
            for (const auto& p : points) {
                report(p.manifest);
            }
        }
    } catch (const Error& e) {
        return fail(command, to_string(e.kind()), e.what(), exit_code(e.kind()));
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(command, "io", e.what(), 3);
    } catch (const std::exception& e) {
        return fail(command, "internal", e.what(), 1);
    }
    return 0;
}

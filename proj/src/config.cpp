#include "kacgame/config.hpp"

#include "kacgame/errors.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>

namespace kacgame {

namespace pt = boost::property_tree;

namespace {

class ExprParser {
public:
    ExprParser(const std::string& text, const std::map<std::string, double>& vars) : s_(text), vars_(vars) {}

    double parse()
    {
        const double v = sum();
        skip();
        if (pos_ != s_.size()) {
            fail("unexpected '" + s_.substr(pos_, 1) + "'");
        }
        return v;
    }

private:
    void skip()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
        }
    }
    bool eat(char c)
    {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& what) const
    {
        throw Error(ErrorKind::Config, "cannot evaluate '" + s_ + "': " + what);
    }

    double sum()
    {
        double v = product();
        for (;;) {
            if (eat('+')) {
                v += product();
            } else if (eat('-')) {
                v -= product();
            } else {
                return v;
            }
        }
    }
    double product()
    {
        double v = unary();
        for (;;) {
            if (eat('*')) {
                v *= unary();
            } else if (eat('/')) {
                v /= unary();
            } else {
                return v;
            }
        }
    }
    double unary()
    {
        if (eat('-')) {
            return -unary();
        }
        if (eat('+')) {
            return unary();
        }
        return power();
    }
    // Right associative, binds tighter than unary minus on its left.
    double power()
    {
        const double base = atom();
        if (eat('^')) {
            return std::pow(base, unary());
        }
        return base;
    }
    double atom()
    {
        skip();
        if (eat('(')) {
            const double v = sum();
            if (!eat(')')) {
                fail("missing ')'");
            }
            return v;
        }
        if (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) {
                fail("bad number");
            }
            pos_ += static_cast<std::size_t>(end - begin);
            return v;
        }
        std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
            ++pos_;
        }
        const std::string name = s_.substr(start, pos_ - start);
        if (name.empty()) {
            fail(pos_ < s_.size() ? "unexpected '" + s_.substr(pos_, 1) + "'" : "unexpected end");
        }
        if (name == "pi") {
            return std::numbers::pi;
        }
        if (name == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        const auto it = vars_.find(name);
        if (it == vars_.end()) {
            fail("unknown name '" + name + "'");
        }
        return it->second;
    }

    const std::string& s_;
    const std::map<std::string, double>& vars_;
    std::size_t pos_ = 0;
};

const std::map<std::string, std::set<std::string>>& schema()
{
    static const std::map<std::string, std::set<std::string>> s{
        {"run",
         {"kind", "name", "seed", "output", "threads", "replicas", "sites", "cells", "n_list", "eps", "max_mode",
          "convention", "beta_range", "zeta_range", "beta_count", "zeta_count", "images"}},
        {"game", {"strategies", "payoff", "a11", "a12", "a21", "a22"}},
        {"kernel", {"profile", "b", "radius", "truncation"}},
        {"domain", {"dim", "nodes", "lower", "upper", "bc", "boundary_width", "left_value", "right_value"}},
        {"dynamics", {"dynamic", "family", "response", "kappa", "method"}},
        {"time", {"dt", "t_end", "snapshots", "quoted_dt"}},
        {"init", {"profile", "rho", "base", "amplitude", "k0", "k1", "lo", "hi", "width"}},
        {"interface", {"window"}},
    };
    return s;
}

pt::ptree::path_type raw_path(const std::string& section, const std::string& key)
{
    return pt::ptree::path_type(section + '\x1f' + key, '\x1f');
}

// Typed access to one (possibly variant-overridden) section.
class Reader {
public:
    Reader(const pt::ptree& tree, const pt::ptree* variant, std::string variant_name)
        : tree_(tree), variant_(variant), variant_name_(std::move(variant_name))
    {
    }

    std::optional<std::string> raw(const std::string& section, const std::string& key) const
    {
        if (variant_ != nullptr) {
            if (auto v = variant_->get_optional<std::string>(pt::ptree::path_type(section + "." + key, '\x1f'))) {
                return boost::trim_copy(*v);
            }
        }
        if (auto v = tree_.get_optional<std::string>(raw_path(section, key))) {
            return boost::trim_copy(*v);
        }
        return std::nullopt;
    }

    std::string path(const std::string& section, const std::string& key) const
    {
        if (variant_ != nullptr && variant_->get_optional<std::string>(pt::ptree::path_type(section + "." + key, '\x1f'))) {
            return "variant:" + variant_name_ + "." + section + "." + key;
        }
        return section + "." + key;
    }

    double number(const std::string& section, const std::string& key, double fallback,
                  const std::map<std::string, double>& vars = {}) const
    {
        const auto v = raw(section, key);
        if (!v) {
            return fallback;
        }
        try {
            return eval_expression(*v, vars);
        } catch (const Error& e) {
            throw Error(ErrorKind::Config, path(section, key) + ": " + e.what());
        }
    }

    double required(const std::string& section, const std::string& key,
                    const std::map<std::string, double>& vars = {}) const
    {
        if (!raw(section, key)) {
            throw Error(ErrorKind::Config, section + "." + key + ": missing required key");
        }
        return number(section, key, 0.0, vars);
    }

    int integer(const std::string& section, const std::string& key, int fallback) const
    {
        const double v = number(section, key, fallback);
        if (v != std::floor(v) || std::abs(v) > 1e9) {
            throw Error(ErrorKind::Config, path(section, key) + ": expected an integer");
        }
        return static_cast<int>(v);
    }

    std::vector<double> list(const std::string& section, const std::string& key,
                             const std::map<std::string, double>& vars = {}) const
    {
        std::vector<double> out;
        const auto v = raw(section, key);
        if (!v || v->empty()) {
            return out;
        }
        std::vector<std::string> parts;
        boost::split(parts, *v, boost::is_any_of(","));
        for (const auto& p : parts) {
            try {
                out.push_back(eval_expression(p, vars));
            } catch (const Error& e) {
                throw Error(ErrorKind::Config, path(section, key) + ": " + e.what());
            }
        }
        return out;
    }

    std::vector<int> int_list(const std::string& section, const std::string& key) const
    {
        std::vector<int> out;
        for (double v : list(section, key)) {
            if (v != std::floor(v) || v < 1) {
                throw Error(ErrorKind::Config, path(section, key) + ": expected positive integers");
            }
            out.push_back(static_cast<int>(v));
        }
        return out;
    }

    std::string word(const std::string& section, const std::string& key, const std::string& fallback) const
    {
        auto v = raw(section, key);
        return v ? boost::to_lower_copy(*v) : fallback;
    }

    [[noreturn]] void bad(const std::string& section, const std::string& key, const std::string& what) const
    {
        throw Error(ErrorKind::Config, path(section, key) + ": " + what);
    }

private:
    const pt::ptree& tree_;
    const pt::ptree* variant_;
    std::string variant_name_;
};

ExperimentKind kind_from(const Reader& r)
{
    static const std::map<std::string, ExperimentKind> names{
        {"ide", ExperimentKind::Ide},
        {"meanfield", ExperimentKind::MeanField},
        {"micro", ExperimentKind::Micro},
        {"dispersion", ExperimentKind::Dispersion},
        {"phase", ExperimentKind::Phase},
        {"convergence", ExperimentKind::Convergence},
        {"lumpability", ExperimentKind::Lumpability},
        {"deviation", ExperimentKind::Deviation},
    };
    const auto w = r.word("run", "kind", "ide");
    const auto it = names.find(w);
    if (it == names.end()) {
        r.bad("run", "kind", "unknown experiment kind '" + w + "'");
    }
    return it->second;
}

Game read_game(const Reader& r)
{
    if (r.raw("game", "payoff")) {
        const int n = r.integer("game", "strategies", 2);
        for (const char* k : {"a11", "a12", "a21", "a22"}) {
            if (r.raw("game", k)) {
                r.bad("game", k, "cannot be combined with game.payoff");
            }
        }
        auto payoff = r.list("game", "payoff");
        try {
            return Game(n, std::move(payoff));
        } catch (const Error& e) {
            r.bad("game", "payoff", e.what());
        }
    }
    if (r.raw("game", "strategies") && r.integer("game", "strategies", 2) != 2) {
        r.bad("game", "strategies", "more than two strategies need game.payoff");
    }
    const double a11 = r.required("game", "a11");
    const double a22 = r.required("game", "a22");
    const double a12 = r.number("game", "a12", 0.0);
    const double a21 = r.number("game", "a21", 0.0);
    return Game(2, {a11, a12, a21, a22});
}

KernelSpec read_kernel(const Reader& r)
{
    KernelSpec k;
    const auto p = r.word("kernel", "profile", "gaussian");
    if (p == "gaussian") {
        k.profile = KernelProfile::Gaussian;
        k.b = r.required("kernel", "b");
        if (!(k.b > 0)) {
            r.bad("kernel", "b", "must be positive");
        }
    } else if (p == "uniform") {
        k.profile = KernelProfile::Uniform;
    } else if (p == "indicator_ball" || p == "ball") {
        k.profile = KernelProfile::IndicatorBall;
        k.radius = r.required("kernel", "radius");
        if (!(k.radius > 0)) {
            r.bad("kernel", "radius", "must be positive");
        }
    } else {
        r.bad("kernel", "profile", "unknown profile '" + p + "'");
    }
    k.truncation = r.number("kernel", "truncation", 1e-12);
    if (!(k.truncation > 0 && k.truncation < 1)) {
        r.bad("kernel", "truncation", "must lie in (0, 1)");
    }
    return k;
}

DomainSpec read_domain(const Reader& r)
{
    DomainSpec d;
    d.dim = r.integer("domain", "dim", 1);
    if (d.dim != 1 && d.dim != 2) {
        r.bad("domain", "dim", "must be 1 or 2");
    }
    d.nodes = r.integer("domain", "nodes", 256);
    if (d.nodes < 1) {
        r.bad("domain", "nodes", "must be positive");
    }
    d.lower = r.number("domain", "lower", -std::numbers::pi);
    d.upper = r.number("domain", "upper", std::numbers::pi);
    if (!(d.upper > d.lower)) {
        r.bad("domain", "upper", "must exceed domain.lower");
    }
    const auto bc = r.word("domain", "bc", "periodic");
    if (bc == "periodic") {
        d.bc = Boundary::Periodic;
    } else if (bc == "fixed") {
        d.bc = Boundary::Fixed;
        if (d.dim != 1) {
            r.bad("domain", "bc", "fixed boundaries are one-dimensional only");
        }
        d.boundary_width = r.required("domain", "boundary_width");
        if (!(d.boundary_width > 0 && 2 * d.boundary_width < d.upper - d.lower)) {
            r.bad("domain", "boundary_width", "must be positive and leave an interior");
        }
    } else {
        r.bad("domain", "bc", "expected periodic or fixed");
    }
    d.left_value = r.number("domain", "left_value", 0.0);
    d.right_value = r.number("domain", "right_value", 1.0);
    for (const char* k : {"left_value", "right_value"}) {
        const double v = r.number("domain", k, 0.0);
        if (v < 0 || v > 1) {
            r.bad("domain", k, "must lie in [0, 1]");
        }
    }
    return d;
}

ResponseFunction read_response(const Reader& r)
{
    const auto w = r.word("dynamics", "response", "positive_part");
    if (w == "positive_part") {
        return ResponseFunction::positive_part();
    }
    if (w == "regularized") {
        const double kappa = r.required("dynamics", "kappa");
        if (!(kappa > 0)) {
            r.bad("dynamics", "kappa", "must be positive");
        }
        return ResponseFunction::regularized(kappa);
    }
    if (w == "exponential") {
        return ResponseFunction::exponential();
    }
    if (w == "metropolis") {
        return ResponseFunction::metropolis();
    }
    r.bad("dynamics", "response", "unknown response '" + w + "'");
}

DynamicsSpec read_dynamics(const Reader& r, const Game& game)
{
    DynamicsSpec d;
    const auto w = r.word("dynamics", "dynamic", "logit");
    try {
        d.dynamic = dynamic_from_string(w);
    } catch (const Error&) {
        r.bad("dynamics", "dynamic", "unknown dynamic '" + w + "'");
    }
    d.response = read_response(r);
    if (r.raw("dynamics", "kappa") && d.response.kind != ResponseKind::Regularized) {
        r.bad("dynamics", "kappa", "only read with response = regularized");
    }
    static const std::map<std::string, RateFamily> families{
        {"logit", RateFamily::Logit},
        {"comparing_non_innovative", RateFamily::ComparingNonInnovative},
        {"comparing_innovative", RateFamily::ComparingInnovative},
        {"targeting_non_innovative", RateFamily::TargetingNonInnovative},
        {"targeting_innovative", RateFamily::TargetingInnovative},
    };
    const auto fam = r.word("dynamics", "family", "");
    if (fam.empty()) {
        d.family = d.dynamic == Dynamic::Logit || d.dynamic == Dynamic::TwoStrategyReducedLogit
                       ? RateFamily::Logit
                       : RateFamily::ComparingNonInnovative;
    } else {
        const auto it = families.find(fam);
        if (it == families.end()) {
            r.bad("dynamics", "family", "unknown rate family '" + fam + "'");
        }
        d.family = it->second;
    }
    const auto m = r.word("dynamics", "method", "fft");
    if (m == "fft") {
        d.method = ConvolutionMethod::Fft;
    } else if (m == "direct") {
        d.method = ConvolutionMethod::DirectParallel;
    } else if (m == "serial") {
        d.method = ConvolutionMethod::DirectSerial;
    } else {
        r.bad("dynamics", "method", "expected fft, direct or serial");
    }
    const bool reduced =
        d.dynamic == Dynamic::TwoStrategyReducedLogit || d.dynamic == Dynamic::TwoStrategyReducedReplicator;
    if (reduced || d.dynamic == Dynamic::BiologicalReplicator) {
        try {
            coordination_params(game);
        } catch (const Error& e) {
            r.bad("dynamics", "dynamic", e.what());
        }
    }
    return d;
}

TimeSpec read_time(const Reader& r, int nodes)
{
    TimeSpec t;
    const std::map<std::string, double> vars{{"N", nodes}};
    t.t_end = r.required("time", "t_end", vars);
    if (!(t.t_end >= 0)) {
        r.bad("time", "t_end", "must be nonnegative");
    }
    const auto dt = r.word("time", "dt", "auto");
    if (dt != "auto") {
        t.dt = r.number("time", "dt", 0.0, vars);
        if (!(t.dt > 0)) {
            r.bad("time", "dt", "must be positive or auto");
        }
    }
    t.snapshots = r.list("time", "snapshots", vars);
    for (double s : t.snapshots) {
        if (s < 0 || s > t.t_end) {
            r.bad("time", "snapshots", "times must lie in [0, t_end]");
        }
    }
    std::sort(t.snapshots.begin(), t.snapshots.end());
    if (auto c = r.raw("time", "quoted_dt")) {
        t.quoted_dt = *c;
        r.number("time", "quoted_dt", 0.0, vars);
    }
    return t;
}

InitSpec read_init(const Reader& r, int strategies)
{
    InitSpec s;
    static const std::map<std::string, InitProfile> names{
        {"constant", InitProfile::Constant}, {"indicator", InitProfile::Indicator},
        {"cosine_seed", InitProfile::CosineSeed}, {"step", InitProfile::Step},
        {"logistic", InitProfile::Logistic}, {"cosine", InitProfile::Cosine},
    };
    const auto w = r.word("init", "profile", "constant");
    const auto it = names.find(w);
    if (it == names.end()) {
        r.bad("init", "profile", "unknown profile '" + w + "'");
    }
    s.profile = it->second;
    s.base = r.number("init", "base", 0.5);
    s.amplitude = r.number("init", "amplitude", 0.0);
    s.k0 = r.integer("init", "k0", 1);
    s.k1 = r.integer("init", "k1", 1);
    s.lo = r.number("init", "lo", 0.0);
    s.hi = r.number("init", "hi", 0.0);
    s.width = r.number("init", "width", 1.0);
    if (s.profile == InitProfile::Constant) {
        s.rho = r.list("init", "rho");
        if (s.rho.empty()) {
            s.rho.assign(static_cast<std::size_t>(strategies), 1.0 / strategies);
        }
        double sum = 0.0;
        for (double v : s.rho) {
            if (v < 0) {
                r.bad("init", "rho", "entries must be nonnegative");
            }
            sum += v;
        }
        if (static_cast<int>(s.rho.size()) != strategies || std::abs(sum - 1.0) > 1e-9) {
            r.bad("init", "rho", "must be a probability vector over the game's strategies");
        }
    } else if (strategies != 2) {
        r.bad("init", "profile", "spatial profiles need a two-strategy game");
    }
    if (s.profile == InitProfile::Indicator && !(s.hi > s.lo)) {
        r.bad("init", "hi", "must exceed init.lo");
    }
    if (s.profile == InitProfile::Logistic && !(s.width > 0)) {
        r.bad("init", "width", "must be positive");
    }
    return s;
}

Scenario read_scenario(const Reader& r, const std::string& name)
{
    Scenario s;
    s.name = name;
    s.game = read_game(r);
    s.kernel = read_kernel(r);
    s.domain = read_domain(r);
    s.dynamics = read_dynamics(r, s.game);
    s.time = read_time(r, s.domain.nodes);
    s.init = read_init(r, s.game.num_strategies());
    s.interface_window = r.list("interface", "window");
    if (!s.interface_window.empty() && (s.interface_window.size() != 2 || !(s.interface_window[1] > s.interface_window[0]))) {
        r.bad("interface", "window", "expected lo, hi with hi > lo");
    }
    return s;
}

RunSettings read_run(const Reader& r)
{
    RunSettings s;
    s.kind = kind_from(r);
    if (auto n = r.raw("run", "name")) {
        s.name = *n;
    }
    const double seed = r.number("run", "seed", 1.0);
    if (seed < 0 || seed != std::floor(seed)) {
        r.bad("run", "seed", "expected a nonnegative integer");
    }
    s.seed = static_cast<std::uint64_t>(seed);
    if (auto o = r.raw("run", "output")) {
        s.output = *o;
    }
    s.threads = r.integer("run", "threads", 0);
    s.replicas = r.integer("run", "replicas", 1);
    if (s.replicas < 1) {
        r.bad("run", "replicas", "must be positive");
    }
    s.sites = r.int_list("run", "sites");
    s.cells = r.integer("run", "cells", 8);
    s.n_list = r.int_list("run", "n_list");
    s.eps = r.number("run", "eps", 0.05);
    s.max_mode = r.integer("run", "max_mode", 0);
    const auto c = r.word("run", "convention", "grid");
    if (c == "grid") {
        s.convention = FourierConvention::GridMode;
    } else if (c == "unit") {
        s.convention = FourierConvention::UnitFrequency;
    } else {
        r.bad("run", "convention", "expected grid or unit");
    }
    s.beta_range = r.list("run", "beta_range");
    s.zeta_range = r.list("run", "zeta_range");
    s.beta_count = r.integer("run", "beta_count", 0);
    s.zeta_count = r.integer("run", "zeta_count", 0);
    const auto img = r.word("run", "images", "true");
    if (img != "true" && img != "false") {
        r.bad("run", "images", "expected true or false");
    }
    s.images = img == "true";

    const bool needs_sites = s.kind == ExperimentKind::Micro || s.kind == ExperimentKind::Convergence ||
                             s.kind == ExperimentKind::Lumpability;
    if (needs_sites && s.sites.empty()) {
        r.bad("run", "sites", "required for this kind");
    }
    if (s.kind == ExperimentKind::Deviation && s.n_list.empty()) {
        r.bad("run", "n_list", "required for this kind");
    }
    if (s.kind == ExperimentKind::Phase) {
        if (s.beta_range.size() != 2 || s.zeta_range.size() != 2 || s.beta_count < 1 || s.zeta_count < 1) {
            r.bad("run", "beta_range", "phase sweeps need beta_range, zeta_range, beta_count, zeta_count");
        }
    }
    return s;
}

void check_keys(const pt::ptree& tree)
{
    const auto& sch = schema();
    for (const auto& [section, body] : tree) {
        if (boost::starts_with(section, "variant:")) {
            if (section.size() == 8) {
                throw Error(ErrorKind::Config, section + ": variant needs a name");
            }
            for (const auto& [key, v] : body) {
                const auto dot = key.find('.');
                const std::string sec = key.substr(0, dot);
                const auto it = sch.find(sec);
                if (dot == std::string::npos || it == sch.end() || sec == "run" ||
                    it->second.count(key.substr(dot + 1)) == 0) {
                    throw Error(ErrorKind::Config, section + "." + key + ": unknown key");
                }
            }
            continue;
        }
        const auto it = sch.find(section);
        if (it == sch.end()) {
            throw Error(ErrorKind::Config, section + ": unknown section");
        }
        for (const auto& [key, v] : body) {
            if (it->second.count(key) == 0) {
                throw Error(ErrorKind::Config, section + "." + key + ": unknown key");
            }
        }
    }
}

} // namespace

double eval_expression(const std::string& text, const std::map<std::string, double>& vars)
{
    return ExprParser(text, vars).parse();
}

const char* to_string(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::Ide: return "ide";
    case ExperimentKind::MeanField: return "meanfield";
    case ExperimentKind::Micro: return "micro";
    case ExperimentKind::Dispersion: return "dispersion";
    case ExperimentKind::Phase: return "phase";
    case ExperimentKind::Convergence: return "convergence";
    case ExperimentKind::Lumpability: return "lumpability";
    case ExperimentKind::Deviation: return "deviation";
    }
    return "?";
}

Kernel KernelSpec::make(int dim) const
{
    switch (profile) {
    case KernelProfile::Gaussian: return Kernel::gaussian(b, dim, truncation);
    case KernelProfile::Uniform: return Kernel::uniform(dim);
    case KernelProfile::IndicatorBall: return Kernel::indicator_ball(radius, dim);
    }
    return Kernel::uniform(dim);
}

Grid DomainSpec::make() const
{
    if (bc == Boundary::Fixed) {
        return Grid::fixed_1d(nodes, lower, upper, boundary_width);
    }
    return dim == 1 ? Grid::periodic_1d(nodes, lower, upper) : Grid::periodic_2d(nodes, lower, upper);
}

void apply_override(pt::ptree& tree, const std::string& key, const std::string& value)
{
    const auto dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == key.size()) {
        throw Error(ErrorKind::Config, key + ": override keys look like section.key");
    }
    tree.put(raw_path(key.substr(0, dot), key.substr(dot + 1)), value);
}

RunConfig config_from_tree(const pt::ptree& tree, const std::string& source)
{
    check_keys(tree);
    RunConfig cfg;
    cfg.tree = tree;
    cfg.source = source;
    const Reader base(tree, nullptr, "");
    cfg.run = read_run(base);
    for (const auto& [section, body] : tree) {
        if (boost::starts_with(section, "variant:")) {
            const std::string name = section.substr(8);
            cfg.scenarios.push_back(read_scenario(Reader(tree, &body, name), name));
        }
    }
    if (cfg.scenarios.empty()) {
        cfg.scenarios.push_back(read_scenario(base, cfg.run.name));
    }
    return cfg;
}

RunConfig parse_config(const std::string& text, const std::string& source)
{
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorKind::Config, source + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    return config_from_tree(tree, source);
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open config " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

DensityField initial_field(const Scenario& s, const Grid& grid, std::uint64_t seed)
{
    if (s.init.profile == InitProfile::Constant) {
        DensityField f = DensityField::constant(grid, s.init.rho);
        if (grid.bc == Boundary::Fixed && s.game.num_strategies() == 2) {
            const double mid = grid.lower[0] + 0.5 * grid.length[0];
            for (std::size_t v = 0; v < grid.size(); ++v) {
                if (!grid.active(v)) {
                    const double p = grid.coord(0, static_cast<int>(v)) < mid ? s.domain.left_value : s.domain.right_value;
                    f.at(0, v) = p;
                    f.at(1, v) = 1.0 - p;
                }
            }
        }
        return f;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> p(grid.size());
    const double mid = grid.lower[0] + 0.5 * grid.length[0];
    for (std::size_t v = 0; v < grid.size(); ++v) {
        const double x = grid.coord(0, grid.index(v, 0));
        const double y = grid.dim == 2 ? grid.coord(1, grid.index(v, 1)) : 0.0;
        double val = 0.0;
        switch (s.init.profile) {
        case InitProfile::Indicator: val = (x > s.init.lo && x < s.init.hi) ? 1.0 : 0.0; break;
        case InitProfile::Step: val = x > s.init.lo ? 1.0 : 0.0; break;
        case InitProfile::Logistic: val = logistic((x - s.init.lo) / s.init.width); break;
        case InitProfile::Cosine: val = s.init.base + s.init.amplitude * std::cos(s.init.k0 * x); break;
        case InitProfile::CosineSeed: {
            const double wave = grid.dim == 2 ? std::cos(s.init.k0 * x) * std::cos(s.init.k1 * y) : std::cos(s.init.k0 * x);
            val = s.init.base + s.init.amplitude * unit(rng) * wave;
            break;
        }
        case InitProfile::Constant: break;
        }
        val = std::clamp(val, 0.0, 1.0);
        if (grid.bc == Boundary::Fixed && !grid.active(v)) {
            val = x < mid ? s.domain.left_value : s.domain.right_value;
        }
        p[v] = val;
    }
    return DensityField::from_p(grid, p);
}

} // namespace kacgame

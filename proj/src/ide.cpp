#include "kacgame/ide.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kacgame {

const char* to_string(Dynamic d)
{
    switch (d) {
    case Dynamic::GeneralInputOutput: return "general";
    case Dynamic::Logit: return "logit";
    case Dynamic::ImitativeReplicator: return "imitative_replicator";
    case Dynamic::BiologicalReplicator: return "biological_replicator";
    case Dynamic::TwoStrategyReducedReplicator: return "reduced_replicator";
    case Dynamic::TwoStrategyReducedLogit: return "reduced_logit";
    }
    return "unknown";
}

Dynamic dynamic_from_string(const std::string& s)
{
    for (auto d : {Dynamic::GeneralInputOutput, Dynamic::Logit, Dynamic::ImitativeReplicator,
                   Dynamic::BiologicalReplicator, Dynamic::TwoStrategyReducedReplicator,
                   Dynamic::TwoStrategyReducedLogit}) {
        if (s == to_string(d)) {
            return d;
        }
    }
    throw Error(ErrorKind::Config, "unknown dynamic '" + s + "'");
}

double logistic(double x)
{
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double reduced_F(Dynamic dynamic, double r, double s, CoordinationParams params, const ResponseFunction& response)
{
    const double x = params.beta * (r - params.zeta);
    switch (dynamic) {
    case Dynamic::TwoStrategyReducedReplicator:
    case Dynamic::ImitativeReplicator:
        return (1.0 - s) * r * response(x) - s * (1.0 - r) * response(-x);
    case Dynamic::TwoStrategyReducedLogit:
    case Dynamic::Logit:
        return logistic(x) - s;
    default:
        throw Error(ErrorKind::InvalidArgument, std::string("no reduced form for dynamic ") + to_string(dynamic));
    }
}

namespace {

bool reduced(Dynamic d)
{
    return d == Dynamic::TwoStrategyReducedReplicator || d == Dynamic::TwoStrategyReducedLogit;
}

} // namespace

IdeSystem::IdeSystem(Game game, RateRule rule, Dynamic dynamic, DiscreteKernel kernel, Grid grid,
                     ConvolutionMethod method)
    : game_(std::move(game)), rule_(rule), dynamic_(dynamic), kernel_(std::move(kernel)), grid_(grid), method_(method)
{
    if (kernel_.dim != grid_.dim) {
        throw Error(ErrorKind::InvalidArgument, "kernel and grid dimensions differ");
    }
    if (reduced(dynamic_)) {
        params_ = coordination_params(game_);
    }
    if (dynamic_ == Dynamic::ImitativeReplicator) {
        rule_.family = RateFamily::ComparingNonInnovative;
    } else if (dynamic_ == Dynamic::Logit || dynamic_ == Dynamic::TwoStrategyReducedLogit) {
        rule_ = RateRule::logit();
    }
    if (method_ == ConvolutionMethod::Fft) {
        if (grid_.bc == Boundary::Periodic && grid_.size() > 1) {
            fft_ = std::make_unique<conv::FftConvolver>(kernel_, grid_);
        } else {
            method_ = ConvolutionMethod::DirectParallel;
        }
    }
}

IdeSystem::~IdeSystem() = default;
IdeSystem::IdeSystem(IdeSystem&&) noexcept = default;

CoordinationParams IdeSystem::params() const
{
    if (!reduced(dynamic_)) {
        return coordination_params(game_);
    }
    return params_;
}

RateRule IdeSystem::effective_rule() const
{
    if (dynamic_ == Dynamic::TwoStrategyReducedReplicator) {
        return RateRule::imitative(rule_.response);
    }
    return rule_;
}

void IdeSystem::convolve(std::span<const double> in, std::span<double> out) const
{
    switch (method_) {
    case ConvolutionMethod::Fft: fft_->apply(in, out); break;
    case ConvolutionMethod::DirectParallel: conv::direct_parallel(kernel_, grid_, in, out); break;
    case ConvolutionMethod::DirectSerial: conv::direct_serial(kernel_, grid_, in, out); break;
    }
}

void IdeSystem::rhs(const DensityField& f, DensityField& out) const
{
    const int ns = game_.num_strategies();
    if (f.num_strategies() != ns || f.nodes() != grid_.size()) {
        throw Error(ErrorKind::InvalidArgument, "density field does not match the system");
    }
    if (out.num_strategies() != ns || out.nodes() != grid_.size()) {
        out = DensityField(grid_, ns);
    }
    const std::size_t nodes = grid_.size();
    const bool fixed = grid_.bc == Boundary::Fixed;
    const bool serial = method_ == ConvolutionMethod::DirectSerial;

    if (reduced(dynamic_)) {
        std::vector<double> r(nodes);
        convolve(f.channel(0), r);
        auto dp = out.channel(0);
        auto dq = out.channel(1);
        const auto p = f.channel(0);
        for (std::size_t v = 0; v < nodes; ++v) {
            const double d = (fixed && !grid_.active(v)) ? 0.0 : reduced_F(dynamic_, r[v], p[v], params_, rule_.response);
            dp[v] = d;
            dq[v] = -d;
        }
        return;
    }

    DensityField g(grid_, ns);
    for (int l = 0; l < ns; ++l) {
        convolve(f.channel(l), g.channel(l));
    }
    const long total = static_cast<long>(nodes);
#pragma omp parallel if (!serial)
    {
        const auto un = static_cast<std::size_t>(ns);
        std::vector<double> gv(un), fv(un), dv(un);
#pragma omp for schedule(static)
        for (long vi = 0; vi < total; ++vi) {
            const auto v = static_cast<std::size_t>(vi);
            if (fixed && !grid_.active(v)) {
                for (int i = 0; i < ns; ++i) {
                    out.at(i, v) = 0.0;
                }
                continue;
            }
            for (int l = 0; l < ns; ++l) {
                gv[static_cast<std::size_t>(l)] = g.at(l, v);
                fv[static_cast<std::size_t>(l)] = f.at(l, v);
            }
            local_tendency(dynamic_, rule_, game_, params_, gv, fv, dv);
            for (int i = 0; i < ns; ++i) {
                out.at(i, v) = dv[static_cast<std::size_t>(i)];
            }
        }
    }
}

void local_tendency(Dynamic dynamic, const RateRule& rule, const Game& game, CoordinationParams params,
                    std::span<const double> g, std::span<const double> f, std::span<double> out)
{
    const int ns = game.num_strategies();
    const auto un = static_cast<std::size_t>(ns);
    if (reduced(dynamic)) {
        const double d = reduced_F(dynamic, g[0], f[0], params, rule.response);
        out[0] = d;
        out[1] = -d;
        return;
    }
    double payoff[256];
    double probs[256];
    std::span<double> pay(payoff, un);
    game.payoff_vector(g, pay);
    switch (dynamic) {
    case Dynamic::Logit:
        logit_probabilities(pay, std::span<double>(probs, un));
        for (std::size_t i = 0; i < un; ++i) {
            out[i] = probs[i] - f[i];
        }
        return;
    case Dynamic::BiologicalReplicator: {
        double avg = 0.0;
        for (std::size_t k = 0; k < un; ++k) {
            avg += f[k] * payoff[k];
        }
        for (std::size_t i = 0; i < un; ++i) {
            out[i] = f[i] * (payoff[i] - avg);
        }
        return;
    }
    default:
        break;
    }
    for (int i = 0; i < ns; ++i) {
        double in = 0.0;
        double outflow = 0.0;
        for (int k = 0; k < ns; ++k) {
            if (k == i) {
                continue;
            }
            in += mean_rate(rule, k, i, pay, g) * f[static_cast<std::size_t>(k)];
            outflow += mean_rate(rule, i, k, pay, g);
        }
        out[static_cast<std::size_t>(i)] = in - f[static_cast<std::size_t>(i)] * outflow;
    }
}

namespace {

void axpy(DensityField& y, const DensityField& base, double a, const DensityField& x)
{
    auto& yr = y.raw();
    const auto& br = base.raw();
    const auto& xr = x.raw();
    for (std::size_t j = 0; j < yr.size(); ++j) {
        yr[j] = br[j] + a * xr[j];
    }
}

} // namespace

IntegrationResult integrate(const IdeSystem& system, const DensityField& f0, double t_end, double dt,
                            const std::vector<double>& snapshot_times, const StepObserver& observer)
{
    if (!(dt > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "time step must be positive");
    }
    if (t_end < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "t_end must be nonnegative");
    }
    if (f0.max_simplex_violation() > 1e-9) {
        throw Error(ErrorKind::InvalidArgument, "initial field is not simplex-valued");
    }
    std::vector<double> targets;
    for (double t : snapshot_times) {
        if (t < 0.0 || t > t_end + 1e-12) {
            throw Error(ErrorKind::InvalidArgument, "snapshot time outside [0, t_end]");
        }
        targets.push_back(t);
    }
    std::sort(targets.begin(), targets.end());

    IntegrationResult res;
    res.stats.dt = dt;
    DensityField f = f0;
    const int ns = f.num_strategies();
    const Grid& grid = f.grid();
    DensityField k1(grid, ns), k2(grid, ns), k3(grid, ns), k4(grid, ns), tmp(grid, ns);

    std::size_t next = 0;
    auto take_snapshots = [&](double t) {
        while (next < targets.size() && targets[next] <= t + 1e-12) {
            res.times.push_back(targets[next]);
            res.snapshots.push_back(f);
            ++next;
        }
    };
    double t = 0.0;
    take_snapshots(t);
    if (observer) {
        observer(t, f);
    }
    while (t < t_end - 1e-12) {
        double stop = t_end;
        if (next < targets.size()) {
            stop = std::min(stop, targets[next]);
        }
        const double h = std::min(dt, stop - t);
        system.rhs(f, k1);
        axpy(tmp, f, 0.5 * h, k1);
        system.rhs(tmp, k2);
        axpy(tmp, f, 0.5 * h, k2);
        system.rhs(tmp, k3);
        axpy(tmp, f, h, k3);
        system.rhs(tmp, k4);
        auto& fr = f.raw();
        for (std::size_t j = 0; j < fr.size(); ++j) {
            fr[j] += h / 6.0 * (k1.raw()[j] + 2.0 * k2.raw()[j] + 2.0 * k3.raw()[j] + k4.raw()[j]);
        }
        // Land exactly on the target to avoid a sliver step.
        t = (stop - (t + h) < 1e-12) ? stop : t + h;
        ++res.stats.steps;

        const double violation = f.max_simplex_violation();
        res.stats.max_sum_drift = std::max(res.stats.max_sum_drift, f.max_sum_drift());
        if (!std::isfinite(violation) || violation > 1e-6) {
            std::ostringstream os;
            os << "simplex violation " << violation << " at step " << res.stats.steps << " (t=" << t
               << ", dt=" << dt << ")";
            throw Error(ErrorKind::Instability, os.str());
        }
        if (violation > 1e-12) {
            res.stats.projected_drift += f.project_simplex();
            ++res.stats.projections;
        }
        take_snapshots(t);
        if (observer) {
            observer(t, f);
        }
    }
    take_snapshots(t_end);
    return res;
}

double stable_dt(const IdeSystem& system)
{
    const RateRule rule = system.effective_rule();
    const Game& game = system.game();
    double m = 0.0;
    double lip = 0.0;
    if (system.dynamic() == Dynamic::BiologicalReplicator) {
        m = std::max(std::abs(game.min_payoff()), std::abs(game.max_payoff()));
        lip = 2.0 * m;
    } else {
        m = rate_bound_analytic(rule, game);
        lip = rate_lipschitz_measured(rule, game, 500);
    }
    const double l_rhs = 2.0 * game.num_strategies() * (m + lip);
    return std::min(0.05, 0.5 / std::max(l_rhs, 1e-12));
}

} // namespace kacgame

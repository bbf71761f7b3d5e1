#include "kacgame/game.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace kacgame {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::NotCoordinationGame: return "not_coordination_game";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Instability: return "instability";
    case ErrorKind::RateBound: return "rate_bound";
    case ErrorKind::MultiInterface: return "multi_interface";
    case ErrorKind::NotStationary: return "not_stationary";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

Game::Game(int num_strategies, std::vector<double> payoff)
    : n_(num_strategies), payoff_(std::move(payoff))
{
    if (n_ < 2) {
        throw Error(ErrorKind::InvalidArgument, "a game needs at least two strategies");
    }
    if (payoff_.size() != static_cast<size_t>(n_ * n_)) {
        throw Error(ErrorKind::InvalidArgument, "payoff matrix must be |S| x |S|");
    }
    for (double v : payoff_) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::InvalidArgument, "payoff entries must be finite");
        }
    }
}

Game Game::coordination(double a11, double a22)
{
    return Game(2, {a11, 0.0, 0.0, a22});
}

double Game::min_payoff() const { return *std::min_element(payoff_.begin(), payoff_.end()); }
double Game::max_payoff() const { return *std::max_element(payoff_.begin(), payoff_.end()); }

void Game::payoff_vector(std::span<const double> m, std::span<double> out) const
{
    for (int k = 0; k < n_; ++k) {
        double s = 0.0;
        for (int l = 0; l < n_; ++l) {
            s += a(k, l) * m[static_cast<size_t>(l)];
        }
        out[static_cast<size_t>(k)] = s;
    }
}

CoordinationParams coordination_params(const Game& g)
{
    if (g.num_strategies() != 2) {
        throw Error(ErrorKind::NotCoordinationGame, "coordination parameters need a two-strategy game");
    }
    if (g.a(0, 1) != 0.0 || g.a(1, 0) != 0.0) {
        throw Error(ErrorKind::NotCoordinationGame, "off-diagonal payoffs must vanish (normalized form)");
    }
    if (!(g.a(0, 0) > 0.0) || !(g.a(1, 1) > 0.0)) {
        throw Error(ErrorKind::NotCoordinationGame, "diagonal payoffs must be positive");
    }
    const double beta = g.a(0, 0) + g.a(1, 1);
    return {g.a(1, 1) / beta, beta};
}

Game game_from_coordination(CoordinationParams p)
{
    if (!(p.zeta > 0.0 && p.zeta < 1.0) || !(p.beta > 0.0)) {
        throw Error(ErrorKind::NotCoordinationGame, "need 0 < zeta < 1 and beta > 0");
    }
    return Game::coordination(p.beta * (1.0 - p.zeta), p.beta * p.zeta);
}

// ---------------------------------------------------------------------------
// Response functions

ResponseFunction ResponseFunction::positive_part() { return {}; }

ResponseFunction ResponseFunction::regularized(double kappa)
{
    if (!(kappa > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "regularization kappa must be positive");
    }
    ResponseFunction f;
    f.kind = std::isinf(kappa) ? ResponseKind::PositivePart : ResponseKind::Regularized;
    f.kappa = kappa;
    return f;
}

ResponseFunction ResponseFunction::exponential()
{
    ResponseFunction f;
    f.kind = ResponseKind::Exponential;
    return f;
}

ResponseFunction ResponseFunction::metropolis()
{
    ResponseFunction f;
    f.kind = ResponseKind::Metropolis;
    return f;
}

ResponseFunction ResponseFunction::affine(double slope, double offset)
{
    ResponseFunction f;
    f.kind = ResponseKind::Affine;
    f.slope = slope;
    f.offset = offset;
    return f;
}

namespace {

double sigmoid(double x)
{
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

double ResponseFunction::operator()(double s) const
{
    switch (kind) {
    case ResponseKind::PositivePart:
        return s > 0.0 ? s : 0.0;
    case ResponseKind::Regularized: {
        const double ks = kappa * s;
        if (ks > 0.0) {
            return s + std::log1p(std::exp(-ks)) / kappa;
        }
        return std::log1p(std::exp(ks)) / kappa;
    }
    case ResponseKind::Exponential:
        return std::exp(s);
    case ResponseKind::Metropolis:
        return s >= 0.0 ? 1.0 : std::exp(s);
    case ResponseKind::Affine:
        return std::max(0.0, slope * s + offset);
    }
    return 0.0;
}

double ResponseFunction::derivative(double s) const
{
    switch (kind) {
    case ResponseKind::PositivePart:
        return s > 0.0 ? 1.0 : (s < 0.0 ? 0.0 : 0.5);
    case ResponseKind::Regularized:
        return sigmoid(kappa * s);
    case ResponseKind::Exponential:
        return std::exp(s);
    case ResponseKind::Metropolis:
        return s >= 0.0 ? 0.0 : std::exp(s);
    case ResponseKind::Affine:
        return slope * s + offset > 0.0 ? slope : 0.0;
    }
    return 0.0;
}

double ResponseFunction::lipschitz(double range) const
{
    switch (kind) {
    case ResponseKind::PositivePart:
    case ResponseKind::Regularized:
    case ResponseKind::Metropolis:
        return 1.0;
    case ResponseKind::Exponential:
        return std::exp(range);
    case ResponseKind::Affine:
        return std::abs(slope);
    }
    return 1.0;
}

std::string ResponseFunction::describe() const
{
    std::ostringstream os;
    switch (kind) {
    case ResponseKind::PositivePart: os << "positive_part"; break;
    case ResponseKind::Regularized: os << "regularized(kappa=" << kappa << ")"; break;
    case ResponseKind::Exponential: os << "exponential"; break;
    case ResponseKind::Metropolis: os << "metropolis"; break;
    case ResponseKind::Affine: os << "affine(" << slope << "," << offset << ")"; break;
    }
    return os.str();
}

double eval_response(const ResponseFunction& f, double s) { return f(s); }

// ---------------------------------------------------------------------------
// Rates

bool RateRule::innovative() const
{
    return family == RateFamily::TargetingInnovative || family == RateFamily::ComparingInnovative
        || family == RateFamily::Logit;
}

std::string RateRule::describe() const
{
    switch (family) {
    case RateFamily::TargetingInnovative: return "targeting_innovative/" + response.describe();
    case RateFamily::ComparingInnovative: return "comparing_innovative/" + response.describe();
    case RateFamily::TargetingNonInnovative: return "targeting_noninnovative/" + response.describe();
    case RateFamily::ComparingNonInnovative: return "comparing_noninnovative/" + response.describe();
    case RateFamily::Logit: return "logit";
    }
    return "unknown";
}

void logit_probabilities(std::span<const double> payoff, std::span<double> out)
{
    const double top = *std::max_element(payoff.begin(), payoff.end());
    double z = 0.0;
    for (size_t l = 0; l < payoff.size(); ++l) {
        out[l] = std::exp(payoff[l] - top);
        z += out[l];
    }
    for (size_t l = 0; l < payoff.size(); ++l) {
        out[l] /= z;
    }
}

double mean_rate(const RateRule& rule, int i, int k, std::span<const double> payoff,
                 std::span<const double> neighbor_weights)
{
    const auto ik = static_cast<size_t>(i);
    const auto kk = static_cast<size_t>(k);
    switch (rule.family) {
    case RateFamily::TargetingInnovative:
        return rule.response(payoff[kk]);
    case RateFamily::ComparingInnovative:
        return rule.response(payoff[kk] - payoff[ik]);
    case RateFamily::TargetingNonInnovative:
        if (neighbor_weights[kk] <= 0.0) {
            return 0.0;
        }
        return neighbor_weights[kk] * rule.response(payoff[kk]);
    case RateFamily::ComparingNonInnovative:
        if (neighbor_weights[kk] <= 0.0) {
            return 0.0;
        }
        return neighbor_weights[kk] * rule.response(payoff[kk] - payoff[ik]);
    case RateFamily::Logit: {
        double top = payoff[0];
        for (double p : payoff) {
            top = std::max(top, p);
        }
        double z = 0.0;
        for (double p : payoff) {
            z += std::exp(p - top);
        }
        return std::exp(payoff[kk] - top) / z;
    }
    }
    throw Error(ErrorKind::Config, "unknown rate family");
}

double rate_bound_analytic(const RateRule& rule, const Game& game)
{
    const double lo = game.min_payoff();
    const double hi = game.max_payoff();
    switch (rule.family) {
    case RateFamily::Logit:
        return 1.0;
    case RateFamily::TargetingInnovative:
    case RateFamily::TargetingNonInnovative:
        return std::max(rule.response(hi), rule.response(lo));
    case RateFamily::ComparingInnovative:
    case RateFamily::ComparingNonInnovative:
        return std::max(rule.response(hi - lo), rule.response(lo - hi));
    }
    return 1.0;
}

namespace {

// Visit every point of the simplex lattice {m : m_l = c_l / R, sum c_l = R}.
template <class Fn>
void for_each_simplex_point(int n, int resolution, Fn&& fn)
{
    std::vector<int> counts(static_cast<size_t>(n), 0);
    std::vector<double> m(static_cast<size_t>(n), 0.0);
    auto rec = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == n - 1) {
            counts[static_cast<size_t>(pos)] = remaining;
            for (int l = 0; l < n; ++l) {
                m[static_cast<size_t>(l)] = static_cast<double>(counts[static_cast<size_t>(l)]) / resolution;
            }
            fn(std::span<const double>(m));
            return;
        }
        for (int c = 0; c <= remaining; ++c) {
            counts[static_cast<size_t>(pos)] = c;
            self(self, pos + 1, remaining - c);
        }
    };
    rec(rec, 0, resolution);
}

} // namespace

double rate_sup_measured(const RateRule& rule, const Game& game, int resolution)
{
    const int n = game.num_strategies();
    // Keep the lattice size bounded for larger strategy sets.
    int res = resolution;
    while (n > 2 && res > 4) {
        double points = 1.0;
        for (int j = 1; j < n; ++j) {
            points *= static_cast<double>(res + j) / j;
        }
        if (points < 2e5) {
            break;
        }
        res /= 2;
    }
    std::vector<double> payoff(static_cast<size_t>(n));
    double sup = 0.0;
    for_each_simplex_point(n, res, [&](std::span<const double> m) {
        game.payoff_vector(m, payoff);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < n; ++k) {
                sup = std::max(sup, mean_rate(rule, i, k, payoff, m));
            }
        }
    });
    return sup;
}

double thinning_bound(const RateRule& rule, const Game& game)
{
    const double measured = 1.05 * rate_sup_measured(rule, game);
    const double analytic = rate_bound_analytic(rule, game);
    const double bound = std::min(measured, analytic);
    return bound > 0.0 ? bound : analytic;
}

double rate_lipschitz_measured(const RateRule& rule, const Game& game, int samples,
                               unsigned long long seed)
{
    const int n = game.num_strategies();
    const auto un = static_cast<size_t>(n);
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expo(1.0);
    auto draw = [&](std::vector<double>& m) {
        double z = 0.0;
        for (auto& v : m) {
            v = expo(rng);
            z += v;
        }
        for (auto& v : m) {
            v /= z;
        }
    };
    std::vector<double> m1(un), m2(un), mt(un), p1(un), p2(un);
    const double step = 1e-6;
    double lip = 0.0;
    for (int s = 0; s < samples; ++s) {
        draw(m1);
        draw(m2);
        double dist = 0.0;
        for (size_t l = 0; l < un; ++l) {
            mt[l] = (1.0 - step) * m1[l] + step * m2[l];
            dist += std::abs(mt[l] - m1[l]);
        }
        if (dist <= 0.0) {
            continue;
        }
        game.payoff_vector(m1, p1);
        game.payoff_vector(mt, p2);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < n; ++k) {
                const double d = std::abs(mean_rate(rule, i, k, p2, mt) - mean_rate(rule, i, k, p1, m1));
                lip = std::max(lip, d / dist);
            }
        }
    }
    return lip;
}

} // namespace kacgame

#include "kacgame/stability.hpp"

#include "fftw_lock.hpp"

#include <Eigen/Dense>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace kacgame {

namespace {

bool is_replicator(Dynamic d)
{
    return d == Dynamic::TwoStrategyReducedReplicator || d == Dynamic::ImitativeReplicator;
}

bool is_logit(Dynamic d)
{
    return d == Dynamic::TwoStrategyReducedLogit || d == Dynamic::Logit;
}

double bisect(const std::function<double(double)>& g, double lo, double hi, double tol)
{
    double glo = g(lo);
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (gm == 0.0) {
            return mid;
        }
        if ((gm < 0.0) == (glo < 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

StationaryReport stationary_homogeneous(Dynamic dynamic, CoordinationParams params, const ResponseFunction& response)
{
    if (!is_replicator(dynamic) && !is_logit(dynamic)) {
        throw Error(ErrorKind::InvalidArgument, "stationary scan needs a two-strategy reduced dynamic");
    }
    auto g = [&](double p) { return reduced_F(dynamic, p, p, params, response); };
    constexpr int scan = 10000;
    std::vector<double> vals(scan + 1);
    for (int j = 0; j <= scan; ++j) {
        vals[static_cast<std::size_t>(j)] = g(static_cast<double>(j) / scan);
    }
    std::vector<double> roots;
    std::vector<bool> touching;
    for (int j = 0; j <= scan; ++j) {
        const double p = static_cast<double>(j) / scan;
        const double v = vals[static_cast<std::size_t>(j)];
        if (v == 0.0) {
            roots.push_back(p);
            touching.push_back(false);
            continue;
        }
        if (j < scan) {
            const double w = vals[static_cast<std::size_t>(j + 1)];
            if (w != 0.0 && (v < 0.0) != (w < 0.0)) {
                roots.push_back(bisect(g, p, static_cast<double>(j + 1) / scan, 1e-12));
                touching.push_back(false);
                continue;
            }
        }
        // A zero that touches without crossing shows up as a tiny local minimum of |F|.
        if (j > 0 && j < scan) {
            const double a = std::abs(vals[static_cast<std::size_t>(j - 1)]);
            const double c = std::abs(vals[static_cast<std::size_t>(j + 1)]);
            const double b = std::abs(v);
            const bool no_cross = (vals[static_cast<std::size_t>(j - 1)] < 0.0) == (v < 0.0)
                && (vals[static_cast<std::size_t>(j + 1)] < 0.0) == (v < 0.0);
            if (no_cross && b < a && b < c && b < 1e-8) {
                // Golden-section search on |F| over the bracketing cells.
                double lo = static_cast<double>(j - 1) / scan;
                double hi = static_cast<double>(j + 1) / scan;
                const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
                while (hi - lo > 1e-12) {
                    const double m1 = hi - phi * (hi - lo);
                    const double m2 = lo + phi * (hi - lo);
                    if (std::abs(g(m1)) < std::abs(g(m2))) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                const double p_star = 0.5 * (lo + hi);
                if (std::abs(g(p_star)) <= 1e-10) {
                    roots.push_back(p_star);
                    touching.push_back(true);
                }
            }
        }
    }
    StationaryReport rep;
    rep.roots = roots;
    rep.degenerate.assign(roots.size(), false);
    for (std::size_t r = 0; r < roots.size(); ++r) {
        rep.residuals.push_back(std::abs(g(roots[r])));
        if (touching[r]) {
            rep.degenerate[r] = true;
        }
        if ((r > 0 && roots[r] - roots[r - 1] < 1e-4) || (r + 1 < roots.size() && roots[r + 1] - roots[r] < 1e-4)) {
            rep.degenerate[r] = true;
        }
    }
    return rep;
}

namespace {

// min(-H(p-), H(p+)) for H(p) = l(beta (p - zeta)) - p, where p-+ are the
// critical points of H. Positive iff there are three fixed points.
double logit_discriminant(double beta, double zeta)
{
    if (beta <= 4.0) {
        return beta == 4.0 ? -std::abs(0.5 - zeta) : -1.0;
    }
    const double root = std::sqrt(1.0 - 4.0 / beta);
    const double l_minus = 0.5 * (1.0 - root);
    const double l_plus = 0.5 * (1.0 + root);
    const double p_minus = zeta + std::log(l_minus / (1.0 - l_minus)) / beta;
    const double p_plus = zeta + std::log(l_plus / (1.0 - l_plus)) / beta;
    const double h_minus = l_minus - p_minus;
    const double h_plus = l_plus - p_plus;
    return std::min(-h_minus, h_plus);
}

} // namespace

int logit_root_count(double beta, double zeta)
{
    return logit_discriminant(beta, zeta) > 0.0 ? 3 : 1;
}

double critical_beta(double zeta)
{
    if (!(zeta > 0.0 && zeta < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "critical_beta needs 0 < zeta < 1");
    }
    double lo = 4.0;
    double hi = 8.0;
    while (logit_discriminant(hi, zeta) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e9) {
            throw Error(ErrorKind::InvalidArgument, "no logit bifurcation found");
        }
    }
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (logit_discriminant(mid, zeta) > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<ModeSample> mode_samples_1d(const DiscreteKernel& jd, const Grid& grid, FourierConvention conv, int K)
{
    std::vector<ModeSample> out;
    for (int k = -K; k <= K; ++k) {
        out.push_back({k, 0, kernel_hat(jd, grid, conv, {k, 0})});
    }
    return out;
}

std::vector<ModeSample> mode_samples_2d(const DiscreteKernel& jd, const Grid& grid, FourierConvention conv, int K)
{
    std::vector<ModeSample> out;
    for (int k0 = -K; k0 <= K; ++k0) {
        for (int k1 = -K; k1 <= K; ++k1) {
            out.push_back({k0, k1, kernel_hat(jd, grid, conv, {k0, k1})});
        }
    }
    return out;
}

Linearization reduced_linearization(Dynamic dynamic, double r, double s, CoordinationParams params,
                                    const ResponseFunction& response)
{
    const double beta = params.beta;
    const double x = beta * (r - params.zeta);
    if (is_replicator(dynamic)) {
        const double m = (1.0 - s) * (response(x) + r * beta * response.derivative(x))
            + s * (response(-x) + (1.0 - r) * beta * response.derivative(-x));
        const double n = -r * response(x) - (1.0 - r) * response(-x);
        return {m, n};
    }
    if (is_logit(dynamic)) {
        const double l = logistic(x);
        return {beta * l * (1.0 - l), -1.0};
    }
    throw Error(ErrorKind::InvalidArgument, "no reduced linearization for this dynamic");
}

double closed_form_lambda(Dynamic dynamic, double p0, CoordinationParams params, const ResponseFunction& response,
                          double jhat)
{
    const double beta = params.beta;
    const double zeta = params.zeta;
    if (is_logit(dynamic)) {
        return beta * (1.0 - p0) * p0 * jhat - 1.0;
    }
    if (!is_replicator(dynamic)) {
        throw Error(ErrorKind::InvalidArgument, "no closed form for this dynamic");
    }
    const double f0 = response(0.0);
    if (p0 == 0.0) {
        return response(-beta * zeta) * jhat - response(beta * zeta);
    }
    if (p0 == 1.0) {
        return response(beta * (zeta - 1.0)) * jhat - response(beta * (1.0 - zeta));
    }
    if (std::abs(p0 - zeta) < 1e-12) {
        return (f0 + beta * zeta * (1.0 - zeta)) * jhat - f0;
    }
    throw Error(ErrorKind::InvalidArgument, "replicator closed forms exist only at p0 in {0, zeta, 1}");
}

bool DispersionTable::stable() const
{
    return std::all_of(lambda.begin(), lambda.end(), [](double l) { return l < 0.0; });
}

double DispersionTable::max_lambda() const
{
    return lambda.empty() ? 0.0 : *std::max_element(lambda.begin(), lambda.end());
}

std::vector<ModeSample> DispersionTable::unstable_modes() const
{
    std::vector<ModeSample> out;
    for (std::size_t m = 0; m < modes.size(); ++m) {
        if (lambda[m] > 0.0) {
            out.push_back(modes[m]);
        }
    }
    return out;
}

std::string DispersionTable::to_csv() const
{
    std::ostringstream os;
    os.precision(12);
    os << "k0,k1,jhat,lambda\n";
    for (std::size_t m = 0; m < modes.size(); ++m) {
        os << modes[m].k0 << ',' << modes[m].k1 << ',' << modes[m].jhat << ',' << lambda[m] << '\n';
    }
    return os.str();
}

DispersionTable dispersion(Dynamic dynamic, double p0, CoordinationParams params, const ResponseFunction& response,
                           const std::vector<ModeSample>& modes)
{
    const double residual = std::abs(reduced_F(dynamic, p0, p0, params, response));
    if (residual > 1e-8) {
        std::ostringstream os;
        os << "p0 = " << p0 << " is not a stationary root (residual " << residual << ")";
        throw Error(ErrorKind::NotStationary, os.str());
    }
    DispersionTable t;
    t.p0 = p0;
    const auto lin = reduced_linearization(dynamic, p0, p0, params, response);
    t.M = lin.M;
    t.N = lin.N;
    t.modes = modes;
    t.has_closed_form = is_logit(dynamic) || p0 == 0.0 || p0 == 1.0 || std::abs(p0 - params.zeta) < 1e-12;
    for (const auto& m : modes) {
        const double l = t.M * m.jhat + t.N;
        t.lambda.push_back(l);
        if (t.has_closed_form) {
            t.closed_form_gap = std::max(t.closed_form_gap,
                                         std::abs(l - closed_form_lambda(dynamic, p0, params, response, m.jhat)));
        }
    }
    return t;
}

double GeneralDispersion::max_real() const
{
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& ev : eigenvalues) {
        for (const auto& e : ev) {
            m = std::max(m, e.real());
        }
    }
    return m;
}

GeneralDispersion dispersion_general(Dynamic dynamic, const RateRule& rule, const Game& game,
                                     const std::vector<double>& rho0, const std::vector<ModeSample>& modes)
{
    const int ns = game.num_strategies();
    const auto un = static_cast<std::size_t>(ns);
    if (rho0.size() != un) {
        throw Error(ErrorKind::InvalidArgument, "rho0 size does not match the game");
    }
    CoordinationParams params{0.5, 1.0};
    if (dynamic == Dynamic::TwoStrategyReducedReplicator || dynamic == Dynamic::TwoStrategyReducedLogit) {
        params = coordination_params(game);
    }
    RateRule eff = rule;
    if (dynamic == Dynamic::ImitativeReplicator) {
        eff.family = RateFamily::ComparingNonInnovative;
    } else if (dynamic == Dynamic::Logit || dynamic == Dynamic::TwoStrategyReducedLogit) {
        eff = RateRule::logit();
    }
    std::vector<double> out(un);
    local_tendency(dynamic, eff, game, params, rho0, rho0, out);
    double resid = 0.0;
    for (double v : out) {
        resid = std::max(resid, std::abs(v));
    }
    if (resid > 1e-8) {
        throw Error(ErrorKind::NotStationary, "rho0 is not a stationary point of the tendency");
    }

    // Columns: tangent directions e_j - e_last, perturbing g (M) or f (N).
    const int tdim = ns - 1;
    const double h = 1e-6;
    Eigen::MatrixXd M(tdim, tdim), N(tdim, tdim);
    std::vector<double> gp(un), gm(un), op(un), om(un);
    for (int j = 0; j < tdim; ++j) {
        for (int which = 0; which < 2; ++which) {
            std::vector<double> plus = rho0;
            std::vector<double> minus = rho0;
            plus[static_cast<std::size_t>(j)] += h;
            plus[un - 1] -= h;
            minus[static_cast<std::size_t>(j)] -= h;
            minus[un - 1] += h;
            if (which == 0) {
                local_tendency(dynamic, eff, game, params, plus, rho0, op);
                local_tendency(dynamic, eff, game, params, minus, rho0, om);
            } else {
                local_tendency(dynamic, eff, game, params, rho0, plus, op);
                local_tendency(dynamic, eff, game, params, rho0, minus, om);
            }
            for (int i = 0; i < tdim; ++i) {
                const double d = (op[static_cast<std::size_t>(i)] - om[static_cast<std::size_t>(i)]) / (2.0 * h);
                (which == 0 ? M : N)(i, j) = d;
            }
        }
    }
    GeneralDispersion res;
    res.modes = modes;
    for (const auto& m : modes) {
        Eigen::MatrixXd A = m.jhat * M + N;
        Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
        std::vector<std::complex<double>> ev;
        for (int i = 0; i < tdim; ++i) {
            ev.push_back(es.eigenvalues()(i));
        }
        res.eigenvalues.push_back(std::move(ev));
    }
    return res;
}

std::vector<double> linear_ide_solution(double M, double N, const DiscreteKernel& jd, const Grid& grid,
                                        const std::vector<double>& g0, double t)
{
    if (g0.size() != grid.size()) {
        throw Error(ErrorKind::InvalidArgument, "perturbation size does not match the grid");
    }
    const auto jhat = fourier_coeffs(jd, grid);
    const std::size_t total = grid.size();
    std::vector<std::complex<double>> a(total), b(total);
    for (std::size_t v = 0; v < total; ++v) {
        a[v] = g0[v];
    }
    fftw_plan fwd;
    fftw_plan bwd;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        auto* pa = reinterpret_cast<fftw_complex*>(a.data());
        auto* pb = reinterpret_cast<fftw_complex*>(b.data());
        if (grid.dim == 1) {
            fwd = fftw_plan_dft_1d(grid.n[0], pa, pb, FFTW_FORWARD, FFTW_ESTIMATE);
            bwd = fftw_plan_dft_1d(grid.n[0], pb, pa, FFTW_BACKWARD, FFTW_ESTIMATE);
        } else {
            fwd = fftw_plan_dft_2d(grid.n[0], grid.n[1], pa, pb, FFTW_FORWARD, FFTW_ESTIMATE);
            bwd = fftw_plan_dft_2d(grid.n[0], grid.n[1], pb, pa, FFTW_BACKWARD, FFTW_ESTIMATE);
        }
    }
    fftw_execute(fwd);
    const auto& jv = jhat.values();
    for (std::size_t v = 0; v < total; ++v) {
        b[v] *= std::exp((M * jv[v] + N) * t);
    }
    fftw_execute(bwd);
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    std::vector<double> out(total);
    for (std::size_t v = 0; v < total; ++v) {
        out[v] = a[v].real() / static_cast<double>(total);
    }
    return out;
}

PdeCoefficients pde_coefficients(Dynamic dynamic, CoordinationParams params, const ResponseFunction& response,
                                 const Kernel& j, double eps, double domain_length)
{
    PdeCoefficients c;
    c.j2 = second_moment(j, domain_length);
    const double scale = 0.5 * eps * eps * c.j2 / j.dim;
    c.reaction = [=](double f) { return reduced_F(dynamic, f, f, params, response); };
    if (is_replicator(dynamic)) {
        c.diffusion = [=](double f) {
            const double beta = params.beta;
            const double zeta = params.zeta;
            return scale
                * (beta * f * (1.0 - f) + (1.0 - f) * response(beta * (f - zeta)) + f * response(beta * (zeta - f)));
        };
    } else if (is_logit(dynamic)) {
        c.diffusion = [=](double f) {
            const double l = logistic(params.beta * (f - params.zeta));
            return scale * params.beta * l * (1.0 - l);
        };
    } else {
        throw Error(ErrorKind::InvalidArgument, "PDE coefficients need a two-strategy reduced dynamic");
    }
    return c;
}

} // namespace kacgame

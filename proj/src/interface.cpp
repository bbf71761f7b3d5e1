#include "kacgame/interface.hpp"

#include "kacgame/errors.hpp"
#include "kacgame/stats.hpp"

#include "fftw_lock.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <sstream>

namespace kacgame {

namespace {

std::vector<double> crossings(const std::vector<double>& x, const std::vector<double>& p, double level)
{
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        const double a = p[i] - level;
        const double b = p[i + 1] - level;
        if (a == 0.0) {
            // A sample sitting on the level counts once, at the entry.
            if (i == 0 || (p[i - 1] - level) * b < 0) {
                out.push_back(x[i]);
            }
            continue;
        }
        if (a * b < 0) {
            out.push_back(x[i] + (x[i + 1] - x[i]) * a / (a - b));
        }
    }
    if (!p.empty() && p.back() == level && p.size() >= 2 && p[p.size() - 2] != level) {
        // Entry on the last sample.
        out.push_back(x.back());
    }
    return out;
}

} // namespace

InterfaceMetrics interface_metrics(const std::vector<double>& x, const std::vector<double>& p)
{
    if (x.size() != p.size() || x.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "interface profile needs matching samples");
    }
    const auto mid = crossings(x, p, 0.5);
    const auto lo = crossings(x, p, 0.1);
    const auto hi = crossings(x, p, 0.9);
    if (mid.size() > 1 || lo.size() > 1 || hi.size() > 1) {
        std::ostringstream os;
        os << "profile crosses p = 1/2 at";
        for (double c : mid) {
            os << ' ' << c;
        }
        if (mid.size() <= 1) {
            os << " and has multiple 0.1/0.9 crossings";
        }
        throw Error(ErrorKind::MultiInterface, os.str());
    }
    if (mid.empty()) {
        throw Error(ErrorKind::InvalidArgument, "profile has no interface");
    }
    InterfaceMetrics m;
    m.position = mid[0];
    m.orientation = p.back() > p.front() ? 1 : -1;
    if (lo.empty() || hi.empty()) {
        // The profile never reaches one of the quantile levels.
        m.width = std::numeric_limits<double>::infinity();
    } else {
        m.width = std::abs(hi[0] - lo[0]);
    }
    return m;
}

InterfaceMetrics interface_metrics(const DensityField& f, double window_lo, double window_hi)
{
    const Grid& g = f.grid();
    if (g.dim != 1 || f.num_strategies() != 2) {
        throw Error(ErrorKind::InvalidArgument, "interface metrics need a 1-D two-strategy field");
    }
    std::vector<double> x;
    std::vector<double> p;
    for (int v = 0; v < g.n[0]; ++v) {
        const double xv = g.coord(0, v);
        if (xv >= window_lo && xv < window_hi) {
            x.push_back(xv);
            p.push_back(f.at(0, static_cast<std::size_t>(v)));
        }
    }
    return interface_metrics(x, p);
}

InterfaceMetrics interface_metrics(const DensityField& f)
{
    const Grid& g = f.grid();
    return interface_metrics(f, g.lower[0], g.lower[0] + g.length[0]);
}

FrontSpeed front_speed(const std::vector<double>& times, const std::vector<double>& positions, double t_from)
{
    std::vector<double> t;
    std::vector<double> x;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] >= t_from && std::isfinite(positions[i])) {
            t.push_back(times[i]);
            x.push_back(positions[i]);
        }
    }
    if (t.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "front speed needs at least two interface samples");
    }
    const auto fit = stats::linear_fit(t, x);
    return {fit.slope, fit.residual, static_cast<int>(t.size())};
}

SpatialMode dominant_mode(const DensityField& f, int channel)
{
    const Grid& g = f.grid();
    if (g.bc != Boundary::Periodic) {
        throw Error(ErrorKind::Unsupported, "mode analysis needs a periodic grid");
    }
    const int n0 = g.n[0];
    const int n1 = g.dim == 2 ? g.n[1] : 1;
    const int nc = n1 / 2 + 1;
    std::vector<double> in(f.channel(channel).begin(), f.channel(channel).end());
    std::vector<std::complex<double>> out(g.dim == 2 ? static_cast<std::size_t>(n0) * static_cast<std::size_t>(nc)
                                                    : static_cast<std::size_t>(n0 / 2 + 1));
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_plan plan = g.dim == 2 ? fftw_plan_dft_r2c_2d(n0, n1, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                                           FFTW_ESTIMATE)
                                    : fftw_plan_dft_r2c_1d(n0, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                                           FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    }
    auto fold = [](int k, int n) { return k <= n / 2 ? k : n - k; };
    SpatialMode best;
    double total = 0.0;
    if (g.dim == 1) {
        for (int k = 1; k <= n0 / 2; ++k) {
            const double a = std::abs(out[static_cast<std::size_t>(k)]);
            total += (2 * k == n0 ? 1.0 : 2.0) * a * a;
            if (a > best.amplitude) {
                best = {k, 0, a, 0.0};
            }
        }
        // +k and -k both carry the mode except at Nyquist.
        const double mult = 2 * best.k0 == n0 ? 1.0 : 2.0;
        best.share = total > 0 ? mult * best.amplitude * best.amplitude / total : 0.0;
        best.amplitude *= std::sqrt(mult) / n0;
        return best;
    }
    // Accumulate power per (|k0|, |k1|) family.
    std::vector<double> family(static_cast<std::size_t>(n0 / 2 + 1) * static_cast<std::size_t>(n1 / 2 + 1), 0.0);
    for (int a = 0; a < n0; ++a) {
        for (int b = 0; b < nc; ++b) {
            if (a == 0 && b == 0) {
                continue;
            }
            const double pw = std::norm(out[static_cast<std::size_t>(a) * static_cast<std::size_t>(nc) + static_cast<std::size_t>(b)]);
            // Columns 1..n1/2-1 stand for both +b and -b.
            const double mult = (b == 0 || 2 * b == n1) ? 1.0 : 2.0;
            total += mult * pw;
            family[static_cast<std::size_t>(fold(a, n0)) * static_cast<std::size_t>(n1 / 2 + 1) + static_cast<std::size_t>(b)] += mult * pw;
        }
    }
    double top = 0.0;
    for (int a = 0; a <= n0 / 2; ++a) {
        for (int b = 0; b <= n1 / 2; ++b) {
            const double pw = family[static_cast<std::size_t>(a) * static_cast<std::size_t>(n1 / 2 + 1) + static_cast<std::size_t>(b)];
            if (pw > top) {
                top = pw;
                best.k0 = a;
                best.k1 = b;
            }
        }
    }
    best.share = total > 0 ? top / total : 0.0;
    best.amplitude = std::sqrt(top) / (static_cast<double>(n0) * n1);
    return best;
}

Persistence persistence(const std::vector<double>& times, const std::vector<double>& variance)
{
    Persistence p;
    if (variance.empty()) {
        return p;
    }
    const auto it = std::max_element(variance.begin(), variance.end());
    const auto peak = static_cast<std::size_t>(it - variance.begin());
    p.peak_variance = *it;
    p.peak_time = times[peak];
    p.final_variance = variance.back();
    p.persistent = p.peak_variance > 0.0;
    for (std::size_t i = peak; i < variance.size(); ++i) {
        if (variance[i] < 0.5 * p.peak_variance) {
            p.persistent = false;
        }
    }
    return p;
}

double l1_distance(const DensityField& a, const DensityField& b)
{
    if (a.nodes() != b.nodes() || a.num_strategies() != b.num_strategies()) {
        throw Error(ErrorKind::InvalidArgument, "fields differ in shape");
    }
    double s = 0.0;
    for (int i = 0; i < a.num_strategies(); ++i) {
        for (std::size_t v = 0; v < a.nodes(); ++v) {
            s += std::abs(a.at(i, v) - b.at(i, v));
        }
    }
    return 0.5 * s / static_cast<double>(a.nodes());
}

DensityField coarsen(const DensityField& f, const Grid& coarse)
{
    const Grid& g = f.grid();
    if (g.dim != coarse.dim || g.n[0] % coarse.n[0] != 0 || g.n[1] % coarse.n[1] != 0) {
        throw Error(ErrorKind::InvalidArgument, "coarse grid must divide the fine grid");
    }
    const int r0 = g.n[0] / coarse.n[0];
    const int r1 = g.n[1] / coarse.n[1];
    DensityField out(coarse, f.num_strategies());
    for (int i = 0; i < f.num_strategies(); ++i) {
        for (std::size_t v = 0; v < g.size(); ++v) {
            const std::size_t c = coarse.node(g.index(v, 0) / r0, g.index(v, 1) / r1);
            out.at(i, c) += f.at(i, v) / (r0 * r1);
        }
    }
    return out;
}

} // namespace kacgame

#include "kacgame/micro.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace kacgame {

namespace {

inline int wrap(int i, int n)
{
    i %= n;
    return i < 0 ? i + n : i;
}

// Calls fn(y, w) for every site y = x + z in the kernel support of x.
template <class Fn>
void for_each_neighbor(const LatticeDomain& d, std::size_t x, Fn&& fn)
{
    const Grid& g = d.lattice;
    const int i0 = g.index(x, 0);
    const int i1 = g.index(x, 1);
    if (g.bc == Boundary::Periodic) {
        for (const auto& t : d.kernel.taps) {
            fn(g.node(wrap(i0 + t.dx, g.n[0]), wrap(i1 + t.dy, g.n[1])), t.w);
        }
        return;
    }
    for (const auto& t : d.kernel.taps) {
        const int j0 = i0 + t.dx;
        const int j1 = i1 + t.dy;
        if (j0 < 0 || j0 >= g.n[0] || j1 < 0 || j1 >= g.n[1]) {
            continue;
        }
        fn(g.node(j0, j1), t.w);
    }
}

} // namespace

LatticeDomain LatticeDomain::make(const Kernel& j, const Grid& meso, int sites_per_axis)
{
    if (sites_per_axis < 1) {
        throw Error(ErrorKind::InvalidArgument, "lattice needs at least one site per axis");
    }
    LatticeDomain d;
    d.lattice = meso;
    d.lattice.n = {sites_per_axis, meso.dim == 2 ? sites_per_axis : 1};
    LatticeGeometry geo;
    geo.dim = meso.dim;
    geo.sites = d.lattice.n;
    geo.spacing = {d.lattice.spacing(0), meso.dim == 2 ? d.lattice.spacing(1) : 1.0};
    geo.periodic = meso.bc == Boundary::Periodic;
    geo.max_radius = meso.boundary_width;
    d.kernel = kac_discretize(j, geo);
    d.active.resize(d.size());
    for (std::size_t x = 0; x < d.size(); ++x) {
        d.active[x] = d.lattice.active(x) ? 1 : 0;
        if (d.active[x] != 0) {
            d.active_sites.push_back(x);
        }
    }
    return d;
}

LatticeState::LatticeState(std::shared_ptr<const LatticeDomain> domain, int num_strategies,
                           std::vector<std::uint8_t> sigma)
    : domain_(std::move(domain)), strategies_(num_strategies), sigma_(std::move(sigma))
{
    if (sigma_.size() != domain_->size()) {
        throw Error(ErrorKind::InvalidArgument, "configuration size does not match the lattice");
    }
    if (num_strategies < 2 || num_strategies > 255) {
        throw Error(ErrorKind::InvalidArgument, "strategy count out of range");
    }
    for (auto s : sigma_) {
        if (s >= num_strategies) {
            throw Error(ErrorKind::InvalidArgument, "configuration uses an unknown strategy");
        }
    }
    refresh();
}

std::vector<double> LatticeState::compute_field() const
{
    const auto ns = static_cast<std::size_t>(strategies_);
    std::vector<double> field(sigma_.size() * ns, 0.0);
    // w(y, l) = sum_z W(z) delta(sigma(y - z), l): scatter each site's weight.
    for (std::size_t x = 0; x < sigma_.size(); ++x) {
        const std::size_t l = sigma_[x];
        for_each_neighbor(*domain_, x, [&](std::size_t y, double w) { field[y * ns + l] += w; });
    }
    return field;
}

void LatticeState::refresh()
{
    field_ = compute_field();
    counts_.assign(static_cast<std::size_t>(strategies_), 0);
    for (auto s : sigma_) {
        ++counts_[s];
    }
}

double LatticeState::cache_error() const
{
    const auto fresh = compute_field();
    double worst = 0.0;
    for (std::size_t j = 0; j < fresh.size(); ++j) {
        worst = std::max(worst, std::abs(fresh[j] - field_[j]));
    }
    return worst;
}

void LatticeState::set(std::size_t x, int k)
{
    const int old = sigma_[x];
    if (old == k) {
        return;
    }
    const auto ns = static_cast<std::size_t>(strategies_);
    const auto uo = static_cast<std::size_t>(old);
    const auto uk = static_cast<std::size_t>(k);
    for_each_neighbor(*domain_, x, [&](std::size_t y, double w) {
        field_[y * ns + uo] -= w;
        field_[y * ns + uk] += w;
    });
    sigma_[x] = static_cast<std::uint8_t>(k);
    --counts_[uo];
    ++counts_[uk];
}

LatticeState sample_initial(const DensityField& profile, std::shared_ptr<const LatticeDomain> domain,
                            std::uint64_t seed)
{
    if (profile.max_simplex_violation() > 1e-9) {
        throw Error(ErrorKind::InvalidArgument, "initial profile is not simplex-valued");
    }
    const Grid& meso = profile.grid();
    const Grid& lat = domain->lattice;
    if (meso.dim != lat.dim) {
        throw Error(ErrorKind::InvalidArgument, "profile and lattice dimensions differ");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int ns = profile.num_strategies();
    std::vector<std::uint8_t> sigma(lat.size());
    for (std::size_t x = 0; x < lat.size(); ++x) {
        std::array<int, 2> cell{0, 0};
        for (int a = 0; a < lat.dim; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            const double pos = lat.coord(a, lat.index(x, a));
            const int c = static_cast<int>(std::floor((pos - meso.lower[ua]) / meso.spacing(a)));
            cell[ua] = std::clamp(c, 0, meso.n[ua] - 1);
        }
        const std::size_t node = meso.node(cell[0], cell[1]);
        const double u = unif(rng);
        double acc = 0.0;
        int chosen = ns - 1;
        for (int i = 0; i < ns; ++i) {
            acc += profile.at(i, node);
            if (u < acc) {
                chosen = i;
                break;
            }
        }
        // Guard against a zero-probability last strategy picked by roundoff.
        while (chosen > 0 && profile.at(chosen, node) <= 0.0) {
            --chosen;
        }
        sigma[x] = static_cast<std::uint8_t>(chosen);
    }
    return LatticeState(std::move(domain), ns, std::move(sigma));
}

double site_rate(const LatticeState& state, std::size_t x, int k, const RateRule& rule, const Game& game)
{
    const int i = state.strategy(x);
    if (i == k) {
        return 0.0;
    }
    const auto field = state.local_field(x);
    double payoff[256];
    game.payoff_vector(field, std::span<double>(payoff, field.size()));
    return mean_rate(rule, i, k, std::span<const double>(payoff, field.size()), field);
}

MicroRunResult run(LatticeState& state, const RateRule& rule, const Game& game, double t_end, std::uint64_t seed,
                   const MicroRunOptions& options)
{
    if (t_end < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "t_end must be nonnegative");
    }
    if (game.num_strategies() != state.num_strategies()) {
        throw Error(ErrorKind::InvalidArgument, "game and configuration strategy counts differ");
    }
    MicroRunResult res;
    res.rate_bound = options.rate_bound > 0.0 ? options.rate_bound : thinning_bound(rule, game);
    const double m = res.rate_bound;
    const auto& active = state.domain().active_sites;
    const int ns = state.num_strategies();
    const double total = static_cast<double>(active.size()) * ns * m;

    std::vector<double> snaps = options.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;
    auto emit_until = [&](double t) {
        while (next_snap < snaps.size() && snaps[next_snap] <= t) {
            if (options.on_snapshot) {
                options.on_snapshot(snaps[next_snap], state);
            }
            ++next_snap;
        }
    };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_site(0, active.empty() ? 0 : active.size() - 1);
    std::uniform_int_distribution<int> pick_strategy(0, ns - 1);

    double t = 0.0;
    if (total > 0.0 && !active.empty()) {
        std::exponential_distribution<double> wait(total);
        while (true) {
            const double t_next = t + wait(rng);
            if (t_next > t_end) {
                break;
            }
            emit_until(std::nextafter(t_next, 0.0));
            t = t_next;
            ++res.proposals;
            const std::size_t x = active[pick_site(rng)];
            const int k = pick_strategy(rng);
            const double u = unif(rng);
            if (k == state.strategy(x)) {
                continue;
            }
            const double c = site_rate(state, x, k, rule, game);
            if (c > m * (1.0 + 1e-12)) {
                std::ostringstream os;
                os << "rate " << c << " exceeds thinning bound " << m << " at site " << x;
                throw Error(ErrorKind::RateBound, os.str());
            }
            if (u * m < c) {
                state.set(x, k);
                ++res.accepted;
                if (options.record_events) {
                    res.events.push_back({t, static_cast<std::uint32_t>(x), static_cast<std::uint8_t>(k)});
                }
                if (options.max_events > 0 && res.accepted >= options.max_events) {
                    return res;
                }
            }
        }
    }
    emit_until(t_end);
    return res;
}

EmpiricalMeasure empirical(const LatticeState& state, const Grid& grid)
{
    const Grid& lat = state.domain().lattice;
    const int ns = state.num_strategies();
    EmpiricalMeasure em{DensityField(grid, ns), std::vector<double>(static_cast<std::size_t>(ns), 0.0)};
    std::vector<double> per_cell(grid.size(), 0.0);
    for (std::size_t x = 0; x < lat.size(); ++x) {
        std::array<int, 2> cell{0, 0};
        for (int a = 0; a < lat.dim; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            const double pos = lat.coord(a, lat.index(x, a));
            const int c = static_cast<int>(std::floor((pos - grid.lower[ua]) / grid.spacing(a)));
            cell[ua] = std::clamp(c, 0, grid.n[ua] - 1);
        }
        const std::size_t node = grid.node(cell[0], cell[1]);
        em.density.at(state.strategy(x), node) += 1.0;
        per_cell[node] += 1.0;
    }
    for (std::size_t v = 0; v < grid.size(); ++v) {
        for (int i = 0; i < ns; ++i) {
            em.density.at(i, v) = per_cell[v] > 0.0 ? em.density.at(i, v) / per_cell[v] : 0.0;
        }
    }
    for (int i = 0; i < ns; ++i) {
        em.eta[static_cast<std::size_t>(i)] = static_cast<double>(state.counts()[static_cast<std::size_t>(i)])
            / static_cast<double>(lat.size());
    }
    return em;
}

bool RateLimitReport::decreasing() const
{
    for (std::size_t j = 1; j < discrepancy.size(); ++j) {
        if (discrepancy[j] >= discrepancy[j - 1] && discrepancy[j] > floor) {
            return false;
        }
    }
    return true;
}

RateLimitReport rate_limit_check(const RateRule& rule, const Game& game, const Kernel& j, const Grid& meso,
                                 const std::vector<int>& sites_per_axis, int samples, std::uint64_t seed)
{
    RateLimitReport report;
    const int ns = game.num_strategies();
    const auto uns = static_cast<std::size_t>(ns);
    std::mt19937_64 rng(seed);
    for (int n : sites_per_axis) {
        auto domain = std::make_shared<const LatticeDomain>(LatticeDomain::make(j, meso, n));
        const Grid& lat = domain->lattice;
        std::uniform_int_distribution<int> pick_strategy(0, ns - 1);
        std::vector<std::uint8_t> sigma(lat.size());
        for (auto& s : sigma) {
            s = static_cast<std::uint8_t>(pick_strategy(rng));
        }
        LatticeState state(domain, ns, std::move(sigma));
        const double hd = lat.cell_volume();
        const double vol = lat.dim == 1 ? lat.length[0] : lat.length[0] * lat.length[1];
        const bool periodic = lat.bc == Boundary::Periodic;

        // Untruncated J between two sites; periodic images on the torus.
        auto limit_weight = [&](std::size_t x, std::size_t y) {
            if (j.profile == KernelProfile::Uniform) {
                return hd / vol;
            }
            std::array<double, 2> d{0.0, 0.0};
            for (int a = 0; a < lat.dim; ++a) {
                d[static_cast<std::size_t>(a)] = lat.coord(a, lat.index(x, a)) - lat.coord(a, lat.index(y, a));
            }
            if (!periodic) {
                return hd * j.value(d[0] * d[0] + d[1] * d[1]);
            }
            double s = 0.0;
            const int m1max = lat.dim == 2 ? 1 : 0;
            for (int m0 = -1; m0 <= 1; ++m0) {
                for (int m1 = -m1max; m1 <= m1max; ++m1) {
                    const double e0 = d[0] + m0 * lat.length[0];
                    const double e1 = d[1] + m1 * lat.length[1];
                    s += j.value(e0 * e0 + e1 * e1);
                }
            }
            return hd * s;
        };

        const auto& active = domain->active_sites;
        std::uniform_int_distribution<std::size_t> pick_site(0, active.size() - 1);
        std::vector<double> field(uns), payoff(uns);
        double worst = 0.0;
        for (int s = 0; s < samples; ++s) {
            const std::size_t x = active[pick_site(rng)];
            std::fill(field.begin(), field.end(), 0.0);
            for (std::size_t y = 0; y < lat.size(); ++y) {
                field[state.strategy(y)] += limit_weight(x, y);
            }
            game.payoff_vector(field, payoff);
            const int i = state.strategy(x);
            for (int k = 0; k < ns; ++k) {
                if (k == i) {
                    continue;
                }
                const double micro = site_rate(state, x, k, rule, game);
                const double limit = mean_rate(rule, i, k, payoff, field);
                worst = std::max(worst, std::abs(micro - limit));
            }
        }
        report.gammas.push_back(domain->gamma());
        report.discrepancy.push_back(worst);
    }
    return report;
}

} // namespace kacgame

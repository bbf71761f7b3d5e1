#include "kacgame/density.hpp"
#include "kacgame/errors.hpp"

#include <algorithm>
#include <cmath>

namespace kacgame {

DensityField::DensityField(Grid grid, int num_strategies)
    : grid_(grid), strategies_(num_strategies),
      values_(static_cast<std::size_t>(num_strategies) * grid.size(), 0.0)
{
    if (num_strategies < 1) {
        throw Error(ErrorKind::InvalidArgument, "density field needs at least one strategy");
    }
}

DensityField DensityField::from_p(const Grid& grid, std::span<const double> p)
{
    if (p.size() != grid.size()) {
        throw Error(ErrorKind::InvalidArgument, "profile size does not match the grid");
    }
    DensityField f(grid, 2);
    for (std::size_t v = 0; v < grid.size(); ++v) {
        f.at(0, v) = p[v];
        f.at(1, v) = 1.0 - p[v];
    }
    return f;
}

DensityField DensityField::constant(const Grid& grid, std::span<const double> rho)
{
    DensityField f(grid, static_cast<int>(rho.size()));
    for (int i = 0; i < f.num_strategies(); ++i) {
        std::fill(f.channel(i).begin(), f.channel(i).end(), rho[static_cast<std::size_t>(i)]);
    }
    return f;
}

std::span<double> DensityField::channel(int i)
{
    return {values_.data() + offset(i, 0), grid_.size()};
}

std::span<const double> DensityField::channel(int i) const
{
    return {values_.data() + offset(i, 0), grid_.size()};
}

double DensityField::max_sum_drift() const
{
    double worst = 0.0;
    for (std::size_t v = 0; v < nodes(); ++v) {
        double s = 0.0;
        for (int i = 0; i < strategies_; ++i) {
            s += at(i, v);
        }
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

double DensityField::max_simplex_violation() const
{
    double worst = max_sum_drift();
    for (double x : values_) {
        worst = std::max({worst, -x, x - 1.0});
    }
    return worst;
}

double DensityField::project_simplex()
{
    const double drift = max_simplex_violation();
    for (std::size_t v = 0; v < nodes(); ++v) {
        double s = 0.0;
        for (int i = 0; i < strategies_; ++i) {
            double& x = at(i, v);
            x = std::clamp(x, 0.0, 1.0);
            s += x;
        }
        if (s > 0.0) {
            for (int i = 0; i < strategies_; ++i) {
                at(i, v) /= s;
            }
        }
    }
    return drift;
}

double DensityField::spatial_average(int i, bool active_only) const
{
    double s = 0.0;
    std::size_t count = 0;
    for (std::size_t v = 0; v < nodes(); ++v) {
        if (active_only && !grid_.active(v)) {
            continue;
        }
        s += at(i, v);
        ++count;
    }
    return count > 0 ? s / static_cast<double>(count) : 0.0;
}

double DensityField::spatial_variance(int i) const
{
    const double mean = spatial_average(i);
    double s = 0.0;
    for (std::size_t v = 0; v < nodes(); ++v) {
        const double d = at(i, v) - mean;
        s += d * d;
    }
    return s / static_cast<double>(nodes());
}

} // namespace kacgame

#pragma once

#include "kacgame/grid.hpp"

#include <span>
#include <vector>

namespace kacgame {

/// Mesoscopic profile f(u, i): one channel per strategy, each a grid-sized
/// array in the grid's node order.
class DensityField {
public:
    DensityField() = default;
    DensityField(Grid grid, int num_strategies);

    /// Two-strategy field with f(., 0) = p and f(., 1) = 1 - p.
    static DensityField from_p(const Grid& grid, std::span<const double> p);
    /// The same simplex vector at every node.
    static DensityField constant(const Grid& grid, std::span<const double> rho);

    const Grid& grid() const { return grid_; }
    int num_strategies() const { return strategies_; }
    std::size_t nodes() const { return grid_.size(); }

    std::span<double> channel(int i);
    std::span<const double> channel(int i) const;
    double& at(int i, std::size_t node) { return values_[offset(i, node)]; }
    double at(int i, std::size_t node) const { return values_[offset(i, node)]; }

    std::vector<double>& raw() { return values_; }
    const std::vector<double>& raw() const { return values_; }

    /// Largest deviation of a node from the simplex: |sum - 1| or a negative
    /// (or above one) entry.
    double max_simplex_violation() const;
    double max_sum_drift() const;
    /// Clip to [0, 1] and renormalize each node. Returns the drift removed.
    double project_simplex();
    /// Grid average of channel i (over active nodes only when `active_only`).
    double spatial_average(int i, bool active_only = false) const;
    /// Spatial variance of channel i.
    double spatial_variance(int i) const;

private:
    std::size_t offset(int i, std::size_t node) const
    {
        return static_cast<std::size_t>(i) * grid_.size() + node;
    }

    Grid grid_;
    int strategies_ = 0;
    std::vector<double> values_;
};

} // namespace kacgame

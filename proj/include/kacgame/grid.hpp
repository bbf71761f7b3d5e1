#pragma once

#include <array>
#include <cstddef>

namespace kacgame {

enum class Boundary { Periodic, Fixed };

/// Cell-centered grid over a box in one or two dimensions. Nodes are stored
/// row-major with axis 0 as the slow index. With Fixed boundaries the nodes
/// within `boundary_width` of the box edge form the frozen region.
struct Grid {
    int dim = 1;
    std::array<int, 2> n{1, 1};
    std::array<double, 2> lower{0.0, 0.0};
    std::array<double, 2> length{1.0, 1.0};
    Boundary bc = Boundary::Periodic;
    double boundary_width = 0.0;

    static Grid periodic_1d(int nodes, double lo, double hi);
    static Grid periodic_2d(int nodes, double lo, double hi);
    static Grid fixed_1d(int nodes, double lo, double hi, double boundary_width);
    /// One-node grid on which the IDE reduces to its mean-field ODE.
    static Grid single_node();

    std::size_t size() const { return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]); }
    double spacing(int axis = 0) const { return length[static_cast<std::size_t>(axis)] / n[static_cast<std::size_t>(axis)]; }
    double cell_volume() const { return dim == 1 ? spacing(0) : spacing(0) * spacing(1); }
    double coord(int axis, int index) const
    {
        return lower[static_cast<std::size_t>(axis)] + (index + 0.5) * spacing(axis);
    }
    std::size_t node(int i0, int i1 = 0) const
    {
        return static_cast<std::size_t>(i0) * static_cast<std::size_t>(n[1]) + static_cast<std::size_t>(i1);
    }
    int index(std::size_t node, int axis) const
    {
        return axis == 0 ? static_cast<int>(node / static_cast<std::size_t>(n[1]))
                         : static_cast<int>(node % static_cast<std::size_t>(n[1]));
    }
    /// Nodes that evolve; every node on a periodic grid.
    bool active(std::size_t node) const;
    std::size_t active_count() const;
};

} // namespace kacgame

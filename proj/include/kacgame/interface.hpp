#pragma once

// Profile diagnostics: interface position and width, front speed, dominant
// spatial mode and pattern persistence.

#include "kacgame/density.hpp"

#include <vector>

namespace kacgame {

struct InterfaceMetrics {
    double position = 0.0;
    double width = 0.0;
    /// +1 if p increases with x across the interface, -1 otherwise.
    int orientation = 0;
};

/// p = 1/2 crossing by linear interpolation, width between the 0.1 and 0.9
/// crossings, for strategy 1 of a 1-D two-strategy field restricted to
/// nodes with x in [window_lo, window_hi). Throws Error(MultiInterface),
/// listing the crossings, if any level is crossed more than once, and
/// Error(InvalidArgument) if there is no transition.
InterfaceMetrics interface_metrics(const DensityField& f, double window_lo, double window_hi);
/// Whole grid (active region of a fixed grid).
InterfaceMetrics interface_metrics(const DensityField& f);

/// Same on raw samples x (increasing) and p.
InterfaceMetrics interface_metrics(const std::vector<double>& x, const std::vector<double>& p);

struct FrontSpeed {
    double speed = 0.0;
    double residual = 0.0;
    int samples = 0;
};

/// Least-squares slope of position against time over t >= t_from.
FrontSpeed front_speed(const std::vector<double>& times, const std::vector<double>& positions, double t_from);

struct SpatialMode {
    int k0 = 0;
    int k1 = 0;
    /// Root-mean-square of the family's component of the field.
    double amplitude = 0.0;
    /// Share of the non-constant spectral power in the (+-k0, +-k1) family.
    double share = 0.0;
};

/// Largest non-constant Fourier mode of channel i on a periodic grid,
/// reported as nonnegative (|k0|, |k1|) in grid-mode units.
SpatialMode dominant_mode(const DensityField& f, int channel = 0);

struct Persistence {
    double peak_variance = 0.0;
    double peak_time = 0.0;
    double final_variance = 0.0;
    /// Spatial variance stays above half its peak from the peak through the end.
    bool persistent = false;
};

/// Over a variance time series.
Persistence persistence(const std::vector<double>& times, const std::vector<double>& variance);

/// Mean over cells of sum_i |a - b| / 2 (equals |p_a - p_b| for two strategies).
double l1_distance(const DensityField& a, const DensityField& b);

/// Block average of a field onto a coarser periodic grid over the same box;
/// the node counts must divide.
DensityField coarsen(const DensityField& f, const Grid& coarse);

} // namespace kacgame

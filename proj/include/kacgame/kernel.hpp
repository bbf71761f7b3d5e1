#pragma once

// Interaction kernels J, their Kac discretizations W(z) = gamma^d J(gamma z)
// on lattices, grid discretizations for the mesoscopic convolution, and
// Fourier coefficients.

#include "kacgame/errors.hpp"
#include "kacgame/grid.hpp"

#include <array>
#include <string>
#include <vector>

namespace kacgame {

enum class KernelProfile { Gaussian, Uniform, IndicatorBall };

/// Continuous kernel, normalized to unit mass. Gaussian kernels are
/// exp(-b |x|^2) (radial in 2-D) and are truncated where they fall below
/// `truncation` times their peak.
struct Kernel {
    KernelProfile profile = KernelProfile::Gaussian;
    int dim = 1;
    double b = 1.0;
    double radius = 1.0;
    double truncation = 1e-12;

    static Kernel gaussian(double b, int dim = 1, double truncation = 1e-12);
    static Kernel uniform(int dim = 1);
    static Kernel indicator_ball(double radius, int dim = 1);

    /// Normalized J at squared distance r2. Uniform kernels are undefined
    /// without a domain and return 0 here.
    double value(double r2) const;
    /// Radius beyond which J is treated as zero.
    double cutoff_radius() const;
    /// Radius where J drops below rel * J(0).
    double effective_radius(double rel = 1e-9) const;

    std::string describe() const;
};

struct KernelTap {
    int dx;
    int dy;
    double w;
};

/// Nonnegative symmetric weights over lattice or grid offsets, summing to 1.
struct DiscreteKernel {
    int dim = 1;
    std::vector<KernelTap> taps;
    std::array<int, 2> support_radius{0, 0};
    std::array<double, 2> spacing{1.0, 1.0};
    /// Sum of the weights before renormalization.
    double raw_sum = 1.0;
    /// Mesoscopic radius the weights were truncated at.
    double truncation_radius = 0.0;
    bool uniform = false;

    double sum() const;
    /// Single tap of weight one (the one-node mean-field grid).
    static DiscreteKernel identity(int dim = 1);
};

/// Lattice geometry seen by kac_discretize.
struct LatticeGeometry {
    int dim = 1;
    std::array<int, 2> sites{1, 1};
    std::array<double, 2> spacing{1.0, 1.0};
    bool periodic = true;
    /// Fixed boundaries: support is truncated at this mesoscopic radius.
    double max_radius = 0.0;
};

/// W(z) = h^d J(h z) for lattice spacing h (the Kac parameter gamma in
/// mesoscopic units), renormalized to sum 1. Periodic lattices whose support
/// exceeds half the torus are rejected.
DiscreteKernel kac_discretize(const Kernel& j, const LatticeGeometry& lattice);

/// J sampled at grid offsets times h^d, renormalized. Periodic grids fold
/// the kernel onto the torus; fixed grids truncate at the boundary width.
DiscreteKernel grid_discretize(const Kernel& j, const Grid& grid);

/// Dense circular layout of a kernel on a periodic grid (size grid.size()).
std::vector<double> circular_weights(const DiscreteKernel& jd, const Grid& grid);

/// Fourier coefficients of a discrete kernel on a periodic grid, indexed by
/// integer modes m (frequency m / L per axis).
class FourierCoeffs {
public:
    FourierCoeffs(std::array<int, 2> n, int dim, std::vector<double> values, double max_imag)
        : n_(n), dim_(dim), values_(std::move(values)), max_imag_(max_imag) {}

    double operator()(int m0, int m1 = 0) const;
    int dim() const { return dim_; }
    std::array<int, 2> dims() const { return n_; }
    double max_imag() const { return max_imag_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::array<int, 2> n_;
    int dim_;
    std::vector<double> values_;
    double max_imag_;
};

/// Discrete Fourier transform of the weights. Imaginary parts above 1e-10
/// signal an asymmetric kernel and raise an error.
FourierCoeffs fourier_coeffs(const DiscreteKernel& jd, const Grid& grid);

/// sum_z W(z) cos(2 pi xi . (z h)): the transform at an arbitrary frequency
/// xi, in cycles per unit mesoscopic length.
double kernel_transform(const DiscreteKernel& jd, std::array<double, 2> xi);

/// How dispersion tables index wavenumbers.
enum class FourierConvention {
    /// Integer mode m of the periodic grid, i.e. cos(2 pi m x / L).
    GridMode,
    /// Integer frequency k of exp(2 pi i k u) in mesoscopic units.
    UnitFrequency,
};

/// J-hat at wavenumber k under the given convention.
double kernel_hat(const DiscreteKernel& jd, const Grid& grid, FourierConvention conv, std::array<int, 2> k);

/// J2 = integral |w|^2 J(w) dw by quadrature; `domain_length` sets the
/// extent of a uniform kernel.
double second_moment(const Kernel& j, double domain_length = 1.0);

} // namespace kacgame

#pragma once

// Homogeneous stationary solutions, dispersion relations, the Fourier
// solution of the linearized IDE and PDE approximation coefficients.

#include "kacgame/density.hpp"
#include "kacgame/game.hpp"
#include "kacgame/ide.hpp"
#include "kacgame/kernel.hpp"

#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace kacgame {

struct StationaryReport {
    std::vector<double> roots;
    std::vector<double> residuals;
    /// Root closer than 1e-4 to another root, or a touching zero.
    std::vector<bool> degenerate;
};

/// Roots of p -> F(p, p) on [0, 1]: a 10^4-point scan for sign changes (and
/// touching zeros), each refined by bisection to 1e-12.
StationaryReport stationary_homogeneous(Dynamic dynamic, CoordinationParams params, const ResponseFunction& response);

/// beta at which the logit fixed-point count changes from one to three,
/// by bisection to 1e-8 on the sign of the tangency discriminant.
double critical_beta(double zeta);

/// Number of logit fixed points for (beta, zeta) from the discriminant.
int logit_root_count(double beta, double zeta);

struct ModeSample {
    int k0 = 0;
    int k1 = 0;
    double jhat = 0.0;
};

/// J-hat at k = -K..K (1-D) under the given convention.
std::vector<ModeSample> mode_samples_1d(const DiscreteKernel& jd, const Grid& grid, FourierConvention conv, int K);
/// J-hat over the square |k0|, |k1| <= K (2-D).
std::vector<ModeSample> mode_samples_2d(const DiscreteKernel& jd, const Grid& grid, FourierConvention conv, int K);

/// dF/dr and dF/ds of the reduced form at (r, s), from hand-derived formulas.
struct Linearization {
    double M;
    double N;
};
Linearization reduced_linearization(Dynamic dynamic, double r, double s, CoordinationParams params,
                                    const ResponseFunction& response);

/// Closed forms for the replicator at p0 in {0, zeta, 1} and for the logit
/// formula. Throws Error(InvalidArgument) when p0 has no closed form.
double closed_form_lambda(Dynamic dynamic, double p0, CoordinationParams params, const ResponseFunction& response,
                          double jhat);

struct DispersionTable {
    double p0 = 0.0;
    double M = 0.0;
    double N = 0.0;
    std::vector<ModeSample> modes;
    std::vector<double> lambda;
    /// Largest |closed form - general path| where a closed form exists.
    double closed_form_gap = 0.0;
    bool has_closed_form = false;

    bool stable() const;
    double max_lambda() const;
    std::vector<ModeSample> unstable_modes() const;
    std::string to_csv() const;
};

/// lambda(k) = M J-hat(k) + N at a stationary root p0 of the reduced form.
/// Throws Error(NotStationary) if |F(p0, p0)| > 1e-8.
DispersionTable dispersion(Dynamic dynamic, double p0, CoordinationParams params, const ResponseFunction& response,
                           const std::vector<ModeSample>& modes);

/// Multi-strategy path: M and N by central differences of the pointwise
/// tendency at the homogeneous state rho0, restricted to the simplex tangent
/// space; returns, per mode, the eigenvalues of M J-hat(k) + N.
struct GeneralDispersion {
    std::vector<ModeSample> modes;
    std::vector<std::vector<std::complex<double>>> eigenvalues;
    double max_real() const;
};
GeneralDispersion dispersion_general(Dynamic dynamic, const RateRule& rule, const Game& game,
                                     const std::vector<double>& rho0, const std::vector<ModeSample>& modes);

/// Exact modal solution of dg/dt = M (J * g) + N g on a periodic grid.
std::vector<double> linear_ide_solution(double M, double N, const DiscreteKernel& jd, const Grid& grid,
                                        const std::vector<double>& g0, double t);

struct PdeCoefficients {
    std::function<double(double)> reaction;
    /// Density-dependent diffusion coefficient, already scaled by eps^2 J2 / (2 d).
    std::function<double(double)> diffusion;
    double j2 = 0.0;
};

/// Reaction F(f, f) and diffusion (eps^2 / 2) (J2 / d) dF/dr(f, f).
PdeCoefficients pde_coefficients(Dynamic dynamic, CoordinationParams params, const ResponseFunction& response,
                                 const Kernel& j, double eps, double domain_length = 1.0);

} // namespace kacgame

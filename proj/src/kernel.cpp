#include "kacgame/kernel.hpp"

#include "fftw_lock.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

namespace kacgame {

bool Grid::active(std::size_t node) const
{
    if (bc == Boundary::Periodic) {
        return true;
    }
    for (int a = 0; a < dim; ++a) {
        const double x = coord(a, index(node, a));
        const auto ua = static_cast<std::size_t>(a);
        if (x < lower[ua] + boundary_width || x > lower[ua] + length[ua] - boundary_width) {
            return false;
        }
    }
    return true;
}

std::size_t Grid::active_count() const
{
    std::size_t c = 0;
    for (std::size_t v = 0; v < size(); ++v) {
        c += active(v) ? 1 : 0;
    }
    return c;
}

Grid Grid::periodic_1d(int nodes, double lo, double hi)
{
    Grid g;
    g.dim = 1;
    g.n = {nodes, 1};
    g.lower = {lo, 0.0};
    g.length = {hi - lo, 1.0};
    return g;
}

Grid Grid::periodic_2d(int nodes, double lo, double hi)
{
    Grid g;
    g.dim = 2;
    g.n = {nodes, nodes};
    g.lower = {lo, lo};
    g.length = {hi - lo, hi - lo};
    return g;
}

Grid Grid::fixed_1d(int nodes, double lo, double hi, double boundary_width)
{
    Grid g = periodic_1d(nodes, lo, hi);
    g.bc = Boundary::Fixed;
    g.boundary_width = boundary_width;
    return g;
}

Grid Grid::single_node()
{
    return periodic_1d(1, 0.0, 1.0);
}

// ---------------------------------------------------------------------------

Kernel Kernel::gaussian(double b, int dim, double truncation)
{
    if (!(b > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "gaussian kernel needs b > 0");
    }
    Kernel k;
    k.profile = KernelProfile::Gaussian;
    k.dim = dim;
    k.b = b;
    k.truncation = truncation;
    return k;
}

Kernel Kernel::uniform(int dim)
{
    Kernel k;
    k.profile = KernelProfile::Uniform;
    k.dim = dim;
    return k;
}

Kernel Kernel::indicator_ball(double radius, int dim)
{
    if (!(radius > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "indicator kernel needs a positive radius");
    }
    Kernel k;
    k.profile = KernelProfile::IndicatorBall;
    k.dim = dim;
    k.radius = radius;
    return k;
}

double Kernel::value(double r2) const
{
    using std::numbers::pi;
    switch (profile) {
    case KernelProfile::Gaussian: {
        const double norm = dim == 1 ? std::sqrt(b / pi) : b / pi;
        return norm * std::exp(-b * r2);
    }
    case KernelProfile::IndicatorBall: {
        const double norm = dim == 1 ? 1.0 / (2.0 * radius) : 1.0 / (pi * radius * radius);
        return r2 < radius * radius ? norm : 0.0;
    }
    case KernelProfile::Uniform:
        return 0.0;
    }
    return 0.0;
}

double Kernel::cutoff_radius() const
{
    switch (profile) {
    case KernelProfile::Gaussian: return std::sqrt(-std::log(truncation) / b);
    case KernelProfile::IndicatorBall: return radius;
    case KernelProfile::Uniform: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

double Kernel::effective_radius(double rel) const
{
    switch (profile) {
    case KernelProfile::Gaussian: return std::sqrt(-std::log(rel) / b);
    case KernelProfile::IndicatorBall: return radius;
    case KernelProfile::Uniform: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

std::string Kernel::describe() const
{
    std::ostringstream os;
    switch (profile) {
    case KernelProfile::Gaussian: os << "gaussian(b=" << b << ",truncation=" << truncation << ")"; break;
    case KernelProfile::Uniform: os << "uniform"; break;
    case KernelProfile::IndicatorBall: os << "indicator_ball(R=" << radius << ")"; break;
    }
    os << ",d=" << dim;
    return os.str();
}

double DiscreteKernel::sum() const
{
    double s = 0.0;
    for (const auto& t : taps) {
        s += t.w;
    }
    return s;
}

DiscreteKernel DiscreteKernel::identity(int dim)
{
    DiscreteKernel k;
    k.dim = dim;
    k.taps = {{0, 0, 1.0}};
    return k;
}

namespace {

void normalize(DiscreteKernel& k)
{
    double s = 0.0;
    for (const auto& t : k.taps) {
        s += t.w;
    }
    k.raw_sum = s;
    if (!(s > 0.0)) {
        throw Error(ErrorKind::Resolution, "kernel has no mass on this lattice");
    }
    for (auto& t : k.taps) {
        t.w /= s;
    }
    for (const auto& t : k.taps) {
        k.support_radius[0] = std::max(k.support_radius[0], std::abs(t.dx));
        k.support_radius[1] = std::max(k.support_radius[1], std::abs(t.dy));
    }
}

DiscreteKernel uniform_taps(int dim, std::array<int, 2> n, std::array<double, 2> h)
{
    DiscreteKernel k;
    k.dim = dim;
    k.uniform = true;
    k.spacing = h;
    k.truncation_radius = std::numeric_limits<double>::infinity();
    const int n1 = dim == 2 ? n[1] : 1;
    const double w = 1.0 / (static_cast<double>(n[0]) * n1);
    for (int i = 0; i < n[0]; ++i) {
        const int dx = i - n[0] / 2;
        for (int j = 0; j < n1; ++j) {
            const int dy = dim == 2 ? j - n1 / 2 : 0;
            k.taps.push_back({dx, dy, w});
        }
    }
    normalize(k);
    k.raw_sum = 1.0;
    return k;
}

} // namespace

DiscreteKernel kac_discretize(const Kernel& j, const LatticeGeometry& lattice)
{
    if (j.dim != lattice.dim) {
        throw Error(ErrorKind::InvalidArgument, "kernel and lattice dimensions differ");
    }
    if (j.profile == KernelProfile::Uniform) {
        if (!lattice.periodic) {
            throw Error(ErrorKind::Unsupported, "uniform kernels need a periodic lattice");
        }
        return uniform_taps(lattice.dim, lattice.sites, lattice.spacing);
    }
    double cutoff = j.cutoff_radius();
    if (!lattice.periodic && lattice.max_radius > 0.0) {
        cutoff = std::min(cutoff, lattice.max_radius);
    }
    DiscreteKernel k;
    k.dim = lattice.dim;
    k.spacing = lattice.spacing;
    k.truncation_radius = cutoff;
    std::array<int, 2> r{0, 0};
    for (int a = 0; a < lattice.dim; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        r[ua] = static_cast<int>(std::floor(cutoff / lattice.spacing[ua] + 1e-12));
        if (lattice.periodic && 2 * r[ua] + 1 > lattice.sites[ua]) {
            std::ostringstream os;
            os << "kernel support radius " << r[ua] << " sites exceeds half the torus ("
               << lattice.sites[ua] << " sites on axis " << a << ")";
            throw Error(ErrorKind::Resolution, os.str());
        }
    }
    const double hd = lattice.dim == 1 ? lattice.spacing[0] : lattice.spacing[0] * lattice.spacing[1];
    for (int dx = -r[0]; dx <= r[0]; ++dx) {
        for (int dy = -r[1]; dy <= r[1]; ++dy) {
            const double x = dx * lattice.spacing[0];
            const double y = lattice.dim == 2 ? dy * lattice.spacing[1] : 0.0;
            const double r2 = x * x + y * y;
            if (r2 > cutoff * cutoff) {
                continue;
            }
            const double w = hd * j.value(r2);
            if (w > 0.0) {
                k.taps.push_back({dx, dy, w});
            }
        }
    }
    normalize(k);
    return k;
}

DiscreteKernel grid_discretize(const Kernel& j, const Grid& grid)
{
    if (j.dim != grid.dim) {
        throw Error(ErrorKind::InvalidArgument, "kernel and grid dimensions differ");
    }
    const std::array<double, 2> h{grid.spacing(0), grid.dim == 2 ? grid.spacing(1) : 1.0};
    if (j.profile == KernelProfile::Uniform) {
        if (grid.bc != Boundary::Periodic) {
            throw Error(ErrorKind::Unsupported, "uniform kernels need a periodic grid");
        }
        return uniform_taps(grid.dim, grid.n, h);
    }
    for (int a = 0; a < grid.dim; ++a) {
        const double samples = 2.0 * j.effective_radius() / h[static_cast<std::size_t>(a)];
        if (samples < 5.0) {
            std::ostringstream os;
            os << "grid spacing " << h[static_cast<std::size_t>(a)] << " resolves the kernel with only "
               << samples << " samples (need 5)";
            throw Error(ErrorKind::Resolution, os.str());
        }
    }
    double cutoff = j.cutoff_radius();
    if (grid.bc == Boundary::Fixed) {
        cutoff = std::min(cutoff, grid.boundary_width);
    }
    std::array<int, 2> r{0, 0};
    for (int a = 0; a < grid.dim; ++a) {
        r[static_cast<std::size_t>(a)] = static_cast<int>(std::floor(cutoff / h[static_cast<std::size_t>(a)] + 1e-12));
    }
    const double hd = grid.cell_volume();
    DiscreteKernel k;
    k.dim = grid.dim;
    k.spacing = h;
    k.truncation_radius = cutoff;

    if (grid.bc == Boundary::Fixed) {
        for (int dx = -r[0]; dx <= r[0]; ++dx) {
            for (int dy = -r[1]; dy <= r[1]; ++dy) {
                const double x = dx * h[0];
                const double y = grid.dim == 2 ? dy * h[1] : 0.0;
                const double r2 = x * x + y * y;
                if (r2 > cutoff * cutoff) {
                    continue;
                }
                const double w = hd * j.value(r2);
                if (w > 0.0) {
                    k.taps.push_back({dx, dy, w});
                }
            }
        }
        normalize(k);
        return k;
    }

    // Periodic: fold the kernel onto the torus.
    const int n0 = grid.n[0];
    const int n1 = grid.dim == 2 ? grid.n[1] : 1;
    std::vector<double> folded(static_cast<std::size_t>(n0) * static_cast<std::size_t>(n1), 0.0);
    for (int dx = -r[0]; dx <= r[0]; ++dx) {
        for (int dy = -r[1]; dy <= r[1]; ++dy) {
            const double x = dx * h[0];
            const double y = grid.dim == 2 ? dy * h[1] : 0.0;
            const double r2 = x * x + y * y;
            if (r2 > cutoff * cutoff) {
                continue;
            }
            const int i = ((dx % n0) + n0) % n0;
            const int jj = ((dy % n1) + n1) % n1;
            folded[static_cast<std::size_t>(i) * static_cast<std::size_t>(n1) + static_cast<std::size_t>(jj)]
                += hd * j.value(r2);
        }
    }
    for (int i = 0; i < n0; ++i) {
        for (int jj = 0; jj < n1; ++jj) {
            const double w = folded[static_cast<std::size_t>(i) * static_cast<std::size_t>(n1) + static_cast<std::size_t>(jj)];
            if (w > 0.0) {
                const int dx = i <= n0 / 2 ? i : i - n0;
                const int dy = jj <= n1 / 2 ? jj : jj - n1;
                k.taps.push_back({dx, dy, w});
            }
        }
    }
    normalize(k);
    return k;
}

std::vector<double> circular_weights(const DiscreteKernel& jd, const Grid& grid)
{
    const int n0 = grid.n[0];
    const int n1 = grid.n[1];
    std::vector<double> out(grid.size(), 0.0);
    for (const auto& t : jd.taps) {
        const int i = ((t.dx % n0) + n0) % n0;
        const int j = ((t.dy % n1) + n1) % n1;
        out[grid.node(i, j)] += t.w;
    }
    return out;
}

double FourierCoeffs::operator()(int m0, int m1) const
{
    const int i = ((m0 % n_[0]) + n_[0]) % n_[0];
    const int j = ((m1 % n_[1]) + n_[1]) % n_[1];
    return values_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_[1]) + static_cast<std::size_t>(j)];
}

FourierCoeffs fourier_coeffs(const DiscreteKernel& jd, const Grid& grid)
{
    if (grid.bc != Boundary::Periodic) {
        throw Error(ErrorKind::Unsupported, "Fourier coefficients need a periodic grid");
    }
    const auto w = circular_weights(jd, grid);
    const std::size_t total = grid.size();
    std::vector<std::complex<double>> in(total), out(total);
    for (std::size_t v = 0; v < total; ++v) {
        in[v] = w[v];
    }
    fftw_plan plan;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        auto* pin = reinterpret_cast<fftw_complex*>(in.data());
        auto* pout = reinterpret_cast<fftw_complex*>(out.data());
        plan = grid.dim == 1 ? fftw_plan_dft_1d(grid.n[0], pin, pout, FFTW_FORWARD, FFTW_ESTIMATE)
                             : fftw_plan_dft_2d(grid.n[0], grid.n[1], pin, pout, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    std::vector<double> values(total);
    double max_imag = 0.0;
    for (std::size_t v = 0; v < total; ++v) {
        values[v] = out[v].real();
        max_imag = std::max(max_imag, std::abs(out[v].imag()));
    }
    if (max_imag > 1e-10) {
        throw Error(ErrorKind::InvalidArgument, "kernel is not symmetric: imaginary Fourier parts present");
    }
    return FourierCoeffs(grid.n, grid.dim, std::move(values), max_imag);
}

double kernel_transform(const DiscreteKernel& jd, std::array<double, 2> xi)
{
    double s = 0.0;
    for (const auto& t : jd.taps) {
        const double phase = 2.0 * std::numbers::pi
            * (xi[0] * t.dx * jd.spacing[0] + (jd.dim == 2 ? xi[1] * t.dy * jd.spacing[1] : 0.0));
        s += t.w * std::cos(phase);
    }
    return s;
}

double kernel_hat(const DiscreteKernel& jd, const Grid& grid, FourierConvention conv, std::array<int, 2> k)
{
    std::array<double, 2> xi{static_cast<double>(k[0]), static_cast<double>(k[1])};
    if (conv == FourierConvention::GridMode) {
        xi[0] /= grid.length[0];
        xi[1] /= grid.length[1];
    }
    return kernel_transform(jd, xi);
}

double second_moment(const Kernel& j, double domain_length)
{
    if (j.profile == KernelProfile::Uniform) {
        const double l2 = domain_length * domain_length;
        return j.dim == 1 ? l2 / 12.0 : l2 / 6.0;
    }
    const double upper = j.profile == KernelProfile::Gaussian ? j.effective_radius(1e-18) : j.radius;
    // Composite Simpson over [0, upper] of the radial integrand.
    constexpr int intervals = 20000;
    const double h = upper / intervals;
    auto integrand = [&](double r) {
        const double v = j.value(r * r) * r * r;
        return j.dim == 1 ? 2.0 * v : 2.0 * std::numbers::pi * r * v;
    };
    // The ball indicator is discontinuous at its edge; evaluate just inside.
    auto at = [&](int i) {
        const double r = i == intervals ? upper * (1.0 - 1e-15) : i * h;
        return integrand(r);
    };
    double s = at(0) + at(intervals);
    for (int i = 1; i < intervals; ++i) {
        s += (i % 2 == 1 ? 4.0 : 2.0) * at(i);
    }
    return s * h / 3.0;
}

} // namespace kacgame

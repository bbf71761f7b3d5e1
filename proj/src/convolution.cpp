#include "kacgame/convolution.hpp"

#include "fftw_lock.hpp"

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <vector>

namespace kacgame::conv {

namespace {

inline int wrap(int i, int n)
{
    i %= n;
    return i < 0 ? i + n : i;
}

// One output node; shared by the serial and parallel loops so they cannot drift apart.
inline double node_sum(const DiscreteKernel& jd, const Grid& grid, std::span<const double> in, int i0, int i1)
{
    const int n0 = grid.n[0];
    const int n1 = grid.n[1];
    double s = 0.0;
    if (grid.bc == Boundary::Periodic) {
        for (const auto& t : jd.taps) {
            s += t.w * in[grid.node(wrap(i0 - t.dx, n0), wrap(i1 - t.dy, n1))];
        }
    } else {
        for (const auto& t : jd.taps) {
            const int j0 = i0 - t.dx;
            const int j1 = i1 - t.dy;
            if (j0 < 0 || j0 >= n0 || j1 < 0 || j1 >= n1) {
                continue;
            }
            s += t.w * in[grid.node(j0, j1)];
        }
    }
    return s;
}

void check_sizes(const Grid& grid, std::span<const double> in, std::span<double> out)
{
    if (in.size() != grid.size() || out.size() != grid.size()) {
        throw Error(ErrorKind::InvalidArgument, "convolution buffers do not match the grid");
    }
}

} // namespace

void direct_serial(const DiscreteKernel& jd, const Grid& grid, std::span<const double> in, std::span<double> out)
{
    check_sizes(grid, in, out);
    for (int i0 = 0; i0 < grid.n[0]; ++i0) {
        for (int i1 = 0; i1 < grid.n[1]; ++i1) {
            out[grid.node(i0, i1)] = node_sum(jd, grid, in, i0, i1);
        }
    }
}

void direct_parallel(const DiscreteKernel& jd, const Grid& grid, std::span<const double> in, std::span<double> out)
{
    check_sizes(grid, in, out);
    const long total = static_cast<long>(grid.size());
#pragma omp parallel for schedule(static)
    for (long v = 0; v < total; ++v) {
        const auto node = static_cast<std::size_t>(v);
        out[node] = node_sum(jd, grid, in, grid.index(node, 0), grid.index(node, 1));
    }
}

struct FftConvolver::Impl {
    Grid grid;
    std::size_t spectral_size = 0;
    std::vector<std::complex<double>> kernel_spectrum;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

FftConvolver::FftConvolver(const DiscreteKernel& jd, const Grid& grid) : impl_(std::make_unique<Impl>())
{
    if (grid.bc != Boundary::Periodic) {
        throw Error(ErrorKind::Unsupported, "FFT convolution needs a periodic grid");
    }
    impl_->grid = grid;
    const int n0 = grid.n[0];
    const int n1 = grid.n[1];
    const std::size_t last = grid.dim == 1 ? static_cast<std::size_t>(n0 / 2 + 1)
                                           : static_cast<std::size_t>(n1 / 2 + 1);
    impl_->spectral_size = grid.dim == 1 ? last : static_cast<std::size_t>(n0) * last;

    std::vector<double> real(grid.size());
    std::vector<std::complex<double>> spec(impl_->spectral_size);
    auto* pspec = reinterpret_cast<fftw_complex*>(spec.data());
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        if (grid.dim == 1) {
            impl_->forward = fftw_plan_dft_r2c_1d(n0, real.data(), pspec, flags);
            impl_->backward = fftw_plan_dft_c2r_1d(n0, pspec, real.data(), flags | FFTW_DESTROY_INPUT);
        } else {
            impl_->forward = fftw_plan_dft_r2c_2d(n0, n1, real.data(), pspec, flags);
            impl_->backward = fftw_plan_dft_c2r_2d(n0, n1, pspec, real.data(), flags | FFTW_DESTROY_INPUT);
        }
    }
    real = circular_weights(jd, grid);
    fftw_execute_dft_r2c(impl_->forward, real.data(), pspec);
    // Fold the 1/N of the unnormalized inverse into the kernel spectrum.
    const double scale = 1.0 / static_cast<double>(grid.size());
    for (auto& c : spec) {
        c *= scale;
    }
    impl_->kernel_spectrum = std::move(spec);
}

FftConvolver::~FftConvolver()
{
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (impl_->forward != nullptr) {
        fftw_destroy_plan(impl_->forward);
    }
    if (impl_->backward != nullptr) {
        fftw_destroy_plan(impl_->backward);
    }
}

void FftConvolver::apply(std::span<const double> in, std::span<double> out) const
{
    check_sizes(impl_->grid, in, out);
    std::vector<double> work(in.begin(), in.end());
    std::vector<std::complex<double>> spec(impl_->spectral_size);
    auto* pspec = reinterpret_cast<fftw_complex*>(spec.data());
    fftw_execute_dft_r2c(impl_->forward, work.data(), pspec);
    for (std::size_t m = 0; m < spec.size(); ++m) {
        spec[m] *= impl_->kernel_spectrum[m];
    }
    fftw_execute_dft_c2r(impl_->backward, pspec, out.data());
}

} // namespace kacgame::conv

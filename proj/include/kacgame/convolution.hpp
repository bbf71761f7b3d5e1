#pragma once

// Grid convolution out = W * in. The direct serial sum is the reference;
// the OpenMP and FFT paths must reproduce it.

#include "kacgame/kernel.hpp"

#include <memory>
#include <span>

namespace kacgame::conv {

/// out[x] = sum_z W(z) in[x - z]. Periodic grids wrap; fixed grids skip
/// offsets that leave the box.
void direct_serial(const DiscreteKernel& jd, const Grid& grid, std::span<const double> in, std::span<double> out);

/// Same sum with the output nodes split across OpenMP threads.
void direct_parallel(const DiscreteKernel& jd, const Grid& grid, std::span<const double> in, std::span<double> out);

/// Real-to-complex FFT convolution on a periodic grid with a precomputed
/// kernel spectrum. apply() is safe to call concurrently from several
/// threads on distinct buffers.
class FftConvolver {
public:
    FftConvolver(const DiscreteKernel& jd, const Grid& grid);
    ~FftConvolver();
    FftConvolver(const FftConvolver&) = delete;
    FftConvolver& operator=(const FftConvolver&) = delete;

    void apply(std::span<const double> in, std::span<double> out) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace kacgame::conv

#pragma once

#include <cstdint>
#include <vector>

namespace kacgame::stats {

struct KsResult {
    double statistic;
    double p_value;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct LinearFit {
    double slope;
    double intercept;
    /// Root-mean-square residual.
    double residual;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Seed for replica `index` derived from a run seed (splitmix64 of the pair).
std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index);

double mean(const std::vector<double>& v);

} // namespace kacgame::stats

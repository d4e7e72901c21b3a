#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace prodmat {

// Fixed-partition pairwise summation: the result depends only on the element
// order, never on how the values were produced (worker count, scheduling).
double pairwise_sum(std::span<const double> values);

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

MeanStderr mc_stats(std::span<const double> values);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov with the asymptotic Kolmogorov p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace prodmat

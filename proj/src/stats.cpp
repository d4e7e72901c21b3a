#include "prodmat/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace prodmat {

namespace {

double pairwise_range(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_range(v, half) + pairwise_range(v + half, n - half);
}

double kolmogorov_q(double lambda) {
    if (lambda < 1e-8) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        double term = sign * 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-12 * (std::abs(sum) + 1e-300)) break;
        sign = -sign;
    }
    return std::clamp(sum, 0.0, 1.0);
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
    return pairwise_range(values.data(), values.size());
}

MeanStderr mc_stats(std::span<const double> values) {
    MeanStderr out;
    out.n = values.size();
    if (out.n == 0) return out;
    out.mean = pairwise_sum(values) / static_cast<double>(out.n);
    if (out.n == 1) return out;
    std::vector<double> sq(out.n);
    for (std::size_t i = 0; i < out.n; ++i) {
        double d = values[i] - out.mean;
        sq[i] = d * d;
    }
    double var = pairwise_sum(sq) / static_cast<double>(out.n - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(out.n));
    return out;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double xa = a[i], xb = b[j];
        if (xa <= xb) ++i;
        if (xb <= xa) ++j;
        double diff = std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb);
        d = std::max(d, diff);
    }
    KsResult out;
    out.statistic = d;
    double ne = std::sqrt(na * nb / (na + nb));
    out.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
    return out;
}

double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_loglog_slope: need >= 2 matching points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw std::invalid_argument("fit_loglog_slope: values must be positive");
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace prodmat

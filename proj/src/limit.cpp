#include "prodmat/limit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "prodmat/mvbessel.hpp"  // log_gamma
#include "prodmat/stats.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace prodmat {

namespace {

using std::numbers::pi;

constexpr double kGl8Nodes[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                 0.9602898564975363};
constexpr double kGl8Weights[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                   0.1012285362903763};

struct SignedLog {
    double log_abs = -std::numeric_limits<double>::infinity();
    double sign = 0.0;
};

// 1/Gamma(x) for real x, robust across the poles (returns 0 there).
SignedLog log_recip_gamma_real(double x) {
    SignedLog out;
    if (x > 0.5) {
        out.log_abs = -std::lgamma(x);
        out.sign = 1.0;
        return out;
    }
    double s = std::sin(pi * x);
    if (s == 0.0) return out;  // pole of Gamma: reciprocal vanishes
    out.log_abs = std::lgamma(1.0 - x) + std::log(std::abs(s)) - std::log(pi);
    out.sign = (s > 0.0) ? 1.0 : -1.0;
    return out;
}

void validate_query(const LaplaceQuery& q) {
    const std::size_t k = q.c.size();
    if (k < 1 || q.t.size() != k)
        throw std::invalid_argument("laplace query: need matching nonempty t and c");
    for (std::size_t i = 0; i < k; ++i) {
        if (!(q.c[i] > 0.0)) throw std::invalid_argument("laplace query: c must be > 0");
        if (!(q.t[i] > 0.0)) throw std::invalid_argument("laplace query: t must be > 0");
        if (i > 0 && q.t[i] > q.t[i - 1] + 1e-15)
            throw std::invalid_argument("laplace query: t must be nonincreasing");
    }
}

int auto_n_max(const LaplaceQuery& q, const ContourPlan& plan) {
    if (plan.n_max != 0) {
        if (plan.n_max < 10) throw std::invalid_argument("ContourPlan: n_max must be >= 10");
        return plan.n_max;
    }
    double rate = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < q.c.size(); ++i) rate = std::min(rate, q.t[i] * q.c[i]);
    int n = static_cast<int>(std::ceil(48.0 / rate)) + 48;
    return std::clamp(n, 64, 20000);
}

// residue of the index-0 factor at z = -n (signed log), n_mats = 0 for the
// N -> infinity limit.
SignedLog residue_weight(double t, double c, int n, int n_mats) {
    SignedLog out;
    double lr = -std::lgamma(n + 1.0) + t * c * (-n + 0.5 * (c - 1.0));
    SignedLog rg = log_recip_gamma_real(c - n);
    if (rg.sign == 0.0) return out;
    lr += rg.log_abs;
    double sign = ((n % 2) ? -1.0 : 1.0) * rg.sign;
    if (n_mats > 0) lr += std::lgamma(c + n_mats - n) - std::lgamma(static_cast<double>(n_mats - n));
    out.log_abs = lr;
    out.sign = sign;
    return out;
}

std::complex<double> gamma_factor(std::complex<double> z, double t, double c, int n_mats) {
    std::complex<double> lg = t * c * (z + 0.5 * (c - 1.0)) + log_gamma(z) - log_gamma(z + c);
    if (n_mats > 0)
        lg += log_gamma(z + c + static_cast<double>(n_mats)) -
              log_gamma(z + static_cast<double>(n_mats));
    return std::exp(lg);
}

std::complex<double> cross_factor(std::complex<double> zi, double ci, std::complex<double> zj,
                                  double cj) {
    return (zi - zj) * (zi + ci - zj - cj) / ((zi + ci - zj) * (zi - zj - cj));
}

struct Rectangle {
    double left, right, half_height;
};

// Keep vertical segments away from the pole lattice on the real axis.
double nudge_off_integers(double x) {
    while (std::abs(x - std::round(x)) < 0.15) x -= 0.17;
    return x;
}

// counterclockwise Gauss-Legendre nodes (z, weight*dz) on the rectangle edge
std::vector<std::pair<std::complex<double>, std::complex<double>>> rectangle_nodes(
    const Rectangle& r, double panel) {
    using C = std::complex<double>;
    std::vector<std::pair<C, C>> nodes;
    const C corners[5] = {C(r.left, -r.half_height), C(r.right, -r.half_height),
                          C(r.right, r.half_height), C(r.left, r.half_height),
                          C(r.left, -r.half_height)};
    for (int seg = 0; seg < 4; ++seg) {
        C a = corners[seg], b = corners[seg + 1];
        double len = std::abs(b - a);
        int np = std::max(1, static_cast<int>(std::ceil(len / panel)));
        for (int p = 0; p < np; ++p) {
            C pa = a + (b - a) * (static_cast<double>(p) / np);
            C pb = a + (b - a) * (static_cast<double>(p + 1) / np);
            C mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
            for (int g = 0; g < 4; ++g) {
                nodes.emplace_back(mid + half * kGl8Nodes[g], half * kGl8Weights[g]);
                nodes.emplace_back(mid - half * kGl8Nodes[g], half * kGl8Weights[g]);
            }
        }
    }
    return nodes;
}

double laplace_eval(const LaplaceQuery& q, int n_mats, const ContourPlan& plan) {
    validate_query(q);
    const int k = static_cast<int>(q.c.size());
    int n_cap = auto_n_max(q, plan);
    if (n_mats > 0) n_cap = std::min(n_cap, n_mats - 1);

    // signed-log residue weights for the innermost index
    std::vector<double> wlog(n_cap + 1), wsign(n_cap + 1);
    for (int n = 0; n <= n_cap; ++n) {
        SignedLog w = residue_weight(q.t[0], q.c[0], n, n_mats);
        wlog[n] = w.log_abs;
        wsign[n] = w.sign;
    }

    if (k == 1) {
        // pure residue series
        double scale = wlog[0];
        long double acc = 0.0L;
        int small_run = 0;
        bool converged = false;
        for (int n = 0; n <= n_cap; ++n) {
            if (wsign[n] == 0.0) {
                if (n >= 1) {  // integer c truncates the series exactly
                    converged = true;
                    break;
                }
                continue;
            }
            double term = wsign[n] * std::exp(wlog[n] - scale);
            acc += term;
            if (std::abs(term) <= plan.series_rel_tol * std::abs(static_cast<double>(acc))) {
                if (++small_run >= 3) {
                    converged = true;
                    break;
                }
            } else {
                small_run = 0;
            }
        }
        if (!converged && n_mats == 0)
            throw std::runtime_error("laplace_limit: residue series did not converge within n_max");
        double value = static_cast<double>(acc) * std::exp(scale) / q.c[0];
        if (n_mats > 0) value *= std::exp(-q.c[0] * std::log(static_cast<double>(n_mats)));
        return value;
    }

    // k >= 2: staggered rectangles for indices 2..k (1-based), residues inside.
    double cmax = *std::max_element(q.c.begin(), q.c.end());
    std::vector<Rectangle> rects(k);  // index 0 unused
    for (int i = 1; i < k; ++i) {
        Rectangle r;
        r.right = nudge_off_integers((i + 1) * (cmax + plan.margin));
        r.half_height = 1.0 + plan.margin * (i + 1);
        r.left = nudge_off_integers(-(n_cap + 0.5) - i * (cmax + 0.5));
        rects[i] = r;
    }

    using C = std::complex<double>;
    std::vector<C> zs(k);

    std::function<C(int)> level = [&](int j) -> C {
        if (j == 0) {
            // residue series over z_0 = -n with cross factors to all outer z's
            C acc = 0.0;
            int small_run = 0;
            bool converged = false;
            for (int n = 0; n <= n_cap; ++n) {
                if (wsign[n] == 0.0) {
                    if (n >= 1) {
                        converged = true;
                        break;
                    }
                    continue;
                }
                C cross = 1.0;
                for (int jj = 1; jj < k; ++jj)
                    cross *= cross_factor(C(-static_cast<double>(n), 0.0), q.c[0], zs[jj], q.c[jj]);
                C term = wsign[n] * std::exp(wlog[n]) * cross;
                acc += term;
                if (std::abs(term) <= plan.series_rel_tol * std::abs(acc)) {
                    if (++small_run >= 3) {
                        converged = true;
                        break;
                    }
                } else {
                    small_run = 0;
                }
            }
            if (!converged && n_mats == 0)
                throw std::runtime_error("laplace: inner residue series did not converge");
            return acc;
        }
        auto nodes = rectangle_nodes(rects[j], plan.panel);
        C total = 0.0;
        for (const auto& [z, wdz] : nodes) {
            zs[j] = z;
            C f = gamma_factor(z, q.t[j], q.c[j], n_mats);
            for (int jj = j + 1; jj < k; ++jj) f *= cross_factor(z, q.c[j], zs[jj], q.c[jj]);
            C val = f * level(j - 1);
            if (!std::isfinite(val.real()) || !std::isfinite(val.imag()))
                throw std::runtime_error("laplace: contour plan violation (non-finite integrand)");
            total += wdz * val;
        }
        return total / C(0.0, 2.0 * pi);
    };

    C total = level(k - 1);
    double value = total.real();
    for (int i = 0; i < k; ++i) value /= q.c[i];
    if (std::abs(total.imag()) > 1e-7 * (std::abs(total.real()) + 1e-300))
        throw std::runtime_error("laplace: contour plan violation (imaginary residue)");
    if (n_mats > 0) {
        double csum = 0.0;
        for (double c : q.c) csum += c;
        value *= std::exp(-csum * std::log(static_cast<double>(n_mats)));
    }
    return value;
}

}  // namespace

double laplace_limit(const LaplaceQuery& q, const ContourPlan& plan) {
    return laplace_eval(q, 0, plan);
}

double laplace_finite_n(const LaplaceQuery& q, int n, const ContourPlan& plan) {
    if (n < 1) throw std::invalid_argument("laplace_finite_n: N must be >= 1");
    return laplace_eval(q, n, plan);
}

namespace {

// (1/2pi) int e^{t w^2/2 - y w} / ((w - z_n) Gamma(w + 1/2)) dw on Re w = cw,
// returned as a signed log. The integrand decays like exp(-t tau^2 / 2 +
// pi tau / 2).
SignedLog line_integral(double t, double y, double zn, double cw, const ContourPlan& plan) {
    double logtail = -std::log(plan.line_tail_tol) + 14.0;
    double a = pi / (2.0 * t);
    double tmax = a + std::sqrt(a * a + 2.0 * logtail / t);
    double freq = std::abs(t * cw - y);
    double panel = std::clamp(2.0 * pi / (8.0 * (1.0 + freq)), 0.01, 0.35);
    int np = static_cast<int>(std::ceil(tmax / panel));

    // symmetric in tau -> integrate [0, tmax] and keep the real part
    long double acc = 0.0L;
    double prefactor = 0.5 * t * cw * cw - y * cw;  // folded as log offset
    for (int p = 0; p < np; ++p) {
        double pa = tmax * p / np, pb = tmax * (p + 1) / np;
        double mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
        for (int g = 0; g < 4; ++g) {
            for (double tau : {mid + half * kGl8Nodes[g], mid - half * kGl8Nodes[g]}) {
                std::complex<double> w(cw, tau);
                std::complex<double> lg =
                    0.5 * t * (w * w) - y * w - std::complex<double>(prefactor) -
                    log_gamma(w + 0.5);
                std::complex<double> f = std::exp(lg) / (w - zn);
                acc += half * kGl8Weights[g] * f.real();
            }
        }
    }
    SignedLog out;
    double total = static_cast<double>(acc) / pi;
    if (total == 0.0) return out;
    out.sign = (total > 0.0) ? 1.0 : -1.0;
    out.log_abs = std::log(std::abs(total)) + prefactor;
    return out;
}

}  // namespace

double kernel_eval(const KernelQuery& q, double c_w, const ContourPlan& plan) {
    if (!(q.s > 0.0) || !(q.t > 0.0))
        throw std::invalid_argument("kernel_eval: times must be > 0");
    bool user_cw = std::isfinite(c_w);
    if (user_cw && c_w <= -0.5)
        throw std::domain_error("kernel_eval: w line must stay right of the z poles (c_w > -1/2)");

    double heat = 0.0;
    if (q.t > q.s) {
        double dt = q.t - q.s;
        heat = -std::exp(-(q.x - q.y) * (q.x - q.y) / (2.0 * dt)) / std::sqrt(2.0 * pi * dt);
    }

    long double acc = 0.0L;
    double max_term = 0.0;
    int small_run = 0;
    const int n_cap = 400;
    bool converged = false;
    for (int n = 0; n <= n_cap; ++n) {
        double zn = -(n + 0.5);
        double lcn = -std::lgamma(n + 1.0) + q.x * zn - 0.5 * q.s * zn * zn;
        double cw = user_cw ? c_w : std::max(zn + 0.6, std::min(q.y / q.t, 60.0));
        SignedLog jn = line_integral(q.t, q.y, zn, cw, plan);
        double term = 0.0;
        if (jn.sign != 0.0) {
            double sign = ((n % 2) ? -1.0 : 1.0) * jn.sign;
            term = sign * std::exp(lcn + jn.log_abs);
        }
        acc += term;
        max_term = std::max(max_term, std::abs(term));
        if (n >= 12 && std::abs(term) <= 1e-14 * std::max(max_term, 1e-300)) {
            if (++small_run >= 3) {
                converged = true;
                break;
            }
        } else {
            small_run = 0;
        }
    }
    if (!converged) throw std::runtime_error("kernel_eval: residue series did not converge");
    return heat + static_cast<double>(acc);
}

double kernel_density(double t, double x, const ContourPlan& plan) {
    return kernel_eval({t, t, x, x}, std::numeric_limits<double>::quiet_NaN(), plan);
}

double expected_count(double t, double a, bool parallel, const ContourPlan& plan) {
    if (!(t > 0.0)) throw std::invalid_argument("expected_count: t must be > 0");

    // grow the window until the intensity tail is negligible
    double width = 8.0;
    while (width < 80.0 && kernel_density(t, a + width, plan) > 1e-9) width += 4.0;

    auto integrate = [&](double h) {
        int n = std::max(4, static_cast<int>(std::ceil(width / h)));
        if (n % 2) ++n;
        std::vector<double> vals(n + 1);
        auto body = [&](int i) { vals[i] = kernel_density(t, a + width * i / n, plan); };
        if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
            for (int i = 0; i <= n; ++i) body(i);
        } else {
            for (int i = 0; i <= n; ++i) body(i);
        }
        // Simpson with deterministic pairwise reduction
        std::vector<double> terms(n + 1);
        double h_eff = width / n;
        for (int i = 0; i <= n; ++i) {
            double w = (i == 0 || i == n) ? 1.0 : ((i % 2) ? 4.0 : 2.0);
            terms[i] = w * vals[i];
        }
        return pairwise_sum(terms) * h_eff / 3.0;
    };

    double coarse = integrate(0.1);
    double fine = integrate(0.05);
    if (std::abs(fine - coarse) > 1e-4 * std::max(1.0, std::abs(fine))) fine = integrate(0.025);
    return fine;
}

}  // namespace prodmat

#pragma once

#include <limits>
#include <vector>

namespace prodmat {

// Joint observable E[prod_i sum_j exp(c_i xi_j(t_i))]: times decreasing,
// exponents positive.
struct LaplaceQuery {
    std::vector<double> t;
    std::vector<double> c;
};

// Contour realization knobs. Defaults satisfy the pole-enclosure relations by
// construction; results must be insensitive to doubling any of them.
struct ContourPlan {
    int n_max = 0;                  // residue-series cap, 0 = auto (>= 10 otherwise)
    double series_rel_tol = 1e-15;  // residue-series truncation
    double line_tail_tol = 1e-12;   // kernel line-quadrature tail
    double margin = 0.25;           // rectangle spacing unit
    double panel = 0.4;             // max quadrature panel length
};

// k = 1: exact residue series over the poles of Gamma(z). k >= 2: innermost
// index by residues, outer indices by nested rectangle quadrature.
double laplace_limit(const LaplaceQuery& q, const ContourPlan& plan = {});

// Finite-N Dyson observable with the 1/N^c centering included; poles truncate
// at z = -N+1.
double laplace_finite_n(const LaplaceQuery& q, int n, const ContourPlan& plan = {});

struct KernelQuery {
    double s;  // first time
    double t;  // second time
    double x;  // first position (nats)
    double y;  // second position
};

// Space-time correlation kernel K(s, x; t, y): heat-kernel subtraction plus a
// residue series over z = -(n + 1/2) times a Gaussian-damped line quadrature
// in w. c_w < -1/2 is rejected; NaN selects a saddle-adapted abscissa per
// residue.
double kernel_eval(const KernelQuery& q, double c_w = std::numeric_limits<double>::quiet_NaN(),
                   const ContourPlan& plan = {});

// One-point intensity rho_1(t, x) = K(t, x; t, x).
double kernel_density(double t, double x, const ContourPlan& plan = {});

// integral of the intensity over [a, infinity), window grown until the tail
// is negligible.
double expected_count(double t, double a, bool parallel = true, const ContourPlan& plan = {});

}  // namespace prodmat

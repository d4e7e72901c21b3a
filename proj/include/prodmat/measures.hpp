#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace prodmat {

using Complex = std::complex<double>;

// Atomic probability measure on (0, inf). Carrier of the psi / S-transform /
// H-function toolbox and of the product-centering sequences. Immutable after
// construction; all operations below are pure.
class EmpiricalMeasure {
  public:
    EmpiricalMeasure(std::vector<double> atoms, std::vector<double> weights);
    static EmpiricalMeasure uniform(std::vector<double> atoms);

    const std::vector<double>& atoms() const { return atoms_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return atoms_.size(); }
    double atom_min() const { return amin_; }
    double atom_max() const { return amax_; }
    // True when all atoms coincide (kappa2 = 0); transforms then use the
    // delta_c closed forms.
    bool is_degenerate() const { return degenerate_; }

    // Pushforward under x -> c x.
    EmpiricalMeasure scaled(double c) const;

  private:
    std::vector<double> atoms_;
    std::vector<double> weights_;
    double amin_, amax_;
    bool degenerate_;
};

struct Cumulants {
    double kappa1;  // mean
    double kappa2;  // variance, clamped at 0
    double m2;      // raw second moment
    double m3;      // raw third moment
};

struct SDerivsAtZero {
    double s0;  // S(0)  = 1/kappa1
    double s1;  // S'(0) = -kappa2/kappa1^3
    double s2;  // S''(0)
};

// Centering sequences indexed by M (entry 0 corresponds to the empty product).
struct CenteringProfile {
    std::vector<double> e_n;  // E_N(M) = sum_{m<=M} log kappa1(mu_m)
    std::vector<double> v_n;  // V_N(M) = (1/N) sum_{m<=M} kappa2/kappa1^2
};

Cumulants cumulants(const EmpiricalMeasure& mu);

// psi(z) = int z x / (1 - z x) dmu(x). Throws on pole proximity.
Complex psi_eval(const EmpiricalMeasure& mu, Complex z);
Complex psi_prime(const EmpiricalMeasure& mu, Complex z);
Complex psi_second(const EmpiricalMeasure& mu, Complex z);

// Inverse of psi on a neighborhood of (-1, 0]; real u maps to real z <= 0.
Complex psi_inverse(const EmpiricalMeasure& mu, Complex u);

// S(u) = (1+u)/u * psi^-1(u); removable singularities at u = 0 (-> 1/kappa1)
// and u = -1 (-> int x^-1 dmu) evaluated in closed form.
Complex s_transform(const EmpiricalMeasure& mu, Complex u);
SDerivsAtZero s_derivs_at_zero(const EmpiricalMeasure& mu);

// H(u) = -(u+1) log S(u) - int log((u+1)/S(u) - u x) dmu(x), u in (-1, 0].
double h_eval(const EmpiricalMeasure& mu, double u);
// H'(u) = -log S(u).
double h_prime(const EmpiricalMeasure& mu, double u);
Complex h_eval_complex(const EmpiricalMeasure& mu, Complex u);

// log psi'(psi^-1(u)) with the branch tracked continuously along the segment
// from Re u to u (real positive at the real end).
Complex log_psi_prime_at_inverse(const EmpiricalMeasure& mu, Complex u);

// Cauchy-determinant ratio times the psi' square-root product (the left side
// of the two-point estimate); confluent u_i = v_j pairs handled exactly.
Complex cauchy_ratio(const EmpiricalMeasure& mu, const std::vector<Complex>& u,
                     const std::vector<Complex>& v);

CenteringProfile centering(const std::vector<EmpiricalMeasure>& factors, std::size_t n);

}  // namespace prodmat

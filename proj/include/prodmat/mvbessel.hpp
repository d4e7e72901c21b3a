#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "prodmat/measures.hpp"

namespace prodmat {

// log of the normalized multivariate Bessel function
//   Delta(rho_N) det[x_j^{z_i}] / (Delta(z) Delta(x)),
// evaluated in the log domain with divided-difference (derivative) rows and
// columns whenever z or x entries coincide within 1e-9 relative. Equals 0 at
// z = rho_N.
Complex log_bessel_normalized(const std::vector<double>& x, const std::vector<Complex>& z);
Complex bessel_normalized(const std::vector<double>& x, const std::vector<Complex>& z);

// Complex log-gamma, Lanczos approximation with reflection for Re z < 0.5.
Complex log_gamma(Complex z);

struct McEstimate {
    Complex value;
    double stderr_;
};

// Monte Carlo over Haar measure of the generalized power function
// |U diag(x) U^-1|^z built from top-left corner determinants.
McEstimate gn_integral_mc(const std::vector<double>& x, const std::vector<Complex>& z,
                          std::size_t trials, std::uint64_t seed, bool parallel = true);

// Shift specification for the T_{c, z_i} operator calculus; indices are
// 1-based as in the rho_N convention.
struct ShiftSpec {
    std::vector<int> indices;
    std::vector<double> shifts;
};

// A factor evaluable at rho_N with any subset of coordinates shifted.
class BgfFactor {
  public:
    virtual ~BgfFactor() = default;
    // z is the full real argument vector (rho_N plus accumulated shifts).
    virtual Complex log_eval(const std::vector<double>& z) const = 0;
};

class BesselBgfFactor final : public BgfFactor {
  public:
    explicit BesselBgfFactor(std::vector<double> spectrum) : x_(std::move(spectrum)) {}
    Complex log_eval(const std::vector<double>& z) const override;

  private:
    std::vector<double> x_;
};

// exp[Delta ((z_a - N + 1/2)^2 - (-a + 1/2)^2)] product factor.
class GaussianBgfFactor final : public BgfFactor {
  public:
    GaussianBgfFactor(double delta, int n) : delta_(delta), n_(n) {}
    Complex log_eval(const std::vector<double>& z) const override;

  private:
    double delta_;
    int n_;
};

// T_{c_1, z_{i_1}} ... T_{c_l, z_{i_l}} (product of factors) at z = rho_N.
Complex apply_shift_product(const std::vector<const BgfFactor*>& factors, const ShiftSpec& spec,
                            int n);

// prod_{j != i} (c + z_i - z_j)/(z_i - z_j) at rho_N after applying the prior
// shifts; positive for sum of shifts < 1.
double rational_prefactor(const ShiftSpec& prior, int target_index, double c, int n);

// E[prod_i sum_j y_j(M_i)^{c_i}] for deterministic-spectrum right-invariant
// factors, via the full shift-operator expansion.
double observable_deterministic(const std::vector<EmpiricalMeasure>& spectra,
                                const std::vector<int>& times_m, const std::vector<double>& c,
                                int n);

// Relative residual of D_c B_{log x}(z) = (sum_i x_i^c) B_{log x}(z).
double eigenrelation_check(const std::vector<double>& x, const std::vector<Complex>& z, double c);

// B_mu^(N)(N(u+1); N(v+1)): the normalized Bessel with lattice slots N(v_i+1)
// of rho_N replaced by N(u_i+1). v_i must lie on the (1/N)Z lattice in [-1,0].
Complex bessel_lattice_ratio(const EmpiricalMeasure& mu, const std::vector<Complex>& u,
                             const std::vector<Complex>& v);

// The explicit asymptotic approximant: Cauchy-determinant ratio, sqrt-S ratio
// and exp(N(H(u)-H(v))) factors. Equals 1 at u = v.
Complex bessel_asymptotic(const EmpiricalMeasure& mu, const std::vector<Complex>& u,
                          const std::vector<Complex>& v);

struct SigmaTauEntry {
    std::vector<int> indices;  // 1-based tuple (i_1, ..., i_k)
    double sigma;
    double tau;
};

// Paired sigma/tau values over index tuples with i_j <= N^(1/3).
std::vector<SigmaTauEntry> sigma_tau_diagnostic(const std::vector<EmpiricalMeasure>& spectra,
                                                int n, int k, const std::vector<double>& c,
                                                const std::vector<int>& times_m);

}  // namespace prodmat

#include "prodmat/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace prodmat {

namespace {

constexpr double kWeightTol = 1e-12;
constexpr double kPoleTol = 1e-12;
constexpr double kDomainReLo = -1.0 + 1e-9;
constexpr double kDomainReHi = 0.1;
constexpr double kDomainImMax = 0.1;
constexpr double kInverseTol = 1e-13;

bool is_real(Complex z) { return z.imag() == 0.0; }

void check_inverse_domain(Complex u) {
    if (!(u.real() > kDomainReLo && u.real() <= kDomainReHi && std::abs(u.imag()) <= kDomainImMax))
        throw std::domain_error("psi_inverse: u outside the guaranteed neighborhood of (-1, 0]");
}

// Monotone real solve of psi(z) = u for u in (-1, 0.1], bisection bracket then
// Newton polish.
double psi_inverse_real(const EmpiricalMeasure& mu, double u) {
    if (u == 0.0) return 0.0;
    double lo, hi;
    if (u < 0.0) {
        // psi decreasing toward -1 as z -> -inf; bracket [lo, 0].
        hi = 0.0;
        lo = -1.0;
        int grow = 0;
        while (psi_eval(mu, lo).real() > u) {
            lo *= 4.0;
            if (++grow > 40)
                throw std::runtime_error("psi_inverse: bracketing failed (u too close to -1)");
        }
    } else {
        // psi increasing to +inf as z approaches 1/max-atom from below.
        lo = 0.0;
        double zpole = 1.0 / mu.atom_max();
        double eps = 0.5;
        hi = (1.0 - eps) * zpole;
        int shrink = 0;
        while (psi_eval(mu, hi).real() < u) {
            eps *= 0.5;
            hi = (1.0 - eps) * zpole;
            if (++shrink > 50) throw std::runtime_error("psi_inverse: bracketing failed (u > 0)");
        }
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double val = psi_eval(mu, mid).real();
        if (val < u)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-8 * (1.0 + std::abs(mid))) break;
    }
    double z = 0.5 * (lo + hi);
    for (int it = 0; it < 60; ++it) {
        double f = psi_eval(mu, z).real() - u;
        if (std::abs(f) <= kInverseTol * std::max(std::abs(u), 1e-3)) break;
        double d = psi_prime(mu, z).real();
        double step = f / d;
        double znew = z - step;
        if (!(znew > lo - 1.0 && znew < hi + 1.0) || !std::isfinite(znew))
            znew = 0.5 * (lo + hi);
        if (psi_eval(mu, znew).real() < u)
            lo = std::max(lo, znew);
        else
            hi = std::min(hi, znew);
        z = znew;
        if (it == 59)
            throw std::runtime_error("psi_inverse: Newton did not converge (measure near-degenerate?)");
    }
    return z;
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
    if (atoms_.empty()) throw std::invalid_argument("EmpiricalMeasure: need at least one atom");
    if (atoms_.size() != weights_.size())
        throw std::invalid_argument("EmpiricalMeasure: atoms/weights size mismatch");
    double wsum = 0.0;
    amin_ = std::numeric_limits<double>::infinity();
    amax_ = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (!(atoms_[i] > 0.0) || !std::isfinite(atoms_[i]))
            throw std::invalid_argument("EmpiricalMeasure: atoms must be positive and finite");
        if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i]))
            throw std::invalid_argument("EmpiricalMeasure: weights must be positive");
        wsum += weights_[i];
        amin_ = std::min(amin_, atoms_[i]);
        amax_ = std::max(amax_, atoms_[i]);
    }
    if (std::abs(wsum - 1.0) > kWeightTol)
        throw std::invalid_argument("EmpiricalMeasure: weights must sum to 1 within 1e-12");
    degenerate_ = (amax_ - amin_) <= 1e-14 * amax_;
}

EmpiricalMeasure EmpiricalMeasure::uniform(std::vector<double> atoms) {
    std::vector<double> w(atoms.size(), atoms.empty() ? 0.0 : 1.0 / static_cast<double>(atoms.size()));
    return EmpiricalMeasure(std::move(atoms), std::move(w));
}

EmpiricalMeasure EmpiricalMeasure::scaled(double c) const {
    if (!(c > 0.0)) throw std::invalid_argument("EmpiricalMeasure::scaled: c must be > 0");
    std::vector<double> a = atoms_;
    for (double& x : a) x *= c;
    return EmpiricalMeasure(std::move(a), weights_);
}

Cumulants cumulants(const EmpiricalMeasure& mu) {
    double m1 = 0, m2 = 0, m3 = 0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double x = mu.atoms()[i], w = mu.weights()[i];
        m1 += w * x;
        m2 += w * x * x;
        m3 += w * x * x * x;
    }
    double var = m2 - m1 * m1;
    if (var < -1e-12) throw std::runtime_error("cumulants: negative variance");
    return {m1, std::max(var, 0.0), m2, m3};
}

Complex psi_eval(const EmpiricalMeasure& mu, Complex z) {
    Complex sum = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        Complex denom = 1.0 - z * mu.atoms()[i];
        if (std::abs(denom) < kPoleTol)
            throw std::domain_error("psi_eval: z too close to an atom pole 1/x");
        sum += mu.weights()[i] * z * mu.atoms()[i] / denom;
    }
    return sum;
}

Complex psi_prime(const EmpiricalMeasure& mu, Complex z) {
    Complex sum = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        Complex denom = 1.0 - z * mu.atoms()[i];
        if (std::abs(denom) < kPoleTol)
            throw std::domain_error("psi_prime: z too close to an atom pole 1/x");
        sum += mu.weights()[i] * mu.atoms()[i] / (denom * denom);
    }
    return sum;
}

Complex psi_second(const EmpiricalMeasure& mu, Complex z) {
    Complex sum = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double x = mu.atoms()[i];
        Complex denom = 1.0 - z * x;
        if (std::abs(denom) < kPoleTol)
            throw std::domain_error("psi_second: z too close to an atom pole 1/x");
        sum += mu.weights()[i] * 2.0 * x * x / (denom * denom * denom);
    }
    return sum;
}

Complex psi_inverse(const EmpiricalMeasure& mu, Complex u) {
    check_inverse_domain(u);
    if (mu.is_degenerate()) {
        double c = mu.atoms()[0];
        return u / (c * (1.0 + u));
    }
    double zr = psi_inverse_real(mu, u.real());
    if (is_real(u)) return zr;
    Complex z = zr;
    for (int it = 0; it < 80; ++it) {
        Complex f = psi_eval(mu, z) - u;
        if (std::abs(f) <= kInverseTol * std::max(std::abs(u), 1e-3)) return z;
        z -= f / psi_prime(mu, z);
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw std::runtime_error("psi_inverse: complex Newton diverged");
    }
    throw std::runtime_error("psi_inverse: complex Newton did not converge");
}

Complex s_transform(const EmpiricalMeasure& mu, Complex u) {
    if (mu.is_degenerate()) return 1.0 / mu.atoms()[0];
    if (std::abs(u) < 1e-12) {
        return 1.0 / cumulants(mu).kappa1;
    }
    if (std::abs(u + 1.0) <= 1e-9) {
        // Removable singularity at -1: S(-1) = int x^-1 dmu.
        double inv = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i) inv += mu.weights()[i] / mu.atoms()[i];
        return inv;
    }
    return (1.0 + u) / u * psi_inverse(mu, u);
}

SDerivsAtZero s_derivs_at_zero(const EmpiricalMeasure& mu) {
    Cumulants c = cumulants(mu);
    double k1 = c.kappa1;
    double s0 = 1.0 / k1;
    double s1 = -c.kappa2 / (k1 * k1 * k1);
    double s2 = 4.0 * c.m2 * c.m2 / std::pow(k1, 5) - 2.0 * c.m3 / std::pow(k1, 4) -
                2.0 * c.m2 / std::pow(k1, 3);
    return {s0, s1, s2};
}

double h_eval(const EmpiricalMeasure& mu, double u) {
    if (!(u > -1.0 && u <= 0.0)) throw std::domain_error("h_eval: u must lie in (-1, 0]");
    if (mu.is_degenerate()) return u * std::log(mu.atoms()[0]);
    double s = s_transform(mu, Complex(u, 0.0)).real();
    double out = -(u + 1.0) * std::log(s);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double arg = (u + 1.0) / s - u * mu.atoms()[i];
        if (!(arg > 0.0)) throw std::domain_error("h_eval: log branch violation");
        out -= mu.weights()[i] * std::log(arg);
    }
    return out;
}

double h_prime(const EmpiricalMeasure& mu, double u) {
    if (!(u > -1.0 && u <= 0.0)) throw std::domain_error("h_prime: u must lie in (-1, 0]");
    if (mu.is_degenerate()) return std::log(mu.atoms()[0]);
    return -std::log(s_transform(mu, Complex(u, 0.0)).real());
}

Complex h_eval_complex(const EmpiricalMeasure& mu, Complex u) {
    if (is_real(u)) return h_eval(mu, u.real());
    if (mu.is_degenerate()) return u * std::log(mu.atoms()[0]);
    Complex s = s_transform(mu, u);
    Complex out = -(u + 1.0) * std::log(s);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        Complex arg = (u + 1.0) / s - u * mu.atoms()[i];
        if (arg.real() <= 0.0 && std::abs(arg.imag()) < 1e-14)
            throw std::domain_error("h_eval_complex: log branch violation");
        out -= mu.weights()[i] * std::log(arg);
    }
    return out;
}

Complex log_psi_prime_at_inverse(const EmpiricalMeasure& mu, Complex u) {
    if (mu.is_degenerate()) {
        // psi'(psi^-1(u)) = c (1+u)^2 for mu = delta_c.
        return std::log(mu.atoms()[0]) + 2.0 * std::log(1.0 + u);
    }
    double ur = u.real();
    Complex prev = psi_prime(mu, psi_inverse(mu, Complex(ur, 0.0)));
    Complex logv = std::log(prev.real());  // real positive at the real end
    if (is_real(u)) return logv;
    const int steps = 8;
    for (int k = 1; k <= steps; ++k) {
        Complex uk(ur, u.imag() * static_cast<double>(k) / steps);
        Complex w = psi_prime(mu, psi_inverse(mu, uk));
        Complex lw = std::log(w);
        // Choose the branch closest to the previous point on the path.
        double two_pi = 2.0 * 3.14159265358979323846;
        double shift = std::round((logv.imag() - lw.imag()) / two_pi);
        logv = Complex(lw.real(), lw.imag() + two_pi * shift);
    }
    return logv;
}

namespace {

// C(a, b) = (a-b) / [(psi^-1(a)-psi^-1(b)) sqrt(psi'(psi^-1(a)) psi'(psi^-1(b)))],
// with C(a, a) = 1 exactly in the confluent limit.
Complex pair_factor(const EmpiricalMeasure& mu, Complex a, Complex b) {
    if (std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a))) return 1.0;
    Complex za = psi_inverse(mu, a);
    Complex zb = psi_inverse(mu, b);
    Complex dz = za - zb;
    if (std::abs(dz) < 1e-14 * (std::abs(za) + std::abs(zb) + 1.0))
        throw std::runtime_error("cauchy_ratio: psi^-1 image collision (singular configuration)");
    Complex logp = log_psi_prime_at_inverse(mu, a) + log_psi_prime_at_inverse(mu, b);
    return (a - b) / dz * std::exp(-0.5 * logp);
}

}  // namespace

Complex cauchy_ratio(const EmpiricalMeasure& mu, const std::vector<Complex>& u,
                     const std::vector<Complex>& v) {
    if (u.empty() || u.size() != v.size())
        throw std::invalid_argument("cauchy_ratio: u and v must be nonempty, equal length");
    const std::size_t k = u.size();
    Complex out = 1.0;
    for (std::size_t i = 0; i < k; ++i) out *= pair_factor(mu, u[i], v[i]);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            out *= pair_factor(mu, u[i], v[j]) * pair_factor(mu, v[i], u[j]) /
                   (pair_factor(mu, u[i], u[j]) * pair_factor(mu, v[i], v[j]));
        }
    return out;
}

CenteringProfile centering(const std::vector<EmpiricalMeasure>& factors, std::size_t n) {
    if (n < 1) throw std::invalid_argument("centering: N must be >= 1");
    CenteringProfile out;
    out.e_n.resize(factors.size() + 1, 0.0);
    out.v_n.resize(factors.size() + 1, 0.0);
    for (std::size_t m = 0; m < factors.size(); ++m) {
        Cumulants c = cumulants(factors[m]);
        out.e_n[m + 1] = out.e_n[m] + std::log(c.kappa1);
        out.v_n[m + 1] = out.v_n[m] + c.kappa2 / (c.kappa1 * c.kappa1) / static_cast<double>(n);
    }
    return out;
}

}  // namespace prodmat

#include "prodmat/mvbessel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "prodmat/ensembles.hpp"
#include "prodmat/rng.hpp"
#include "prodmat/stats.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mp_field.hpp"

namespace prodmat {

namespace {

using LComplex = std::complex<long double>;
using detail::MpComplex;

constexpr int kMaxJet = 8;
constexpr double kGroupTol = 1e-9;
constexpr double kOverflowGuardNats = 1e6;

// Field shims so the confluent determinant core runs either in long double
// (small, well-conditioned cases) or in MPFR (large / high-multiplicity
// generalized Vandermonde structures whose condition grows exponentially).
inline LComplex f_from(const LComplex& v, const LComplex*) { return v; }
inline MpComplex f_from(const LComplex& v, const MpComplex*) {
    return MpComplex(v.real(), v.imag());
}
inline LComplex f_log_real(double x, const LComplex*) { return std::log(static_cast<long double>(x)); }
inline MpComplex f_log_real(double x, const MpComplex*) { return MpComplex::log_real(x); }
inline LComplex f_exp(const LComplex& v) { return std::exp(v); }
inline MpComplex f_exp(const MpComplex& v) { return v.exp(); }
inline long double f_log_abs(const LComplex& v) { return std::log(std::abs(v)); }
inline long double f_log_abs(const MpComplex& v) { return v.log_abs(); }
inline long double f_arg(const LComplex& v) { return std::arg(v); }
inline long double f_arg(const MpComplex& v) { return v.arg_ld(); }
inline bool f_abs_greater(const LComplex& a, const LComplex& b) { return std::norm(a) > std::norm(b); }
inline bool f_abs_greater(const MpComplex& a, const MpComplex& b) {
    return MpComplex::cmp_abs2(a, b) > 0;
}
inline bool f_is_zero(const LComplex& v) { return v == LComplex(0.0L, 0.0L); }
inline bool f_is_zero(const MpComplex& v) { return v.is_zero(); }

// Truncated Taylor series in (z - zeta); coefficient r is the r-th derivative
// over r!.
template <class F>
struct Jet {
    int ord;
    std::vector<F> c;
    explicit Jet(int order) : ord(order), c(order + 1) {}
};

template <class F>
Jet<F> jet_mul(const Jet<F>& a, const Jet<F>& b) {
    Jet<F> out(a.ord);
    for (int i = 0; i <= a.ord; ++i)
        for (int j = 0; i + j <= a.ord; ++j) out.c[i + j] += a.c[i] * b.c[j];
    return out;
}

// exp(a0 + a1 (z - zeta)) as a jet.
template <class F>
Jet<F> jet_exp_affine(const F& a0, const F& a1, int ord) {
    Jet<F> out(ord);
    F e = f_exp(a0);
    F pw = f_from(LComplex(1.0L), static_cast<F*>(nullptr));
    for (int i = 0; i <= ord; ++i) {
        out.c[i] = e * pw;
        pw = pw * a1 / f_from(LComplex(static_cast<long double>(i + 1)), static_cast<F*>(nullptr));
    }
    return out;
}

struct Group {
    LComplex value;
    int mult;
};

// Cluster a sorted sequence with a mixed absolute/relative tolerance.
std::vector<Group> cluster(std::vector<LComplex> sorted) {
    std::vector<Group> groups;
    for (const auto& v : sorted) {
        if (!groups.empty()) {
            LComplex ref = groups.back().value;
            long double scale = std::max<long double>({1.0L, std::abs(ref), std::abs(v)});
            if (std::abs(v - ref) <= kGroupTol * scale) {
                groups.back().mult += 1;
                continue;
            }
        }
        groups.push_back({v, 1});
    }
    return groups;
}

bool desc_complex(const LComplex& a, const LComplex& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
}

// log |det| and phase via partial-pivot LU in the given field; the matrix is
// destroyed.
template <class F>
bool lu_logdet(std::vector<std::vector<F>>& m, long double& logabs, long double& arg) {
    const int n = static_cast<int>(m.size());
    logabs = 0.0L;
    arg = 0.0L;
    int swaps = 0;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int i = k + 1; i < n; ++i)
            if (f_abs_greater(m[i][k], m[piv][k])) piv = i;
        if (f_is_zero(m[piv][k])) return false;
        if (piv != k) {
            std::swap(m[piv], m[k]);
            ++swaps;
        }
        const F d = m[k][k];
        logabs += f_log_abs(d);
        arg += f_arg(d);
        for (int i = k + 1; i < n; ++i) {
            if (f_is_zero(m[i][k])) continue;
            F f = m[i][k] / d;
            for (int j = k + 1; j < n; ++j) m[i][j] -= f * m[k][j];
        }
    }
    if (swaps % 2) arg += std::numbers::pi_v<long double>;
    return true;
}

// Matrix of the grouped divided-difference representation: rows are z-groups
// with derivative order r, columns are x-groups with derivative order s,
// entry = [d^r/dz^r / r!] of binom(z, s) chi^(z - s) through jet arithmetic.
template <class F>
bool confluent_logdet(const std::vector<Group>& zg, const std::vector<Group>& xg, std::size_t n,
                      bool prescale_rows, long double& logabs, long double& phase) {
    std::vector<std::vector<F>> mat(n, std::vector<F>(n));
    std::vector<long double> row_offset(n, 0.0L);

    std::vector<F> logx;
    logx.reserve(xg.size());
    for (const auto& g : xg) logx.push_back(f_log_real(g.value.real(), static_cast<F*>(nullptr)));

    std::size_t row = 0;
    for (const auto& gz : zg) {
        const int ord = gz.mult - 1;
        long double prescale = 0.0L;
        if (prescale_rows) {
            prescale = -std::numeric_limits<long double>::infinity();
            for (const auto& gx : xg)
                prescale = std::max(prescale,
                                    gz.value.real() * std::log(gx.value.real()));
            if (!std::isfinite(prescale)) prescale = 0.0L;
            long double range = 0.0L;
            for (const auto& gx : xg)
                range = std::max(range,
                                 std::abs(gz.value.real() * std::log(gx.value.real()) - prescale));
            if (range > 9000.0L)
                throw std::runtime_error(
                    "log_bessel_normalized: overflow guard (entry dynamic range)");
        }

        const F zeta = f_from(gz.value, static_cast<F*>(nullptr));
        std::size_t col = 0;
        for (std::size_t h = 0; h < xg.size(); ++h) {
            const F chi = f_from(LComplex(xg[h].value.real()), static_cast<F*>(nullptr));
            F a0 = zeta * logx[h] - f_from(LComplex(prescale), static_cast<F*>(nullptr));
            Jet<F> cur = jet_exp_affine(a0, logx[h], ord);
            for (int s = 0; s < xg[h].mult; ++s) {
                if (s > 0) {
                    Jet<F> lin(ord);
                    F sc = f_from(LComplex(static_cast<long double>(s)), static_cast<F*>(nullptr));
                    lin.c[0] = (zeta - f_from(LComplex(static_cast<long double>(s - 1)),
                                              static_cast<F*>(nullptr))) /
                               sc;
                    if (ord >= 1)
                        lin.c[1] = f_from(LComplex(1.0L), static_cast<F*>(nullptr)) / sc;
                    cur = jet_mul(cur, lin);
                    // restore the chi^(z-s) exponent shift: divide by chi once
                    for (int i = 0; i <= ord; ++i) cur.c[i] /= chi;
                }
                for (int r = 0; r <= ord; ++r) mat[row + r][col] = cur.c[r];
                ++col;
            }
        }
        for (int r = 0; r <= ord; ++r) row_offset[row + r] = prescale;
        if (prescale_rows) {
            for (int r = 0; r <= ord; ++r) {
                long double mx = -std::numeric_limits<long double>::infinity();
                for (std::size_t j = 0; j < n; ++j)
                    mx = std::max(mx, f_log_abs(mat[row + r][j]));
                if (!std::isfinite(mx))
                    throw std::runtime_error("log_bessel_normalized: zero row (degenerate input)");
                F scale = f_exp(f_from(LComplex(-mx), static_cast<F*>(nullptr)));
                for (std::size_t j = 0; j < n; ++j) mat[row + r][j] *= scale;
                row_offset[row + r] += mx;
            }
        }
        row += gz.mult;
    }

    if (!lu_logdet(mat, logabs, phase)) return false;
    for (std::size_t i = 0; i < n; ++i) logabs += row_offset[i];
    return true;
}

Complex to_complex(LComplex v) {
    return {static_cast<double>(v.real()), static_cast<double>(v.imag())};
}

}  // namespace

Complex log_bessel_normalized(const std::vector<double>& x, const std::vector<Complex>& z) {
    const std::size_t n = x.size();
    if (n == 0 || z.size() != n)
        throw std::invalid_argument("log_bessel_normalized: need |x| = |z| >= 1");
    for (double xi : x)
        if (!(xi > 0.0) || !std::isfinite(xi))
            throw std::invalid_argument("log_bessel_normalized: x must be positive");
    if (n == 1) return z[0] * std::log(x[0]);

    std::vector<LComplex> zs(z.begin(), z.end());
    std::sort(zs.begin(), zs.end(), desc_complex);
    std::vector<LComplex> xs(x.begin(), x.end());
    std::sort(xs.begin(), xs.end(), desc_complex);

    auto zg = cluster(std::move(zs));
    auto xg = cluster(std::move(xs));

    for (const auto& g : zg)
        if (g.mult > kMaxJet)
            throw std::invalid_argument("log_bessel_normalized: z multiplicity above jet capacity");

    int max_mult = 1;
    for (const auto& g : xg) max_mult = std::max(max_mult, g.mult);
    for (const auto& g : zg) max_mult = std::max(max_mult, g.mult);

    // The grouped generalized-Vandermonde matrix has condition growing
    // exponentially with n; beyond small sizes the determinant needs extended
    // precision to survive the cancellation.
    const bool use_mp = (n > 16) || (max_mult > 4);
    long double logabs, phase;
    bool ok;
    if (use_mp) {
        MpComplex::precision() = static_cast<mpfr_prec_t>(192 + 8 * n);
        ok = confluent_logdet<MpComplex>(zg, xg, n, /*prescale_rows=*/false, logabs, phase);
    } else {
        ok = confluent_logdet<LComplex>(zg, xg, n, /*prescale_rows=*/true, logabs, phase);
    }
    if (!ok || !std::isfinite(logabs))
        throw std::runtime_error("log_bessel_normalized: singular confluent matrix");

    // Vandermonde-type denominators over cross-group pairs plus the intra-group
    // parity picked up by the divided-difference reduction.
    LComplex log_dz = 0.0L;
    long double intra = 0.0L;
    for (std::size_t g = 0; g < zg.size(); ++g) {
        intra += zg[g].mult * (zg[g].mult - 1) / 2;
        for (std::size_t h = g + 1; h < zg.size(); ++h)
            log_dz += LComplex(static_cast<long double>(zg[g].mult * zg[h].mult)) *
                      std::log(zg[g].value - zg[h].value);
    }
    long double log_dx = 0.0L;
    for (std::size_t g = 0; g < xg.size(); ++g) {
        intra += xg[g].mult * (xg[g].mult - 1) / 2;
        for (std::size_t h = g + 1; h < xg.size(); ++h)
            log_dx += xg[g].mult * xg[h].mult *
                      std::log(xg[g].value.real() - xg[h].value.real());
    }

    long double log_drho = 0.0L;
    for (std::size_t k = 1; k + 1 <= n; ++k) log_drho += std::lgamma(static_cast<double>(k + 1));

    LComplex out = LComplex(logabs, phase) + LComplex(log_drho) - log_dz - LComplex(log_dx);
    if (static_cast<long long>(intra) % 2) out += LComplex(0.0L, std::numbers::pi_v<long double>);
    // canonicalize the phase
    long double im = out.imag();
    long double two_pi = 2.0L * std::numbers::pi_v<long double>;
    im -= two_pi * std::floor(im / two_pi + 0.5L);
    out = LComplex(out.real(), im);
    if (std::abs(out.real()) > kOverflowGuardNats)
        throw std::runtime_error("log_bessel_normalized: overflow guard (|log| > 1e6 nats)");
    return to_complex(out);
}

Complex bessel_normalized(const std::vector<double>& x, const std::vector<Complex>& z) {
    return std::exp(log_bessel_normalized(x, z));
}

Complex log_gamma(Complex z) {
    static const double p[] = {0.99999999999980993,  676.5203681218851,    -1259.1392167224028,
                               771.32342877765313,   -176.61502916214059,  12.507343278686905,
                               -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    const double pi = std::numbers::pi;
    if (z.real() < 0.5) {
        // reflection: log Gamma(z) = log pi - log sin(pi z) - log Gamma(1 - z)
        return std::log(pi) - std::log(std::sin(pi * z)) - log_gamma(1.0 - z);
    }
    z -= 1.0;
    Complex x = p[0];
    for (int i = 1; i < 9; ++i) x += p[i] / (z + static_cast<double>(i));
    Complex t = z + 7.5;
    return 0.5 * std::log(2.0 * pi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

McEstimate gn_integral_mc(const std::vector<double>& x, const std::vector<Complex>& z,
                          std::size_t trials, std::uint64_t seed, bool parallel) {
    const int n = static_cast<int>(x.size());
    if (n < 1 || z.size() != x.size())
        throw std::invalid_argument("gn_integral_mc: need |x| = |z| >= 1");
    if (trials < 1) throw std::invalid_argument("gn_integral_mc: trials must be >= 1");

    std::vector<Complex> zs = z;
    std::sort(zs.begin(), zs.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });

    const std::size_t block = 128;
    const std::size_t nblocks = (trials + block - 1) / block;
    std::vector<double> sum_re(nblocks), sum_im(nblocks), sum_sq(nblocks);
    std::vector<int> failures(nblocks, 0);

    Eigen::VectorXd xv(n);
    for (int i = 0; i < n; ++i) xv(i) = x[i];

    auto run_block = [&](std::size_t b) {
        RngStream rng(seed, b);
        const std::size_t lo = b * block;
        const std::size_t hi = std::min(trials, lo + block);
        double sre = 0.0, sim = 0.0, ssq = 0.0;
        for (std::size_t t = lo; t < hi; ++t) {
            Complex val;
            int attempts = 0;
            for (;;) {
                Eigen::MatrixXcd u = haar_unitary(n, rng);
                Eigen::MatrixXcd y = u * xv.asDiagonal() * u.adjoint();
                Eigen::LLT<Eigen::MatrixXcd> llt(y);
                if (llt.info() == Eigen::Success) {
                    Eigen::MatrixXcd l = llt.matrixL();
                    // cumulative corner log-determinants
                    Complex expo = 0.0;
                    double clog = 0.0;
                    for (int j = 0; j < n; ++j) {
                        clog += 2.0 * std::log(l(j, j).real());
                        Complex coeff =
                            (j + 1 < n) ? (zs[j] - zs[j + 1] - 1.0) : zs[n - 1];
                        expo += coeff * clog;
                    }
                    val = std::exp(expo);
                    break;
                }
                if (++attempts > 3)
                    throw std::runtime_error("gn_integral_mc: degenerate corner after retries");
                ++failures[b];
            }
            sre += val.real();
            sim += val.imag();
            ssq += std::norm(val);
        }
        sum_re[b] = sre;
        sum_im[b] = sim;
        sum_sq[b] = ssq;
    };

    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (long long b = 0; b < static_cast<long long>(nblocks); ++b)
            run_block(static_cast<std::size_t>(b));
    } else {
        for (std::size_t b = 0; b < nblocks; ++b) run_block(b);
    }

    const double tn = static_cast<double>(trials);
    Complex mean(pairwise_sum(sum_re) / tn, pairwise_sum(sum_im) / tn);
    double msq = pairwise_sum(sum_sq) / tn;
    double var = std::max(0.0, msq - std::norm(mean));
    return {mean, std::sqrt(var / tn)};
}

Complex BesselBgfFactor::log_eval(const std::vector<double>& z) const {
    std::vector<Complex> zc(z.begin(), z.end());
    return log_bessel_normalized(x_, zc);
}

Complex GaussianBgfFactor::log_eval(const std::vector<double>& z) const {
    if (static_cast<int>(z.size()) != n_)
        throw std::invalid_argument("GaussianBgfFactor: argument size mismatch");
    double out = 0.0;
    for (int a = 0; a < n_; ++a) {
        double za = z[a] - n_ + 0.5;
        double ra = -(a + 1) + 0.5;
        out += delta_ * (za * za - ra * ra);
    }
    return out;
}

namespace {

std::vector<double> rho_with_shifts(int n, const ShiftSpec& spec) {
    if (spec.indices.size() != spec.shifts.size())
        throw std::invalid_argument("ShiftSpec: indices/shifts size mismatch");
    std::vector<double> z(n);
    for (int j = 0; j < n; ++j) z[j] = static_cast<double>(n - 1 - j);
    for (std::size_t a = 0; a < spec.indices.size(); ++a) {
        int i = spec.indices[a];
        if (i < 1 || i > n) throw std::invalid_argument("ShiftSpec: index out of range");
        if (!(spec.shifts[a] >= 0.0)) throw std::invalid_argument("ShiftSpec: shifts must be >= 0");
        z[i - 1] += spec.shifts[a];
    }
    return z;
}

}  // namespace

Complex apply_shift_product(const std::vector<const BgfFactor*>& factors, const ShiftSpec& spec,
                            int n) {
    std::vector<double> z = rho_with_shifts(n, spec);
    Complex logsum = 0.0;
    for (const BgfFactor* f : factors) logsum += f->log_eval(z);
    return std::exp(logsum);
}

double rational_prefactor(const ShiftSpec& prior, int target_index, double c, int n) {
    double total = c;
    for (double s : prior.shifts) total += s;
    if (!(total < 1.0))
        throw std::invalid_argument("rational_prefactor: shift sum must stay below 1");
    std::vector<double> z = rho_with_shifts(n, prior);
    if (target_index < 1 || target_index > n)
        throw std::invalid_argument("rational_prefactor: target index out of range");
    double zi = z[target_index - 1];
    double out = 1.0;
    for (int j = 0; j < n; ++j) {
        if (j == target_index - 1) continue;
        out *= (c + zi - z[j]) / (zi - z[j]);
    }
    return out;
}

namespace {

struct ShiftState {
    std::vector<int> idx;      // 1-based indices i_1..i_l
    std::vector<double> cval;  // shifts c_1..c_l
};

double log_prefactor_real(const std::vector<double>& z, int i, double c, int n) {
    double zi = z[i - 1];
    double out = 0.0;
    for (int j = 0; j < n; ++j) {
        if (j == i - 1) continue;
        double ratio = (c + zi - z[j]) / (zi - z[j]);
        if (!(ratio > 0.0))
            throw std::runtime_error("shift expansion: nonpositive rational prefactor");
        out += std::log(ratio);
    }
    return out;
}

}  // namespace

double observable_deterministic(const std::vector<EmpiricalMeasure>& spectra,
                                const std::vector<int>& times_m, const std::vector<double>& c,
                                int n) {
    const int k = static_cast<int>(c.size());
    if (k < 1 || times_m.size() != c.size())
        throw std::invalid_argument("observable_deterministic: need matching times and exponents");
    if (n < 1 || n > 8) throw std::invalid_argument("observable_deterministic: N must be in 1..8");
    double csum = 0.0;
    for (double ci : c) {
        if (!(ci > 0.0)) throw std::invalid_argument("observable_deterministic: c must be > 0");
        csum += ci;
    }
    if (!(csum < 1.0))
        throw std::invalid_argument("observable_deterministic: sum of c must lie in (0,1)");
    for (int i = 0; i + 1 < k; ++i)
        if (times_m[i] < times_m[i + 1])
            throw std::invalid_argument("observable_deterministic: times must be nonincreasing");
    if (times_m.back() < 1 || times_m[0] > static_cast<int>(spectra.size()))
        throw std::invalid_argument("observable_deterministic: times out of range");
    double tuples = std::pow(static_cast<double>(n), k);
    if (tuples > 1e6) throw std::invalid_argument("observable_deterministic: cost guard (N^k > 1e6)");
    for (const auto& mu : spectra) {
        if (static_cast<int>(mu.size()) != n)
            throw std::invalid_argument("observable_deterministic: spectra must have exactly N atoms");
        for (double w : mu.weights())
            if (std::abs(w - 1.0 / n) > 1e-12)
                throw std::invalid_argument("observable_deterministic: spectra must be uniform");
    }

    // Per level l, cache sum over the block (M_{l+1}, M_l] of shifted Bessel
    // logs, keyed by the shift prefix (i_1..i_l) encoded base N.
    std::vector<std::map<long long, double>> block_cache(k);
    auto block_logsum = [&](int level, const std::vector<int>& prefix) -> double {
        long long key = 0;
        for (int a = 0; a <= level; ++a) key = key * (n + 1) + prefix[a];
        auto& cache = block_cache[level];
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        ShiftSpec spec;
        for (int a = 0; a <= level; ++a) {
            spec.indices.push_back(prefix[a]);
            spec.shifts.push_back(c[a]);
        }
        std::vector<double> z = rho_with_shifts(n, spec);
        std::vector<Complex> zc(z.begin(), z.end());
        int m_hi = times_m[level];
        int m_lo = (level + 1 < k) ? times_m[level + 1] : 0;
        double out = 0.0;
        for (int m = m_lo; m < m_hi; ++m)
            out += log_bessel_normalized(spectra[m].atoms(), zc).real();
        cache.emplace(key, out);
        return out;
    };

    std::vector<int> tup(k, 1);
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(tuples));
    for (;;) {
        double logterm = 0.0;
        ShiftSpec prior;
        for (int l = 0; l < k; ++l) {
            std::vector<double> z = rho_with_shifts(n, prior);
            logterm += log_prefactor_real(z, tup[l], c[l], n);
            prior.indices.push_back(tup[l]);
            prior.shifts.push_back(c[l]);
            logterm += block_logsum(l, tup);
        }
        terms.push_back(std::exp(logterm));
        int pos = k - 1;
        while (pos >= 0 && tup[pos] == n) tup[pos--] = 1;
        if (pos < 0) break;
        ++tup[pos];
    }
    return pairwise_sum(terms);
}

double eigenrelation_check(const std::vector<double>& x, const std::vector<Complex>& z, double c) {
    const int n = static_cast<int>(x.size());
    if (n < 1 || z.size() != x.size())
        throw std::invalid_argument("eigenrelation_check: need |x| = |z| >= 1");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(z[i] - z[j]) <= 1e-6)
                throw std::domain_error("eigenrelation_check: z nearly degenerate");

    Complex log_base = log_bessel_normalized(x, z);
    Complex lhs = 0.0;
    for (int i = 0; i < n; ++i) {
        Complex pref = 1.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            pref *= (c + z[i] - z[j]) / (z[i] - z[j]);
        }
        std::vector<Complex> zshift = z;
        zshift[i] += c;
        lhs += pref * std::exp(log_bessel_normalized(x, zshift) - log_base);
    }
    Complex rhs = 0.0;
    for (double xi : x) rhs += std::pow(xi, c);
    return std::abs(lhs - rhs) / std::abs(rhs);
}

Complex bessel_lattice_ratio(const EmpiricalMeasure& mu, const std::vector<Complex>& u,
                             const std::vector<Complex>& v) {
    const int n = static_cast<int>(mu.size());
    const std::size_t k = u.size();
    if (k == 0 || v.size() != k || static_cast<int>(k) > n)
        throw std::invalid_argument("bessel_lattice_ratio: need 1 <= k <= N matching points");
    std::vector<Complex> z(n);
    for (int j = 0; j < n; ++j) z[j] = static_cast<double>(n - 1 - j);
    std::vector<bool> used(n, false);
    for (std::size_t i = 0; i < k; ++i) {
        double slot = (v[i].real() + 1.0) * n;
        long s = std::lround(slot);
        if (std::abs(v[i].imag()) > 1e-12 || std::abs(slot - s) > 1e-6 || s < 0 || s >= n)
            throw std::invalid_argument("bessel_lattice_ratio: v must lie on the (1/N)Z lattice");
        int pos = n - 1 - static_cast<int>(s);
        if (used[pos]) throw std::invalid_argument("bessel_lattice_ratio: duplicate v slot");
        used[pos] = true;
        z[pos] = (u[i] + 1.0) * static_cast<double>(n);
    }
    std::vector<Complex> rho(n);
    for (int j = 0; j < n; ++j) rho[j] = static_cast<double>(n - 1 - j);
    return std::exp(log_bessel_normalized(mu.atoms(), z) - log_bessel_normalized(mu.atoms(), rho));
}

Complex bessel_asymptotic(const EmpiricalMeasure& mu, const std::vector<Complex>& u,
                          const std::vector<Complex>& v) {
    const std::size_t k = u.size();
    if (k == 0 || v.size() != k)
        throw std::invalid_argument("bessel_asymptotic: need nonempty matching u, v");
    if (u == v) return 1.0;
    const double n = static_cast<double>(mu.size());
    Complex out = cauchy_ratio(mu, u, v);
    for (std::size_t i = 0; i < k; ++i) {
        Complex su = s_transform(mu, u[i]);
        Complex sv = s_transform(mu, v[i]);
        Complex expo = 0.5 * (std::log(sv) - std::log(su)) +
                       n * (h_eval_complex(mu, u[i]) - h_eval_complex(mu, v[i]));
        out *= std::exp(expo);
    }
    return out;
}

std::vector<SigmaTauEntry> sigma_tau_diagnostic(const std::vector<EmpiricalMeasure>& spectra,
                                                int n, int k, const std::vector<double>& c,
                                                const std::vector<int>& times_m) {
    if (n < 1 || n > 60) throw std::invalid_argument("sigma_tau_diagnostic: N must be in 1..60");
    if (k < 1 || k > 2) throw std::invalid_argument("sigma_tau_diagnostic: k must be 1 or 2");
    if (static_cast<int>(c.size()) != k || static_cast<int>(times_m.size()) != k)
        throw std::invalid_argument("sigma_tau_diagnostic: c and times must have length k");
    double csum = 0.0;
    for (double ci : c) csum += ci;
    if (!(csum > 0.0 && csum < 1.0))
        throw std::invalid_argument("sigma_tau_diagnostic: sum of c must lie in (0,1)");
    if (times_m[0] > static_cast<int>(spectra.size()))
        throw std::invalid_argument("sigma_tau_diagnostic: times out of range");
    for (const auto& mu : spectra)
        if (static_cast<int>(mu.size()) != n)
            throw std::invalid_argument("sigma_tau_diagnostic: spectra must have exactly N atoms");

    const int imax = std::max(1, static_cast<int>(std::floor(std::cbrt(static_cast<double>(n)) + 1e-9)));

    std::vector<Cumulants> cum;
    cum.reserve(spectra.size());
    for (const auto& mu : spectra) cum.push_back(cumulants(mu));

    std::vector<SigmaTauEntry> out;
    std::vector<int> tup(k, 1);
    for (;;) {
        double log_sigma = 0.0, log_tau = 0.0;
        ShiftSpec prior;
        for (int l = 0; l < k; ++l) {
            std::vector<double> z = rho_with_shifts(n, prior);
            double lp = log_prefactor_real(z, tup[l], c[l], n);
            log_sigma += lp;
            log_tau += lp;
            prior.indices.push_back(tup[l]);
            prior.shifts.push_back(c[l]);
            std::vector<double> zs = rho_with_shifts(n, prior);
            std::vector<Complex> zc(zs.begin(), zs.end());
            int m_hi = times_m[l];
            int m_lo = (l + 1 < k) ? times_m[l + 1] : 0;
            for (int m = m_lo; m < m_hi; ++m) {
                log_sigma += log_bessel_normalized(spectra[m].atoms(), zc).real();
                for (int j = 0; j <= l; ++j) {
                    double ratio = cum[m].kappa2 / (cum[m].kappa1 * cum[m].kappa1);
                    log_tau += c[j] * std::log(cum[m].kappa1) +
                               ratio / n * (-c[j] * tup[j] + 0.5 * c[j] * (c[j] + 1.0));
                }
            }
        }
        SigmaTauEntry e;
        e.indices = tup;
        e.sigma = std::exp(log_sigma);
        e.tau = std::exp(log_tau);
        out.push_back(std::move(e));
        int pos = k - 1;
        while (pos >= 0 && tup[pos] == imax) tup[pos--] = 1;
        if (pos < 0) break;
        ++tup[pos];
    }
    return out;
}

}  // namespace prodmat

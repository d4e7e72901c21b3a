#include "prodmat/scaled_svd.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>

namespace prodmat {

namespace {

constexpr double kConvTol = 1e-14;   // column coherence target
constexpr double kScaleSplit = 35.0; // beyond this, the pair reduces to Gram-Schmidt
constexpr int kMaxSweeps = 64;

}  // namespace

ScaledSvd scaled_svd(Eigen::MatrixXcd basis, std::vector<double> scale, bool want_v) {
    const int n = static_cast<int>(basis.cols());
    if (n == 0 || basis.rows() < basis.cols() || static_cast<int>(scale.size()) != n)
        throw std::invalid_argument("scaled_svd: need rows >= cols and matching scales");

    for (int j = 0; j < n; ++j) {
        double nrm = basis.col(j).norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm) || !std::isfinite(scale[j]))
            throw std::domain_error("scaled_svd: singular or non-finite column");
        basis.col(j) /= nrm;
        scale[j] += std::log(nrm);
    }

    ScaledSvd out;
    if (want_v) out.v = Eigen::MatrixXcd::Identity(n, n);

    int sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
        bool converged = true;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                std::complex<double> g = basis.col(p).dot(basis.col(q));  // <b_p, b_q>
                double ag = std::abs(g);
                if (ag <= kConvTol) continue;
                converged = false;

                // orient so that column "hi" carries the larger scale
                int hi = p, lo = q;
                if (scale[lo] > scale[hi]) std::swap(hi, lo);
                double d = scale[hi] - scale[lo];
                std::complex<double> ghl =
                    (hi == p) ? g : std::conj(g);  // <b_hi, b_lo>

                if (d > kScaleSplit) {
                    // Scale-separated limit: project the small column off the
                    // large one. The induced rotation of the large column and
                    // of V is below double precision.
                    Eigen::VectorXcd vlo = basis.col(lo) - ghl * basis.col(hi);
                    double nrm = vlo.norm();
                    if (!(nrm > 0.0)) throw std::domain_error("scaled_svd: rank-deficient input");
                    basis.col(lo) = vlo / nrm;
                    scale[lo] += std::log(nrm);
                    continue;
                }

                double ed = std::exp(d), emd = std::exp(-d);
                double tau = (ed - emd) / (2.0 * ag);
                double t = 1.0 / (tau + std::hypot(1.0, tau));  // tau >= 0 by orientation
                double cth = 1.0 / std::hypot(1.0, t);
                double sth = t * cth;
                std::complex<double> phase = ghl / ag;
                std::complex<double> s = sth * std::conj(phase);

                double m = scale[hi];
                double alpha = 1.0;            // e^{s_hi - m}
                double beta = std::exp(-d);    // e^{s_lo - m}
                Eigen::VectorXcd vp = cth * alpha * basis.col(hi) + s * beta * basis.col(lo);
                Eigen::VectorXcd vq =
                    -std::conj(s) * alpha * basis.col(hi) + cth * beta * basis.col(lo);
                double np = vp.norm(), nq = vq.norm();
                if (!(np > 0.0) || !(nq > 0.0))
                    throw std::domain_error("scaled_svd: rank-deficient input");
                basis.col(hi) = vp / np;
                basis.col(lo) = vq / nq;
                scale[hi] = m + std::log(np);
                scale[lo] = m + std::log(nq);
                if (want_v) {
                    Eigen::VectorXcd wp = cth * out.v.col(hi) + s * out.v.col(lo);
                    Eigen::VectorXcd wq = -std::conj(s) * out.v.col(hi) + cth * out.v.col(lo);
                    out.v.col(hi) = wp;
                    out.v.col(lo) = wq;
                }
            }
        }
        if (converged) break;
    }
    out.sweeps = sweep + 1;

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scale[a] > scale[b]; });
    out.u.resize(basis.rows(), n);
    out.log_sigma.resize(n);
    Eigen::MatrixXcd vperm;
    if (want_v) vperm.resize(n, n);
    for (int j = 0; j < n; ++j) {
        out.u.col(j) = basis.col(order[j]);
        out.log_sigma[j] = scale[order[j]];
        if (want_v) vperm.col(j) = out.v.col(order[j]);
    }
    if (want_v) out.v = std::move(vperm);
    for (double s : out.log_sigma)
        if (!std::isfinite(s)) throw std::domain_error("scaled_svd: singular input");
    return out;
}

}  // namespace prodmat

#include "prodmat/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

#include "prodmat/scaled_svd.hpp"

namespace prodmat {

Matrix ginibre(int rows, int cols, RngStream& rng) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("ginibre: dimensions must be >= 1");
    Matrix g(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) g(i, j) = rng.complex_normal();
    return g;
}

Matrix haar_unitary(int n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("haar_unitary: n must be >= 1");
    Matrix g = ginibre(n, n, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Eigen::VectorXcd diag = qr.matrixQR().diagonal();
    for (int j = 0; j < n; ++j) {
        double m = std::abs(diag(j));
        q.col(j) *= (m > 0.0) ? diag(j) / m : 1.0;
    }
    return q;
}

Matrix truncated_unitary(int n, int n_ambient, RngStream& rng) {
    if (n_ambient <= n) throw std::invalid_argument("truncated_unitary: need n_ambient > n");
    return haar_unitary(n_ambient, rng).topLeftCorner(n, n);
}

Matrix fixed_spectrum(const std::vector<double>& squared_singular_values, RngStream& rng) {
    const int n = static_cast<int>(squared_singular_values.size());
    if (n < 1) throw std::invalid_argument("fixed_spectrum: need at least one value");
    for (double x : squared_singular_values)
        if (!(x > 0.0)) throw std::invalid_argument("fixed_spectrum: values must be > 0");
    Matrix u = haar_unitary(n, rng);
    Matrix v = haar_unitary(n, rng);
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = std::sqrt(squared_singular_values[i]);
    return u * d.asDiagonal() * v.adjoint();
}

ProductAccumulator::ProductAccumulator(int n, bool track_right) : n_(n), track_right_(track_right) {
    if (n < 1) throw std::invalid_argument("ProductAccumulator: n must be >= 1");
    left_ = Matrix::Identity(n, n);
    log_sigma_.assign(n, 0.0);
    if (track_right_) right_ = Matrix::Identity(n, n);
}

void ProductAccumulator::set_policy(int every, double spread_nats) {
    if (every < 1 || !(spread_nats > 0.0))
        throw std::invalid_argument("ProductAccumulator: bad refactor policy");
    refactor_every_ = every;
    spread_limit_ = spread_nats;
}

void ProductAccumulator::bump_(const Matrix& x) {
    if (x.rows() != n_ || x.cols() != n_)
        throw std::invalid_argument("ProductAccumulator: factor dimension mismatch");
    left_ = x * left_;
    ++pending_;
    ++factor_count_;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int j = 0; j < n_; ++j) {
        double nrm = left_.col(j).norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm))
            throw std::domain_error("ProductAccumulator: singular factor (zero column)");
        double l = std::log(nrm);
        lo = std::min(lo, l);
        hi = std::max(hi, l);
    }
    if (pending_ >= refactor_every_ || hi - lo > spread_limit_) refactor_();
}

void ProductAccumulator::accumulate(const Matrix& x) {
    if (x.rows() != n_ || x.cols() != n_)
        throw std::invalid_argument("ProductAccumulator: factor dimension mismatch");
    Eigen::PartialPivLU<Matrix> lu(x);
    Eigen::VectorXcd d = lu.matrixLU().diagonal();
    double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
    for (int i = 0; i < n_; ++i) {
        double a = std::abs(d(i));
        mn = std::min(mn, a);
        mx = std::max(mx, a);
    }
    if (!(mn > 0.0) || !std::isfinite(mx) || mn < mx * 1e-280)
        throw std::domain_error("ProductAccumulator: singular factor");
    bump_(x);
}

void ProductAccumulator::accumulate_nonsingular(const Matrix& x) { bump_(x); }

void ProductAccumulator::refactor_() {
    if (pending_ == 0) return;
    std::vector<double> scales = log_sigma_;
    ScaledSvd svd = scaled_svd(left_, std::move(scales), track_right_);
    left_ = std::move(svd.u);
    log_sigma_ = std::move(svd.log_sigma);
    if (track_right_) right_ = svd.v.adjoint() * right_;
    pending_ = 0;
    ++refactor_count_;
}

LogSpectrum ProductAccumulator::log_sq_singular_values() {
    refactor_();
    LogSpectrum out;
    out.values.resize(n_);
    for (int j = 0; j < n_; ++j) out.values[j] = 2.0 * log_sigma_[j];
    out.scale_offset = 0.0;  // logs are native; nothing left to fold
    return out;
}

Matrix ProductAccumulator::reconstruct() {
    if (!track_right_)
        throw std::logic_error("ProductAccumulator: reconstruct requires track_right");
    refactor_();
    Eigen::VectorXcd d(n_);
    for (int j = 0; j < n_; ++j) d(j) = std::exp(log_sigma_[j]);
    return left_ * d.asDiagonal() * right_;
}

std::vector<LogSpectrum> gl_brownian_path(int n, const std::vector<double>& times, double step,
                                          RngStream& rng, bool area_correction) {
    if (n < 1) throw std::invalid_argument("gl_brownian_path: n must be >= 1");
    if (times.empty()) throw std::invalid_argument("gl_brownian_path: need at least one time");
    double t_min_pos = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0.0 || (i > 0 && times[i] < times[i - 1]))
            throw std::invalid_argument("gl_brownian_path: times must be sorted and >= 0");
        if (times[i] > 0.0) t_min_pos = std::min(t_min_pos, times[i]);
    }
    if (std::isfinite(t_min_pos) && !(step <= t_min_pos / 10.0))
        throw std::invalid_argument("gl_brownian_path: step must be <= min(times)/10");

    // Track the adjoint product exp(W_M)^H ... exp(W_1)^H: identical singular
    // values, and the accumulator's left-multiplication order applies.
    ProductAccumulator acc(n, /*track_right=*/false);
    std::vector<LogSpectrum> out;
    out.reserve(times.size());
    double t = 0.0;
    Matrix w(n, n);
    for (double target : times) {
        if (target == 0.0) {
            LogSpectrum zero;
            zero.values.assign(n, 0.0);
            out.push_back(std::move(zero));
            continue;
        }
        int nsub = static_cast<int>(std::ceil((target - t) / step - 1e-12));
        if (nsub < 0) nsub = 0;
        double h = (nsub > 0) ? (target - t) / nsub : 0.0;
        for (int s = 0; s < nsub; ++s) {
            double sd = std::sqrt(h);
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i)
                    w(i, j) = std::complex<double>(sd * rng.normal(), sd * rng.normal());
            if (area_correction) {
                double scale = h * std::sqrt(static_cast<double>(n));
                std::complex<double> tr = 0.0;
                for (int j = 0; j < n; ++j)
                    for (int i = 0; i < n; ++i) {
                        std::complex<double> g = rng.complex_normal();
                        w(i, j) += scale * g;
                        if (i == j) tr += g;
                    }
                tr /= static_cast<double>(n);
                for (int i = 0; i < n; ++i) w(i, i) -= scale * tr;  // keep tr A = 0 exactly
            }
            Matrix e = w.exp();
            acc.accumulate_nonsingular(e.adjoint());
        }
        t = target;
        out.push_back(acc.log_sq_singular_values());
    }
    return out;
}

}  // namespace prodmat

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "prodmat/rng.hpp"

namespace prodmat {

using Matrix = Eigen::MatrixXcd;

// Haar-distributed unitary via Ginibre QR with phase normalization.
Matrix haar_unitary(int n, RngStream& rng);

// i.i.d. standard complex Gaussian entries, E|g|^2 = 1.
Matrix ginibre(int rows, int cols, RngStream& rng);

// Top-left n x n corner of a Haar unitary of size n_ambient > n.
Matrix truncated_unitary(int n, int n_ambient, RngStream& rng);

// U diag(sqrt(x)) V^H with independent Haar U, V; squared singular values
// exactly x.
Matrix fixed_spectrum(const std::vector<double>& squared_singular_values, RngStream& rng);

// Sorted log squared singular values (nats). scale_offset records rescaling
// already folded into the values (zero for the native log-domain accumulator).
struct LogSpectrum {
    std::vector<double> values;
    double scale_offset = 0.0;
};

// Factorized running product Y = X(M) ... X(1) that never overflows: the
// state is left * diag(exp(log_sigma)) * right with log-domain singular
// values, re-factorized through the scaled Jacobi SVD.
class ProductAccumulator {
  public:
    explicit ProductAccumulator(int n, bool track_right = true);

    // Y <- X * Y. Checked variant rejects singular factors.
    void accumulate(const Matrix& x);
    // Precondition: x is nonsingular (samplers guarantee this by construction).
    void accumulate_nonsingular(const Matrix& x);

    LogSpectrum log_sq_singular_values();
    Matrix reconstruct();  // requires track_right
    int refactor_count() const { return refactor_count_; }
    int factor_count() const { return factor_count_; }
    int size() const { return n_; }

    // Refactor every `every` multiplies, or sooner when the pending column
    // spread exceeds `spread_nats`.
    void set_policy(int every, double spread_nats);

  private:
    void refactor_();
    void bump_(const Matrix& x);

    int n_;
    bool track_right_;
    Matrix left_;                    // pending product times the orthonormal base
    std::vector<double> log_sigma_;  // descending after refactor
    Matrix right_;
    int pending_ = 0;
    int factor_count_ = 0;
    int refactor_count_ = 0;
    int refactor_every_ = 10;
    double spread_limit_ = 300.0;
};

// Log squared singular values of Brownian motion on GL(N, C) at the requested
// times (raw clock, no centering). Exponential-increment scheme
// Y <- Y exp(W_h + A_h/2): W_h has i.i.d. complex Gaussian entries with
// E|w|^2 = 2h, and A_h = 2h sqrt(N) (G - tr(G)/N) is a traceless Gaussian
// stand-in for the Levy-area chaos with the matching covariance, which lifts
// the weak order from one to two. area_correction = false falls back to the
// plain geometric Euler step Y <- Y exp(W_h).
std::vector<LogSpectrum> gl_brownian_path(int n, const std::vector<double>& times, double step,
                                          RngStream& rng, bool area_correction = true);

}  // namespace prodmat

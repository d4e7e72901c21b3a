#pragma once

#include <Eigen/Dense>
#include <vector>

namespace prodmat {

struct ScaledSvd {
    Eigen::MatrixXcd u;             // orthonormal columns
    std::vector<double> log_sigma;  // descending
    Eigen::MatrixXcd v;             // A = u diag(exp(log_sigma)) v^H; empty unless requested
    int sweeps = 0;
};

// One-sided Jacobi SVD of the matrix whose j-th column is
// basis.col(j) * exp(scale[j]). Scales are carried in the log domain
// throughout, so the factorization keeps high relative accuracy for the
// B * diag(e^lambda) column-scaled matrices produced by long products, far
// beyond what absolute-error SVDs deliver. Throws std::domain_error on a
// (numerically) singular input.
ScaledSvd scaled_svd(Eigen::MatrixXcd basis, std::vector<double> scale, bool want_v);

}  // namespace prodmat

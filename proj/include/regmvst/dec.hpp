#pragma once

#include <Eigen/Dense>
#include <vector>

namespace regmvst {

/// Damped exponential correlation parameters; entry (j,k) of the subject
/// correlation matrix is rho1^(|t_j - t_k|^rho2).
struct DecParams {
    double rho1 = 0.0;  ///< in [0, 1)
    double rho2 = 0.0;  ///< in [0, 1); restricted below 1 for numerical stability

    bool valid() const {
        return rho1 >= 0.0 && rho1 < 1.0 && rho2 >= 0.0 && rho2 < 1.0;
    }
};

/// Builds the n x n DEC correlation matrix for the given observation times.
/// Tied times are offset by 1e-6 so the matrix stays invertible; if the
/// Cholesky factorization still fails, callers apply the jitter policy
/// (dec_cholesky below).
Eigen::MatrixXd dec_correlation(const Eigen::VectorXd& times, const DecParams& p);

/// Cholesky of the DEC matrix with the jitter policy: on failure add 1e-10 I
/// and retry once; a second failure throws DecompositionError.
Eigen::LLT<Eigen::MatrixXd> dec_cholesky(const Eigen::VectorXd& times, const DecParams& p);

/// The shared search grid for rho1 and rho2:
/// [1e-5, 0.1, 0.2, ..., 0.9, 1 - 1e-5], length 11.
const std::vector<double>& dec_grid();

}  // namespace regmvst

#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace regmvst {

/// Parameters of the vectorized single-design model used for the information
/// and convergence-rate analysis: y = (I_p (x) X) b + e with e multivariate
/// skew-t(0, (I_p (x) 1_n) a, Psi (x) Sigma, nu) and Sigma treated as a free
/// SPD parameter.
struct VecSkewTParams {
    Eigen::VectorXd b_vec;  ///< pq: vec(beta)
    Eigen::VectorXd a_vec;  ///< p
    Eigen::MatrixXd Sigma;  ///< n x n SPD
    Eigen::MatrixXd Psi;    ///< p x p SPD
    double nu = 0.0;        ///< > 4 for the observed information to exist
    Eigen::MatrixXd X;      ///< n x q design

    Eigen::Index n() const { return Sigma.rows(); }
    Eigen::Index p() const { return Psi.rows(); }
    Eigen::Index q() const { return X.cols(); }
    /// pq + p + n(n+1)/2 + p(p+1)/2 + 1
    Eigen::Index dim() const;
    void validate() const;
};

struct RateMatrices {
    Eigen::MatrixXd I_complete;
    Eigen::MatrixXd I_observed;
    Eigen::MatrixXd S;  ///< speed, I_c^-1 I_o
    Eigen::MatrixXd R;  ///< rate, I - S
    double r_max = 0.0;
    double s_min = 0.0;
    Eigen::Index d = 0;
};

struct McInfo {
    Eigen::MatrixXd I;   ///< Monte-Carlo observed information estimate
    double se_max = 0.0; ///< largest entrywise MC standard error
    int draws = 0;
};

/// Duplication matrix D_d with vec(S) = D_d vech(S) for symmetric S
/// (vech = column-stacked lower triangle).
Eigen::MatrixXd duplication_matrix(Eigen::Index d);

/// Score of the multivariate skew-t log density over (mu, gamma, vech Omega,
/// nu); the gamma = 0 limit is handled analytically.  K'(x)/K(x) uses the
/// two-term order recurrence, exact to the accuracy of K itself.
Eigen::VectorXd skewt_score(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                            const Eigen::VectorXd& gamma, const Eigen::MatrixXd& Omega,
                            double nu);

/// Complete-data information matrix for (b, a, vech Sigma, vech Psi, nu);
/// requires nu > 2.
Eigen::MatrixXd complete_info(const VecSkewTParams& p);

/// Monte-Carlo observed-data information: the average of score outer
/// products over draws from the model; requires nu > 4 and draws >= 1000.
McInfo observed_info_mc(const VecSkewTParams& p, int draws, std::uint64_t seed);

/// Speed and rate matrices S = I_c^-1 I_o, R = I - S with eigenvalues taken
/// from the symmetrized similarity transform L^-1 I_o L^-T.
RateMatrices rate_matrices(const Eigen::MatrixXd& I_c, const Eigen::MatrixXd& I_o);

}  // namespace regmvst

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace regmvst {

/// Parameters of the matrix-variate skew-t distribution on n x p matrices.
struct MvstParams {
    Eigen::MatrixXd M;      ///< n x p location
    Eigen::MatrixXd A;      ///< n x p skewness
    Eigen::MatrixXd Sigma;  ///< n x n SPD row covariance
    Eigen::MatrixXd Psi;    ///< p x p SPD column covariance
    double nu = 0.0;        ///< degrees of freedom, > 0

    void validate_shapes() const;
};

/// Generalized inverse Gaussian parameters; density proportional to
/// x^(lambda-1) exp(-(a x + b / x) / 2).
struct GigParams {
    double a = 0.0;
    double b = 0.0;
    double lambda = 0.0;

    /// Standard support conditions: (a>0 and b>0), or (a>0, lambda>0),
    /// or (b>0, lambda<0).
    bool valid() const;
};

struct QuadForms {
    double delta = 0.0;  ///< tr(Sigma^-1 (Y-M) Psi^-1 (Y-M)^T) >= 0
    double rho = 0.0;    ///< tr(Sigma^-1 A Psi^-1 A^T) >= 0
};

struct GigMoments {
    double e_w = 0.0;
    double e_inv_w = 0.0;
    double e_log_w = 0.0;
};

/// Both quadratic forms of the MVST density, via Cholesky triangular solves.
QuadForms quad_forms(const Eigen::MatrixXd& Y, const MvstParams& params);

/// log density of the MVST distribution, assembled in log space.  The A = 0
/// (rho ~ 0) limit takes a dedicated matrix-variate-t branch.
double mvst_logpdf(const Eigen::MatrixXd& Y, const MvstParams& params);

/// One draw Y = M + W A + sqrt(W) V with W ~ Inverse-Gamma(nu/2, nu/2) and
/// V matrix-normal(0, Sigma, Psi).  Deterministic given the seed.
Eigen::MatrixXd mvst_sample(const MvstParams& params, std::uint64_t rng_seed);

/// log density of GIG(a, b, lambda) at x > 0.
double gig_logpdf(double x, const GigParams& p);

/// E(W), E(1/W), E(log W) for W ~ GIG(a, b, lambda); requires a > 0, b > 0.
GigMoments gig_moments(const GigParams& p);

/// Exact GIG draw by mode-shifted ratio-of-uniforms; requires a > 0, b > 0.
double gig_sample(const GigParams& p, std::uint64_t rng_seed);

/// n draws sharing one ratio-of-uniforms setup; proposals_out (optional)
/// reports how many candidate pairs were generated, for acceptance-rate
/// checks.
std::vector<double> gig_sample_many(const GigParams& p, std::uint64_t rng_seed, int n,
                                    long* proposals_out = nullptr);

/// Multivariate (vector-variate) skew-t log density with parameters
/// (mu, gamma, Omega, nu); the gamma = 0 limit reduces to multivariate t.
/// Serves as the independent cross-check of mvst_logpdf through
/// vec(Y) ~ ST(vec(M), vec(A), Psi (x) Sigma, nu).
double vec_skewt_logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                        const Eigen::VectorXd& gamma, const Eigen::MatrixXd& Omega,
                        double nu);

}  // namespace regmvst

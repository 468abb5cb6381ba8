#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "regmvst/dec.hpp"

namespace regmvst {

/// Full parameter vector of the regression model with matrix-variate skew-t
/// errors: theta = (beta, A, Psi, nu, rho1, rho2).  The per-subject skewness
/// matrix is the rank-one expansion 1_n * a_row.
struct Theta {
    Eigen::MatrixXd beta;       ///< q x p regression coefficients
    Eigen::RowVectorXd a_row;   ///< length-p skewness row
    Eigen::MatrixXd psi;        ///< p x p SPD column covariance
    double nu = 0.0;            ///< degrees of freedom, > 0
    DecParams dec;

    Eigen::Index q() const { return beta.rows(); }
    Eigen::Index p() const { return beta.cols(); }

    /// Flattens in the documented order: beta row-major, a_row, psi lower
    /// triangle row-major, nu, rho1, rho2.
    Eigen::VectorXd flatten() const;

    /// Names matching flatten(): beta_r_c, a_j, psi_r_c (1-based), nu, rho1, rho2.
    std::vector<std::string> flat_names() const;

    void validate() const;
};

/// One subject: response rows, covariate rows, and observation times, all
/// with the same row count.
struct Subject {
    Eigen::MatrixXd y;  ///< n_i x p
    Eigen::MatrixXd x;  ///< n_i x q
    Eigen::VectorXd t;  ///< length n_i
    std::string id;

    Eigen::Index rows() const { return y.rows(); }
};

struct Dataset {
    std::vector<Subject> subjects;
    Eigen::Index p = 0;
    Eigen::Index q = 0;

    Eigen::Index total_rows() const;
    void validate() const;
};

/// Sum over subjects of the matrix-variate skew-t log density at
/// M_i = X_i beta, A_i = 1 a_row, Sigma_i = DEC(t_i), Psi, nu.  Uses exact
/// summation so the value does not depend on subject order or partitioning.
double observed_loglik(const Dataset& data, const Theta& theta);

/// Per-subject standardized residuals
/// L_i^-1 (Y_i - X_i beta - w_i A_i) / sqrt(w_i) with L_i the lower Cholesky
/// factor of Sigma_i and w_i = E(W_i | Y_i) at theta.
std::vector<Eigen::MatrixXd> standardized_residuals(const Dataset& data, const Theta& theta);

/// Long-format residual table: subject_id,time,column,residual.
std::string residuals_long_csv(const Dataset& data, const Theta& theta);

// ---- External interfaces -------------------------------------------------

/// Parses the long-format CSV (header subject_id,time,y_1..y_p,x_1..x_q;
/// rows grouped by subject, nondecreasing time within subject).
Dataset read_dataset_csv(const std::string& path);
Dataset parse_dataset_csv(const std::string& content);

/// Writes the same format at 17 significant digits (bit round-trip).
std::string dataset_to_csv(const Dataset& data);
void write_dataset_csv(const Dataset& data, const std::string& path);

/// Flat JSON with named fields (beta row-major, psi lower triangle, scalars).
std::string theta_to_json(const Theta& theta);
Theta theta_from_json(const std::string& json_text);

}  // namespace regmvst

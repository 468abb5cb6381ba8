#pragma once

#include <Eigen/Dense>
#include <vector>

#include "regmvst/dec.hpp"
#include "regmvst/estep.hpp"

namespace regmvst {

/// Manager-side aggregate of all partition statistics.
struct AggregateStats {
    Eigen::MatrixXd S_beta1;   ///< q x q, symmetric PSD
    Eigen::MatrixXd S_beta2;   ///< q x p
    double S_nu = 0.0;
    Eigen::RowVectorXd S_a1;   ///< length p
    double S_a2 = 0.0;
    Eigen::MatrixXd S_psi;     ///< p x p
    Eigen::Index total_rows = 0;
    Eigen::Index N = 0;        ///< number of subjects
};

/// Sums partition aggregates in worker-index order.
AggregateStats aggregate_partitions(const std::vector<PartitionStats>& parts);

/// beta update: solves S_beta1 beta = S_beta2 by Cholesky.
Eigen::MatrixXd update_beta(const AggregateStats& agg);

/// nu update: the unique root of log(nu/2) + 1 - digamma(nu/2) - S_nu/N on
/// [0.05, 500] by bisection.  If the target is outside the representable
/// range the nearer bracket endpoint is returned and *clamped is set.
double update_nu(const AggregateStats& agg, bool* clamped = nullptr);

/// A update: S_a1 / S_a2 elementwise.
Eigen::RowVectorXd update_A(const AggregateStats& agg);

/// Psi update: S_psi / total_rows, symmetrized; a transiently non-PD result
/// (possible with stale ADECME blocks) is projected to the nearest SPD matrix
/// by flooring eigenvalues at 1e-8 of the largest, setting *projected.
Eigen::MatrixXd update_Psi(const AggregateStats& agg, bool* projected = nullptr);

/// Grid argmax for (rho1, rho2), sequential: rho1 from rho1_values first,
/// then rho2 from rho2_values.  Ties break to the smallest index.
DecParams select_dec(const GridLoglik& grid_sums);

}  // namespace regmvst

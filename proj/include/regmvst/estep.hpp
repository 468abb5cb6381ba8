#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "regmvst/model.hpp"

namespace regmvst {

/// Per-subject E-step output: the three conditional expectations of the
/// latent scale (a = E(W|Y), b = E(1/W|Y), c = E(log W|Y)) and the
/// sufficient-statistic blocks consumed by the CM updates.
struct SubjectStats {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    Eigen::MatrixXd s_beta1;    ///< q x q: b X^T Sigma^-1 X
    Eigen::MatrixXd s_beta2;    ///< q x p: -X^T Sigma^-1 A + b X^T Sigma^-1 Y
    double s_nu = 0.0;          ///< b + c
    Eigen::RowVectorXd s_a1;    ///< 1^T Sigma^-1 (Y - X beta)
    double s_a2 = 0.0;          ///< a 1^T Sigma^-1 1
    Eigen::MatrixXd s_psi;      ///< p x p, see estep_subject
    Eigen::Index n_rows = 0;
    double delta = 0.0;         ///< diagnostic: the quadratic forms behind (a, b, c)
    double rho = 0.0;
};

/// Partial observed log-likelihood sums over one partition at each grid
/// point, one vector per DEC parameter axis.
struct GridLoglik {
    std::vector<double> rho1_values;
    std::vector<double> rho2_values;
};

/// Worker-level aggregate of SubjectStats plus the grid vectors and the
/// staleness stamp (iteration index at which the statistics were computed).
struct PartitionStats {
    Eigen::MatrixXd S_beta1, S_beta2, S_psi;
    Eigen::RowVectorXd S_a1;
    double S_nu = 0.0;
    double S_a2 = 0.0;
    Eigen::Index total_rows = 0;
    Eigen::Index subject_count = 0;
    GridLoglik grid;
    long stamp = -1;
};

/// Cache of DEC Cholesky factors keyed by (rho1, rho2); owned per subject so
/// workers never share mutable state.  Entries persist across iterations,
/// which makes the grid sweeps nearly free once the estimates settle.
class DecFactorCache {
public:
    struct Entry {
        Eigen::MatrixXd L;  ///< lower Cholesky factor of the (jittered) DEC matrix
        double log_det = 0.0;
    };

    const Entry& get(const Eigen::VectorXd& times, const DecParams& p);
    void clear() { map_.clear(); }

private:
    std::unordered_map<std::uint64_t, Entry> map_;
};

/// Full per-subject E step at the supplied theta (ADECME semantics: every
/// block, including s_a1/s_a2/s_psi, is evaluated at this theta).  PECME
/// recomputes the A and Psi blocks with refreshed parameters via the
/// dedicated calls below.
SubjectStats estep_subject(const Subject& s, const Theta& theta, DecFactorCache* cache = nullptr);

/// A-block statistics with the freshly updated beta (a_current comes from the
/// current E step).  Returns (s_a1, s_a2).
std::pair<Eigen::RowVectorXd, double> estep_refresh_A_stats(const Subject& s,
                                                            const Theta& theta_partial,
                                                            double a_current,
                                                            DecFactorCache* cache = nullptr);

/// Psi-block statistic with freshly updated beta and a_row.
Eigen::MatrixXd estep_refresh_Psi_stats(const Subject& s, const Theta& theta_partial,
                                        double a_current, double b_current,
                                        DecFactorCache* cache = nullptr);

/// One grid axis of partial observed log-likelihoods over a set of subjects.
/// rho1 axis: evaluates at (grid[g], theta.dec.rho2); rho2 axis: evaluates at
/// (rho1_value, grid[g]).  Grid points whose DEC matrix cannot be factored
/// even after jitter contribute -inf.
std::vector<double> grid_loglik_rho1(const std::vector<const Subject*>& subjects,
                                     const Theta& theta,
                                     std::vector<DecFactorCache>* caches = nullptr);
std::vector<double> grid_loglik_rho2(const std::vector<const Subject*>& subjects,
                                     const Theta& theta, double rho1_value,
                                     std::vector<DecFactorCache>* caches = nullptr);

/// Both axes at the supplied (previous-iteration) theta, as computed inside
/// the ADECME distributed E step.
GridLoglik grid_loglik_partition(const std::vector<const Subject*>& subjects, const Theta& theta,
                                 std::vector<DecFactorCache>* caches = nullptr);

/// Accumulates SubjectStats into partition sums (exact scalar reduction,
/// compensated matrix reduction), so any partitioning agrees with the serial
/// sums to well below 1e-10.
PartitionStats sum_subject_stats(const std::vector<SubjectStats>& stats, Eigen::Index q,
                                 Eigen::Index p);

/// Diagnostic: the theta-dependent part of the expected complete-data
/// log-likelihood Q(theta | theta_prev); the additive constant independent of
/// theta is dropped.
double expected_complete_loglik(const Dataset& data, const Theta& theta, const Theta& theta_prev);

}  // namespace regmvst

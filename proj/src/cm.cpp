#include "regmvst/cm.hpp"

#include <cmath>
#include <limits>

#include "regmvst/errors.hpp"
#include "regmvst/numeric.hpp"
#include "regmvst/special.hpp"

namespace regmvst {

AggregateStats aggregate_partitions(const std::vector<PartitionStats>& parts) {
    if (parts.empty()) throw EstimationError("aggregate_partitions: no partitions");
    const Eigen::Index q = parts[0].S_beta1.rows();
    const Eigen::Index p = parts[0].S_beta2.cols();
    CompensatedMatrixSum sb1(q, q), sb2(q, p), spsi(p, p), sa1(1, p);
    ExactSum snu, sa2;
    AggregateStats agg;
    for (const auto& pt : parts) {
        sb1.add(pt.S_beta1);
        sb2.add(pt.S_beta2);
        spsi.add(pt.S_psi);
        sa1.add(pt.S_a1);
        snu.add(pt.S_nu);
        sa2.add(pt.S_a2);
        agg.total_rows += pt.total_rows;
        agg.N += pt.subject_count;
    }
    agg.S_beta1 = sb1.value();
    agg.S_beta2 = sb2.value();
    agg.S_psi = spsi.value();
    agg.S_a1 = sa1.value();
    agg.S_nu = snu.value();
    agg.S_a2 = sa2.value();
    return agg;
}

Eigen::MatrixXd update_beta(const AggregateStats& agg) {
    Eigen::LLT<Eigen::MatrixXd> llt(agg.S_beta1);
    if (llt.info() != Eigen::Success)
        throw EstimationError(
            "beta update: S_beta1 is singular; more data or rescaled covariates needed");
    return llt.solve(agg.S_beta2);
}

namespace {

double nu_gap(double nu, double target) {
    return std::log(0.5 * nu) + 1.0 - digamma(0.5 * nu) - target;
}

}  // namespace

double update_nu(const AggregateStats& agg, bool* clamped) {
    if (clamped) *clamped = false;
    if (agg.N <= 0) throw EstimationError("nu update: empty aggregate");
    const double target = agg.S_nu / static_cast<double>(agg.N);
    double lo = 0.05, hi = 500.0;
    double glo = nu_gap(lo, target);
    double ghi = nu_gap(hi, target);
    // g is strictly decreasing (log x - digamma(x) is), so the root is unique.
    if (glo <= 0.0 || ghi >= 0.0) {
        if (clamped) *clamped = true;
        return (std::fabs(glo) < std::fabs(ghi)) ? lo : hi;
    }
    // The interval criterion alone decides termination: the bracket always
    // contains the root, so nearby targets give outputs within the final
    // interval width, which keeps serial and partitioned fits in lockstep.
    for (int it = 0; it < 200 && (hi - lo) > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (nu_gap(mid, target) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

Eigen::RowVectorXd update_A(const AggregateStats& agg) {
    if (!(agg.S_a2 > 0.0))
        throw EstimationError("A update: S_a2 must be positive (internal invariant violated)");
    return agg.S_a1 / agg.S_a2;
}

Eigen::MatrixXd update_Psi(const AggregateStats& agg, bool* projected) {
    if (projected) *projected = false;
    if (agg.total_rows <= 0) throw EstimationError("Psi update: no rows");
    Eigen::MatrixXd psi = agg.S_psi / static_cast<double>(agg.total_rows);
    psi = 0.5 * (psi + psi.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(psi);
    const double emax = es.eigenvalues().maxCoeff();
    const double floor = 1e-8 * std::max(emax, 0.0);
    if (es.eigenvalues().minCoeff() > floor) return psi;
    if (!(emax > 0.0)) throw EstimationError("Psi update: aggregate has no positive direction");
    if (projected) *projected = true;
    Eigen::VectorXd adj = es.eigenvalues().cwiseMax(floor);
    return es.eigenvectors() * adj.asDiagonal() * es.eigenvectors().transpose();
}

DecParams select_dec(const GridLoglik& grid_sums) {
    const auto& grid = dec_grid();
    if (grid_sums.rho1_values.size() != grid.size() || grid_sums.rho2_values.size() != grid.size())
        throw DomainError("select_dec: grid vectors must have the full grid length");
    auto argmax = [&](const std::vector<double>& v) {
        std::size_t best = v.size();
        double best_val = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (std::isfinite(v[i]) && v[i] > best_val) {
                best = i;
                best_val = v[i];
            }
        }
        if (best == v.size())
            throw EstimationError("DEC grid search: all grid points failed");
        return best;
    };
    DecParams out;
    out.rho1 = grid[argmax(grid_sums.rho1_values)];
    out.rho2 = grid[argmax(grid_sums.rho2_values)];
    return out;
}

}  // namespace regmvst

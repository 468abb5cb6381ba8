#include "regmvst/estep.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "regmvst/errors.hpp"
#include "regmvst/mvst.hpp"
#include "regmvst/numeric.hpp"
#include "regmvst/special.hpp"

namespace regmvst {

namespace {

constexpr double kDegenerateRel = 1e-12;

std::uint64_t dec_key(const DecParams& p) {
    const std::uint64_t a = std::bit_cast<std::uint64_t>(p.rho1);
    const std::uint64_t b = std::bit_cast<std::uint64_t>(p.rho2);
    std::uint64_t h = a * 0x9e3779b97f4a7c15ULL;
    h ^= b + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

// Shared theta-level pieces reused across subjects and grid points.
struct PsiContext {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double log_det = 0.0;
    Eigen::VectorXd psi_inv_at;  ///< Psi^-1 a_row^T
    double a_psi_a = 0.0;        ///< a_row Psi^-1 a_row^T

    explicit PsiContext(const Theta& theta) : llt(theta.psi) {
        if (llt.info() != Eigen::Success) throw DecompositionError("Psi is not SPD");
        log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        psi_inv_at = llt.solve(theta.a_row.transpose());
        a_psi_a = (theta.a_row * psi_inv_at).value();
    }
};

struct LatentMoments {
    double a, b, c;
};

// GIG(rho, delta + nu, -(nu + n p)/2) moments of W, 1/W, log W, written in the
// Bessel-ratio form; the rho ~ 0 degeneracy falls back to the inverse-gamma
// closed forms.
LatentMoments latent_moments(double rho, double delta, double nu, double npd) {
    LatentMoments m{};
    const double dn = delta + nu;
    if (rho < kDegenerateRel * dn) {
        if (nu + npd <= 2.0)
            throw EstimationError("E step: degenerate skewless case needs nu + n p > 2");
        m.a = dn / (nu + npd - 2.0);
        m.b = (nu + npd) / dn;
        m.c = std::log(0.5 * dn) - digamma(0.5 * (nu + npd));
        return m;
    }
    const double lambda = -0.5 * (nu + npd);
    const double kappa = std::sqrt(rho * dn);
    const double ratio = bessel_k_ratio(lambda, kappa);
    m.a = std::sqrt(dn / rho) * ratio;
    m.b = std::sqrt(rho / dn) * ratio + (nu + npd) / dn;
    m.c = std::log(std::sqrt(dn / rho)) + dlog_bessel_k_dorder(lambda, kappa);
    return m;
}

const DecFactorCache::Entry& factor_for(const Subject& s, const DecParams& p,
                                        DecFactorCache* cache, DecFactorCache& local) {
    DecFactorCache& c = cache ? *cache : local;
    return c.get(s.t, p);
}

}  // namespace

const DecFactorCache::Entry& DecFactorCache::get(const Eigen::VectorXd& times,
                                                 const DecParams& p) {
    const std::uint64_t key = dec_key(p);
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
    if (map_.size() >= 64) map_.clear();
    const auto llt = dec_cholesky(times, p);
    Entry e;
    e.L = llt.matrixL().toDenseMatrix();
    e.log_det = 2.0 * e.L.diagonal().array().log().sum();
    return map_.emplace(key, std::move(e)).first->second;
}

SubjectStats estep_subject(const Subject& s, const Theta& theta, DecFactorCache* cache) {
    DecFactorCache local;
    const auto& f = factor_for(s, theta.dec, cache, local);
    const PsiContext psi(theta);
    const auto L = f.L.triangularView<Eigen::Lower>();

    const Eigen::MatrixXd Xs = L.solve(s.x);                        // L^-1 X
    const Eigen::MatrixXd Ys = L.solve(s.y);                        // L^-1 Y
    const Eigen::VectorXd u = L.solve(Eigen::VectorXd::Ones(s.rows()));
    const Eigen::MatrixXd U = Ys - Xs * theta.beta;                 // L^-1 (Y - X beta)
    const double ones_q = u.squaredNorm();                          // 1^T Sigma^-1 1
    const Eigen::RowVectorXd v = u.transpose() * U;                 // 1^T Sigma^-1 (Y - M)

    const double delta = psi.llt.matrixL().solve(U.transpose()).squaredNorm();
    const double rho = ones_q * psi.a_psi_a;
    const double npd = static_cast<double>(s.rows()) * static_cast<double>(theta.p());
    const LatentMoments m = latent_moments(rho, delta, theta.nu, npd);

    SubjectStats st;
    st.a = m.a;
    st.b = m.b;
    st.c = m.c;
    st.delta = delta;
    st.rho = rho;
    st.n_rows = s.rows();
    st.s_beta1 = m.b * (Xs.transpose() * Xs);
    st.s_beta2 = Xs.transpose() * (m.b * Ys - u * theta.a_row);
    st.s_nu = m.b + m.c;
    st.s_a1 = v;
    st.s_a2 = m.a * ones_q;
    const Eigen::MatrixXd cross = theta.a_row.transpose() * v;  // A^T Sigma^-1 (Y - M)
    st.s_psi = m.b * (U.transpose() * U) - cross - cross.transpose() +
               (m.a * ones_q) * (theta.a_row.transpose() * theta.a_row);
    return st;
}

std::pair<Eigen::RowVectorXd, double> estep_refresh_A_stats(const Subject& s,
                                                            const Theta& theta_partial,
                                                            double a_current,
                                                            DecFactorCache* cache) {
    DecFactorCache local;
    const auto& f = factor_for(s, theta_partial.dec, cache, local);
    const auto L = f.L.triangularView<Eigen::Lower>();
    const Eigen::VectorXd u = L.solve(Eigen::VectorXd::Ones(s.rows()));
    const Eigen::MatrixXd U = L.solve(s.y - s.x * theta_partial.beta);
    return {u.transpose() * U, a_current * u.squaredNorm()};
}

Eigen::MatrixXd estep_refresh_Psi_stats(const Subject& s, const Theta& theta_partial,
                                        double a_current, double b_current,
                                        DecFactorCache* cache) {
    DecFactorCache local;
    const auto& f = factor_for(s, theta_partial.dec, cache, local);
    const auto L = f.L.triangularView<Eigen::Lower>();
    const Eigen::VectorXd u = L.solve(Eigen::VectorXd::Ones(s.rows()));
    const Eigen::MatrixXd U = L.solve(s.y - s.x * theta_partial.beta);
    const Eigen::RowVectorXd v = u.transpose() * U;
    const Eigen::MatrixXd cross = theta_partial.a_row.transpose() * v;
    Eigen::MatrixXd s_psi = b_current * (U.transpose() * U) - cross - cross.transpose() +
                            (a_current * u.squaredNorm()) *
                                (theta_partial.a_row.transpose() * theta_partial.a_row);
    // The cross terms make this symmetric already; symmetrize to scrub rounding.
    return 0.5 * (s_psi + s_psi.transpose());
}

namespace {

// Observed log density of one subject at a given DEC factor, with the
// Psi-level quantities precomputed.
double subject_loglik(const Subject& s, const Theta& theta, const PsiContext& psi,
                      const DecFactorCache::Entry& f) {
    const auto L = f.L.triangularView<Eigen::Lower>();
    const Eigen::MatrixXd U = L.solve(s.y - s.x * theta.beta);
    const Eigen::VectorXd u = L.solve(Eigen::VectorXd::Ones(s.rows()));
    const double delta = psi.llt.matrixL().solve(U.transpose()).squaredNorm();
    const double rho = u.squaredNorm() * psi.a_psi_a;
    const double n = static_cast<double>(s.rows());
    const double p = static_cast<double>(theta.p());
    const double nu = theta.nu;
    const double half_order = 0.5 * (nu + n * p);
    const double common = 0.5 * nu * std::log(0.5 * nu) - std::lgamma(0.5 * nu) -
                          0.5 * n * p * std::log(2.0 * M_PI) - 0.5 * p * f.log_det -
                          0.5 * n * psi.log_det;
    if (rho <= 1e-12 * delta) {
        return common + std::lgamma(half_order) + half_order * std::log(2.0) -
               half_order * std::log(delta + nu);
    }
    const double skew_trace = ((u.transpose() * U) * psi.psi_inv_at).value();
    return std::log(2.0) + common + skew_trace -
           0.5 * half_order * std::log((delta + nu) / rho) +
           log_bessel_k(half_order, std::sqrt(rho * (delta + nu)));
}

std::vector<double> grid_axis(const std::vector<const Subject*>& subjects, const Theta& theta,
                              bool rho1_axis, double fixed_other,
                              std::vector<DecFactorCache>* caches) {
    const auto& grid = dec_grid();
    const PsiContext psi(theta);
    std::vector<ExactSum> sums(grid.size());
    std::vector<DecFactorCache> local;
    if (!caches) local.resize(subjects.size());
    std::vector<DecFactorCache>& cs = caches ? *caches : local;
    if (cs.size() < subjects.size())
        throw DomainError("grid_loglik: cache vector smaller than subject list");
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        for (std::size_t g = 0; g < grid.size(); ++g) {
            DecParams d;
            d.rho1 = rho1_axis ? grid[g] : fixed_other;
            d.rho2 = rho1_axis ? fixed_other : grid[g];
            try {
                const auto& f = cs[i].get(subjects[i]->t, d);
                sums[g].add(subject_loglik(*subjects[i], theta, psi, f));
            } catch (const DecompositionError&) {
                sums[g].add(-std::numeric_limits<double>::infinity());
            }
        }
    }
    std::vector<double> out(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) out[g] = sums[g].value();
    return out;
}

}  // namespace

std::vector<double> grid_loglik_rho1(const std::vector<const Subject*>& subjects,
                                     const Theta& theta, std::vector<DecFactorCache>* caches) {
    return grid_axis(subjects, theta, true, theta.dec.rho2, caches);
}

std::vector<double> grid_loglik_rho2(const std::vector<const Subject*>& subjects,
                                     const Theta& theta, double rho1_value,
                                     std::vector<DecFactorCache>* caches) {
    return grid_axis(subjects, theta, false, rho1_value, caches);
}

GridLoglik grid_loglik_partition(const std::vector<const Subject*>& subjects, const Theta& theta,
                                 std::vector<DecFactorCache>* caches) {
    GridLoglik g;
    g.rho1_values = grid_loglik_rho1(subjects, theta, caches);
    g.rho2_values = grid_loglik_rho2(subjects, theta, theta.dec.rho1, caches);
    return g;
}

PartitionStats sum_subject_stats(const std::vector<SubjectStats>& stats, Eigen::Index q,
                                 Eigen::Index p) {
    CompensatedMatrixSum sb1(q, q), sb2(q, p), spsi(p, p), sa1(1, p);
    ExactSum snu, sa2;
    Eigen::Index rows = 0;
    for (const auto& st : stats) {
        sb1.add(st.s_beta1);
        sb2.add(st.s_beta2);
        spsi.add(st.s_psi);
        sa1.add(st.s_a1);
        snu.add(st.s_nu);
        sa2.add(st.s_a2);
        rows += st.n_rows;
    }
    PartitionStats out;
    out.S_beta1 = sb1.value();
    out.S_beta2 = sb2.value();
    out.S_psi = spsi.value();
    out.S_a1 = sa1.value();
    out.S_nu = snu.value();
    out.S_a2 = sa2.value();
    out.total_rows = rows;
    out.subject_count = static_cast<Eigen::Index>(stats.size());
    return out;
}

double expected_complete_loglik(const Dataset& data, const Theta& theta,
                                const Theta& theta_prev) {
    data.validate();
    theta.validate();
    const PsiContext psi(theta);
    ExactSum q;
    for (const auto& s : data.subjects) {
        const SubjectStats prev = estep_subject(s, theta_prev);
        DecFactorCache local;
        const auto& f = local.get(s.t, theta.dec);
        const auto L = f.L.triangularView<Eigen::Lower>();
        const Eigen::MatrixXd U = L.solve(s.y - s.x * theta.beta);
        const Eigen::VectorXd u = L.solve(Eigen::VectorXd::Ones(s.rows()));
        const double delta = psi.llt.matrixL().solve(U.transpose()).squaredNorm();
        const double rho = u.squaredNorm() * psi.a_psi_a;
        const double skew_trace = ((u.transpose() * U) * psi.psi_inv_at).value();
        const double n = static_cast<double>(s.rows());
        const double p = static_cast<double>(theta.p());
        q.add(0.5 * theta.nu * std::log(0.5 * theta.nu) - std::lgamma(0.5 * theta.nu) -
              0.5 * theta.nu * prev.c - 0.5 * p * f.log_det - 0.5 * n * psi.log_det +
              skew_trace - 0.5 * prev.a * rho - 0.5 * prev.b * (delta + theta.nu));
    }
    return q.value();
}

}  // namespace regmvst

#include "regmvst/info.hpp"

#include <cmath>

#include "regmvst/errors.hpp"
#include "regmvst/mvst.hpp"
#include "regmvst/numeric.hpp"
#include "regmvst/rng.hpp"
#include "regmvst/special.hpp"

namespace regmvst {

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Eigen::VectorXd vec(const Eigen::MatrixXd& m) {
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

// All score blocks of the multivariate skew-t log density; C is the core of
// the Omega-gradient, d l / d Omega = Omega^-1 C Omega^-1.
struct ScoreParts {
    Eigen::VectorXd d_mu;
    Eigen::VectorXd d_gamma;
    Eigen::MatrixXd C;
    double d_nu = 0.0;
};

ScoreParts skewt_score_parts(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                             const Eigen::VectorXd& gamma, const Eigen::MatrixXd& Omega,
                             double nu) {
    const Eigen::Index d = y.size();
    if (mu.size() != d || gamma.size() != d || Omega.rows() != d || Omega.cols() != d)
        throw DomainError("skewt_score: inconsistent dimensions");
    if (!(nu > 0.0)) throw DomainError("skewt_score: requires nu > 0");
    Eigen::LLT<Eigen::MatrixXd> llt(Omega);
    if (llt.info() != Eigen::Success) throw DecompositionError("skewt_score: Omega is not SPD");

    const Eigen::VectorXd r = y - mu;
    const Eigen::VectorXd w1 = llt.solve(r);      // Omega^-1 (y - mu)
    const Eigen::VectorXd w2 = llt.solve(gamma);  // Omega^-1 gamma
    const double rho = r.dot(w1);
    const double gog = gamma.dot(w2);
    const double dd = static_cast<double>(d);
    const double lambda = 0.5 * (nu + dd);

    ScoreParts out;
    if (gog <= 1e-12 * std::max(rho, 1.0)) {
        // gamma = 0 limit: the multivariate-t score.
        const double c = (nu + dd) / (nu + rho);
        out.d_mu = c * w1;
        out.d_gamma = w1;
        out.C = 0.5 * c * (r * r.transpose()) - 0.5 * Omega;
        out.d_nu = 0.5 * digamma(lambda) - 0.5 * digamma(0.5 * nu) - 0.5 * dd / nu -
                   0.5 * std::log1p(rho / nu) + 0.5 * (nu + dd) * rho / (nu * (nu + rho));
        return out;
    }

    const double s = std::sqrt((nu + rho) * gog);
    const double lnk = log_bessel_k(lambda, s);
    const double kprime_over_k =
        -0.5 * (std::exp(log_bessel_k(lambda - 1.0, s) - lnk) +
                std::exp(log_bessel_k(lambda + 1.0, s) - lnk));
    const double cc = kprime_over_k + (nu + dd) / (2.0 * s);
    const double c_mu = cc * gog / s - (nu + dd) / (nu + rho);
    const double c_gamma = cc * (nu + rho) / s;
    const double c_mumu = 0.5 * (nu + dd) / (nu + rho) - cc * gog / (2.0 * s);
    const double c_gaga = -cc * (nu + rho) / (2.0 * s);

    out.d_mu = -c_mu * w1 - w2;
    out.d_gamma = c_gamma * w2 + w1;
    out.C = c_mumu * (r * r.transpose()) + c_gaga * (gamma * gamma.transpose()) -
            0.5 * (gamma * r.transpose() + r * gamma.transpose()) - 0.5 * Omega;
    out.d_nu = -0.5 * (std::log(2.0) + digamma(0.5 * nu) + dd / nu -
                       (nu + dd) * rho / (nu * (nu + rho)) + std::log1p(rho / nu) - std::log(s)) +
               0.5 * dlog_bessel_k_dorder(lambda, s) + cc * gog / (2.0 * s);
    return out;
}

}  // namespace

Eigen::Index VecSkewTParams::dim() const {
    const Eigen::Index nn = n(), pp = p(), qq = q();
    return pp * qq + pp + nn * (nn + 1) / 2 + pp * (pp + 1) / 2 + 1;
}

void VecSkewTParams::validate() const {
    if (X.rows() != Sigma.rows()) throw DomainError("VecSkewTParams: X rows must match Sigma");
    if (b_vec.size() != p() * q()) throw DomainError("VecSkewTParams: b_vec must have length pq");
    if (a_vec.size() != p()) throw DomainError("VecSkewTParams: a_vec must have length p");
    if (Psi.rows() != Psi.cols() || Sigma.rows() != Sigma.cols())
        throw DomainError("VecSkewTParams: covariance matrices must be square");
    if (!(nu > 0.0)) throw DomainError("VecSkewTParams: requires nu > 0");
}

Eigen::MatrixXd duplication_matrix(Eigen::Index d) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(d * d, d * (d + 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index i = j; i < d; ++i) {
            D(j * d + i, k) = 1.0;
            if (i != j) D(i * d + j, k) = 1.0;
            ++k;
        }
    }
    return D;
}

Eigen::VectorXd skewt_score(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                            const Eigen::VectorXd& gamma, const Eigen::MatrixXd& Omega,
                            double nu) {
    const ScoreParts parts = skewt_score_parts(y, mu, gamma, Omega, nu);
    const Eigen::Index d = y.size();
    Eigen::LLT<Eigen::MatrixXd> llt(Omega);
    const Eigen::MatrixXd G = llt.solve(llt.solve(parts.C).transpose());  // Omega^-1 C Omega^-1
    const Eigen::MatrixXd D = duplication_matrix(d);
    Eigen::VectorXd out(2 * d + d * (d + 1) / 2 + 1);
    out.head(d) = parts.d_mu;
    out.segment(d, d) = parts.d_gamma;
    out.segment(2 * d, d * (d + 1) / 2) = D.transpose() * vec(G);
    out[out.size() - 1] = parts.d_nu;
    return out;
}

Eigen::MatrixXd complete_info(const VecSkewTParams& p) {
    p.validate();
    if (!(p.nu > 2.0)) throw DomainError("complete_info: requires nu > 2");
    const Eigen::Index n = p.n(), pp = p.p(), q = p.q();
    Eigen::LLT<Eigen::MatrixXd> lltS(p.Sigma), lltP(p.Psi);
    if (lltS.info() != Eigen::Success) throw DecompositionError("complete_info: Sigma not SPD");
    if (lltP.info() != Eigen::Success) throw DecompositionError("complete_info: Psi not SPD");
    const Eigen::MatrixXd Sinv = lltS.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd Pinv = lltP.solve(Eigen::MatrixXd::Identity(pp, pp));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd Sinv1 = lltS.solve(ones);
    const double ones_q = ones.dot(Sinv1);

    const Eigen::MatrixXd Dn = duplication_matrix(n);
    const Eigen::MatrixXd Dp = duplication_matrix(pp);

    const Eigen::Index nb = pp * q;
    const Eigen::Index na = pp;
    const Eigen::Index ns = n * (n + 1) / 2;
    const Eigen::Index nps = pp * (pp + 1) / 2;
    const Eigen::Index d = p.dim();
    Eigen::MatrixXd I = Eigen::MatrixXd::Zero(d, d);

    const Eigen::Index ob = 0, oa = nb, os = nb + na, op = nb + na + ns, on = d - 1;

    I.block(ob, ob, nb, nb) = kron(Pinv, p.X.transpose() * lltS.solve(p.X));
    I.block(oa, oa, na, na) = (p.nu / (p.nu - 2.0)) * ones_q * Pinv;
    const Eigen::MatrixXd Iba = kron(Pinv, p.X.transpose() * Sinv1);
    I.block(ob, oa, nb, na) = Iba;
    I.block(oa, ob, na, nb) = Iba.transpose();
    I.block(os, os, ns, ns) =
        0.5 * static_cast<double>(pp) * Dn.transpose() * kron(Sinv, Sinv) * Dn;
    I.block(op, op, nps, nps) =
        0.5 * static_cast<double>(n) * Dp.transpose() * kron(Pinv, Pinv) * Dp;
    // Sigma-Psi cross block: (1/2) D_n^T vec(Sigma^-1) vec(Psi^-1)^T D_p.
    const Eigen::MatrixXd Isp =
        0.5 * (Dn.transpose() * vec(Sinv)) * (vec(Pinv).transpose() * Dp);
    I.block(os, op, ns, nps) = Isp;
    I.block(op, os, nps, ns) = Isp.transpose();
    I(on, on) = 0.25 * trigamma(0.5 * p.nu) - 0.5 / p.nu;
    return I;
}

McInfo observed_info_mc(const VecSkewTParams& p, int draws, std::uint64_t seed) {
    p.validate();
    if (!(p.nu > 4.0)) throw DomainError("observed_info_mc: requires nu > 4");
    if (draws < 1000) throw DomainError("observed_info_mc: requires draws >= 1000");
    const Eigen::Index n = p.n(), pp = p.p(), q = p.q();
    const Eigen::Index d = p.dim();

    Eigen::MatrixXd beta(q, pp);
    for (Eigen::Index c = 0; c < pp; ++c) beta.col(c) = p.b_vec.segment(c * q, q);
    MvstParams mp;
    mp.M = p.X * beta;
    mp.A = Eigen::VectorXd::Ones(n) * p.a_vec.transpose();
    mp.Sigma = p.Sigma;
    mp.Psi = p.Psi;
    mp.nu = p.nu;

    const Eigen::VectorXd mu = vec(mp.M);
    const Eigen::VectorXd gamma = vec(mp.A);
    const Eigen::MatrixXd Omega = kron(p.Psi, p.Sigma);
    Eigen::LLT<Eigen::MatrixXd> lltO(Omega);
    const Eigen::MatrixXd Dn = duplication_matrix(n);
    const Eigen::MatrixXd Dp = duplication_matrix(pp);

    CompensatedMatrixSum m1(d, d), m2(d, d);
    for (int it = 0; it < draws; ++it) {
        const Eigen::MatrixXd Y = mvst_sample(mp, seed_stream(seed, Stream::info_mc, it));
        const Eigen::VectorXd y = vec(Y);
        const ScoreParts parts = skewt_score_parts(y, mu, gamma, Omega, p.nu);
        const Eigen::MatrixXd G = lltO.solve(lltO.solve(parts.C).transpose());

        Eigen::VectorXd s(d);
        // chain rule to model coordinates: mu = (I_p (x) X) b, gamma = (I_p (x) 1) a
        for (Eigen::Index c = 0; c < pp; ++c)
            s.segment(c * q, q) = p.X.transpose() * parts.d_mu.segment(c * n, n);
        for (Eigen::Index c = 0; c < pp; ++c)
            s[pp * q + c] = parts.d_gamma.segment(c * n, n).sum();
        // partial traces of G = Omega^-1 C Omega^-1 against Psi and Sigma
        Eigen::MatrixXd Dsig = Eigen::MatrixXd::Zero(n, n);
        Eigen::MatrixXd Dpsi(pp, pp);
        for (Eigen::Index j1 = 0; j1 < pp; ++j1) {
            for (Eigen::Index j2 = 0; j2 < pp; ++j2) {
                const auto block = G.block(j1 * n, j2 * n, n, n);
                Dpsi(j1, j2) = (block.array() * p.Sigma.array()).sum();
                Dsig += p.Psi(j1, j2) * block;
            }
        }
        s.segment(pp * q + pp, n * (n + 1) / 2) = Dn.transpose() * vec(Dsig);
        s.segment(pp * q + pp + n * (n + 1) / 2, pp * (pp + 1) / 2) = Dp.transpose() * vec(Dpsi);
        s[d - 1] = parts.d_nu;

        const Eigen::MatrixXd outer = s * s.transpose();
        m1.add(outer);
        m2.add(outer.cwiseProduct(outer));
    }
    McInfo out;
    out.draws = draws;
    const double nd = static_cast<double>(draws);
    out.I = m1.value() / nd;
    const Eigen::MatrixXd var = (m2.value() / nd - out.I.cwiseProduct(out.I)).cwiseMax(0.0);
    out.se_max = std::sqrt(var.maxCoeff() / nd);
    return out;
}

RateMatrices rate_matrices(const Eigen::MatrixXd& I_c, const Eigen::MatrixXd& I_o) {
    if (I_c.rows() != I_c.cols() || I_o.rows() != I_o.cols() || I_c.rows() != I_o.rows())
        throw DomainError("rate_matrices: dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(I_c);
    if (llt.info() != Eigen::Success)
        throw DecompositionError("rate_matrices: complete information is not SPD");
    const Eigen::Index d = I_c.rows();
    RateMatrices out;
    out.d = d;
    out.I_complete = I_c;
    out.I_observed = I_o;
    out.S = llt.solve(I_o);
    out.R = Eigen::MatrixXd::Identity(d, d) - out.S;
    // Spectrum of S via the symmetric similarity transform L^-1 I_o L^-T.
    const Eigen::MatrixXd L = llt.matrixL().toDenseMatrix();
    const Eigen::MatrixXd T =
        L.triangularView<Eigen::Lower>().solve(
            L.triangularView<Eigen::Lower>().solve(I_o).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_t(T);
    out.s_min = es_t.eigenvalues().minCoeff();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_r(Eigen::MatrixXd::Identity(d, d) - T);
    out.r_max = es_r.eigenvalues().maxCoeff();
    return out;
}

}  // namespace regmvst

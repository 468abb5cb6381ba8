#include "regmvst/mvst.hpp"

#include <cmath>
#include <random>
#include <string>

#include "regmvst/errors.hpp"
#include "regmvst/rng.hpp"
#include "regmvst/special.hpp"

namespace regmvst {

namespace {

Eigen::LLT<Eigen::MatrixXd> llt_or_throw(const Eigen::MatrixXd& m, const char* name) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
        throw DecompositionError(std::string("Cholesky factorization failed for ") + name);
    return llt;
}

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// Relative threshold below which the skew term is treated as exactly zero and
// the matrix-variate-t branch is taken (the Bessel/power form is 0 * inf there).
constexpr double kRhoZeroRel = 1e-12;

}  // namespace

void MvstParams::validate_shapes() const {
    const auto n = M.rows(), p = M.cols();
    if (A.rows() != n || A.cols() != p)
        throw DomainError("MvstParams: A must match M in shape");
    if (Sigma.rows() != n || Sigma.cols() != n)
        throw DomainError("MvstParams: Sigma must be n x n");
    if (Psi.rows() != p || Psi.cols() != p)
        throw DomainError("MvstParams: Psi must be p x p");
}

bool GigParams::valid() const {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(lambda)) return false;
    if (a < 0.0 || b < 0.0) return false;
    return (a > 0.0 && b > 0.0) || (a > 0.0 && lambda > 0.0) || (b > 0.0 && lambda < 0.0);
}

QuadForms quad_forms(const Eigen::MatrixXd& Y, const MvstParams& params) {
    params.validate_shapes();
    if (Y.rows() != params.M.rows() || Y.cols() != params.M.cols())
        throw DomainError("quad_forms: Y must match the location matrix in shape");
    const auto lltS = llt_or_throw(params.Sigma, "Sigma");
    const auto lltP = llt_or_throw(params.Psi, "Psi");
    const Eigen::MatrixXd U = lltS.matrixL().solve(Y - params.M);  // L_S^-1 (Y - M)
    const Eigen::MatrixXd V = lltS.matrixL().solve(params.A);      // L_S^-1 A
    QuadForms out;
    out.delta = lltP.matrixL().solve(U.transpose()).squaredNorm();
    out.rho = lltP.matrixL().solve(V.transpose()).squaredNorm();
    return out;
}

double mvst_logpdf(const Eigen::MatrixXd& Y, const MvstParams& params) {
    params.validate_shapes();
    if (!(params.nu > 0.0)) throw DomainError("mvst_logpdf: requires nu > 0");
    const double n = static_cast<double>(Y.rows());
    const double p = static_cast<double>(Y.cols());
    const double nu = params.nu;

    const auto lltS = llt_or_throw(params.Sigma, "Sigma");
    const auto lltP = llt_or_throw(params.Psi, "Psi");
    const Eigen::MatrixXd U = lltS.matrixL().solve(Y - params.M);
    const Eigen::MatrixXd V = lltS.matrixL().solve(params.A);
    const double delta = lltP.matrixL().solve(U.transpose()).squaredNorm();
    const double rho = lltP.matrixL().solve(V.transpose()).squaredNorm();
    const double lds = log_det_from_llt(lltS);
    const double ldp = log_det_from_llt(lltP);

    const double half_order = 0.5 * (nu + n * p);
    const double common = 0.5 * nu * std::log(0.5 * nu) - std::lgamma(0.5 * nu) -
                          0.5 * n * p * std::log(2.0 * M_PI) - 0.5 * p * lds - 0.5 * n * ldp;

    if (rho <= kRhoZeroRel * delta) {
        // Matrix-variate t limit of the density as rho -> 0.
        return common + std::lgamma(half_order) + half_order * std::log(2.0) -
               half_order * std::log(delta + nu);
    }

    // tr(Sigma^-1 (Y-M) Psi^-1 A^T) = tr(Psi^-1 (A^T Sigma^-1 (Y-M)))
    const Eigen::MatrixXd B = V.transpose() * U;  // A^T Sigma^-1 (Y - M)
    const double skew_trace = lltP.solve(B).trace();

    return std::log(2.0) + common + skew_trace -
           0.5 * half_order * std::log((delta + nu) / rho) +
           log_bessel_k(half_order, std::sqrt(rho * (delta + nu)));
}

Eigen::MatrixXd mvst_sample(const MvstParams& params, std::uint64_t rng_seed) {
    params.validate_shapes();
    if (!(params.nu > 0.0)) throw DomainError("mvst_sample: requires nu > 0");
    const auto lltS = llt_or_throw(params.Sigma, "Sigma");
    const auto lltP = llt_or_throw(params.Psi, "Psi");

    auto eng = make_engine(rng_seed, Stream::mvst_sample);
    // W ~ Inverse-Gamma(nu/2, nu/2) as the reciprocal of Gamma(nu/2, rate nu/2).
    std::gamma_distribution<double> gamma(0.5 * params.nu, 2.0 / params.nu);
    const double w = 1.0 / gamma(eng);

    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd Z(params.M.rows(), params.M.cols());
    for (Eigen::Index i = 0; i < Z.rows(); ++i)
        for (Eigen::Index j = 0; j < Z.cols(); ++j) Z(i, j) = normal(eng);
    const Eigen::MatrixXd V =
        lltS.matrixL().toDenseMatrix() * Z * lltP.matrixL().toDenseMatrix().transpose();

    return params.M + w * params.A + std::sqrt(w) * V;
}

double gig_logpdf(double x, const GigParams& p) {
    if (!p.valid()) throw DomainError("gig_logpdf: invalid GIG parameters");
    if (!(x > 0.0)) throw DomainError("gig_logpdf: requires x > 0");
    if (p.a > 0.0 && p.b > 0.0) {
        return 0.5 * p.lambda * std::log(p.a / p.b) + (p.lambda - 1.0) * std::log(x) -
               std::log(2.0) - log_bessel_k(p.lambda, std::sqrt(p.a * p.b)) -
               0.5 * (p.a * x + p.b / x);
    }
    if (p.b == 0.0) {  // Gamma(lambda, rate a/2) limit
        return p.lambda * std::log(0.5 * p.a) - std::lgamma(p.lambda) +
               (p.lambda - 1.0) * std::log(x) - 0.5 * p.a * x;
    }
    // a == 0: Inverse-Gamma(-lambda, scale b/2) limit
    return -p.lambda * std::log(0.5 * p.b) - std::lgamma(-p.lambda) +
           (p.lambda - 1.0) * std::log(x) - 0.5 * p.b / x;
}

GigMoments gig_moments(const GigParams& p) {
    if (!(p.a > 0.0) || !(p.b > 0.0))
        throw DomainError("gig_moments: requires a > 0 and b > 0");
    const double omega = std::sqrt(p.a * p.b);
    const double ratio = bessel_k_ratio(p.lambda, omega);
    GigMoments m;
    m.e_w = std::sqrt(p.b / p.a) * ratio;
    m.e_inv_w = std::sqrt(p.a / p.b) * ratio - 2.0 * p.lambda / p.b;
    m.e_log_w = 0.5 * std::log(p.b / p.a) + dlog_bessel_k_dorder(p.lambda, omega);
    return m;
}

namespace {

// Two-parameter GIG kernel: g(z) = z^(lambda-1) exp(-(omega/2)(z + 1/z)).
struct GigKernel {
    double lambda, omega;
    double log_g(double z) const {
        return (lambda - 1.0) * std::log(z) - 0.5 * omega * (z + 1.0 / z);
    }
    // d/dz of log[(z - zm)^2 g(z)]
    double dlog_shift(double z, double zm) const {
        return 2.0 / (z - zm) + (lambda - 1.0) / z - 0.5 * omega * (1.0 - 1.0 / (z * z));
    }
};

double bisect_sign_change(const GigKernel& k, double zm, double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (k.dlog_shift(mid, zm) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

namespace {

// Mode-shifted ratio-of-uniforms region for the two-parameter GIG kernel.
struct RouSetup {
    GigKernel kernel;
    double scale, zm, lg_m, v_lo, v_hi;

    explicit RouSetup(const GigParams& p)
        : kernel{p.lambda, std::sqrt(p.a * p.b)}, scale(std::sqrt(p.b / p.a)) {
        const GigKernel& k = kernel;
        const double lm1 = p.lambda - 1.0;
        zm = (lm1 + std::sqrt(lm1 * lm1 + k.omega * k.omega)) / k.omega;
        lg_m = k.log_g(zm);
        // v-bounds: the extrema of (z - zm) sqrt(g(z)/g(zm)) on either side
        // of the mode, located by bisection on the log-derivative.
        double lo = zm * 1e-12;
        while (k.dlog_shift(lo, zm) < 0.0) lo *= 0.5;
        const double z_lo = bisect_sign_change(k, zm, lo, zm * (1.0 - 1e-14));
        double hi = zm + std::max(1.0, zm);
        while (k.dlog_shift(hi, zm) > 0.0) hi = zm + 2.0 * (hi - zm);
        const double z_hi = bisect_sign_change(k, zm, zm * (1.0 + 1e-14), hi);
        v_lo = (z_lo - zm) * std::exp(0.5 * (k.log_g(z_lo) - lg_m));
        v_hi = (z_hi - zm) * std::exp(0.5 * (k.log_g(z_hi) - lg_m));
    }

    double draw(std::mt19937_64& eng, long* proposals) const {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int tries = 0; tries < 100000; ++tries) {
            const double u = unif(eng);
            const double v = v_lo + (v_hi - v_lo) * unif(eng);
            if (proposals) ++*proposals;
            if (u == 0.0) continue;
            const double z = zm + v / u;
            if (z <= 0.0) continue;
            if (2.0 * std::log(u) <= kernel.log_g(z) - lg_m) return scale * z;
        }
        throw EstimationError("gig_sample: ratio-of-uniforms failed to accept");
    }
};

}  // namespace

double gig_sample(const GigParams& p, std::uint64_t rng_seed) {
    if (!(p.a > 0.0) || !(p.b > 0.0))
        throw DomainError("gig_sample: requires a > 0 and b > 0");
    const RouSetup setup(p);
    auto eng = make_engine(rng_seed, Stream::gig_sample);
    return setup.draw(eng, nullptr);
}

std::vector<double> gig_sample_many(const GigParams& p, std::uint64_t rng_seed, int n,
                                    long* proposals_out) {
    if (!(p.a > 0.0) || !(p.b > 0.0))
        throw DomainError("gig_sample: requires a > 0 and b > 0");
    const RouSetup setup(p);
    auto eng = make_engine(rng_seed, Stream::gig_sample);
    std::vector<double> out(n);
    long proposals = 0;
    for (int i = 0; i < n; ++i) out[i] = setup.draw(eng, &proposals);
    if (proposals_out) *proposals_out = proposals;
    return out;
}

double vec_skewt_logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                        const Eigen::VectorXd& gamma, const Eigen::MatrixXd& Omega,
                        double nu) {
    const Eigen::Index d = y.size();
    if (mu.size() != d || gamma.size() != d || Omega.rows() != d || Omega.cols() != d)
        throw DomainError("vec_skewt_logpdf: inconsistent dimensions");
    if (!(nu > 0.0)) throw DomainError("vec_skewt_logpdf: requires nu > 0");
    const auto llt = llt_or_throw(Omega, "Omega");
    const Eigen::VectorXd r = llt.matrixL().solve(y - mu);
    const Eigen::VectorXd g = llt.matrixL().solve(gamma);
    const double rho = r.squaredNorm();
    const double gog = g.squaredNorm();  // gamma^T Omega^-1 gamma
    const double ld = log_det_from_llt(llt);
    const double dd = static_cast<double>(d);
    const double half = 0.5 * (nu + dd);

    const double common = -std::lgamma(0.5 * nu) - 0.5 * dd * std::log(M_PI * nu) - 0.5 * ld -
                          half * std::log1p(rho / nu);
    if (gog <= kRhoZeroRel * rho) {
        return common + std::lgamma(half);  // multivariate t limit
    }
    const double s = std::sqrt((nu + rho) * gog);
    return common + (1.0 - half) * std::log(2.0) + log_bessel_k(half, s) + r.dot(g) +
           half * std::log(s);
}

}  // namespace regmvst

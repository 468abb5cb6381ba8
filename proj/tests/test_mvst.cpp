#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "regmvst/errors.hpp"
#include "regmvst/mvst.hpp"
#include "regmvst/special.hpp"
#include "support/quadrature.hpp"
#include "support/testutil.hpp"

using namespace regmvst;
using testsupport::integrate;
using testsupport::integrate_positive;
using testsupport::random_matrix;
using testsupport::random_spd;

namespace {

MvstParams scalar_params(double m, double a, double sigma, double psi, double nu) {
    MvstParams p;
    p.M = Eigen::MatrixXd::Constant(1, 1, m);
    p.A = Eigen::MatrixXd::Constant(1, 1, a);
    p.Sigma = Eigen::MatrixXd::Constant(1, 1, sigma);
    p.Psi = Eigen::MatrixXd::Constant(1, 1, psi);
    p.nu = nu;
    return p;
}

double scalar_logpdf(double y, const MvstParams& p) {
    return mvst_logpdf(Eigen::MatrixXd::Constant(1, 1, y), p);
}

// univariate Student-t log density, location m, scale s
double student_t_logpdf(double y, double nu, double m, double s) {
    const double z = (y - m) / s;
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(M_PI * nu) -
           std::log(s) - 0.5 * (nu + 1.0) * std::log1p(z * z / nu);
}

Eigen::VectorXd vec_of(const Eigen::MatrixXd& m) {
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace

TEST_CASE("quad_forms basic identities") {
    std::mt19937_64 eng(23);
    MvstParams p;
    p.M = random_matrix(3, 2, eng);
    p.A = random_matrix(3, 2, eng);
    p.Sigma = random_spd(3, eng);
    p.Psi = random_spd(2, eng);
    p.nu = 5.0;

    SUBCASE("Y = M gives delta = 0") {
        const QuadForms qf = quad_forms(p.M, p);
        CHECK(qf.delta == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(qf.rho > 0.0);
    }
    SUBCASE("A = 0 gives rho = 0") {
        p.A.setZero();
        const QuadForms qf = quad_forms(random_matrix(3, 2, eng), p);
        CHECK(qf.rho == 0.0);
        CHECK(qf.delta >= 0.0);
    }
    SUBCASE("scalar hand computation") {
        // n = p = 1, Y = 3, M = 1, Sigma = 2, Psi = 1, A = 0.5
        const MvstParams sp = scalar_params(1.0, 0.5, 2.0, 1.0, 5.0);
        const QuadForms qf = quad_forms(Eigen::MatrixXd::Constant(1, 1, 3.0), sp);
        CHECK(qf.delta == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(qf.rho == doctest::Approx(0.125).epsilon(1e-14));
    }
    SUBCASE("non-SPD matrices are named in the error") {
        p.Sigma(0, 1) = 100.0;
        p.Sigma(1, 0) = 100.0;
        try {
            quad_forms(p.M, p);
            FAIL("expected DecompositionError");
        } catch (const DecompositionError& e) {
            CHECK(std::string(e.what()).find("Sigma") != std::string::npos);
        }
    }
}

TEST_CASE("mvst_logpdf symmetric case") {
    std::mt19937_64 eng(29);
    MvstParams p;
    p.M = random_matrix(3, 2, eng);
    p.A = Eigen::MatrixXd::Zero(3, 2);
    p.Sigma = random_spd(3, eng);
    p.Psi = random_spd(2, eng);
    p.nu = 4.0;
    for (int i = 0; i < 20; ++i) {
        const Eigen::MatrixXd d = random_matrix(3, 2, eng);
        CHECK(mvst_logpdf(p.M + d, p) == doctest::Approx(mvst_logpdf(p.M - d, p)).epsilon(1e-12));
    }
}

TEST_CASE("mvst_logpdf 1x1 symmetric equals univariate t") {
    const double sigma = 1.7, psi = 0.6, nu = 4.5, m = 0.8;
    const MvstParams p = scalar_params(m, 0.0, sigma, psi, nu);
    const double scale = std::sqrt(sigma * psi);
    for (double y : {-3.0, -0.4, 0.8, 1.1, 6.0}) {
        CHECK(scalar_logpdf(y, p) == doctest::Approx(student_t_logpdf(y, nu, m, scale)).epsilon(1e-12));
    }
}

TEST_CASE("mvst_logpdf 1x1 skewed density integrates to 1") {
    const MvstParams p = scalar_params(0.0, 1.0, 1.0, 1.0, 5.0);
    const double total =
        integrate([&](double y) { return std::exp(scalar_logpdf(y, p)); }, -400.0, 400.0, 1e-9);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("mvst_logpdf domain checks") {
    MvstParams p = scalar_params(0.0, 0.0, 1.0, 1.0, -1.0);
    CHECK_THROWS_AS(scalar_logpdf(0.0, p), DomainError);
}

TEST_CASE("mvst_logpdf equals the vectorized skew-t density") {
    std::mt19937_64 eng(31);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<int> dim(1, 3);
        const Eigen::Index n = dim(eng), p = dim(eng);
        MvstParams mp;
        mp.M = random_matrix(n, p, eng);
        mp.A = random_matrix(n, p, eng);
        mp.Sigma = random_spd(n, eng);
        mp.Psi = random_spd(p, eng);
        std::uniform_real_distribution<double> nu_d(0.8, 20.0);
        mp.nu = nu_d(eng);
        const Eigen::MatrixXd y = random_matrix(n, p, eng, 2.0);
        const double lhs = mvst_logpdf(y, mp);
        const double rhs = vec_skewt_logpdf(vec_of(y), vec_of(mp.M), vec_of(mp.A),
                                            kron(mp.Psi, mp.Sigma), mp.nu);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("mvst_logpdf scale identifiability: (c Sigma, Psi / c) invariance") {
    std::mt19937_64 eng(37);
    MvstParams p;
    p.M = random_matrix(2, 3, eng);
    p.A = random_matrix(2, 3, eng);
    p.Sigma = random_spd(2, eng);
    p.Psi = random_spd(3, eng);
    p.nu = 6.0;
    const Eigen::MatrixXd y = random_matrix(2, 3, eng);
    const double base = mvst_logpdf(y, p);
    for (double c : {0.1, 0.9, 3.7, 42.0}) {
        MvstParams pc = p;
        pc.Sigma = c * p.Sigma;
        pc.Psi = p.Psi / c;
        CHECK(mvst_logpdf(y, pc) == doctest::Approx(base).epsilon(1e-10));
    }
}

TEST_CASE("mvst_sample moments and determinism") {
    SUBCASE("normal limit: A = 0, huge nu") {
        const MvstParams p = scalar_params(2.5, 0.0, 1.0, 1.0, 1e6);
        const int n = 100000;
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double y = mvst_sample(p, 1000 + i)(0, 0);
            sum += y;
            sumsq += y * y;
        }
        const double mean = sum / n;
        const double sd = std::sqrt(sumsq / n - mean * mean);
        CHECK(std::fabs(mean - 2.5) < 4.0 * sd / std::sqrt(static_cast<double>(n)));
    }
    SUBCASE("skew shift: E(Y) = E(W) A = nu/(nu-2) * A") {
        const MvstParams p = scalar_params(0.0, 2.0, 1.0, 1.0, 5.0);
        const int n = 100000;
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double y = mvst_sample(p, 77 + i)(0, 0);
            sum += y;
            sumsq += y * y;
        }
        const double mean = sum / n;
        const double sd = std::sqrt(sumsq / n - mean * mean);
        CHECK(std::fabs(mean - 10.0 / 3.0) < 4.0 * sd / std::sqrt(static_cast<double>(n)));
    }
    SUBCASE("fixed seed reproduces bit-identical draws") {
        std::mt19937_64 eng(41);
        MvstParams p;
        p.M = random_matrix(3, 2, eng);
        p.A = random_matrix(3, 2, eng);
        p.Sigma = random_spd(3, eng);
        p.Psi = random_spd(2, eng);
        p.nu = 3.0;
        const Eigen::MatrixXd a = mvst_sample(p, 12345);
        const Eigen::MatrixXd b = mvst_sample(p, 12345);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a - mvst_sample(p, 12346)).cwiseAbs().maxCoeff() > 0.0);
    }
}

TEST_CASE("gig_logpdf") {
    SUBCASE("normalizes to 1") {
        const GigParams p{1.0, 1.0, -0.5};
        const double z = integrate_positive(
            [&](double x) { return std::exp(gig_logpdf(x, p)); }, 1.0, 1e-10);
        CHECK(z == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("mode of GIG(2, 2, -0.5) at the analytic stationary point") {
        // a x^2 - 2(lambda - 1) x - b = 0 gives x = 1/2 here.
        const GigParams p{2.0, 2.0, -0.5};
        const double h = 1e-6;
        const double deriv = (gig_logpdf(0.5 + h, p) - gig_logpdf(0.5 - h, p)) / (2.0 * h);
        CHECK(deriv == doctest::Approx(0.0).epsilon(1e-6));
        CHECK(gig_logpdf(0.5, p) > gig_logpdf(0.4, p));
        CHECK(gig_logpdf(0.5, p) > gig_logpdf(0.6, p));
    }
    SUBCASE("a = b, lambda = 0: density of log X is symmetric") {
        const GigParams p{1.4, 1.4, 0.0};
        for (double x : {0.1, 0.5, 2.0, 7.3}) {
            CHECK(gig_logpdf(x, p) + std::log(x) ==
                  doctest::Approx(gig_logpdf(1.0 / x, p) - std::log(x)).epsilon(1e-12));
        }
    }
    SUBCASE("domain") {
        CHECK_THROWS_AS(gig_logpdf(0.0, GigParams{1.0, 1.0, 1.0}), DomainError);
        CHECK_THROWS_AS(gig_logpdf(-1.0, GigParams{1.0, 1.0, 1.0}), DomainError);
        CHECK_THROWS_AS(gig_logpdf(1.0, GigParams{0.0, 0.0, 1.0}), DomainError);
    }
}

TEST_CASE("gig_moments against quadrature and closed forms") {
    SUBCASE("matches 50-digit quadrature references for (1.3, 0.7, -4)") {
        const GigMoments m = gig_moments(GigParams{1.3, 0.7, -4.0});
        CHECK(m.e_w == doctest::Approx(0.11272926331931386).epsilon(1e-10));
        CHECK(m.e_inv_w == doctest::Approx(11.637925774735869).epsilon(1e-10));
        CHECK(m.e_log_w == doctest::Approx(-2.3297766454263445).epsilon(1e-7));
    }
    SUBCASE("matches on-the-fly quadrature") {
        const GigParams p{1.3, 0.7, -4.0};
        auto pdf = [&](double x) { return std::exp(gig_logpdf(x, p)); };
        const GigMoments m = gig_moments(p);
        CHECK(m.e_w ==
              doctest::Approx(integrate_positive([&](double x) { return x * pdf(x); }, 0.3, 1e-11))
                  .epsilon(1e-6));
        CHECK(m.e_inv_w ==
              doctest::Approx(integrate_positive([&](double x) { return pdf(x) / x; }, 0.3, 1e-11))
                  .epsilon(1e-6));
        CHECK(m.e_log_w ==
              doctest::Approx(
                  integrate_positive([&](double x) { return std::log(x) * pdf(x); }, 0.3, 1e-11))
                  .epsilon(1e-6));
    }
    SUBCASE("a = b, lambda = 0: E(W) = E(1/W) by the x <-> 1/x symmetry") {
        const GigMoments m = gig_moments(GigParams{2.3, 2.3, 0.0});
        CHECK(m.e_w == doctest::Approx(m.e_inv_w).epsilon(1e-13));
        CHECK(m.e_w * m.e_inv_w >= 1.0);
    }
    SUBCASE("lambda = -1/2, a = b: inverse-Gaussian closed form E(W) = 1") {
        const GigMoments m = gig_moments(GigParams{4.0, 4.0, -0.5});
        CHECK(m.e_w == doctest::Approx(1.0).epsilon(1e-13));
    }
    SUBCASE("two-term form of E(1/W) equals the moment form to 1e-10") {
        std::mt19937_64 eng(43);
        std::uniform_real_distribution<double> ad(0.05, 8.0), bd(0.05, 8.0), ld(-30.0, -0.6);
        for (int i = 0; i < 200; ++i) {
            const double a = ad(eng), b = bd(eng), lam = ld(eng);
            const GigMoments m = gig_moments(GigParams{a, b, lam});
            // two-term form with nu + n p = -2 lambda and delta + nu = b
            const double two_term =
                std::sqrt(a / b) * bessel_k_ratio(lam, std::sqrt(a * b)) + (-2.0 * lam) / b;
            CHECK(m.e_inv_w == doctest::Approx(two_term).epsilon(1e-10));
        }
    }
    SUBCASE("domain") {
        CHECK_THROWS_AS(gig_moments(GigParams{0.0, 1.0, -1.0}), DomainError);
        CHECK_THROWS_AS(gig_moments(GigParams{1.0, 0.0, 1.0}), DomainError);
    }
}

TEST_CASE("gig_sample") {
    SUBCASE("empirical mean matches gig_moments") {
        const GigParams p{1.0, 1.0, 1.0};
        long proposals = 0;
        const auto draws = gig_sample_many(p, 99, 100000, &proposals);
        double sum = 0.0, sumsq = 0.0;
        for (double x : draws) {
            sum += x;
            sumsq += x * x;
        }
        const double mean = sum / draws.size();
        const double sd = std::sqrt(sumsq / draws.size() - mean * mean);
        CHECK(std::fabs(mean - gig_moments(p).e_w) <
              4.0 * sd / std::sqrt(static_cast<double>(draws.size())));
        // acceptance-rate sanity for the ratio-of-uniforms construction
        CHECK(static_cast<double>(draws.size()) / proposals >= 0.3);
    }
    SUBCASE("acceptance stays reasonable across parameter ranges") {
        std::mt19937_64 eng(47);
        std::uniform_real_distribution<double> ad(0.05, 10.0), ld(-12.0, 12.0);
        for (int i = 0; i < 20; ++i) {
            const GigParams p{ad(eng), ad(eng), ld(eng)};
            long proposals = 0;
            const auto draws = gig_sample_many(p, 1000 + i, 2000, &proposals);
            CHECK(static_cast<double>(draws.size()) / proposals >= 0.3);
        }
    }
    SUBCASE("support condition") {
        CHECK_THROWS_AS(gig_sample(GigParams{2.0, 0.0, 1.0}, 1), DomainError);
    }
    SUBCASE("seed determinism") {
        const GigParams p{2.0, 0.5, -3.0};
        CHECK(gig_sample(p, 8) == gig_sample(p, 8));
        CHECK(gig_sample(p, 8) != gig_sample(p, 9));
    }
}

TEST_CASE("vec_skewt_logpdf") {
    SUBCASE("frozen 1-d reference value") {
        Eigen::VectorXd y(1), mu(1), ga(1);
        y << 1.1;
        mu << 0.3;
        ga << 0.8;
        Eigen::MatrixXd om(1, 1);
        om << 1.7;
        CHECK(vec_skewt_logpdf(y, mu, ga, om, 6.0) ==
              doctest::Approx(-1.2878600751773717).epsilon(1e-12));
    }
    SUBCASE("1-d density integrates to 1") {
        Eigen::VectorXd mu(1), ga(1);
        mu << 0.3;
        ga << 0.8;
        Eigen::MatrixXd om(1, 1);
        om << 1.7;
        const double z = integrate(
            [&](double y) {
                Eigen::VectorXd yv(1);
                yv << y;
                return std::exp(vec_skewt_logpdf(yv, mu, ga, om, 6.0));
            },
            -300.0, 300.0, 1e-9);
        CHECK(z == doctest::Approx(1.0).epsilon(1e-5));
    }
    SUBCASE("gamma = 0 reduces to multivariate t") {
        std::mt19937_64 eng(53);
        const Eigen::Index d = 3;
        const Eigen::VectorXd mu = random_matrix(d, 1, eng);
        const Eigen::MatrixXd om = random_spd(d, eng);
        const double nu = 7.0;
        const Eigen::VectorXd y = random_matrix(d, 1, eng);
        const Eigen::VectorXd r = y - mu;
        const double rho = r.dot(om.llt().solve(r));
        const double logdet = std::log(om.determinant());
        const double expected = std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) -
                                0.5 * d * std::log(M_PI * nu) - 0.5 * logdet -
                                0.5 * (nu + d) * std::log1p(rho / nu);
        CHECK(vec_skewt_logpdf(y, mu, Eigen::VectorXd::Zero(d), om, nu) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("1x1 sampler agrees with the quadrature CDF (Kolmogorov-Smirnov)") {
    const MvstParams p = scalar_params(0.0, 1.0, 1.0, 1.0, 5.0);
    const int n = 10000;
    std::vector<double> draws(n);
    for (int i = 0; i < n; ++i) draws[i] = mvst_sample(p, 50000 + i)(0, 0);
    std::sort(draws.begin(), draws.end());

    auto pdf = [&](double y) { return std::exp(scalar_logpdf(y, p)); };
    double cdf = integrate(pdf, draws.front() - 500.0, draws.front(), 1e-11);
    double dmax = 0.0;
    for (int i = 0; i < n; ++i) {
        if (i > 0) cdf += integrate(pdf, draws[i - 1], draws[i], 1e-12);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        dmax = std::max({dmax, std::fabs(cdf - lo), std::fabs(cdf - hi)});
    }
    // 1% critical value of the one-sample KS statistic
    const double critical = 1.6276 / std::sqrt(static_cast<double>(n));
    CHECK(dmax < critical);
}

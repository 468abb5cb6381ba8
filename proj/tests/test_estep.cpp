#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "regmvst/dec.hpp"
#include "regmvst/errors.hpp"
#include "regmvst/estep.hpp"
#include "regmvst/mvst.hpp"
#include "regmvst/special.hpp"
#include "support/quadrature.hpp"
#include "support/testutil.hpp"

using namespace regmvst;
using testsupport::random_subject;
using testsupport::random_theta;

namespace {

// Independent dense-algebra route: explicit inverses, no triangular solves.
struct DenseStats {
    double delta, rho;
    Eigen::MatrixXd s_beta1, s_beta2, s_psi;
    Eigen::RowVectorXd s_a1;
    double s_a2;
};

DenseStats dense_oracle(const Subject& s, const Theta& theta, double a, double b) {
    const Eigen::MatrixXd sigma = dec_correlation(s.t, theta.dec);
    const Eigen::MatrixXd sinv = sigma.inverse();
    const Eigen::MatrixXd pinv = theta.psi.inverse();
    const Eigen::MatrixXd M = s.x * theta.beta;
    const Eigen::MatrixXd A = Eigen::VectorXd::Ones(s.rows()) * theta.a_row;
    const Eigen::MatrixXd R = s.y - M;
    DenseStats d;
    d.delta = (sinv * R * pinv * R.transpose()).trace();
    d.rho = (sinv * A * pinv * A.transpose()).trace();
    d.s_beta1 = b * s.x.transpose() * sinv * s.x;
    d.s_beta2 = -s.x.transpose() * sinv * A + b * s.x.transpose() * sinv * s.y;
    d.s_a1 = Eigen::RowVectorXd::Ones(s.rows()) * sinv * R;
    d.s_a2 = a * (Eigen::RowVectorXd::Ones(s.rows()) * sinv * Eigen::VectorXd::Ones(s.rows()))(0);
    d.s_psi = b * R.transpose() * sinv * R - A.transpose() * sinv * R -
              R.transpose() * sinv * A + a * A.transpose() * sinv * A;
    return d;
}

}  // namespace

TEST_CASE("estep moments equal the GIG moments of the conditional law") {
    std::mt19937_64 eng(101);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<int> nd(1, 6);
        const auto s = random_subject(nd(eng), 2, 3, eng);
        const Theta theta = random_theta(3, 2, eng);
        const SubjectStats st = estep_subject(s, theta);
        const double lambda = -0.5 * (theta.nu + s.rows() * 2);

        // Same conditional-law parameters through the generic moment route.
        const GigMoments m = gig_moments(GigParams{st.rho, st.delta + theta.nu, lambda});
        CHECK(st.a == doctest::Approx(m.e_w).epsilon(1e-10));
        CHECK(st.b == doctest::Approx(m.e_inv_w).epsilon(1e-10));
        CHECK(st.c == doctest::Approx(m.e_log_w).epsilon(1e-10));

        // Quadratic forms recomputed by the independent dense route; the
        // order-derivative in c carries the finite-difference accuracy.
        const DenseStats d = dense_oracle(s, theta, st.a, st.b);
        CHECK(st.delta == doctest::Approx(d.delta).epsilon(1e-10));
        CHECK(st.rho == doctest::Approx(d.rho).epsilon(1e-10));
        const GigMoments md = gig_moments(GigParams{d.rho, d.delta + theta.nu, lambda});
        CHECK(st.a == doctest::Approx(md.e_w).epsilon(1e-10));
        CHECK(st.b == doctest::Approx(md.e_inv_w).epsilon(1e-10));
        CHECK(std::fabs(st.c - md.e_log_w) < 1e-6);

        CHECK(st.a * st.b >= 1.0);
        CHECK(st.b - (theta.nu + s.rows() * 2) / (d.delta + theta.nu) > 0.0);
        CHECK(st.s_nu == st.b + st.c);
    }
}

TEST_CASE("estep moments match quadrature of the conditional density") {
    std::mt19937_64 eng(103);
    const auto s = random_subject(2, 2, 3, eng);
    const Theta theta = random_theta(3, 2, eng);
    const SubjectStats st = estep_subject(s, theta);
    const DenseStats d = dense_oracle(s, theta, st.a, st.b);
    const GigParams g{d.rho, d.delta + theta.nu, -0.5 * (theta.nu + 4.0)};
    auto pdf = [&](double x) { return std::exp(gig_logpdf(x, g)); };
    const double mode = std::sqrt(g.b / g.a);
    CHECK(st.a == doctest::Approx(testsupport::integrate_positive(
                      [&](double x) { return x * pdf(x); }, mode, 1e-11))
                      .epsilon(1e-6));
    CHECK(st.b == doctest::Approx(testsupport::integrate_positive(
                      [&](double x) { return pdf(x) / x; }, mode, 1e-11))
                      .epsilon(1e-6));
    CHECK(st.c == doctest::Approx(testsupport::integrate_positive(
                      [&](double x) { return std::log(x) * pdf(x); }, mode, 1e-11))
                      .epsilon(1e-6));
}

TEST_CASE("sufficient statistic shapes") {
    std::mt19937_64 eng(107);
    const auto s = random_subject(4, 2, 3, eng);
    const Theta theta = random_theta(3, 2, eng);
    const SubjectStats st = estep_subject(s, theta);
    CHECK(st.s_beta1.rows() == 3);
    CHECK(st.s_beta1.cols() == 3);
    CHECK(st.s_beta2.rows() == 3);
    CHECK(st.s_beta2.cols() == 2);
    CHECK(st.s_psi.rows() == 2);
    CHECK(st.s_psi.cols() == 2);
    CHECK(st.s_a1.size() == 2);
    CHECK(st.n_rows == 4);
    // s_beta1 is symmetric PSD
    CHECK((st.s_beta1 - st.s_beta1.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(st.s_beta1);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
}

TEST_CASE("sufficient statistics match the dense oracle") {
    std::mt19937_64 eng(109);
    for (int trial = 0; trial < 30; ++trial) {
        std::uniform_int_distribution<int> nd(1, 7);
        const auto s = random_subject(nd(eng), 2, 3, eng);
        const Theta theta = random_theta(3, 2, eng);
        const SubjectStats st = estep_subject(s, theta);
        const DenseStats d = dense_oracle(s, theta, st.a, st.b);
        CHECK((st.s_beta1 - d.s_beta1).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((st.s_beta2 - d.s_beta2).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((st.s_a1 - d.s_a1).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(st.s_a2 == doctest::Approx(d.s_a2).epsilon(1e-10));
        CHECK((st.s_psi - d.s_psi).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("skewless degeneracy uses the inverse-gamma closed forms") {
    std::mt19937_64 eng(113);
    const auto s = random_subject(3, 2, 3, eng);
    Theta theta = random_theta(3, 2, eng);
    theta.a_row.setZero();
    const SubjectStats st = estep_subject(s, theta);
    const SubjectStats st2 = estep_subject(s, theta);
    const DenseStats d = dense_oracle(s, theta, st.a, st.b);
    const double npd = 6.0;
    CHECK(st.b == doctest::Approx((theta.nu + npd) / (d.delta + theta.nu)).epsilon(1e-12));
    CHECK(st.a ==
          doctest::Approx((d.delta + theta.nu) / (theta.nu + npd - 2.0)).epsilon(1e-12));
    CHECK(st.c == doctest::Approx(std::log(0.5 * (d.delta + theta.nu)) -
                                  digamma(0.5 * (theta.nu + npd)))
                      .epsilon(1e-12));
    CHECK(st.a == st2.a);
}

TEST_CASE("estep_refresh_A_stats") {
    std::mt19937_64 eng(127);
    const auto s = random_subject(5, 2, 3, eng);
    const Theta theta = random_theta(3, 2, eng);
    const SubjectStats st = estep_subject(s, theta);

    SUBCASE("with unchanged beta it reproduces the E-step blocks") {
        const auto [sa1, sa2] = estep_refresh_A_stats(s, theta, st.a);
        CHECK((sa1 - st.s_a1).cwiseAbs().maxCoeff() < 1e-13);
        CHECK(sa2 == doctest::Approx(st.s_a2).epsilon(1e-13));
    }
    SUBCASE("exact fit gives zero residual statistics") {
        Subject noiseless = s;
        Theta fresh = theta;
        fresh.beta = testsupport::random_matrix(3, 2, eng);
        noiseless.y = noiseless.x * fresh.beta;
        const auto [sa1, sa2] = estep_refresh_A_stats(noiseless, fresh, st.a);
        CHECK(sa1.cwiseAbs().maxCoeff() < 1e-12);
        CHECK(sa2 > 0.0);
    }
    SUBCASE("matches the dense recomputation with a fresh beta") {
        Theta fresh = theta;
        fresh.beta = testsupport::random_matrix(3, 2, eng);
        const auto [sa1, sa2] = estep_refresh_A_stats(s, fresh, st.a);
        const DenseStats d = dense_oracle(s, fresh, st.a, st.b);
        CHECK((sa1 - d.s_a1).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(sa2 == doctest::Approx(d.s_a2).epsilon(1e-10));
    }
}

TEST_CASE("estep_refresh_Psi_stats") {
    std::mt19937_64 eng(131);
    const auto s = random_subject(5, 2, 3, eng);
    const Theta theta = random_theta(3, 2, eng);
    const SubjectStats st = estep_subject(s, theta);

    SUBCASE("zero when Y = M and A = 0") {
        Subject noiseless = s;
        Theta fresh = theta;
        fresh.a_row.setZero();
        noiseless.y = noiseless.x * fresh.beta;
        const Eigen::MatrixXd sp = estep_refresh_Psi_stats(noiseless, fresh, st.a, st.b);
        CHECK(sp.cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("symmetric to machine precision") {
        Theta fresh = theta;
        fresh.beta = testsupport::random_matrix(3, 2, eng);
        fresh.a_row = testsupport::random_matrix(1, 2, eng);
        const Eigen::MatrixXd sp = estep_refresh_Psi_stats(s, fresh, st.a, st.b);
        CHECK((sp - sp.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("matches the dense recomputation") {
        Theta fresh = theta;
        fresh.beta = testsupport::random_matrix(3, 2, eng);
        fresh.a_row = testsupport::random_matrix(1, 2, eng);
        const Eigen::MatrixXd sp = estep_refresh_Psi_stats(s, fresh, st.a, st.b);
        const DenseStats d = dense_oracle(s, fresh, st.a, st.b);
        CHECK((sp - d.s_psi).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("grid log-likelihood vectors") {
    std::mt19937_64 eng(137);
    const auto s1 = random_subject(3, 2, 3, eng);
    const auto s2 = random_subject(4, 2, 3, eng);
    const Theta theta = random_theta(3, 2, eng);
    const auto& grid = dec_grid();

    SUBCASE("singleton sum equals the density directly") {
        const auto vals = grid_loglik_rho1({&s1}, theta);
        REQUIRE(vals.size() == grid.size());
        for (std::size_t g = 0; g < grid.size(); ++g) {
            MvstParams mp;
            mp.M = s1.x * theta.beta;
            mp.A = Eigen::VectorXd::Ones(3) * theta.a_row;
            mp.Sigma = dec_correlation(s1.t, DecParams{grid[g], theta.dec.rho2});
            mp.Psi = theta.psi;
            mp.nu = theta.nu;
            CHECK(vals[g] == doctest::Approx(mvst_logpdf(s1.y, mp)).epsilon(1e-12));
        }
    }
    SUBCASE("partition of two equals the sum of singletons") {
        const auto both = grid_loglik_rho2({&s1, &s2}, theta, 0.3);
        const auto a = grid_loglik_rho2({&s1}, theta, 0.3);
        const auto b = grid_loglik_rho2({&s2}, theta, 0.3);
        for (std::size_t g = 0; g < grid.size(); ++g)
            CHECK(both[g] == doctest::Approx(a[g] + b[g]).epsilon(1e-14));
    }
    SUBCASE("partition form evaluates both axes at the supplied theta") {
        const GridLoglik gl = grid_loglik_partition({&s1, &s2}, theta);
        const auto r1 = grid_loglik_rho1({&s1, &s2}, theta);
        const auto r2 = grid_loglik_rho2({&s1, &s2}, theta, theta.dec.rho1);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            CHECK(gl.rho1_values[g] == r1[g]);
            CHECK(gl.rho2_values[g] == r2[g]);
        }
    }
}

TEST_CASE("partition additivity of summed statistics") {
    std::mt19937_64 eng(139);
    std::vector<Subject> subjects;
    std::vector<SubjectStats> all;
    const Theta theta = random_theta(3, 2, eng);
    std::uniform_int_distribution<int> nd(1, 6);
    for (int i = 0; i < 23; ++i) subjects.push_back(random_subject(nd(eng), 2, 3, eng));
    for (const auto& s : subjects) all.push_back(estep_subject(s, theta));

    const PartitionStats whole = sum_subject_stats(all, 3, 2);
    // split 23 subjects into 4 uneven partitions and re-aggregate
    std::vector<SubjectStats> p1(all.begin(), all.begin() + 4);
    std::vector<SubjectStats> p2(all.begin() + 4, all.begin() + 11);
    std::vector<SubjectStats> p3(all.begin() + 11, all.begin() + 20);
    std::vector<SubjectStats> p4(all.begin() + 20, all.end());
    Eigen::MatrixXd sb1 = Eigen::MatrixXd::Zero(3, 3), spsi = Eigen::MatrixXd::Zero(2, 2);
    double snu = 0.0, sa2 = 0.0;
    for (const auto& part : {p1, p2, p3, p4}) {
        const PartitionStats ps = sum_subject_stats(part, 3, 2);
        sb1 += ps.S_beta1;
        spsi += ps.S_psi;
        snu += ps.S_nu;
        sa2 += ps.S_a2;
    }
    CHECK((sb1 - whole.S_beta1).cwiseAbs().maxCoeff() <
          1e-10 * whole.S_beta1.cwiseAbs().maxCoeff());
    CHECK((spsi - whole.S_psi).cwiseAbs().maxCoeff() < 1e-10 * whole.S_psi.cwiseAbs().maxCoeff());
    CHECK(snu == doctest::Approx(whole.S_nu).epsilon(1e-12));
    CHECK(sa2 == doctest::Approx(whole.S_a2).epsilon(1e-12));
    CHECK(whole.total_rows == [&] {
        Eigen::Index r = 0;
        for (const auto& s : subjects) r += s.rows();
        return r;
    }());
}

TEST_CASE("expected complete-data log-likelihood increases under the beta update") {
    std::mt19937_64 eng(149);
    Dataset d;
    d.p = 2;
    d.q = 3;
    std::uniform_int_distribution<int> nd(2, 6);
    for (int i = 0; i < 30; ++i) {
        auto s = random_subject(nd(eng), 2, 3, eng);
        s.id = std::to_string(i);
        d.subjects.push_back(std::move(s));
    }
    const Theta prev = random_theta(3, 2, eng);

    // the exact conditional maximizer of Q in beta, from the aggregates
    Eigen::MatrixXd sb1 = Eigen::MatrixXd::Zero(3, 3), sb2 = Eigen::MatrixXd::Zero(3, 2);
    for (const auto& s : d.subjects) {
        const SubjectStats st = estep_subject(s, prev);
        sb1 += st.s_beta1;
        sb2 += st.s_beta2;
    }
    Theta next = prev;
    next.beta = sb1.llt().solve(sb2);
    CHECK(expected_complete_loglik(d, next, prev) >=
          expected_complete_loglik(d, prev, prev) - 1e-10);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "regmvst/dec.hpp"
#include "regmvst/errors.hpp"

using namespace regmvst;

TEST_CASE("dec_correlation entries") {
    Eigen::VectorXd t(3);
    t << 0.0, 1.0, 3.0;

    SUBCASE("unit gap gives exactly rho1") {
        const Eigen::MatrixXd s = dec_correlation(t, DecParams{0.37, 0.63});
        CHECK(s(0, 1) == doctest::Approx(0.37).epsilon(1e-15));
    }
    SUBCASE("|dt| = 2 with rho1 = 0.9, rho2 = 0.5") {
        Eigen::VectorXd t2(2);
        t2 << 1.0, 3.0;
        const Eigen::MatrixXd s = dec_correlation(t2, DecParams{0.9, 0.5});
        // 0.9^sqrt(2), high-precision exponentiation reference
        CHECK(s(0, 1) == doctest::Approx(0.8615671589825503).epsilon(1e-14));
    }
    SUBCASE("rho2 = 0 gives compound symmetry") {
        const Eigen::MatrixXd s = dec_correlation(t, DecParams{0.42, 0.0});
        CHECK(s(0, 1) == doctest::Approx(0.42).epsilon(1e-15));
        CHECK(s(0, 2) == doctest::Approx(0.42).epsilon(1e-15));
        CHECK(s(1, 2) == doctest::Approx(0.42).epsilon(1e-15));
    }
    SUBCASE("rho1 = 0 gives the identity") {
        const Eigen::MatrixXd s = dec_correlation(t, DecParams{0.0, 0.5});
        CHECK(s.isIdentity(0.0));
    }
    SUBCASE("unit diagonal and exact symmetry") {
        std::mt19937_64 eng(3);
        std::uniform_real_distribution<double> td(0.0, 5.0), rd(0.01, 0.95);
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::VectorXd tt(6);
            for (int i = 0; i < 6; ++i) tt[i] = td(eng);
            const Eigen::MatrixXd s = dec_correlation(tt, DecParams{rd(eng), rd(eng)});
            for (int i = 0; i < 6; ++i) {
                CHECK(s(i, i) == 1.0);
                for (int j = 0; j < 6; ++j) CHECK(s(i, j) == s(j, i));
            }
        }
    }
    SUBCASE("entries decrease as the gap grows (rho2 > 0)") {
        const Eigen::MatrixXd s = dec_correlation(t, DecParams{0.8, 0.5});
        CHECK(s(0, 1) > s(0, 2));
    }
    SUBCASE("NaN time is a domain error") {
        Eigen::VectorXd bad(2);
        bad << 0.0, std::nan("");
        CHECK_THROWS_AS(dec_correlation(bad, DecParams{0.5, 0.5}), DomainError);
    }
    SUBCASE("invalid rho") {
        CHECK_THROWS_AS(dec_correlation(t, DecParams{1.0, 0.5}), DomainError);
        CHECK_THROWS_AS(dec_correlation(t, DecParams{0.5, -0.1}), DomainError);
    }
}

TEST_CASE("tied observation times stay factorable") {
    Eigen::VectorXd t(3);
    t << 1.0, 1.0, 2.0;
    const Eigen::MatrixXd s = dec_correlation(t, DecParams{0.9, 0.5});
    CHECK(s(0, 1) < 1.0);  // ties offset instead of producing a singular matrix
    CHECK_NOTHROW(dec_cholesky(t, DecParams{0.9, 0.5}));
}

TEST_CASE("positive definiteness across the whole grid") {
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> td(0.0, 10.0);
    std::uniform_int_distribution<int> nd(1, 50);
    const auto& grid = dec_grid();
    for (int trial = 0; trial < 10; ++trial) {
        const int n = nd(eng);
        Eigen::VectorXd t(n);
        for (int i = 0; i < n; ++i) t[i] = td(eng);
        std::sort(t.data(), t.data() + n);
        for (double r1 : grid)
            for (double r2 : grid) CHECK_NOTHROW(dec_cholesky(t, DecParams{r1, r2}));
    }
}

TEST_CASE("dec_grid is the fixed 11-point search grid") {
    const auto& grid = dec_grid();
    REQUIRE(grid.size() == 11);
    CHECK(grid.front() == 1e-5);
    CHECK(grid.back() == 1.0 - 1e-5);
    for (int i = 1; i <= 9; ++i) CHECK(grid[i] == doctest::Approx(0.1 * i).epsilon(1e-15));
}

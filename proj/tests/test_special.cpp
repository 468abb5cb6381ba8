#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "regmvst/errors.hpp"
#include "regmvst/special.hpp"

using namespace regmvst;

namespace {

// 50-digit reference values for ln K_order(x), frozen before the build.
struct LnkRef {
    double order, x, value;
};
constexpr LnkRef kLnkTable[] = {
    {0.0, 1e-8, 2.919747817422440053},
    {0.0, 0.001, 1.94928855019219871},
    {0.0, 0.5, -0.0785897698690814169},
    {0.0, 1.9, -2.04913754705789214},
    {0.0, 2.1, -2.294778237049997312},
    {0.0, 10.0, -10.93743282303833292},
    {0.0, 100.0, -102.0780375544582963},
    {0.0, 700.0, -703.0499272589439122},
    {0.0, 10000.0, -10004.37939133271843},
    {0.25, 1e-8, 5.3732367229369556},
    {0.25, 0.5, -0.04049254365776939203},
    {0.25, 2.1, -2.28235786042095923},
    {0.25, 700.0, -703.0498826479257604},
    {0.5, 1e-8, 9.436131714620910168},
    {0.5, 0.001, 3.678668992135795958},
    {0.5, 0.5, 0.07236494292470008707},
    {0.5, 1.9, -1.995135590441469956},
    {0.5, 2.1, -2.245177319719961224},
    {0.5, 10.0, -10.92550119385229541},
    {0.5, 700.0, -703.0497488148769749},
    {1.0, 1e-8, 18.42068074395236452},
    {1.0, 0.5, 0.5046713973046511773},
    {1.0, 1.9, -1.834707766273977722},
    {1.0, 2.1, -2.097634746677736208},
    {1.0, 10000.0, -10004.3793413352182},
    {2.75, 1e-8, 52.34509427876384646},
    {2.75, 0.001, 20.68454910723858906},
    {2.75, 0.5, 3.559360294032143097},
    {2.75, 1.9, -0.5149561477425368845},
    {2.75, 2.1, -0.8750813922245996039},
    {2.75, 10.0, -10.5782365055836722},
    {2.75, 100.0, -102.04041441415655},
    {7.0, 0.5, 15.57975870587421567},
    {7.0, 1.9, 6.096898497572737265},
    {7.0, 2.1, 5.364012024339940536},
    {7.0, 700.0, -703.0149525107555633},
    {12.5, 1e-8, 256.9640493877803852},
    {12.5, 0.001, 113.0524810539133995},
    {12.5, 0.5, 35.3644464682120772},
    {12.5, 1.9, 18.60417835168290986},
    {12.5, 2.1, 17.33588560944398559},
    {12.5, 10.0, -4.073708438733804947},
    {12.5, 100.0, -101.3016353055540507},
    {12.5, 700.0, -702.9384026651947852},
    {12.5, 10000.0, -10004.37157922431807},
    {41.3, 0.5, 167.991405344491478},
    {41.3, 2.1, 108.6966174806952633},
    {41.3, 10.0, 43.65365938310780288},
    {41.3, 100.0, -93.70404332118071517},
    {41.3, 700.0, -701.8327977147525073},
    {100.0, 0.5, 497.0698629899066349},
    {100.0, 10.0, 197.2450659213213849},
    {100.0, 100.0, -55.53422771502921431},
    {100.0, 700.0, -695.9241871355011249},
    {100.0, 10000.0, -10003.87942049530265},
    {523.7, 0.5, 3478.241009296393669},
    {523.7, 10.0, 1909.32831081740367},
    {523.7, 100.0, 698.7511260189503931},
    {523.7, 700.0, -515.1587880782050498},
    {10000.3, 2.1, 81613.87105187205189},
    {10000.3, 100.0, 42980.1337653148908},
    {10000.3, 700.0, 23508.45515174887503},
    {10000.3, 10000.0, -5332.688012879063542},
};

}  // namespace

TEST_CASE("log_bessel_k half-order closed form") {
    // K_{1/2}(x) = sqrt(pi/(2x)) e^-x, so ln K_{1/2}(1) = ln(sqrt(pi/2)/e).
    const double expected = 0.5 * std::log(M_PI / 2.0) - 1.0;
    CHECK(log_bessel_k(0.5, 1.0) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(log_bessel_k(0.5, 1.0) == doctest::Approx(-0.7742086473552726).epsilon(1e-13));
    // order symmetry, exact by construction
    CHECK(log_bessel_k(-0.5, 1.0) == log_bessel_k(0.5, 1.0));
}

TEST_CASE("log_bessel_k matches the 50-digit reference table to >= 10 digits") {
    for (const auto& ref : kLnkTable) {
        const double got = log_bessel_k(ref.order, ref.x);
        const double rel = std::fabs(got - ref.value) / std::fabs(ref.value);
        INFO("order=", ref.order, " x=", ref.x, " got=", got, " want=", ref.value);
        CHECK(rel < 1e-11);
    }
}

TEST_CASE("log_bessel_k specific reference points") {
    CHECK(log_bessel_k(3.0, 2.5) == doctest::Approx(-1.315921096278839485).epsilon(1e-13));
}

TEST_CASE("log_bessel_k domain errors") {
    CHECK_THROWS_AS(log_bessel_k(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(log_bessel_k(1.0, -2.0), DomainError);
    CHECK_THROWS_AS(log_bessel_k(1.0, 1e-9), DomainError);
    CHECK_THROWS_AS(log_bessel_k(2e6, 1.0), DomainError);
    CHECK_THROWS_AS(log_bessel_k(std::nan(""), 1.0), DomainError);
    CHECK_THROWS_AS(log_bessel_k(1.0, std::numeric_limits<double>::infinity()), DomainError);
}

TEST_CASE("order symmetry holds exactly for random orders") {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> ord(0.0, 30.0), arg(0.05, 100.0);
    for (int i = 0; i < 200; ++i) {
        const double l = ord(eng), x = arg(eng);
        CHECK(log_bessel_k(l, x) == log_bessel_k(-l, x));
    }
}

TEST_CASE("three-term recurrence K_{l+1} = K_{l-1} + (2l/x) K_l") {
    std::mt19937_64 eng(11);
    std::uniform_real_distribution<double> ord(-20.0, 20.0), arg(0.05, 100.0);
    for (int i = 0; i < 300; ++i) {
        const double l = ord(eng), x = arg(eng);
        const double k0 = std::exp(log_bessel_k(l - 1.0, x));
        const double k1 = std::exp(log_bessel_k(l, x));
        const double k2 = std::exp(log_bessel_k(l + 1.0, x));
        CHECK(k2 == doctest::Approx(k0 + 2.0 * l / x * k1).epsilon(1e-8));
    }
}

TEST_CASE("bessel_k_ratio") {
    // K_{1/2} = K_{-1/2}, so the ratio at order -1/2 is exactly 1.
    CHECK(bessel_k_ratio(-0.5, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(bessel_k_ratio(0.0, 1.0) == doctest::Approx(1.429625398260401758).epsilon(1e-12));
    // large ratio without overflow
    CHECK(bessel_k_ratio(5.0, 0.5) == doctest::Approx(20.06217939941101040).epsilon(1e-11));

    std::mt19937_64 eng(13);
    std::uniform_real_distribution<double> ord(0.0, 40.0), arg(0.05, 50.0);
    for (int i = 0; i < 200; ++i) {
        const double l = ord(eng), x = arg(eng);
        const double r = bessel_k_ratio(l, x);
        CHECK(r > 0.0);
        CHECK(r >= 1.0);  // increasing in the order for l >= 0
    }
    std::uniform_real_distribution<double> negord(-40.0, 0.0);
    for (int i = 0; i < 50; ++i) {
        CHECK(bessel_k_ratio(negord(eng), arg(eng)) > 0.0);
    }
}

TEST_CASE("order derivative of ln K") {
    // even in the order, so the derivative vanishes at 0
    CHECK(dlog_bessel_k_dorder(0.0, 0.7) == 0.0);
    CHECK(dlog_bessel_k_dorder(0.0, 5.0) == 0.0);
    // 50-digit differentiation references
    CHECK(dlog_bessel_k_dorder(0.5, 1.0) == doctest::Approx(0.3613286168882226).epsilon(1e-7));
    CHECK(dlog_bessel_k_dorder(3.0, 2.0) == doctest::Approx(1.087964506414518534).epsilon(1e-7));
    // odd in the order
    CHECK(dlog_bessel_k_dorder(-3.0, 2.0) ==
          doctest::Approx(-dlog_bessel_k_dorder(3.0, 2.0)).epsilon(1e-12));
}

TEST_CASE("digamma") {
    CHECK(digamma(1.0) == doctest::Approx(-0.5772156649015328606).epsilon(1e-13));
    CHECK(digamma(2.0) == doctest::Approx(1.0 - 0.5772156649015328606).epsilon(1e-13));
    CHECK(digamma(10.5) == doctest::Approx(2.303001034297686375).epsilon(1e-13));
    CHECK_THROWS_AS(digamma(0.0), DomainError);
    CHECK_THROWS_AS(digamma(-1.0), DomainError);

    // recurrence psi(x+1) - psi(x) = 1/x
    std::mt19937_64 eng(17);
    std::uniform_real_distribution<double> xd(1e-3, 100.0);
    for (int i = 0; i < 300; ++i) {
        const double x = xd(eng);
        CHECK(digamma(x + 1.0) - digamma(x) == doctest::Approx(1.0 / x).epsilon(1e-12));
    }
}

TEST_CASE("trigamma") {
    CHECK(trigamma(1.0) == doctest::Approx(M_PI * M_PI / 6.0).epsilon(1e-12));
    CHECK(trigamma(2.0) == doctest::Approx(M_PI * M_PI / 6.0 - 1.0).epsilon(1e-12));
    CHECK(trigamma(7.3) == doctest::Approx(0.1467957681314270982).epsilon(1e-12));
    CHECK_THROWS_AS(trigamma(0.0), DomainError);

    std::mt19937_64 eng(19);
    std::uniform_real_distribution<double> xd(0.1, 50.0);
    for (int i = 0; i < 200; ++i) {
        const double x = xd(eng);
        CHECK(trigamma(x + 1.0) - trigamma(x) == doctest::Approx(-1.0 / (x * x)).epsilon(1e-10));
    }
}

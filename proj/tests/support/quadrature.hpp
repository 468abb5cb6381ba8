#pragma once

// Test-side adaptive Gauss-Kronrod (G7/K15) quadrature, independent of the
// library's evaluation paths.  Used as the integration oracle for density
// normalization and moment checks.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace testsupport {

namespace detail {

inline constexpr double kronrod_nodes[8] = {
    0.000000000000000, 0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759, 0.991455371120813};
inline constexpr double kronrod_weights[8] = {
    0.209482141084728, 0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979, 0.022935322010529};
// Gauss-7 shares Kronrod nodes 0, 2, 4, 6.
inline constexpr double gauss_weights[4] = {0.417959183673469, 0.381830050505119,
                                            0.279705391489277, 0.129484966168870};

struct GkResult {
    double integral;
    double error;
};

template <typename F>
GkResult gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double f0 = f(c);
    double kron = kronrod_weights[0] * f0;
    double gauss = gauss_weights[0] * f0;
    for (int i = 1; i < 8; ++i) {
        const double x = h * kronrod_nodes[i];
        const double fsum = f(c - x) + f(c + x);
        kron += kronrod_weights[i] * fsum;
        if (i % 2 == 0) gauss += gauss_weights[i / 2] * fsum;
    }
    return {kron * h, std::fabs((kron - gauss) * h)};
}

template <typename F>
double adaptive(const F& f, double a, double b, double tol, int depth) {
    const GkResult r = gk15(f, a, b);
    if (r.error < tol || depth > 48) return r.integral;
    const double c = 0.5 * (a + b);
    return adaptive(f, a, c, 0.5 * tol, depth + 1) + adaptive(f, c, b, 0.5 * tol, depth + 1);
}

}  // namespace detail

/// Adaptive quadrature of f over [a, b] to absolute tolerance tol.
template <typename F>
double integrate(const F& f, double a, double b, double tol = 1e-10) {
    return detail::adaptive(f, a, b, tol, 0);
}

/// Integral of f over (0, inf) for integrands concentrated around a positive
/// mode: substitutes x = e^u and expands the u-window until the integrand is
/// negligible at both ends.
template <typename F>
double integrate_positive(const F& f, double mode_guess, double tol = 1e-10) {
    if (!(mode_guess > 0.0)) throw std::invalid_argument("integrate_positive: bad mode");
    auto g = [&](double u) { return f(std::exp(u)) * std::exp(u); };
    const double u0 = std::log(mode_guess);
    const double peak = std::fabs(g(u0)) + 1e-300;
    double lo = u0 - 1.0, hi = u0 + 1.0;
    while (std::fabs(g(lo)) > 1e-16 * peak && lo > u0 - 400.0) lo -= 1.0;
    while (std::fabs(g(hi)) > 1e-16 * peak && hi < u0 + 400.0) hi += 1.0;
    return integrate(g, lo, hi, tol);
}

}  // namespace testsupport

#pragma once

namespace regmvst {

/// ln K_order(x), the log of the modified Bessel function of the second kind
/// with real order.  Evaluation is fully log-scaled: no intermediate value
/// overflows or underflows for x up to 1e4 or |order| up to 1e4, and the
/// result is accurate to at least 10 significant digits for x in [1e-8, 700].
/// Order sign is normalized internally (K is even in the order).
/// Throws DomainError for x <= 0, x < 1e-8, |order| > 1e6, or non-finite input.
double log_bessel_k(double order, double x);

/// K_{order+1}(x) / K_order(x), computed as
/// exp(log_bessel_k(order+1, x) - log_bessel_k(order, x)).  Always positive;
/// at least 1 when order >= 0.
double bessel_k_ratio(double order, double x);

/// d/d(order) ln K_order(x): Richardson-extrapolated central difference on
/// log_bessel_k with step 1e-3 * max(1, |order|).  Odd in the order;
/// exactly 0 at order = 0.
double dlog_bessel_k_dorder(double order, double x);

/// Digamma psi(x) for x > 0, accurate to 1e-12.
double digamma(double x);

/// Trigamma psi'(x) for x > 0, accurate to 1e-10.
double trigamma(double x);

}  // namespace regmvst

#include "regmvst/dec.hpp"

#include <cmath>

#include "regmvst/errors.hpp"

namespace regmvst {

Eigen::MatrixXd dec_correlation(const Eigen::VectorXd& times, const DecParams& p) {
    if (!p.valid()) throw DomainError("dec_correlation: rho1, rho2 must lie in [0, 1)");
    const Eigen::Index n = times.size();
    if (n < 1) throw DomainError("dec_correlation: empty time vector");
    for (Eigen::Index i = 0; i < n; ++i)
        if (!std::isfinite(times[i])) throw DomainError("dec_correlation: non-finite time");

    Eigen::MatrixXd s(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        s(j, j) = 1.0;
        for (Eigen::Index k = 0; k < j; ++k) {
            double gap = std::fabs(times[j] - times[k]);
            if (gap == 0.0) gap = 1e-6;  // tied observation times
            double v;
            if (p.rho1 == 0.0)
                v = 0.0;
            else
                v = std::exp(std::pow(gap, p.rho2) * std::log(p.rho1));
            s(j, k) = v;
            s(k, j) = v;
        }
    }
    return s;
}

Eigen::LLT<Eigen::MatrixXd> dec_cholesky(const Eigen::VectorXd& times, const DecParams& p) {
    Eigen::MatrixXd s = dec_correlation(times, p);
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() == Eigen::Success) return llt;
    s.diagonal().array() += 1e-10;
    llt.compute(s);
    if (llt.info() == Eigen::Success) return llt;
    throw DecompositionError("DEC correlation matrix is not positive definite after jitter");
}

const std::vector<double>& dec_grid() {
    static const std::vector<double> grid = {1e-5, 0.1, 0.2, 0.3, 0.4, 0.5,
                                             0.6,  0.7, 0.8, 0.9, 1.0 - 1e-5};
    return grid;
}

}  // namespace regmvst

#include "regmvst/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "regmvst/dec.hpp"
#include "regmvst/errors.hpp"
#include "regmvst/mvst.hpp"
#include "regmvst/rng.hpp"

namespace regmvst {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::pair<Dataset, Theta> generate(const SchemeConfig& cfg, bool gig_latent) {
    if (cfg.n_subjects < 1) throw DomainError("simulate: N must be >= 1");
    Theta truth = cfg.use_custom_truth ? cfg.truth : scheme_truth();
    truth.validate();
    const Eigen::Index p = truth.p();
    const Eigen::Index q = truth.q();
    if (q != 3)
        throw DomainError("simulate: the covariate design assumes q = 3 "
                          "(exponential, normal, time-linked Bernoulli)");

    Dataset data;
    data.p = p;
    data.q = q;
    data.subjects.reserve(cfg.n_subjects);
    const Eigen::LLT<Eigen::MatrixXd> lltP(truth.psi);
    if (lltP.info() != Eigen::Success) throw DecompositionError("simulate: Psi is not SPD");
    const Eigen::MatrixXd Lpsi_t = lltP.matrixL().toDenseMatrix().transpose();

    for (int i = 0; i < cfg.n_subjects; ++i) {
        const std::uint64_t sub_seed = seed_stream(cfg.seed, Stream::simulate_subject, i);
        auto eng = std::mt19937_64(sub_seed);
        std::poisson_distribution<int> pois(8.0);
        const Eigen::Index n = pois(eng) + 2;

        std::normal_distribution<double> n01(0.0, 1.0);
        Eigen::VectorXd t(n);
        for (Eigen::Index r = 0; r < n; ++r) t[r] = std::fabs(n01(eng));
        std::sort(t.data(), t.data() + n);

        Eigen::MatrixXd x(n, q);
        std::exponential_distribution<double> expo(1.0);
        for (Eigen::Index r = 0; r < n; ++r) {
            x(r, 0) = expo(eng);
            x(r, 1) = n01(eng);
            const double mean = std::min(1.0, std::max(0.0, 2.0 * normal_cdf(t[r] - 1.0)));
            std::bernoulli_distribution bern(mean);
            x(r, 2) = bern(eng) ? 1.0 : 0.0;
        }

        double w;
        if (gig_latent) {
            w = gig_sample(GigParams{1.0, 1.0, 1.0}, sub_seed);
        } else {
            std::gamma_distribution<double> gamma(0.5 * truth.nu, 2.0 / truth.nu);
            w = 1.0 / gamma(eng);
        }
        Eigen::MatrixXd z(n, p);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < p; ++c) z(r, c) = n01(eng);
        const auto lltS = dec_cholesky(t, truth.dec);
        const Eigen::MatrixXd noise =
            w * (Eigen::VectorXd::Ones(n) * truth.a_row) +
            std::sqrt(w) * (lltS.matrixL().toDenseMatrix() * z * Lpsi_t);

        Subject s;
        s.id = std::to_string(i + 1);
        s.t = t;
        s.x = x;
        s.y = x * truth.beta + noise;
        data.subjects.push_back(std::move(s));
    }
    return {std::move(data), std::move(truth)};
}

}  // namespace

Theta scheme_truth() {
    Theta t;
    t.beta.resize(3, 2);
    t.beta << 0.5, 0.5, 1.5, 1.5, -0.5, -0.5;
    t.a_row.resize(2);
    t.a_row << 2.0, -2.0;
    t.psi.resize(2, 2);
    t.psi << 1.0, -0.5, -0.5, 1.0;
    t.nu = 5.0;
    t.dec = DecParams{0.9, 0.8};
    return t;
}

std::pair<Dataset, Theta> gen_scheme12(const SchemeConfig& cfg) {
    if (cfg.scheme != Scheme::s1s2) throw DomainError("gen_scheme12: cfg.scheme must be s1s2");
    return generate(cfg, false);
}

std::pair<Dataset, Theta> gen_scheme3(const SchemeConfig& cfg) {
    if (cfg.scheme != Scheme::s3) throw DomainError("gen_scheme3: cfg.scheme must be s3");
    return generate(cfg, true);
}

}  // namespace regmvst

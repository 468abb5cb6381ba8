#pragma once

#include <cstdint>
#include <utility>

#include "regmvst/model.hpp"

namespace regmvst {

enum class Scheme { s1s2, s3 };

struct SchemeConfig {
    Scheme scheme = Scheme::s1s2;
    int n_subjects = 0;
    std::uint64_t seed = 0;
    bool use_custom_truth = false;
    Theta truth;  ///< generating values; defaults to scheme_truth()
};

/// The generating parameter values shared by all three schemes:
/// beta = [[0.5, 0.5], [1.5, 1.5], [-0.5, -0.5]], a_row = (2, -2),
/// psi = [[1, -0.5], [-0.5, 1]], nu = 5, rho = (0.9, 0.8).
Theta scheme_truth();

/// Schemes 1 and 2: n_i = Poisson(8) + 2 rows per subject; times are sorted
/// absolute standard normals; covariates are Exponential(1), standard normal,
/// and Bernoulli with time-linked mean clamp(2 Phi(|t| - 1)); errors are
/// matrix-variate skew-t with the DEC row correlation.
std::pair<Dataset, Theta> gen_scheme12(const SchemeConfig& cfg);

/// Scheme 3: identical except the latent scale W comes from GIG(1, 1, 1)
/// (the generalized-hyperbolic mixture) instead of Inverse-Gamma(nu/2, nu/2).
std::pair<Dataset, Theta> gen_scheme3(const SchemeConfig& cfg);

}  // namespace regmvst

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "regmvst/engine.hpp"

namespace regmvst {

struct BootstrapConfig {
    int B = 100;          ///< replicates, >= 2
    double level = 0.90;  ///< confidence level in (0, 1)
    FitConfig fit;
    std::uint64_t seed = 0;

    void validate() const;
};

struct BootstrapRow {
    std::string param;
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

struct BootstrapResult {
    std::vector<BootstrapRow> table;
    int replicates_used = 0;
    int replicates_failed = 0;
    FitResult full_fit;
};

/// Subject-level nonparametric bootstrap: resamples N subjects with
/// replacement per replicate (per-replicate derived seeds), refits, and forms
/// per-coordinate empirical quantile intervals using inclusive linear
/// interpolation on the order statistics (position (n-1) q between closest
/// ranks).  Replicates that fail to converge are dropped and counted; more
/// than B/2 failures aborts.
BootstrapResult bootstrap_ci(const Dataset& data, const BootstrapConfig& cfg);

/// Empirical quantile with the inclusive linear-interpolation definition.
double quantile_inclusive(std::vector<double> values, double q);

std::string bootstrap_table_csv(const BootstrapResult& result);
std::string bootstrap_result_json(const BootstrapResult& result, const BootstrapConfig& cfg);

}  // namespace regmvst

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "regmvst/model.hpp"

namespace regmvst {

enum class EngineKind { ecme, pecme, adecme };

enum class InitKind { defaults, random, explicit_theta };

/// Optional artificial per-subject delay, used to exercise the asynchronous
/// partial barrier deterministically (without it, thread scheduling alone
/// decides arrival order).
struct DelayModel {
    enum class Kind { none, uniform, one_slow } kind = Kind::none;
    double uniform_lo_ms = 0.0;  ///< uniform: per-subject delay bounds
    double uniform_hi_ms = 0.0;
    double base_ms = 0.0;        ///< one_slow: per-subject delay for every worker
    double slow_factor = 2.0;    ///< one_slow: multiplier applied to worker 0
};

struct FitConfig {
    EngineKind engine = EngineKind::ecme;
    double epsilon = 1e-7;  ///< stopping tolerance; 0 disables early stopping
    int max_iter = 1000;
    int workers_k = 1;
    double gamma = 1.0;  ///< ADECME wait fraction in (0, 1]
    double zeta = 0.05;  ///< probability of a full-synchronization iteration
    std::uint64_t seed = 0;
    InitKind init = InitKind::defaults;
    Theta init_theta;  ///< used when init == explicit_theta
    bool trace_loglik = false;
    bool record_iterates = false;
    DelayModel delay;
    int watchdog_max_lag = 100;  ///< abort if a worker stays silent this long

    void validate() const;
};

/// Wall-clock seconds attributed to each update, cumulative over iterations.
struct StepTimings {
    double e_step = 0.0;
    double dec = 0.0;
    double psi = 0.0;
    double a = 0.0;
    double beta = 0.0;
    double nu = 0.0;
    double total = 0.0;
};

struct FitResult {
    Theta theta_hat;
    int iterations = 0;
    bool converged = false;
    long comm_rounds = 0;  ///< manager-worker message exchanges
    std::vector<double> loglik_trace;  ///< one entry per iterate (when traced)
    double initial_loglik = 0.0;       ///< log-likelihood at theta^(0) (when traced)
    bool has_initial_loglik = false;
    StepTimings timings;
    std::vector<StepTimings> per_iteration;
    std::vector<std::string> flags;
    std::vector<long> stale_lag_histogram;  ///< index = lag, value = count over (iter, worker)
    std::vector<Eigen::VectorXd> iterates;  ///< theta^(0), theta^(1), ... (when recorded)
};

/// max_i |theta_next_i - theta_prev_i| < epsilon over the flattened vector
/// (beta row-major, a_row, psi lower triangle, nu, rho1, rho2).
bool check_convergence(const Theta& theta_prev, const Theta& theta_next, double epsilon);

/// Initial values: pooled OLS beta, +/-0.01 skewness (signs from the seed),
/// pooled residual covariance Psi, nu = 10, rho = (0.5, 0.5).  random_jitter
/// adds N(0, 0.1^2) noise to beta and draws nu uniformly from [3, 30].
Theta default_init(const Dataset& data, std::uint64_t seed, bool random_jitter = false,
                   std::vector<std::string>* flags = nullptr);

FitResult fit_ecme(const Dataset& data, const FitConfig& cfg);
FitResult fit_pecme(const Dataset& data, const FitConfig& cfg);
FitResult fit_adecme(const Dataset& data, const FitConfig& cfg);

/// Dispatches on cfg.engine.
FitResult fit(const Dataset& data, const FitConfig& cfg);

/// JSON serialization of a fit (pretty, stable key order).
std::string fit_result_to_json(const FitResult& result, const FitConfig& cfg);

/// Per-iteration timing breakdown as CSV
/// (iteration,e_step_s,beta_s,nu_s,a_s,psi_s,dec_s,total_s).
std::string fit_timings_csv(const FitResult& result);

const char* engine_name(EngineKind kind);
EngineKind engine_from_name(const std::string& name);

}  // namespace regmvst

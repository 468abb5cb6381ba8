#include "regmvst/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <future>
#include <mutex>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "regmvst/cm.hpp"
#include "regmvst/errors.hpp"
#include "regmvst/estep.hpp"
#include "regmvst/numeric.hpp"
#include "regmvst/rng.hpp"

namespace regmvst {

using ordered_json = nlohmann::ordered_json;

void FitConfig::validate() const {
    if (epsilon < 0.0) throw DomainError("FitConfig: epsilon must be >= 0");
    if (max_iter < 1) throw DomainError("FitConfig: max_iter must be >= 1");
    if (workers_k < 1) throw DomainError("FitConfig: workers_k must be >= 1");
    if (engine == EngineKind::adecme) {
        if (!(gamma > 0.0 && gamma <= 1.0))
            throw DomainError("FitConfig: gamma must lie in (0, 1]");
        if (!(zeta >= 0.0 && zeta < 1.0)) throw DomainError("FitConfig: zeta must lie in [0, 1)");
        if (static_cast<int>(std::ceil(gamma * workers_k)) < 1)
            throw DomainError("FitConfig: ceil(gamma k) must be >= 1");
    }
}

bool check_convergence(const Theta& theta_prev, const Theta& theta_next, double epsilon) {
    if (theta_prev.beta.rows() != theta_next.beta.rows() ||
        theta_prev.beta.cols() != theta_next.beta.cols())
        throw DomainError("check_convergence: shape mismatch");
    const Eigen::VectorXd d = theta_next.flatten() - theta_prev.flatten();
    return d.cwiseAbs().maxCoeff() < epsilon;
}

Theta default_init(const Dataset& data, std::uint64_t seed, bool random_jitter,
                   std::vector<std::string>* flags) {
    data.validate();
    const Eigen::Index q = data.q, p = data.p;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(q, q);
    Eigen::MatrixXd xty = Eigen::MatrixXd::Zero(q, p);
    for (const auto& s : data.subjects) {
        gram += s.x.transpose() * s.x;
        xty += s.x.transpose() * s.y;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
        gram.diagonal().array() += 1e-6 * std::max(1.0, gram.trace() / static_cast<double>(q));
        llt.compute(gram);
        if (llt.info() != Eigen::Success)
            throw EstimationError("default_init: pooled Gram matrix unusable even with ridge");
        if (flags) flags->push_back("init_ridge");
    }
    Theta theta;
    theta.beta = llt.solve(xty);

    Eigen::MatrixXd resid_cov = Eigen::MatrixXd::Zero(p, p);
    for (const auto& s : data.subjects) {
        const Eigen::MatrixXd r = s.y - s.x * theta.beta;
        resid_cov += r.transpose() * r;
    }
    resid_cov /= static_cast<double>(data.total_rows());
    resid_cov = 0.5 * (resid_cov + resid_cov.transpose()).eval();
    Eigen::LLT<Eigen::MatrixXd> pllt(resid_cov);
    if (pllt.info() != Eigen::Success) {
        resid_cov.diagonal().array() += 1e-6;
        if (flags) flags->push_back("init_psi_jitter");
    }
    theta.psi = resid_cov;

    // Small skewness perturbation; entry signs from the seed bits.
    std::uint64_t bits = seed_stream(seed, Stream::init_random, 0);
    theta.a_row.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        theta.a_row[j] = ((bits >> j) & 1u) ? 0.01 : -0.01;
    }
    theta.nu = 10.0;
    theta.dec = DecParams{0.5, 0.5};

    if (random_jitter) {
        auto eng = make_engine(seed, Stream::init_random, 1);
        std::normal_distribution<double> n01(0.0, 0.1);
        for (Eigen::Index r = 0; r < q; ++r)
            for (Eigen::Index c = 0; c < p; ++c) theta.beta(r, c) += n01(eng);
        std::uniform_real_distribution<double> unif(3.0, 30.0);
        theta.nu = unif(eng);
    }
    return theta;
}

namespace {

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double toc() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

// One worker's subjects, factor caches, per-pass artificial delay, and the
// latent moments kept from the last E pass for the PECME refresh rounds.
struct PartitionRunner {
    std::vector<const Subject*> subjects;
    std::vector<DecFactorCache> caches;
    double pass_delay_ms = 0.0;
    std::vector<double> last_a, last_b;
    Eigen::Index q = 0, p = 0;

    PartitionStats stats;
    Eigen::RowVectorXd out_sa1;
    double out_sa2 = 0.0;
    Eigen::MatrixXd out_spsi;
    std::vector<double> out_grid;

    void sleep_pass() const {
        if (pass_delay_ms > 0.0)
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(pass_delay_ms));
    }

    void estep_pass(const Theta& theta) {
        sleep_pass();
        CompensatedMatrixSum sb1(q, q), sb2(q, p), spsi(p, p), sa1(1, p);
        ExactSum snu, sa2;
        Eigen::Index rows = 0;
        last_a.resize(subjects.size());
        last_b.resize(subjects.size());
        for (std::size_t i = 0; i < subjects.size(); ++i) {
            const SubjectStats st = estep_subject(*subjects[i], theta, &caches[i]);
            last_a[i] = st.a;
            last_b[i] = st.b;
            sb1.add(st.s_beta1);
            sb2.add(st.s_beta2);
            spsi.add(st.s_psi);
            sa1.add(st.s_a1);
            snu.add(st.s_nu);
            sa2.add(st.s_a2);
            rows += st.n_rows;
        }
        stats.S_beta1 = sb1.value();
        stats.S_beta2 = sb2.value();
        stats.S_psi = spsi.value();
        stats.S_a1 = sa1.value();
        stats.S_nu = snu.value();
        stats.S_a2 = sa2.value();
        stats.total_rows = rows;
        stats.subject_count = static_cast<Eigen::Index>(subjects.size());
    }

    void refresh_A_pass(const Theta& partial) {
        sleep_pass();
        CompensatedMatrixSum sa1(1, p);
        ExactSum sa2;
        for (std::size_t i = 0; i < subjects.size(); ++i) {
            auto [s_a1, s_a2] = estep_refresh_A_stats(*subjects[i], partial, last_a[i], &caches[i]);
            sa1.add(s_a1);
            sa2.add(s_a2);
        }
        out_sa1 = sa1.value();
        out_sa2 = sa2.value();
    }

    void refresh_Psi_pass(const Theta& partial) {
        sleep_pass();
        CompensatedMatrixSum spsi(p, p);
        for (std::size_t i = 0; i < subjects.size(); ++i)
            spsi.add(estep_refresh_Psi_stats(*subjects[i], partial, last_a[i], last_b[i],
                                             &caches[i]));
        out_spsi = spsi.value();
    }

    void grid_rho1_pass(const Theta& grid_theta) {
        sleep_pass();
        out_grid = grid_loglik_rho1(subjects, grid_theta, &caches);
    }

    void grid_rho2_pass(const Theta& grid_theta, double rho1_new) {
        sleep_pass();
        out_grid = grid_loglik_rho2(subjects, grid_theta, rho1_new, &caches);
    }

    // The whole ADECME distributed E step: moments, every sufficient
    // statistic, and both grid axes, all at the supplied theta.
    PartitionStats adecme_pass(const Theta& theta, long epoch) {
        estep_pass(theta);
        PartitionStats out = stats;
        out.grid = grid_loglik_partition(subjects, theta, &caches);
        out.stamp = epoch;
        return out;
    }
};

std::vector<PartitionRunner> make_runners(const Dataset& data, const FitConfig& cfg, int k) {
    std::vector<PartitionRunner> runners(k);
    const std::size_t n = data.subjects.size();
    const std::size_t chunk = (n + k - 1) / k;
    for (int w = 0; w < k; ++w) {
        auto& r = runners[w];
        const std::size_t lo = std::min(n, w * chunk);
        const std::size_t hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) r.subjects.push_back(&data.subjects[i]);
        r.caches.resize(r.subjects.size());
        r.q = data.q;
        r.p = data.p;
        double per_subject_ms = 0.0;
        switch (cfg.delay.kind) {
            case DelayModel::Kind::none:
                break;
            case DelayModel::Kind::uniform: {
                auto eng = make_engine(cfg.seed, Stream::worker_delay, w);
                std::uniform_real_distribution<double> unif(cfg.delay.uniform_lo_ms,
                                                            cfg.delay.uniform_hi_ms);
                for (std::size_t i = 0; i < r.subjects.size(); ++i)
                    r.pass_delay_ms += unif(eng);
                break;
            }
            case DelayModel::Kind::one_slow:
                per_subject_ms = cfg.delay.base_ms;
                if (k > 1 && w == 0) per_subject_ms *= cfg.delay.slow_factor;
                r.pass_delay_ms = per_subject_ms * static_cast<double>(r.subjects.size());
                break;
        }
    }
    return runners;
}

template <typename F>
void parallel_over(std::vector<PartitionRunner>& runners, bool threaded, F&& f) {
    if (!threaded || runners.size() == 1) {
        for (auto& r : runners) f(r);
        return;
    }
    std::vector<std::future<void>> futs;
    futs.reserve(runners.size());
    for (auto& r : runners)
        futs.push_back(std::async(std::launch::async, [&f, &r] { f(r); }));
    for (auto& fu : futs) fu.get();
}

Theta initial_theta(const Dataset& data, const FitConfig& cfg, std::vector<std::string>* flags) {
    switch (cfg.init) {
        case InitKind::defaults:
            return default_init(data, cfg.seed, false, flags);
        case InitKind::random:
            return default_init(data, cfg.seed, true, flags);
        case InitKind::explicit_theta:
            cfg.init_theta.validate();
            return cfg.init_theta;
    }
    throw DomainError("FitConfig: unknown init kind");
}

void ensure_finite(const Theta& theta, int iteration) {
    if (!theta.flatten().allFinite())
        throw EstimationError("non-finite parameter update at iteration " +
                              std::to_string(iteration));
}

struct FlagCounters {
    int nu_clamped = 0;
    int psi_projected = 0;

    void emit(std::vector<std::string>& flags) const {
        if (nu_clamped > 0) flags.push_back("nu_clamped:" + std::to_string(nu_clamped));
        if (psi_projected > 0)
            flags.push_back("psi_spd_projection:" + std::to_string(psi_projected));
    }
};

double combine_axis_entry(const std::vector<PartitionStats>& parts, bool rho1_axis,
                          std::size_t g) {
    ExactSum s;
    for (const auto& pt : parts)
        s.add(rho1_axis ? pt.grid.rho1_values[g] : pt.grid.rho2_values[g]);
    return s.value();
}

FitResult run_synchronous(const Dataset& data, const FitConfig& cfg, bool threaded) {
    data.validate();
    cfg.validate();
    FitResult res;
    Theta theta = initial_theta(data, cfg, &res.flags);
    const int k = threaded ? cfg.workers_k : 1;
    auto runners = make_runners(data, cfg, k);
    FlagCounters counters;
    const auto& grid = dec_grid();

    if (cfg.trace_loglik) {
        res.initial_loglik = observed_loglik(data, theta);
        res.has_initial_loglik = true;
    }
    if (cfg.record_iterates) res.iterates.push_back(theta.flatten());

    for (int t = 0; t < cfg.max_iter; ++t) {
        const Timer iter_timer;
        StepTimings it;

        // (1) E step: moments plus beta / nu sufficient statistics.
        {
            const Timer tm;
            parallel_over(runners, threaded, [&](PartitionRunner& r) { r.estep_pass(theta); });
            it.e_step = tm.toc();
        }
        if (threaded) ++res.comm_rounds;
        std::vector<PartitionStats> parts;
        parts.reserve(runners.size());
        for (auto& r : runners) parts.push_back(r.stats);
        const AggregateStats agg = aggregate_partitions(parts);

        Eigen::MatrixXd beta_new;
        {
            const Timer tm;
            beta_new = update_beta(agg);
            it.beta = tm.toc();
        }
        double nu_new;
        {
            const Timer tm;
            bool clamped = false;
            nu_new = update_nu(agg, &clamped);
            if (clamped) ++counters.nu_clamped;
            it.nu = tm.toc();
        }

        // (2) A statistics with the refreshed beta.
        Eigen::RowVectorXd a_new;
        {
            const Timer tm;
            Theta partial = theta;
            partial.beta = beta_new;
            parallel_over(runners, threaded,
                          [&](PartitionRunner& r) { r.refresh_A_pass(partial); });
            if (threaded) ++res.comm_rounds;
            AggregateStats agg_a;
            CompensatedMatrixSum sa1(1, data.p);
            ExactSum sa2;
            for (auto& r : runners) {
                sa1.add(r.out_sa1);
                sa2.add(r.out_sa2);
            }
            agg_a.S_a1 = sa1.value();
            agg_a.S_a2 = sa2.value();
            a_new = update_A(agg_a);
            it.a = tm.toc();
        }

        // (3) Psi statistics with refreshed beta and A.
        Eigen::MatrixXd psi_new;
        {
            const Timer tm;
            Theta partial = theta;
            partial.beta = beta_new;
            partial.a_row = a_new;
            parallel_over(runners, threaded,
                          [&](PartitionRunner& r) { r.refresh_Psi_pass(partial); });
            if (threaded) ++res.comm_rounds;
            AggregateStats agg_p;
            CompensatedMatrixSum spsi(data.p, data.p);
            for (auto& r : runners) spsi.add(r.out_spsi);
            agg_p.S_psi = spsi.value();
            agg_p.total_rows = data.total_rows();
            bool projected = false;
            psi_new = update_Psi(agg_p, &projected);
            if (projected) ++counters.psi_projected;
            it.psi = tm.toc();
        }

        // (4)-(5) Sequential grid searches over rho1 then rho2, with the
        // refreshed beta, nu, A, Psi and the previous rho2 / fresh rho1.
        DecParams dec_new;
        {
            const Timer tm;
            Theta grid_theta;
            grid_theta.beta = beta_new;
            grid_theta.a_row = a_new;
            grid_theta.psi = psi_new;
            grid_theta.nu = nu_new;
            grid_theta.dec = theta.dec;
            parallel_over(runners, threaded,
                          [&](PartitionRunner& r) { r.grid_rho1_pass(grid_theta); });
            if (threaded) ++res.comm_rounds;
            GridLoglik sums;
            sums.rho1_values.resize(grid.size());
            for (std::size_t g = 0; g < grid.size(); ++g) {
                ExactSum s;
                for (auto& r : runners) s.add(r.out_grid[g]);
                sums.rho1_values[g] = s.value();
            }
            sums.rho2_values = sums.rho1_values;  // placeholder for the rho1-only argmax
            dec_new.rho1 = select_dec(sums).rho1;

            parallel_over(runners, threaded,
                          [&](PartitionRunner& r) { r.grid_rho2_pass(grid_theta, dec_new.rho1); });
            if (threaded) ++res.comm_rounds;
            sums.rho2_values.resize(grid.size());
            for (std::size_t g = 0; g < grid.size(); ++g) {
                ExactSum s;
                for (auto& r : runners) s.add(r.out_grid[g]);
                sums.rho2_values[g] = s.value();
            }
            dec_new.rho2 = select_dec(sums).rho2;
            it.dec = tm.toc();
        }

        Theta theta_new;
        theta_new.beta = beta_new;
        theta_new.a_row = a_new;
        theta_new.psi = psi_new;
        theta_new.nu = nu_new;
        theta_new.dec = dec_new;
        ensure_finite(theta_new, t);
        const bool converged = check_convergence(theta, theta_new, cfg.epsilon);
        theta = theta_new;
        res.iterations = t + 1;
        it.total = iter_timer.toc();
        res.per_iteration.push_back(it);
        res.timings.e_step += it.e_step;
        res.timings.beta += it.beta;
        res.timings.nu += it.nu;
        res.timings.a += it.a;
        res.timings.psi += it.psi;
        res.timings.dec += it.dec;
        res.timings.total += it.total;
        if (cfg.trace_loglik) res.loglik_trace.push_back(observed_loglik(data, theta));
        if (cfg.record_iterates) res.iterates.push_back(theta.flatten());
        if (converged) {
            res.converged = true;
            break;
        }
    }
    res.theta_hat = theta;
    counters.emit(res.flags);
    return res;
}

// ---- ADECME ----------------------------------------------------------------

struct AsyncResult {
    int worker = -1;
    PartitionStats stats;
};

struct AsyncShared {
    std::mutex mu;
    std::condition_variable cv_workers;
    Theta theta;
    long epoch = -1;
    bool stop = false;

    std::mutex qmu;
    std::condition_variable cv_manager;
    std::vector<AsyncResult> queue;
    std::exception_ptr worker_error;
};

void async_worker_main(int w, PartitionRunner* runner, AsyncShared* shared) {
    long done = -1;
    try {
        while (true) {
            Theta th;
            long ep;
            {
                std::unique_lock<std::mutex> lk(shared->mu);
                shared->cv_workers.wait(lk, [&] { return shared->stop || shared->epoch > done; });
                if (shared->stop) return;
                th = shared->theta;
                ep = shared->epoch;
            }
            PartitionStats ps = runner->adecme_pass(th, ep);
            {
                std::lock_guard<std::mutex> lk(shared->qmu);
                shared->queue.push_back(AsyncResult{w, std::move(ps)});
            }
            shared->cv_manager.notify_one();
            done = ep;
        }
    } catch (...) {
        {
            std::lock_guard<std::mutex> lk(shared->qmu);
            shared->worker_error = std::current_exception();
        }
        shared->cv_manager.notify_one();
    }
}

FitResult run_adecme(const Dataset& data, const FitConfig& cfg) {
    data.validate();
    cfg.validate();
    FitResult res;
    Theta theta = initial_theta(data, cfg, &res.flags);
    const int k = cfg.workers_k;
    const int m = std::max(1, static_cast<int>(std::ceil(cfg.gamma * k)));
    auto runners = make_runners(data, cfg, k);
    FlagCounters counters;
    const auto& grid = dec_grid();

    if (cfg.trace_loglik) {
        res.initial_loglik = observed_loglik(data, theta);
        res.has_initial_loglik = true;
    }
    if (cfg.record_iterates) res.iterates.push_back(theta.flatten());

    AsyncShared shared;
    std::vector<std::thread> threads;
    threads.reserve(k);
    for (int w = 0; w < k; ++w)
        threads.emplace_back(async_worker_main, w, &runners[w], &shared);
    auto stop_workers = [&] {
        {
            std::lock_guard<std::mutex> lk(shared.mu);
            shared.stop = true;
        }
        shared.cv_workers.notify_all();
        for (auto& th : threads)
            if (th.joinable()) th.join();
    };

    std::vector<PartitionStats> cache(k);
    std::vector<long> last_seen(k, 0);
    auto sync_eng = make_engine(cfg.seed, Stream::engine_sync);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    try {
        for (int t = 0; t < cfg.max_iter; ++t) {
            const Timer iter_timer;
            StepTimings it;
            // Iteration 0 is a full barrier; afterwards the manager waits for
            // all workers only with probability zeta (assumption A1).
            const bool full_sync = (t == 0) || (unif(sync_eng) < cfg.zeta);
            const int required = full_sync ? k : m;
            {
                std::lock_guard<std::mutex> lk(shared.mu);
                shared.theta = theta;
                shared.epoch = t;
            }
            shared.cv_workers.notify_all();
            ++res.comm_rounds;

            const Timer te;
            auto fresh_count = [&] {
                int c = 0;
                for (int w = 0; w < k; ++w)
                    if (cache[w].stamp == t) ++c;
                return c;
            };
            while (fresh_count() < required) {
                std::unique_lock<std::mutex> lk(shared.qmu);
                shared.cv_manager.wait_for(lk, std::chrono::milliseconds(100), [&] {
                    return !shared.queue.empty() || shared.worker_error;
                });
                if (shared.worker_error) std::rethrow_exception(shared.worker_error);
                std::vector<AsyncResult> drained;
                drained.swap(shared.queue);
                lk.unlock();
                for (auto& r : drained) {
                    if (r.stats.stamp > cache[r.worker].stamp)
                        cache[r.worker] = std::move(r.stats);
                    last_seen[r.worker] = t;
                }
                for (int w = 0; w < k; ++w)
                    if (t - last_seen[w] > cfg.watchdog_max_lag)
                        throw EstimationError("ADECME watchdog: worker " + std::to_string(w) +
                                              " silent for more than " +
                                              std::to_string(cfg.watchdog_max_lag) +
                                              " iterations");
            }
            it.e_step = te.toc();

            for (int w = 0; w < k; ++w) {
                const long lag = t - cache[w].stamp;
                if (static_cast<long>(res.stale_lag_histogram.size()) <= lag)
                    res.stale_lag_histogram.resize(lag + 1, 0);
                ++res.stale_lag_histogram[lag];
            }

            const AggregateStats agg = aggregate_partitions(cache);
            Eigen::MatrixXd beta_new;
            {
                const Timer tm;
                beta_new = update_beta(agg);
                it.beta = tm.toc();
            }
            double nu_new;
            {
                const Timer tm;
                bool clamped = false;
                nu_new = update_nu(agg, &clamped);
                if (clamped) ++counters.nu_clamped;
                it.nu = tm.toc();
            }
            Eigen::RowVectorXd a_new;
            {
                const Timer tm;
                a_new = update_A(agg);
                it.a = tm.toc();
            }
            Eigen::MatrixXd psi_new;
            {
                const Timer tm;
                bool projected = false;
                psi_new = update_Psi(agg, &projected);
                if (projected) ++counters.psi_projected;
                it.psi = tm.toc();
            }
            DecParams dec_new;
            {
                const Timer tm;
                GridLoglik sums;
                sums.rho1_values.resize(grid.size());
                sums.rho2_values.resize(grid.size());
                for (std::size_t g = 0; g < grid.size(); ++g) {
                    sums.rho1_values[g] = combine_axis_entry(cache, true, g);
                    sums.rho2_values[g] = combine_axis_entry(cache, false, g);
                }
                dec_new = select_dec(sums);
                it.dec = tm.toc();
            }

            Theta theta_new;
            theta_new.beta = beta_new;
            theta_new.a_row = a_new;
            theta_new.psi = psi_new;
            theta_new.nu = nu_new;
            theta_new.dec = dec_new;
            ensure_finite(theta_new, t);
            const bool converged = check_convergence(theta, theta_new, cfg.epsilon);
            theta = theta_new;
            res.iterations = t + 1;
            it.total = iter_timer.toc();
            res.per_iteration.push_back(it);
            res.timings.e_step += it.e_step;
            res.timings.beta += it.beta;
            res.timings.nu += it.nu;
            res.timings.a += it.a;
            res.timings.psi += it.psi;
            res.timings.dec += it.dec;
            res.timings.total += it.total;
            if (cfg.trace_loglik) res.loglik_trace.push_back(observed_loglik(data, theta));
            if (cfg.record_iterates) res.iterates.push_back(theta.flatten());
            if (converged) {
                res.converged = true;
                break;
            }
        }
    } catch (...) {
        stop_workers();
        throw;
    }
    stop_workers();
    res.theta_hat = theta;
    counters.emit(res.flags);
    return res;
}

}  // namespace

FitResult fit_ecme(const Dataset& data, const FitConfig& cfg) {
    if (cfg.engine != EngineKind::ecme) throw DomainError("fit_ecme: cfg.engine must be ecme");
    return run_synchronous(data, cfg, false);
}

FitResult fit_pecme(const Dataset& data, const FitConfig& cfg) {
    if (cfg.engine != EngineKind::pecme) throw DomainError("fit_pecme: cfg.engine must be pecme");
    return run_synchronous(data, cfg, true);
}

FitResult fit_adecme(const Dataset& data, const FitConfig& cfg) {
    if (cfg.engine != EngineKind::adecme)
        throw DomainError("fit_adecme: cfg.engine must be adecme");
    return run_adecme(data, cfg);
}

FitResult fit(const Dataset& data, const FitConfig& cfg) {
    switch (cfg.engine) {
        case EngineKind::ecme:
            return fit_ecme(data, cfg);
        case EngineKind::pecme:
            return fit_pecme(data, cfg);
        case EngineKind::adecme:
            return fit_adecme(data, cfg);
    }
    throw DomainError("fit: unknown engine");
}

const char* engine_name(EngineKind kind) {
    switch (kind) {
        case EngineKind::ecme:
            return "ecme";
        case EngineKind::pecme:
            return "pecme";
        case EngineKind::adecme:
            return "adecme";
    }
    return "unknown";
}

EngineKind engine_from_name(const std::string& name) {
    if (name == "ecme") return EngineKind::ecme;
    if (name == "pecme") return EngineKind::pecme;
    if (name == "adecme") return EngineKind::adecme;
    throw DomainError("unknown engine '" + name + "' (expected ecme, pecme, or adecme)");
}

std::string fit_result_to_json(const FitResult& result, const FitConfig& cfg) {
    ordered_json j;
    j["engine"] = engine_name(cfg.engine);
    j["workers"] = cfg.workers_k;
    j["gamma"] = cfg.gamma;
    j["zeta"] = cfg.zeta;
    j["epsilon"] = cfg.epsilon;
    j["max_iter"] = cfg.max_iter;
    j["seed"] = cfg.seed;
    j["iterations"] = result.iterations;
    j["converged"] = result.converged;
    j["comm_rounds"] = result.comm_rounds;
    j["theta"] = ordered_json::parse(theta_to_json(result.theta_hat));
    if (result.has_initial_loglik) j["initial_loglik"] = result.initial_loglik;
    if (!result.loglik_trace.empty()) {
        j["final_loglik"] = result.loglik_trace.back();
        j["loglik_trace"] = result.loglik_trace;
    }
    ordered_json timings;
    timings["e_step"] = result.timings.e_step;
    timings["dec"] = result.timings.dec;
    timings["psi"] = result.timings.psi;
    timings["a"] = result.timings.a;
    timings["beta"] = result.timings.beta;
    timings["nu"] = result.timings.nu;
    timings["total"] = result.timings.total;
    j["step_timings_seconds"] = timings;
    j["flags"] = result.flags;
    j["stale_lag_histogram"] = result.stale_lag_histogram;
    return j.dump(2) + "\n";
}

std::string fit_timings_csv(const FitResult& result) {
    std::string out = "iteration,e_step_s,beta_s,nu_s,a_s,psi_s,dec_s,total_s\n";
    char buf[256];
    for (std::size_t i = 0; i < result.per_iteration.size(); ++i) {
        const auto& it = result.per_iteration[i];
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", i + 1,
                      it.e_step, it.beta, it.nu, it.a, it.psi, it.dec, it.total);
        out += buf;
    }
    return out;
}

}  // namespace regmvst

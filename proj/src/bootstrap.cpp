#include "regmvst/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <optional>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "regmvst/errors.hpp"
#include "regmvst/rng.hpp"

namespace regmvst {

using ordered_json = nlohmann::ordered_json;

void BootstrapConfig::validate() const {
    if (B < 2) throw DomainError("BootstrapConfig: B must be >= 2");
    if (!(level > 0.0 && level < 1.0)) throw DomainError("BootstrapConfig: level must be in (0,1)");
    fit.validate();
}

double quantile_inclusive(std::vector<double> values, double q) {
    if (values.empty()) throw DomainError("quantile: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile: q must be in [0,1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    // difference form: exact when the bracketing order statistics coincide
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

namespace {

Dataset resample_subjects(const Dataset& data, std::uint64_t seed, int replicate) {
    auto eng = make_engine(seed, Stream::bootstrap_resample, replicate);
    std::uniform_int_distribution<std::size_t> pick(0, data.subjects.size() - 1);
    Dataset out;
    out.p = data.p;
    out.q = data.q;
    out.subjects.reserve(data.subjects.size());
    for (std::size_t i = 0; i < data.subjects.size(); ++i)
        out.subjects.push_back(data.subjects[pick(eng)]);
    return out;
}

}  // namespace

BootstrapResult bootstrap_ci(const Dataset& data, const BootstrapConfig& cfg) {
    cfg.validate();
    data.validate();

    BootstrapResult result;
    result.full_fit = fit(data, cfg.fit);
    const Eigen::VectorXd point = result.full_fit.theta_hat.flatten();
    const auto names = result.full_fit.theta_hat.flat_names();

    // Replicates are independent given their derived seeds, so they may run
    // concurrently; results are collected by replicate index.
    std::vector<std::optional<Eigen::VectorXd>> reps(cfg.B);
    const unsigned conc = std::max(1u, std::min(std::thread::hardware_concurrency(), 8u));
    std::vector<std::future<void>> futs;
    for (unsigned w = 0; w < conc; ++w) {
        futs.push_back(std::async(std::launch::async, [&, w] {
            for (int b = static_cast<int>(w); b < cfg.B; b += static_cast<int>(conc)) {
                try {
                    const Dataset resampled = resample_subjects(data, cfg.seed, b);
                    FitConfig fc = cfg.fit;
                    fc.seed = seed_stream(cfg.seed, Stream::bootstrap_fit, b);
                    const FitResult r = fit(resampled, fc);
                    if (r.converged) reps[b] = r.theta_hat.flatten();
                } catch (const std::exception&) {
                    // dropped and counted below
                }
            }
        }));
    }
    for (auto& f : futs) f.get();

    std::vector<Eigen::VectorXd> kept;
    for (auto& r : reps)
        if (r) kept.push_back(std::move(*r));
    result.replicates_used = static_cast<int>(kept.size());
    result.replicates_failed = cfg.B - result.replicates_used;
    if (result.replicates_failed > cfg.B / 2)
        throw EstimationError("bootstrap: " + std::to_string(result.replicates_failed) + " of " +
                              std::to_string(cfg.B) +
                              " replicates failed to converge; data or settings unsuitable");

    const double alpha = 1.0 - cfg.level;
    for (Eigen::Index j = 0; j < point.size(); ++j) {
        std::vector<double> coord(kept.size());
        for (std::size_t b = 0; b < kept.size(); ++b) coord[b] = kept[b][j];
        BootstrapRow row;
        row.param = names[j];
        row.point = point[j];
        row.lo = quantile_inclusive(coord, 0.5 * alpha);
        row.hi = quantile_inclusive(coord, 1.0 - 0.5 * alpha);
        result.table.push_back(std::move(row));
    }
    return result;
}

std::string bootstrap_table_csv(const BootstrapResult& result) {
    std::string out = "param,point,lo,hi\n";
    char buf[160];
    for (const auto& row : result.table) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g\n", row.param.c_str(), row.point,
                      row.lo, row.hi);
        out += buf;
    }
    return out;
}

std::string bootstrap_result_json(const BootstrapResult& result, const BootstrapConfig& cfg) {
    ordered_json j;
    j["b"] = cfg.B;
    j["level"] = cfg.level;
    j["seed"] = cfg.seed;
    j["engine"] = engine_name(cfg.fit.engine);
    j["replicates_used"] = result.replicates_used;
    j["replicates_failed"] = result.replicates_failed;
    ordered_json rows = ordered_json::array();
    for (const auto& row : result.table) {
        ordered_json r;
        r["param"] = row.param;
        r["point"] = row.point;
        r["lo"] = row.lo;
        r["hi"] = row.hi;
        rows.push_back(r);
    }
    j["intervals"] = rows;
    return j.dump(2) + "\n";
}

}  // namespace regmvst

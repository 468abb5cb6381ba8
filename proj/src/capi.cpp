#include "regmvst/regmvst.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "regmvst/bootstrap.hpp"
#include "regmvst/engine.hpp"
#include "regmvst/errors.hpp"
#include "regmvst/info.hpp"
#include "regmvst/model.hpp"
#include "regmvst/simgen.hpp"

using regmvst::Dataset;
using regmvst::FitConfig;
using regmvst::FitResult;
using regmvst::Theta;
using ordered_json = nlohmann::ordered_json;

struct regmvst_dataset {
    Dataset data;
};
struct regmvst_theta {
    Theta theta;
};
struct regmvst_fit_result {
    FitResult result;
    FitConfig config;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename F>
regmvst_status guarded(F&& f) {
    try {
        f();
        return REGMVST_OK;
    } catch (const regmvst::ParseError& e) {
        g_last_error = e.what();
        return REGMVST_ERR_PARSE;
    } catch (const regmvst::IoError& e) {
        g_last_error = e.what();
        return REGMVST_ERR_IO;
    } catch (const regmvst::DomainError& e) {
        g_last_error = e.what();
        return REGMVST_ERR_DOMAIN;
    } catch (const regmvst::DecompositionError& e) {
        g_last_error = e.what();
        return REGMVST_ERR_DECOMPOSE;
    } catch (const regmvst::EstimationError& e) {
        g_last_error = e.what();
        return REGMVST_ERR_ESTIMATION;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return REGMVST_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return REGMVST_ERR_INTERNAL;
    }
}

ordered_json parse_json(const char* text, const char* what) {
    if (!text) throw regmvst::DomainError(std::string(what) + ": null JSON");
    try {
        return ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw regmvst::ParseError(std::string(what) + ": " + e.what());
    }
}

FitConfig fit_config_from_json(const ordered_json& j) {
    FitConfig cfg;
    if (j.contains("engine")) cfg.engine = regmvst::engine_from_name(j.at("engine").get<std::string>());
    if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
    if (j.contains("max_iter")) cfg.max_iter = j.at("max_iter").get<int>();
    if (j.contains("workers")) cfg.workers_k = j.at("workers").get<int>();
    if (j.contains("gamma")) cfg.gamma = j.at("gamma").get<double>();
    if (j.contains("zeta")) cfg.zeta = j.at("zeta").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("trace_loglik")) cfg.trace_loglik = j.at("trace_loglik").get<bool>();
    if (j.contains("init")) {
        const std::string init = j.at("init").get<std::string>();
        if (init == "default")
            cfg.init = regmvst::InitKind::defaults;
        else if (init == "random")
            cfg.init = regmvst::InitKind::random;
        else if (init == "explicit")
            cfg.init = regmvst::InitKind::explicit_theta;
        else
            throw regmvst::DomainError("fit config: unknown init '" + init + "'");
    }
    if (cfg.init == regmvst::InitKind::explicit_theta) {
        if (!j.contains("init_theta"))
            throw regmvst::DomainError("fit config: explicit init requires init_theta");
        cfg.init_theta = regmvst::theta_from_json(j.at("init_theta").dump());
    }
    if (j.contains("delay")) {
        const auto& d = j.at("delay");
        const std::string kind = d.value("kind", "none");
        if (kind == "none")
            cfg.delay.kind = regmvst::DelayModel::Kind::none;
        else if (kind == "uniform")
            cfg.delay.kind = regmvst::DelayModel::Kind::uniform;
        else if (kind == "one-slow")
            cfg.delay.kind = regmvst::DelayModel::Kind::one_slow;
        else
            throw regmvst::DomainError("fit config: unknown delay kind '" + kind + "'");
        cfg.delay.uniform_lo_ms = d.value("lo_ms", 0.0);
        cfg.delay.uniform_hi_ms = d.value("hi_ms", 0.0);
        cfg.delay.base_ms = d.value("base_ms", 0.0);
        cfg.delay.slow_factor = d.value("slow_factor", 2.0);
    }
    return cfg;
}

Eigen::MatrixXd matrix_from_json(const ordered_json& j, const char* key, Eigen::Index rows,
                                 Eigen::Index cols) {
    const auto v = j.at(key).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(v.size()) != rows * cols)
        throw regmvst::ParseError(std::string("info params: '") + key + "' must have length " +
                                  std::to_string(rows * cols));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[r * cols + c];
    return m;
}

}  // namespace

extern "C" {

const char* regmvst_version(void) { return "0.1.0"; }

const char* regmvst_last_error(void) { return g_last_error.c_str(); }

void regmvst_string_free(char* s) { std::free(s); }

regmvst_status regmvst_dataset_read_csv(const char* path, regmvst_dataset** out) {
    return guarded([&] {
        if (!path || !out) throw regmvst::DomainError("dataset_read_csv: null argument");
        *out = new regmvst_dataset{regmvst::read_dataset_csv(path)};
    });
}

regmvst_status regmvst_dataset_parse_csv(const char* text, regmvst_dataset** out) {
    return guarded([&] {
        if (!text || !out) throw regmvst::DomainError("dataset_parse_csv: null argument");
        *out = new regmvst_dataset{regmvst::parse_dataset_csv(text)};
    });
}

regmvst_status regmvst_dataset_write_csv(const regmvst_dataset* data, const char* path) {
    return guarded([&] {
        if (!data || !path) throw regmvst::DomainError("dataset_write_csv: null argument");
        regmvst::write_dataset_csv(data->data, path);
    });
}

regmvst_status regmvst_dataset_to_csv(const regmvst_dataset* data, char** csv_out) {
    return guarded([&] {
        if (!data || !csv_out) throw regmvst::DomainError("dataset_to_csv: null argument");
        *csv_out = dup_string(regmvst::dataset_to_csv(data->data));
    });
}

int64_t regmvst_dataset_num_subjects(const regmvst_dataset* data) {
    return data ? static_cast<int64_t>(data->data.subjects.size()) : -1;
}

int64_t regmvst_dataset_total_rows(const regmvst_dataset* data) {
    return data ? static_cast<int64_t>(data->data.total_rows()) : -1;
}

void regmvst_dataset_free(regmvst_dataset* data) { delete data; }

regmvst_status regmvst_theta_from_json(const char* json_text, regmvst_theta** out) {
    return guarded([&] {
        if (!json_text || !out) throw regmvst::DomainError("theta_from_json: null argument");
        *out = new regmvst_theta{regmvst::theta_from_json(json_text)};
    });
}

regmvst_status regmvst_theta_to_json(const regmvst_theta* theta, char** json_out) {
    return guarded([&] {
        if (!theta || !json_out) throw regmvst::DomainError("theta_to_json: null argument");
        *json_out = dup_string(regmvst::theta_to_json(theta->theta));
    });
}

void regmvst_theta_free(regmvst_theta* theta) { delete theta; }

regmvst_status regmvst_simulate(const char* config_json, regmvst_dataset** data_out,
                                regmvst_theta** truth_out) {
    return guarded([&] {
        if (!data_out) throw regmvst::DomainError("simulate: null output");
        const ordered_json j = parse_json(config_json, "simulate config");
        regmvst::SchemeConfig cfg;
        const int scheme = j.value("scheme", 1);
        if (scheme == 1 || scheme == 2)
            cfg.scheme = regmvst::Scheme::s1s2;
        else if (scheme == 3)
            cfg.scheme = regmvst::Scheme::s3;
        else
            throw regmvst::DomainError("simulate: scheme must be 1 or 3");
        cfg.n_subjects = j.value("n", 0);
        cfg.seed = j.value("seed", std::uint64_t{0});
        auto [data, truth] = (cfg.scheme == regmvst::Scheme::s3) ? regmvst::gen_scheme3(cfg)
                                                                 : regmvst::gen_scheme12(cfg);
        *data_out = new regmvst_dataset{std::move(data)};
        if (truth_out) *truth_out = new regmvst_theta{std::move(truth)};
    });
}

regmvst_status regmvst_fit(const regmvst_dataset* data, const char* config_json,
                           regmvst_fit_result** out) {
    return guarded([&] {
        if (!data || !out) throw regmvst::DomainError("fit: null argument");
        const FitConfig cfg = fit_config_from_json(parse_json(config_json, "fit config"));
        FitResult result = regmvst::fit(data->data, cfg);
        *out = new regmvst_fit_result{std::move(result), cfg};
    });
}

regmvst_status regmvst_fit_result_to_json(const regmvst_fit_result* result, char** json_out) {
    return guarded([&] {
        if (!result || !json_out) throw regmvst::DomainError("fit_result_to_json: null argument");
        *json_out = dup_string(regmvst::fit_result_to_json(result->result, result->config));
    });
}

regmvst_status regmvst_fit_result_timings_csv(const regmvst_fit_result* result, char** csv_out) {
    return guarded([&] {
        if (!result || !csv_out)
            throw regmvst::DomainError("fit_result_timings_csv: null argument");
        *csv_out = dup_string(regmvst::fit_timings_csv(result->result));
    });
}

regmvst_status regmvst_fit_result_theta(const regmvst_fit_result* result, regmvst_theta** out) {
    return guarded([&] {
        if (!result || !out) throw regmvst::DomainError("fit_result_theta: null argument");
        *out = new regmvst_theta{result->result.theta_hat};
    });
}

int regmvst_fit_result_converged(const regmvst_fit_result* result) {
    return result && result->result.converged ? 1 : 0;
}

int64_t regmvst_fit_result_iterations(const regmvst_fit_result* result) {
    return result ? result->result.iterations : -1;
}

int64_t regmvst_fit_result_comm_rounds(const regmvst_fit_result* result) {
    return result ? result->result.comm_rounds : -1;
}

void regmvst_fit_result_free(regmvst_fit_result* result) { delete result; }

regmvst_status regmvst_observed_loglik(const regmvst_dataset* data, const regmvst_theta* theta,
                                       double* out) {
    return guarded([&] {
        if (!data || !theta || !out) throw regmvst::DomainError("observed_loglik: null argument");
        *out = regmvst::observed_loglik(data->data, theta->theta);
    });
}

regmvst_status regmvst_residuals_csv(const regmvst_dataset* data, const regmvst_theta* theta,
                                     char** csv_out) {
    return guarded([&] {
        if (!data || !theta || !csv_out) throw regmvst::DomainError("residuals_csv: null argument");
        *csv_out = dup_string(regmvst::residuals_long_csv(data->data, theta->theta));
    });
}

regmvst_status regmvst_bootstrap(const regmvst_dataset* data, const char* config_json,
                                 char** table_json_out, char** table_csv_out) {
    return guarded([&] {
        if (!data) throw regmvst::DomainError("bootstrap: null dataset");
        const ordered_json j = parse_json(config_json, "bootstrap config");
        regmvst::BootstrapConfig cfg;
        cfg.B = j.value("b", 100);
        cfg.level = j.value("level", 0.90);
        cfg.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("fit")) cfg.fit = fit_config_from_json(j.at("fit"));
        const regmvst::BootstrapResult result = regmvst::bootstrap_ci(data->data, cfg);
        if (table_json_out) *table_json_out = dup_string(regmvst::bootstrap_result_json(result, cfg));
        if (table_csv_out) *table_csv_out = dup_string(regmvst::bootstrap_table_csv(result));
    });
}

regmvst_status regmvst_info_analysis(const char* params_json, const char* config_json,
                                     char** result_json_out) {
    return guarded([&] {
        if (!result_json_out) throw regmvst::DomainError("info_analysis: null output");
        const ordered_json pj = parse_json(params_json, "info params");
        const ordered_json cj = parse_json(config_json ? config_json : "{}", "info config");
        const Eigen::Index n = pj.at("n").get<Eigen::Index>();
        const Eigen::Index p = pj.at("p").get<Eigen::Index>();
        const Eigen::Index q = pj.at("q").get<Eigen::Index>();
        regmvst::VecSkewTParams params;
        params.X = matrix_from_json(pj, "x", n, q);
        const Eigen::MatrixXd beta = matrix_from_json(pj, "beta", q, p);
        params.b_vec.resize(p * q);
        for (Eigen::Index c = 0; c < p; ++c) params.b_vec.segment(c * q, q) = beta.col(c);
        const auto a = pj.at("a").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(a.size()) != p)
            throw regmvst::ParseError("info params: 'a' must have length p");
        params.a_vec = Eigen::Map<const Eigen::VectorXd>(a.data(), p);
        params.Sigma = matrix_from_json(pj, "sigma", n, n);
        params.Psi = matrix_from_json(pj, "psi", p, p);
        params.nu = pj.at("nu").get<double>();
        const int draws = cj.value("draws", 10000);
        const std::uint64_t seed = cj.value("seed", std::uint64_t{0});

        const Eigen::MatrixXd ic = regmvst::complete_info(params);
        const regmvst::McInfo mc = regmvst::observed_info_mc(params, draws, seed);
        const regmvst::RateMatrices rm = regmvst::rate_matrices(ic, mc.I);

        ordered_json out;
        out["d"] = rm.d;
        out["draws"] = draws;
        out["seed"] = seed;
        auto dump = [](const Eigen::MatrixXd& m) {
            std::vector<double> v;
            v.reserve(m.size());
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
            return v;
        };
        out["i_complete"] = dump(rm.I_complete);
        out["i_observed"] = dump(rm.I_observed);
        out["mc_se_max"] = mc.se_max;
        out["r_max"] = rm.r_max;
        out["s_min"] = rm.s_min;
        *result_json_out = dup_string(out.dump(2) + "\n");
    });
}

}  // extern "C"

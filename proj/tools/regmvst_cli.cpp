// Command-line front end for the regmvst shared library.  Everything model-
// related goes through the C API in regmvst/regmvst.h; this layer only
// handles flags, files, and the run manifest.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "regmvst/regmvst.h"

using ordered_json = nlohmann::ordered_json;

namespace {

// ---- small utilities -------------------------------------------------------

[[noreturn]] void fail(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    std::exit(1);
}

void check(regmvst_status st) {
    if (st != REGMVST_OK) fail(regmvst_last_error());
}

std::string take_string(char* s) {
    std::string out = s ? s : "";
    regmvst_string_free(s);
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write " + path);
    out << content;
}

std::string sha256_hex(const std::string& content) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(content.data(), content.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string iso_now() {
    char buf[32];
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string git_describe() {
    FILE* pipe = popen("git describe --always --dirty 2>/dev/null", "r");
    if (!pipe) return "unknown";
    char buf[128];
    std::string out;
    while (fgets(buf, sizeof(buf), pipe)) out += buf;
    pclose(pipe);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out.empty() ? "unknown" : out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Every run leaves one manifest next to its outputs: the command, the full
// configuration echo, and a digest per emitted file.
struct Manifest {
    std::string command;
    ordered_json config;
    std::uint64_t seed = 0;
    std::string started_at = iso_now();
    std::vector<std::pair<std::string, std::string>> outputs;  // path, sha256

    void add_output(const std::string& path, const std::string& content) {
        write_file(path, content);
        outputs.emplace_back(path, sha256_hex(content));
    }

    void write(const std::string& path) const {
        ordered_json j;
        j["command"] = command;
        j["config"] = config;
        j["seed"] = seed;
        j["git_describe"] = git_describe();
        j["started_at"] = started_at;
        j["finished_at"] = iso_now();
        ordered_json outs = ordered_json::array();
        for (const auto& [p, digest] : outputs) {
            ordered_json o;
            o["path"] = p;
            o["sha256"] = digest;
            outs.push_back(o);
        }
        j["outputs"] = outs;
        write_file(path, j.dump(2) + "\n");
    }
};

using DatasetPtr = std::unique_ptr<regmvst_dataset, decltype(&regmvst_dataset_free)>;
using ThetaPtr = std::unique_ptr<regmvst_theta, decltype(&regmvst_theta_free)>;
using FitPtr = std::unique_ptr<regmvst_fit_result, decltype(&regmvst_fit_result_free)>;

DatasetPtr load_dataset(const std::string& path) {
    regmvst_dataset* raw = nullptr;
    check(regmvst_dataset_read_csv(path.c_str(), &raw));
    return DatasetPtr(raw, &regmvst_dataset_free);
}

// ---- shared fit options ------------------------------------------------------

struct FitOptions {
    std::string engine = "ecme";
    int workers = 1;
    double gamma = 0.875;
    double zeta = 0.05;
    double epsilon = 1e-7;
    int max_iter = 1000;
    std::uint64_t seed = 0;
    std::string init = "default";
    std::string init_theta_path;
    bool trace_loglik = false;
    std::string delay_model = "none";
    double delay_lo_ms = 0.0;
    double delay_hi_ms = 0.0;
    double delay_base_ms = 0.0;
    double delay_slow_factor = 2.0;

    void add_flags(CLI::App* app) {
        app->add_option("--engine", engine, "Fitting engine")
            ->check(CLI::IsMember({"ecme", "pecme", "adecme"}))
            ->capture_default_str();
        app->add_option("--workers", workers, "Worker count for pecme/adecme")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        app->add_option("--gamma", gamma, "ADECME wait fraction in (0,1]")
            ->capture_default_str();
        app->add_option("--zeta", zeta, "ADECME full-synchronization probability")
            ->capture_default_str();
        app->add_option("--epsilon", epsilon, "Stopping tolerance (0 disables early stop)")
            ->capture_default_str();
        app->add_option("--max-iter", max_iter, "Iteration cap")->capture_default_str();
        app->add_option("--seed", seed, "Root RNG seed")->capture_default_str();
        app->add_option("--init", init, "Initialization mode")
            ->check(CLI::IsMember({"default", "random", "explicit"}))
            ->capture_default_str();
        app->add_option("--init-theta", init_theta_path,
                        "Theta JSON file for --init explicit");
        app->add_flag("--trace-loglik", trace_loglik,
                      "Record the observed log-likelihood at every iterate (slow)");
        app->add_option("--delay-model", delay_model,
                        "Artificial per-subject worker delay (benchmarking)")
            ->check(CLI::IsMember({"none", "uniform", "one-slow"}))
            ->capture_default_str();
        app->add_option("--delay-lo-ms", delay_lo_ms, "uniform delay lower bound (ms)")
            ->capture_default_str();
        app->add_option("--delay-hi-ms", delay_hi_ms, "uniform delay upper bound (ms)")
            ->capture_default_str();
        app->add_option("--delay-base-ms", delay_base_ms, "one-slow per-subject delay (ms)")
            ->capture_default_str();
        app->add_option("--delay-slow-factor", delay_slow_factor,
                        "one-slow multiplier for worker 0")
            ->capture_default_str();
    }

    ordered_json to_json(std::uint64_t seed_override) const {
        ordered_json j;
        j["engine"] = engine;
        j["epsilon"] = epsilon;
        j["max_iter"] = max_iter;
        j["workers"] = workers;
        j["gamma"] = gamma;
        j["zeta"] = zeta;
        j["seed"] = seed_override;
        j["init"] = init;
        if (init == "explicit") {
            if (init_theta_path.empty()) fail("--init explicit requires --init-theta");
            j["init_theta"] = ordered_json::parse(read_file(init_theta_path));
        }
        j["trace_loglik"] = trace_loglik;
        ordered_json d;
        d["kind"] = delay_model;
        d["lo_ms"] = delay_lo_ms;
        d["hi_ms"] = delay_hi_ms;
        d["base_ms"] = delay_base_ms;
        d["slow_factor"] = delay_slow_factor;
        j["delay"] = d;
        return j;
    }
};

FitPtr run_fit(const regmvst_dataset* data, const ordered_json& config) {
    regmvst_fit_result* raw = nullptr;
    check(regmvst_fit(data, config.dump().c_str(), &raw));
    return FitPtr(raw, &regmvst_fit_result_free);
}

double fit_loglik(const regmvst_dataset* data, const regmvst_fit_result* fr) {
    regmvst_theta* th = nullptr;
    check(regmvst_fit_result_theta(fr, &th));
    ThetaPtr theta(th, &regmvst_theta_free);
    double ll = 0.0;
    check(regmvst_observed_loglik(data, theta.get(), &ll));
    return ll;
}

// ---- subcommands -------------------------------------------------------------

int cmd_simulate(int scheme, int n, std::uint64_t seed, const std::string& out,
                 const std::string& truth_out) {
    ordered_json cfg;
    cfg["scheme"] = scheme;
    cfg["n"] = n;
    cfg["seed"] = seed;
    regmvst_dataset* draw = nullptr;
    regmvst_theta* traw = nullptr;
    check(regmvst_simulate(cfg.dump().c_str(), &draw, &traw));
    DatasetPtr data(draw, &regmvst_dataset_free);
    ThetaPtr truth(traw, &regmvst_theta_free);

    Manifest manifest;
    manifest.command = "simulate";
    manifest.config = cfg;
    manifest.seed = seed;
    char* csv = nullptr;
    check(regmvst_dataset_to_csv(data.get(), &csv));
    manifest.add_output(out, take_string(csv));
    if (!truth_out.empty()) {
        char* tj = nullptr;
        check(regmvst_theta_to_json(truth.get(), &tj));
        manifest.add_output(truth_out, take_string(tj));
    }
    manifest.write(out + ".manifest.json");
    std::cout << "wrote " << out << " (" << regmvst_dataset_num_subjects(data.get())
              << " subjects, " << regmvst_dataset_total_rows(data.get()) << " rows)\n";
    return 0;
}

int cmd_fit(const std::string& data_path, const FitOptions& opts, int restarts,
            const std::string& out, std::string timing_out, const std::string& residuals_out) {
    DatasetPtr data = load_dataset(data_path);
    if (timing_out.empty()) timing_out = out + ".timing.csv";

    FitPtr best(nullptr, &regmvst_fit_result_free);
    double best_ll = -HUGE_VAL;
    ordered_json best_cfg;
    for (int r = 0; r < std::max(1, restarts); ++r) {
        const std::uint64_t seed_r = (r == 0) ? opts.seed : mix_seed(opts.seed, r);
        ordered_json cfg = opts.to_json(seed_r);
        if (r > 0) cfg["init"] = "random";  // restarts explore random starts
        FitPtr fr = run_fit(data.get(), cfg);
        const double ll = fit_loglik(data.get(), fr.get());
        if (!best || ll > best_ll) {
            best = std::move(fr);
            best_ll = ll;
            best_cfg = cfg;
        }
    }

    Manifest manifest;
    manifest.command = "fit";
    manifest.config = best_cfg;
    manifest.config["restarts"] = restarts;
    manifest.config["data"] = data_path;
    manifest.seed = opts.seed;
    char* json = nullptr;
    check(regmvst_fit_result_to_json(best.get(), &json));
    manifest.add_output(out, take_string(json));
    char* csv = nullptr;
    check(regmvst_fit_result_timings_csv(best.get(), &csv));
    manifest.add_output(timing_out, take_string(csv));
    if (!residuals_out.empty()) {
        regmvst_theta* th = nullptr;
        check(regmvst_fit_result_theta(best.get(), &th));
        ThetaPtr theta(th, &regmvst_theta_free);
        char* rc = nullptr;
        check(regmvst_residuals_csv(data.get(), theta.get(), &rc));
        manifest.add_output(residuals_out, take_string(rc));
    }
    manifest.write(out + ".manifest.json");
    std::cout << (regmvst_fit_result_converged(best.get()) ? "converged" : "iteration cap reached")
              << " after " << regmvst_fit_result_iterations(best.get()) << " iterations ("
              << regmvst_fit_result_comm_rounds(best.get()) << " communication rounds)\n";
    return 0;
}

int cmd_bootstrap(const std::string& data_path, int b, double level, std::uint64_t seed,
                  const FitOptions& opts, const std::string& out, const std::string& out_csv) {
    DatasetPtr data = load_dataset(data_path);
    ordered_json cfg;
    cfg["b"] = b;
    cfg["level"] = level;
    cfg["seed"] = seed;
    cfg["fit"] = opts.to_json(opts.seed);
    char* table_json = nullptr;
    char* table_csv = nullptr;
    check(regmvst_bootstrap(data.get(), cfg.dump().c_str(), &table_json, &table_csv));

    Manifest manifest;
    manifest.command = "bootstrap";
    manifest.config = cfg;
    manifest.config["data"] = data_path;
    manifest.seed = seed;
    manifest.add_output(out, take_string(table_json));
    if (!out_csv.empty()) manifest.add_output(out_csv, take_string(table_csv));
    else regmvst_string_free(table_csv);
    manifest.write(out + ".manifest.json");
    std::cout << "bootstrap intervals written to " << out << "\n";
    return 0;
}

int cmd_info(const std::string& params_path, int draws, std::uint64_t seed,
             const std::string& out) {
    const std::string params = read_file(params_path);
    ordered_json cfg;
    cfg["draws"] = draws;
    cfg["seed"] = seed;
    char* result = nullptr;
    check(regmvst_info_analysis(params.c_str(), cfg.dump().c_str(), &result));

    Manifest manifest;
    manifest.command = "info";
    manifest.config = cfg;
    manifest.config["params"] = params_path;
    manifest.seed = seed;
    manifest.add_output(out, take_string(result));
    manifest.write(out + ".manifest.json");
    std::cout << "information analysis written to " << out << "\n";
    return 0;
}

struct BenchVariant {
    std::string engine;
    double gamma = 0.875;
    std::string label;
};

int cmd_bench(int scheme, int n, int reps, const std::string& engines_spec,
              const FitOptions& base_opts, const std::string& out_dir) {
    std::vector<BenchVariant> variants;
    std::stringstream ss(engines_spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        BenchVariant v;
        const auto colon = tok.find(':');
        v.engine = tok.substr(0, colon);
        if (colon != std::string::npos) v.gamma = std::stod(tok.substr(colon + 1));
        if (v.engine != "ecme" && v.engine != "pecme" && v.engine != "adecme")
            fail("bench: unknown engine '" + v.engine + "'");
        v.label = (v.engine == "adecme")
                      ? "adecme_g" + tok.substr(colon + 1)
                      : v.engine;
        variants.push_back(v);
    }
    if (variants.empty()) fail("bench: no engine variants given");

    Manifest manifest;
    manifest.command = "bench";
    manifest.seed = base_opts.seed;
    ordered_json cfg;
    cfg["scheme"] = scheme;
    cfg["n"] = n;
    cfg["reps"] = reps;
    cfg["engines"] = engines_spec;
    cfg["fit"] = base_opts.to_json(base_opts.seed);
    manifest.config = cfg;

    // metric -> variant -> per-rep values
    const std::vector<std::string> metrics = {"TT", "E step", "DEC", "Psi", "A",
                                              "beta", "nu", "TNI"};
    std::vector<std::vector<std::vector<double>>> values(
        metrics.size(), std::vector<std::vector<double>>(variants.size()));

    for (int rep = 0; rep < reps; ++rep) {
        ordered_json sim;
        sim["scheme"] = scheme;
        sim["n"] = n;
        sim["seed"] = mix_seed(base_opts.seed, rep);
        regmvst_dataset* draw = nullptr;
        check(regmvst_simulate(sim.dump().c_str(), &draw, nullptr));
        DatasetPtr data(draw, &regmvst_dataset_free);

        for (std::size_t v = 0; v < variants.size(); ++v) {
            FitOptions opts = base_opts;
            opts.engine = variants[v].engine;
            opts.gamma = variants[v].gamma;
            ordered_json fit_cfg = opts.to_json(mix_seed(base_opts.seed, rep));
            FitPtr fr = run_fit(data.get(), fit_cfg);
            char* json = nullptr;
            check(regmvst_fit_result_to_json(fr.get(), &json));
            const std::string run_json = take_string(json);
            manifest.add_output(out_dir + "/run_" + variants[v].label + "_rep" +
                                    std::to_string(rep) + ".json",
                                run_json);
            const ordered_json parsed = ordered_json::parse(run_json);
            const auto& t = parsed.at("step_timings_seconds");
            values[0][v].push_back(t.at("total").get<double>());
            values[1][v].push_back(t.at("e_step").get<double>());
            values[2][v].push_back(t.at("dec").get<double>());
            values[3][v].push_back(t.at("psi").get<double>());
            values[4][v].push_back(t.at("a").get<double>());
            values[5][v].push_back(t.at("beta").get<double>());
            values[6][v].push_back(t.at("nu").get<double>());
            values[7][v].push_back(parsed.at("iterations").get<double>());
        }
    }

    // Table shaped like the per-engine timing summaries: one column per
    // variant, cells "mean (sd)", times in seconds.
    std::string csv = "metric";
    for (const auto& v : variants) csv += "," + v.label;
    csv += "\n";
    char buf[96];
    for (std::size_t m = 0; m < metrics.size(); ++m) {
        csv += metrics[m];
        for (std::size_t v = 0; v < variants.size(); ++v) {
            const auto& xs = values[m][v];
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= xs.empty() ? 1.0 : static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            const double sd = xs.size() > 1 ? std::sqrt(var / (xs.size() - 1)) : 0.0;
            std::snprintf(buf, sizeof(buf), ",%.3f (%.3f)", mean, sd);
            csv += buf;
        }
        csv += "\n";
    }
    manifest.add_output(out_dir + "/bench.csv", csv);
    manifest.write(out_dir + "/manifest.json");
    std::cout << csv;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maximum-likelihood toolkit for regression with matrix-variate skew-t "
                 "responses: simulation, serial/parallel/asynchronous fitting, bootstrap "
                 "inference, and information-matrix analysis."};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
    int sim_scheme = 1, sim_n = 100;
    std::uint64_t sim_seed = 0;
    std::string sim_out = "data.csv", sim_truth_out;
    sim->add_option("--scheme", sim_scheme, "Generator scheme (1 or 3)")
        ->check(CLI::IsMember({1, 3}))
        ->capture_default_str();
    sim->add_option("--n", sim_n, "Number of subjects")->check(CLI::PositiveNumber)
        ->capture_default_str();
    sim->add_option("--seed", sim_seed, "RNG seed")->capture_default_str();
    sim->add_option("--out", sim_out, "Output CSV path")->capture_default_str();
    sim->add_option("--truth-out", sim_truth_out, "Write the generating theta JSON here");

    // fit
    auto* fitcmd = app.add_subcommand("fit", "Fit the model to a dataset");
    std::string fit_data, fit_out = "fit.json", fit_timing_out, fit_residuals_out;
    int fit_restarts = 1;
    FitOptions fit_opts;
    fitcmd->add_option("--data", fit_data, "Input dataset CSV")->required();
    fit_opts.add_flags(fitcmd);
    fitcmd->add_option("--restarts", fit_restarts,
                       "Random restarts; the highest-likelihood fit wins")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    fitcmd->add_option("--out", fit_out, "Output fit JSON")->capture_default_str();
    fitcmd->add_option("--timing-out", fit_timing_out,
                       "Per-iteration timing CSV (default <out>.timing.csv)");
    fitcmd->add_option("--residuals-out", fit_residuals_out,
                       "Write standardized residuals CSV here");

    // bootstrap
    auto* boot = app.add_subcommand("bootstrap", "Subject-level bootstrap intervals");
    std::string boot_data, boot_out = "bootstrap.json", boot_out_csv = "bootstrap.csv";
    int boot_b = 100;
    double boot_level = 0.90;
    std::uint64_t boot_seed = 0;
    FitOptions boot_opts;
    boot->add_option("--data", boot_data, "Input dataset CSV")->required();
    boot->add_option("--b", boot_b, "Bootstrap replicates")->check(CLI::PositiveNumber)
        ->capture_default_str();
    boot->add_option("--level", boot_level, "Confidence level")->capture_default_str();
    boot->add_option("--bootstrap-seed", boot_seed, "Resampling seed")->capture_default_str();
    boot_opts.add_flags(boot);
    boot->add_option("--out", boot_out, "Output interval JSON")->capture_default_str();
    boot->add_option("--out-csv", boot_out_csv, "Output interval CSV")->capture_default_str();

    // info
    auto* info = app.add_subcommand("info", "Information matrices and convergence rate");
    std::string info_params, info_out = "info.json";
    int info_draws = 10000;
    std::uint64_t info_seed = 0;
    info->add_option("--params", info_params, "Model parameter JSON")->required();
    info->add_option("--draws", info_draws, "Monte-Carlo draws")->capture_default_str();
    info->add_option("--seed", info_seed, "RNG seed")->capture_default_str();
    info->add_option("--out", info_out, "Output JSON")->capture_default_str();

    // bench
    auto* bench = app.add_subcommand("bench", "Engine timing comparison on simulated data");
    int bench_scheme = 1, bench_n = 250, bench_reps = 5;
    std::string bench_engines = "adecme:0.625,adecme:0.75,adecme:0.875,pecme,ecme";
    std::string bench_out_dir = "bench";
    FitOptions bench_opts;
    bench->add_option("--scheme", bench_scheme, "Generator scheme")->capture_default_str();
    bench->add_option("--n", bench_n, "Subjects per replicate")->capture_default_str();
    bench->add_option("--reps", bench_reps, "Replicates")->capture_default_str();
    bench->add_option("--engines", bench_engines,
                      "Comma list of variants, adecme takes :gamma suffix")
        ->capture_default_str();
    bench_opts.add_flags(bench);
    bench->add_option("--out-dir", bench_out_dir, "Output directory (must exist)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(sim_scheme, sim_n, sim_seed, sim_out, sim_truth_out);
        if (fitcmd->parsed())
            return cmd_fit(fit_data, fit_opts, fit_restarts, fit_out, fit_timing_out,
                           fit_residuals_out);
        if (boot->parsed())
            return cmd_bootstrap(boot_data, boot_b, boot_level, boot_seed, boot_opts, boot_out,
                                 boot_out_csv);
        if (info->parsed()) return cmd_info(info_params, info_draws, info_seed, info_out);
        if (bench->parsed())
            return cmd_bench(bench_scheme, bench_n, bench_reps, bench_engines, bench_opts,
                             bench_out_dir);
    } catch (const std::exception& e) {
        fail(e.what());
    }
    return 2;
}

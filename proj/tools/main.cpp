// SPDX-License-Identifier: Apache-2.0
// marginlab command-line tool. Talks to the library only through marginlab.h.
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "marginlab/marginlab.h"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kValidation = 1, kNumerical = 2, kVerifyFailed = 3 };

int exit_for(ml_status s) {
    switch (s) {
        case ML_OK: return kOk;
        case ML_INVALID_ARGUMENT:
        case ML_DIMENSION_MISMATCH:
        case ML_INVALID_EXPONENT:
        case ML_UNSUPPORTED_PROJECTION:
        case ML_INSTANCE_TOO_LARGE:
        case ML_IO_ERROR:
        case ML_PARSE_ERROR: return kValidation;
        default: return kNumerical;
    }
}

int report_error(ml_status s, const std::string& what) {
    std::cerr << "error: " << what << ": " << ml_status_name(s) << ": " << ml_last_error() << "\n";
    return exit_for(s);
}

struct DatasetHandle {
    ml_dataset* p = nullptr;
    ~DatasetHandle() { ml_dataset_free(p); }
};

struct GenArgs {
    int k = 10;
    std::size_t d = 25;
    std::size_t per_class = 50;
    double sigma = 0.1;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_gen_data(const GenArgs& a) {
    DatasetHandle data;
    ml_status s = ml_dataset_generate(a.k, a.d, a.per_class, a.sigma, a.seed, &data.p);
    if (s != ML_OK) return report_error(s, "gen-data");
    s = ml_dataset_save(data.p, a.out.c_str());
    if (s != ML_OK) return report_error(s, "gen-data");
    std::printf("wrote %zu rows (k=%d, d=%zu) to %s\n", ml_dataset_size(data.p), ml_dataset_classes(data.p),
                ml_dataset_dim(data.p), a.out.c_str());
    return kOk;
}

struct MarginArgs {
    std::string data;
    std::string norm;
    bool brute_force = false;
    int grid = 201;
    std::string out;
};

void print_matrix(const ml_matrix* m) {
    const std::size_t r = ml_matrix_rows(m);
    const std::size_t c = ml_matrix_cols(m);
    const double* v = ml_matrix_data(m);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) std::printf(j ? ",%.17g" : "%.17g", v[i * c + j]);
        std::printf("\n");
    }
}

int cmd_margin(const MarginArgs& a) {
    DatasetHandle data;
    ml_status s = ml_dataset_load(a.data.c_str(), &data.p);
    if (s != ML_OK) return report_error(s, "margin");
    if (a.brute_force) {
        double gamma = 0.0;
        s = ml_margin_brute_force(data.p, a.norm.c_str(), a.grid, &gamma);
        if (s != ML_OK) return report_error(s, "margin");
        std::printf("gamma %.12g (brute force, grid %d)\n", gamma, a.grid);
        if (gamma <= 0.0) {
            std::printf("non-separable: no classifier attains a positive %s margin\n", a.norm.c_str());
            return kNumerical;
        }
        return kOk;
    }
    ml_margin* m = nullptr;
    s = ml_margin_solve(data.p, a.norm.c_str(), &m);
    if (s != ML_OK) return report_error(s, "margin");
    std::unique_ptr<ml_margin, void (*)(ml_margin*)> guard(m, ml_margin_free);
    if (ml_margin_non_separable(m)) {
        std::printf("non-separable: no classifier attains a positive %s margin (best %.6g, dual bound %.6g)\n",
                    a.norm.c_str(), ml_margin_gamma(m), ml_margin_upper_bound(m));
        return kNumerical;
    }
    std::printf("gamma %.12g\nupper_bound %.12g\niterations %lld\n", ml_margin_gamma(m), ml_margin_upper_bound(m),
                static_cast<long long>(ml_margin_iterations(m)));
    if (a.out.empty()) {
        std::printf("separator:\n");
        print_matrix(ml_margin_separator(m));
        return kOk;
    }
    s = ml_matrix_save_csv(ml_margin_separator(m), a.out.c_str());
    if (s != ML_OK) return report_error(s, "margin");
    std::printf("separator written to %s\n", a.out.c_str());
    return kOk;
}

// Number of workers: MARGINLAB_THREADS if set, else hardware concurrency.
int worker_cap(int& exit_code) {
    exit_code = kOk;
    if (const char* env = std::getenv("MARGINLAB_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) {
            std::cerr << "error: MARGINLAB_THREADS must be a positive integer, got '" << env << "'\n";
            exit_code = kValidation;
            return 0;
        }
        return static_cast<int>(v);
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int cmd_run(const std::string& config) {
    std::vector<std::string> configs;
    std::error_code ec;
    if (fs::is_directory(config, ec)) {
        for (const auto& e : fs::directory_iterator(config))
            if (e.is_regular_file() && e.path().extension() == ".json") configs.push_back(e.path().string());
        std::sort(configs.begin(), configs.end());
        if (configs.empty()) {
            std::cerr << "error: no .json configs in " << config << "\n";
            return kValidation;
        }
    } else {
        configs.push_back(config);
    }
    int code = kOk;
    const int cap = worker_cap(code);
    if (code != kOk) return code;

    struct Outcome {
        ml_status status = ML_OK;
        std::string text;
    };
    std::vector<Outcome> outcomes(configs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            ml_report* r = nullptr;
            outcomes[i].status = ml_run_experiment_file(configs[i].c_str(), &r);
            outcomes[i].text = outcomes[i].status == ML_OK ? ml_report_text(r) : ml_last_error();
            ml_report_free(r);
        }
    };
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(cap), configs.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (std::size_t i = 0; i < configs.size(); ++i) {
        const Outcome& o = outcomes[i];
        if (configs.size() > 1) std::printf("== %s\n", configs[i].c_str());
        if (o.status == ML_OK) {
            std::fputs(o.text.c_str(), stdout);
        } else {
            std::cerr << "error: run " << configs[i] << ": " << ml_status_name(o.status) << ": " << o.text << "\n";
            code = std::max(code, exit_for(o.status));
        }
    }
    return code;
}

struct VerifyArgs {
    std::string data;
    std::int64_t trials = 1000;
    std::uint64_t seed = 1;
    std::string perturb;
};

int cmd_verify(const VerifyArgs& a) {
    DatasetHandle data;
    ml_status s = ml_dataset_load(a.data.c_str(), &data.p);
    if (s != ML_OK) return report_error(s, "verify");
    ml_report* r = nullptr;
    s = ml_verify(data.p, a.trials, a.seed, a.perturb.empty() ? nullptr : a.perturb.c_str(), &r);
    if (s != ML_OK) return report_error(s, "verify");
    std::fputs(ml_report_text(r), stdout);
    const bool ok = ml_report_passed(r) != 0;
    ml_report_free(r);
    return ok ? kOk : kVerifyFailed;
}

struct RatesArgs {
    std::string log;
    std::string column = "gap_ewinf";
    double from = 100.0;
    double to = 10000.0;
};

int cmd_rates(const RatesArgs& a) {
    double slope = 0.0, intercept = 0.0, residual = 0.0;
    std::size_t points = 0;
    const ml_status s =
        ml_fit_rate(a.log.c_str(), a.column.c_str(), a.from, a.to, &slope, &intercept, &residual, &points);
    if (s != ML_OK) return report_error(s, "rates");
    std::printf("slope %.6f\nintercept %.6f\nresidual %.3e\npoints %zu\n", slope, intercept, residual, points);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"marginlab: implicit-bias experiments for steepest descent on linear multiclass models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ml_version());

    GenArgs gen;
    auto* g = app.add_subcommand("gen-data", "Generate a Gaussian-cluster dataset CSV");
    g->add_option("--k", gen.k, "Classes")->capture_default_str()->check(CLI::PositiveNumber);
    g->add_option("--d", gen.d, "Feature dimension")->capture_default_str()->check(CLI::PositiveNumber);
    g->add_option("--per-class", gen.per_class, "Points per class")->capture_default_str()->check(CLI::PositiveNumber);
    g->add_option("--sigma", gen.sigma, "Cluster standard deviation")->capture_default_str();
    g->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
    g->add_option("--out", gen.out, "Output CSV")->required();

    MarginArgs mar;
    auto* m = app.add_subcommand("margin", "Solve the max-margin problem for one norm");
    m->add_option("--data", mar.data, "Dataset CSV or fixture name")->required();
    m->add_option("--norm", mar.norm, "ew<p> or s<p>, e.g. ewinf, ew2, sinf")->required();
    m->add_flag("--brute-force", mar.brute_force, "Grid search instead of the solver (tiny instances only)");
    m->add_option("--grid", mar.grid, "Grid resolution for --brute-force")->capture_default_str();
    m->add_option("--out", mar.out, "Write the separator as CSV here instead of stdout");

    std::string config;
    auto* r = app.add_subcommand("run", "Run an experiment config, or every *.json in a directory");
    r->add_option("--config", config, "Config file or directory")->required();

    VerifyArgs ver;
    auto* v = app.add_subcommand("verify", "Check the inequality suite on random classifiers");
    v->add_option("--data", ver.data, "Dataset CSV or fixture name")->required();
    v->add_option("--trials", ver.trials, "Random trials")->capture_default_str();
    v->add_option("--seed", ver.seed, "Sampling seed")->capture_default_str();
    v->add_option("--perturb", ver.perturb, "Self-test: halve the bound of this check");

    RatesArgs rat;
    auto* t = app.add_subcommand("rates", "Fit log(value) against log(t) for one metrics column");
    t->add_option("--log", rat.log, "Metrics CSV")->required();
    t->add_option("--column", rat.column, "Column name")->capture_default_str();
    t->add_option("--from", rat.from, "First t")->capture_default_str();
    t->add_option("--to", rat.to, "Last t")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kValidation;
    }

    if (*g) return cmd_gen_data(gen);
    if (*m) return cmd_margin(mar);
    if (*r) return cmd_run(config);
    if (*v) return cmd_verify(ver);
    return cmd_rates(rat);
}

// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "marginlab/datagen.hpp"
#include "marginlab/error.hpp"
#include "marginlab/geometry.hpp"
#include "marginlab/harness.hpp"
#include "marginlab/losses.hpp"
#include "marginlab/margins.hpp"
#include "marginlab/marginlab.h"
#include "marginlab/norms.hpp"
#include "marginlab/optimizers.hpp"

struct ml_matrix {
    marginlab::Matrix m;
};

struct ml_dataset {
    marginlab::Dataset data;
    std::optional<std::uint64_t> seed;
};

struct ml_margin {
    marginlab::MarginSolution sol;
    ml_matrix separator;
};

struct ml_optimizer {
    marginlab::OptimizerState state;
};

struct ml_report {
    std::string text;
    bool passed = true;
};

namespace {

using namespace marginlab;

thread_local std::string g_last_error;

ml_status to_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return ML_INVALID_ARGUMENT;
        case ErrorCode::dimension_mismatch: return ML_DIMENSION_MISMATCH;
        case ErrorCode::invalid_exponent: return ML_INVALID_EXPONENT;
        case ErrorCode::numerical_failure: return ML_NUMERICAL_FAILURE;
        case ErrorCode::degenerate_input: return ML_DEGENERATE_INPUT;
        case ErrorCode::zero_gradient: return ML_ZERO_GRADIENT;
        case ErrorCode::unsupported_projection: return ML_UNSUPPORTED_PROJECTION;
        case ErrorCode::non_separable: return ML_NON_SEPARABLE;
        case ErrorCode::undefined_quantity: return ML_UNDEFINED_QUANTITY;
        case ErrorCode::generation_failure: return ML_GENERATION_FAILURE;
        case ErrorCode::instance_too_large: return ML_INSTANCE_TOO_LARGE;
        case ErrorCode::io_error: return ML_IO_ERROR;
        case ErrorCode::parse_error: return ML_PARSE_ERROR;
    }
    return ML_INTERNAL_ERROR;
}

ml_status fail(ml_status s, std::string msg) {
    g_last_error = std::move(msg);
    return s;
}

// Runs f, translating exceptions into a status and the thread-local message.
template <class F>
ml_status guarded(F&& f) noexcept {
    try {
        f();
        g_last_error.clear();
        return ML_OK;
    } catch (const Error& e) {
        return fail(to_status(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(ML_INTERNAL_ERROR, "out of memory");
    } catch (const std::exception& e) {
        return fail(ML_INTERNAL_ERROR, e.what());
    } catch (...) {
        return fail(ML_INTERNAL_ERROR, "unknown exception");
    }
}

void need(const void* p, const char* what) {
    if (p == nullptr) throw Error(ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

NormSpec spec_of(const char* text) {
    need(text, "spec");
    return NormSpec::parse(text);
}

ml_matrix* wrap(Matrix m) { return new ml_matrix{std::move(m)}; }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string summarize(const ExperimentConfig& cfg, const ExperimentResult& r) {
    std::string out;
    out += "algorithm: " + describe(cfg.algorithm) + "\n";
    out += "dataset: n=" + std::to_string(r.data.size()) + " d=" + std::to_string(r.data.dim()) +
           " k=" + std::to_string(r.data.num_classes()) + "\n";
    out += "steps: " + std::to_string(r.steps_taken) + (r.converged ? " (converged)" : "") + "\n";
    out += "records: " + std::to_string(r.records.size()) + "\n";
    if (!cfg.output.empty()) out += "metrics: " + cfg.output + "\n";
    if (r.records.empty()) return out;
    const MetricsRecord& last = r.records.back();
    out += "final t=" + std::to_string(last.t) + " loss=" + fmt("%.6e", last.loss) + "\n";
    for (std::size_t i = 0; i < cfg.track.size(); ++i) {
        out += "  " + cfg.track[i].name() + ":";
        if (i < r.margins.size() && r.margins[i]) out += " gamma=" + fmt("%.8g", r.margins[i]->gamma);
        if (i < last.normalized_margin.size() && last.normalized_margin[i])
            out += " normmargin=" + fmt("%.8g", *last.normalized_margin[i]);
        if (i < last.gap.size() && last.gap[i]) out += " gap=" + fmt("%.6g", *last.gap[i]);
        if (i < last.correlation.size() && last.correlation[i]) out += " corr=" + fmt("%.6g", *last.correlation[i]);
        out += "\n";
    }
    return out;
}

ml_status run_config(const ExperimentConfig& cfg, ml_report** out) {
    return guarded([&] {
        ExperimentResult r = run_experiment(cfg);
        *out = new ml_report{summarize(cfg, r), true};
    });
}

}  // namespace

extern "C" {

const char* ml_version(void) { return "0.1.0"; }

const char* ml_status_name(ml_status status) {
    switch (status) {
        case ML_OK: return "ok";
        case ML_INTERNAL_ERROR: return "internal_error";
        default: break;
    }
    if (status >= ML_INVALID_ARGUMENT && status <= ML_PARSE_ERROR) return to_string(static_cast<ErrorCode>(status));
    return "unknown_status";
}

const char* ml_last_error(void) { return g_last_error.c_str(); }

ml_status ml_matrix_create(size_t rows, size_t cols, const double* values, ml_matrix** out) {
    return guarded([&] {
        need(out, "out");
        Matrix m(rows, cols);
        if (values != nullptr)
            for (std::size_t i = 0; i < rows * cols; ++i) m.values()[i] = values[i];
        *out = wrap(std::move(m));
    });
}

void ml_matrix_free(ml_matrix* m) { delete m; }
size_t ml_matrix_rows(const ml_matrix* m) { return m ? m->m.rows() : 0; }
size_t ml_matrix_cols(const ml_matrix* m) { return m ? m->m.cols() : 0; }
const double* ml_matrix_data(const ml_matrix* m) { return m ? m->m.values().data() : nullptr; }

ml_status ml_matrix_save_csv(const ml_matrix* m, const char* path) {
    return guarded([&] {
        need(m, "matrix");
        need(path, "path");
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error(ErrorCode::io_error, std::string("cannot open '") + path + "' for writing");
        char buf[32];
        for (std::size_t r = 0; r < m->m.rows(); ++r) {
            for (std::size_t c = 0; c < m->m.cols(); ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", m->m(r, c));
                f << (c ? "," : "") << buf;
            }
            f << "\n";
        }
        if (!f) throw Error(ErrorCode::io_error, std::string("write to '") + path + "' failed");
    });
}

ml_status ml_norm(const ml_matrix* a, const char* spec, double* out) {
    return guarded([&] {
        need(a, "matrix");
        need(out, "out");
        *out = norm(a->m, spec_of(spec));
    });
}

ml_status ml_dual_norm(const ml_matrix* a, const char* spec, double* out) {
    return guarded([&] {
        need(a, "matrix");
        need(out, "out");
        *out = dual_norm(a->m, spec_of(spec));
    });
}

ml_status ml_lmo(const ml_matrix* g, const char* spec, ml_matrix** out) {
    return guarded([&] {
        need(g, "matrix");
        need(out, "out");
        *out = wrap(lmo(g->m, spec_of(spec)));
    });
}

ml_status ml_project_ball(const ml_matrix* a, const char* spec, double radius, ml_matrix** out) {
    return guarded([&] {
        need(a, "matrix");
        need(out, "out");
        *out = wrap(project_ball(a->m, spec_of(spec), radius));
    });
}

ml_status ml_newton_schulz(const ml_matrix* a, int steps, ml_matrix** out) {
    return guarded([&] {
        need(a, "matrix");
        need(out, "out");
        *out = wrap(newton_schulz_orthogonalize(a->m, steps));
    });
}

ml_status ml_dataset_create(const double* features, const int* labels, size_t n, size_t d, int k,
                            ml_dataset** out) {
    return guarded([&] {
        need(out, "out");
        if (n > 0) {
            need(features, "features");
            need(labels, "labels");
        }
        Matrix x(n, d);
        for (std::size_t i = 0; i < n * d; ++i) x.values()[i] = features[i];
        std::vector<int> y(labels, labels + n);
        *out = new ml_dataset{Dataset(std::move(x), std::move(y), k), std::nullopt};
    });
}

ml_status ml_dataset_load(const char* source, ml_dataset** out) {
    return guarded([&] {
        need(source, "source");
        need(out, "out");
        *out = new ml_dataset{load_dataset(source), std::nullopt};
    });
}

ml_status ml_dataset_generate(int k, size_t d, size_t per_class, double sigma, uint64_t seed, ml_dataset** out) {
    return guarded([&] {
        need(out, "out");
        GaussianParams p;
        p.k = k;
        p.d = d;
        p.per_class = per_class;
        p.sigma = sigma;
        p.seed = seed;
        GeneratedDataset g = gen_gaussian(p);
        *out = new ml_dataset{std::move(g.data), g.seed};
    });
}

ml_status ml_dataset_save(const ml_dataset* data, const char* path) {
    return guarded([&] {
        need(data, "dataset");
        need(path, "path");
        write_dataset_csv(path, data->data, data->seed);
    });
}

void ml_dataset_free(ml_dataset* data) { delete data; }
size_t ml_dataset_size(const ml_dataset* data) { return data ? data->data.size() : 0; }
size_t ml_dataset_dim(const ml_dataset* data) { return data ? data->data.dim() : 0; }
int ml_dataset_classes(const ml_dataset* data) { return data ? data->data.num_classes() : 0; }
double ml_dataset_bound(const ml_dataset* data) { return data ? data->data.data_bound() : 0.0; }
uint64_t ml_dataset_hash(const ml_dataset* data) { return data ? dataset_hash(data->data) : 0; }

ml_status ml_loss_eval(const ml_dataset* data, const char* loss, const ml_matrix* w, double* loss_out,
                       double* proxy_out, ml_matrix** gradient) {
    return guarded([&] {
        need(data, "dataset");
        need(loss, "loss");
        need(w, "weights");
        LossEval e = evaluate(parse_loss_kind(loss), w->m, data->data);
        if (loss_out) *loss_out = e.loss;
        if (proxy_out) *proxy_out = e.proxy;
        if (gradient) *gradient = wrap(std::move(e.gradient));
    });
}

ml_status ml_attained_margin(const ml_dataset* data, const ml_matrix* w, double* out) {
    return guarded([&] {
        need(data, "dataset");
        need(w, "weights");
        need(out, "out");
        *out = attained_margin(w->m, data->data);
    });
}

ml_status ml_margin_solve(const ml_dataset* data, const char* spec, ml_margin** out) {
    return guarded([&] {
        need(data, "dataset");
        need(out, "out");
        MarginSolution sol = data_margin(data->data, spec_of(spec));
        Matrix v = sol.v;
        *out = new ml_margin{std::move(sol), ml_matrix{std::move(v)}};
    });
}

ml_status ml_margin_brute_force(const ml_dataset* data, const char* spec, int grid, double* out) {
    return guarded([&] {
        need(data, "dataset");
        need(out, "out");
        *out = brute_force_margin(data->data, spec_of(spec), grid);
    });
}

void ml_margin_free(ml_margin* m) { delete m; }
double ml_margin_gamma(const ml_margin* m) { return m ? m->sol.gamma : NAN; }
double ml_margin_upper_bound(const ml_margin* m) { return m ? m->sol.upper_bound : NAN; }
int64_t ml_margin_iterations(const ml_margin* m) { return m ? m->sol.iterations : 0; }
int ml_margin_non_separable(const ml_margin* m) { return m && m->sol.non_separable ? 1 : 0; }
const ml_matrix* ml_margin_separator(const ml_margin* m) { return m ? &m->separator : nullptr; }

ml_status ml_optimizer_create(const char* algorithm_json, const ml_matrix* w0, double eta0, double a,
                              ml_optimizer** out) {
    return guarded([&] {
        need(algorithm_json, "algorithm_json");
        need(w0, "w0");
        need(out, "out");
        Schedule s;
        s.eta0 = eta0;
        s.decay = a;
        *out = new ml_optimizer{OptimizerState(w0->m, parse_algorithm_config(algorithm_json), s)};
    });
}

void ml_optimizer_free(ml_optimizer* opt) { delete opt; }

ml_status ml_optimizer_step(ml_optimizer* opt, const ml_dataset* data, const char* loss) {
    return guarded([&] {
        need(opt, "optimizer");
        need(data, "dataset");
        need(loss, "loss");
        const LossEval e = evaluate(parse_loss_kind(loss), opt->state.weights(), data->data);
        step_in_place(opt->state, e);
    });
}

int64_t ml_optimizer_steps(const ml_optimizer* opt) { return opt ? opt->state.steps() : 0; }
int ml_optimizer_converged(const ml_optimizer* opt) { return opt && opt->state.converged() ? 1 : 0; }

ml_status ml_optimizer_weights(const ml_optimizer* opt, ml_matrix** out) {
    return guarded([&] {
        need(opt, "optimizer");
        need(out, "out");
        *out = wrap(opt->state.weights());
    });
}

ml_status ml_run_experiment_file(const char* config_path, ml_report** out) {
    if (config_path == nullptr || out == nullptr) return fail(ML_INVALID_ARGUMENT, "arguments must not be NULL");
    ExperimentConfig cfg;
    const ml_status s = guarded([&] { cfg = load_experiment_config(config_path); });
    if (s != ML_OK) return s;
    return run_config(cfg, out);
}

ml_status ml_run_experiment_json(const char* config_json, ml_report** out) {
    if (config_json == nullptr || out == nullptr) return fail(ML_INVALID_ARGUMENT, "arguments must not be NULL");
    ExperimentConfig cfg;
    const ml_status s = guarded([&] { cfg = parse_experiment_config(config_json); });
    if (s != ML_OK) return s;
    return run_config(cfg, out);
}

ml_status ml_verify(const ml_dataset* data, int64_t trials, uint64_t seed, const char* perturb_check,
                    ml_report** out) {
    return guarded([&] {
        need(data, "dataset");
        need(out, "out");
        VerifyOptions opts;
        if (perturb_check) opts.perturb_check = perturb_check;
        const VerifyReport r = verify_inequalities(data->data, trials, seed, opts);
        *out = new ml_report{r.format(), r.passed()};
    });
}

void ml_report_free(ml_report* r) { delete r; }
int ml_report_passed(const ml_report* r) { return r && r->passed ? 1 : 0; }
const char* ml_report_text(const ml_report* r) { return r ? r->text.c_str() : ""; }

ml_status ml_fit_rate(const char* metrics_path, const char* column, double t_from, double t_to, double* slope,
                      double* intercept, double* residual, size_t* points) {
    return guarded([&] {
        need(metrics_path, "metrics_path");
        need(column, "column");
        const RateFit f = fit_rate(read_metrics_csv(metrics_path), column, t_from, t_to);
        if (slope) *slope = f.slope;
        if (intercept) *intercept = f.intercept;
        if (residual) *residual = f.residual;
        if (points) *points = f.points;
    });
}

}  // extern "C"

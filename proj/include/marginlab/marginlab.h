/* SPDX-License-Identifier: Apache-2.0 */
#ifndef MARGINLAB_MARGINLAB_H
#define MARGINLAB_MARGINLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MARGINLAB_BUILDING)
#    define ML_API __declspec(dllexport)
#  else
#    define ML_API __declspec(dllimport)
#  endif
#else
#  define ML_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ml_status {
    ML_OK = 0,
    ML_INVALID_ARGUMENT = 1,
    ML_DIMENSION_MISMATCH = 2,
    ML_INVALID_EXPONENT = 3,
    ML_NUMERICAL_FAILURE = 4,
    ML_DEGENERATE_INPUT = 5,
    ML_ZERO_GRADIENT = 6,
    ML_UNSUPPORTED_PROJECTION = 7,
    ML_NON_SEPARABLE = 8,
    ML_UNDEFINED_QUANTITY = 9,
    ML_GENERATION_FAILURE = 10,
    ML_INSTANCE_TOO_LARGE = 11,
    ML_IO_ERROR = 12,
    ML_PARSE_ERROR = 13,
    ML_INTERNAL_ERROR = 100
} ml_status;

typedef struct ml_matrix ml_matrix;
typedef struct ml_dataset ml_dataset;
typedef struct ml_margin ml_margin;
typedef struct ml_optimizer ml_optimizer;
typedef struct ml_report ml_report;

ML_API const char* ml_version(void);
ML_API const char* ml_status_name(ml_status status);
/* Message of the last failed call on this thread ("" if none). */
ML_API const char* ml_last_error(void);

/* Matrices: row-major doubles. values may be NULL for a zero matrix. */
ML_API ml_status ml_matrix_create(size_t rows, size_t cols, const double* values, ml_matrix** out);
ML_API void ml_matrix_free(ml_matrix* m);
ML_API size_t ml_matrix_rows(const ml_matrix* m);
ML_API size_t ml_matrix_cols(const ml_matrix* m);
/* Borrowed pointer to rows*cols values, valid while m lives. */
ML_API const double* ml_matrix_data(const ml_matrix* m);
ML_API ml_status ml_matrix_save_csv(const ml_matrix* m, const char* path);

/* Norm specs are spelled ew<p> or s<p>, with inf for infinity: ew1, ew2, ewinf, s1, sinf, ew1.5 ... */
ML_API ml_status ml_norm(const ml_matrix* a, const char* spec, double* out);
ML_API ml_status ml_dual_norm(const ml_matrix* a, const char* spec, double* out);
ML_API ml_status ml_lmo(const ml_matrix* g, const char* spec, ml_matrix** out);
ML_API ml_status ml_project_ball(const ml_matrix* a, const char* spec, double radius, ml_matrix** out);
ML_API ml_status ml_newton_schulz(const ml_matrix* a, int steps, ml_matrix** out);

/* Datasets. Labels are 0-based here; CSV files use 1-based labels. */
ML_API ml_status ml_dataset_create(const double* features, const int* labels, size_t n, size_t d, int k,
                                   ml_dataset** out);
/* CSV path or fixture name (orthogonal-2, fixtures/orthogonal-2, ...). */
ML_API ml_status ml_dataset_load(const char* source, ml_dataset** out);
ML_API ml_status ml_dataset_generate(int k, size_t d, size_t per_class, double sigma, uint64_t seed,
                                     ml_dataset** out);
ML_API ml_status ml_dataset_save(const ml_dataset* data, const char* path);
ML_API void ml_dataset_free(ml_dataset* data);
ML_API size_t ml_dataset_size(const ml_dataset* data);
ML_API size_t ml_dataset_dim(const ml_dataset* data);
ML_API int ml_dataset_classes(const ml_dataset* data);
ML_API double ml_dataset_bound(const ml_dataset* data);
ML_API uint64_t ml_dataset_hash(const ml_dataset* data);

/* loss is "ce", "exp" or "pll". gradient may be NULL. */
ML_API ml_status ml_loss_eval(const ml_dataset* data, const char* loss, const ml_matrix* w, double* loss_out,
                              double* proxy_out, ml_matrix** gradient);
ML_API ml_status ml_attained_margin(const ml_dataset* data, const ml_matrix* w, double* out);

/* Max-margin solve. A non-separable dataset still returns ML_OK; query ml_margin_non_separable. */
ML_API ml_status ml_margin_solve(const ml_dataset* data, const char* spec, ml_margin** out);
ML_API ml_status ml_margin_brute_force(const ml_dataset* data, const char* spec, int grid, double* out);
ML_API void ml_margin_free(ml_margin* m);
ML_API double ml_margin_gamma(const ml_margin* m);
ML_API double ml_margin_upper_bound(const ml_margin* m);
ML_API int64_t ml_margin_iterations(const ml_margin* m);
ML_API int ml_margin_non_separable(const ml_margin* m);
/* Borrowed separator, valid while m lives. */
ML_API const ml_matrix* ml_margin_separator(const ml_margin* m);

/* algorithm_json is an algorithm object as in experiment configs, e.g.
   {"kind":"muon","beta1":0.9} or {"kind":"adam","beta1":0.9,"beta2":0.99,"epsilon":0}. */
ML_API ml_status ml_optimizer_create(const char* algorithm_json, const ml_matrix* w0, double eta0, double a,
                                     ml_optimizer** out);
ML_API void ml_optimizer_free(ml_optimizer* opt);
/* Evaluates the loss gradient at the current weights and applies one update. */
ML_API ml_status ml_optimizer_step(ml_optimizer* opt, const ml_dataset* data, const char* loss);
ML_API int64_t ml_optimizer_steps(const ml_optimizer* opt);
ML_API int ml_optimizer_converged(const ml_optimizer* opt);
/* Copy of the current weights. */
ML_API ml_status ml_optimizer_weights(const ml_optimizer* opt, ml_matrix** out);

/* Experiments and verification produce a text report. */
ML_API ml_status ml_run_experiment_file(const char* config_path, ml_report** out);
ML_API ml_status ml_run_experiment_json(const char* config_json, ml_report** out);
/* perturb_check may be NULL; otherwise that check's bound is tightened by 0.5 (self-test). */
ML_API ml_status ml_verify(const ml_dataset* data, int64_t trials, uint64_t seed, const char* perturb_check,
                           ml_report** out);
ML_API void ml_report_free(ml_report* r);
ML_API int ml_report_passed(const ml_report* r);
ML_API const char* ml_report_text(const ml_report* r);

ML_API ml_status ml_fit_rate(const char* metrics_path, const char* column, double t_from, double t_to,
                             double* slope, double* intercept, double* residual, size_t* points);

#ifdef __cplusplus
}
#endif

#endif /* MARGINLAB_MARGINLAB_H */

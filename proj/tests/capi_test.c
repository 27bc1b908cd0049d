/* SPDX-License-Identifier: Apache-2.0 */
/* Exercises the C API from C so the header stays C-clean. */
#include <math.h>
#include <stdio.h>
#include <string.h>

#include "marginlab/marginlab.h"

static int failures = 0;

#define CHECK(cond)                                                          \
    do {                                                                     \
        if (!(cond)) {                                                       \
            fprintf(stderr, "%s:%d: CHECK(%s) failed\n", __FILE__, __LINE__, #cond); \
            ++failures;                                                      \
        }                                                                    \
    } while (0)

#define CHECK_OK(call) CHECK((call) == ML_OK)

static void test_matrix_and_norms(void) {
    const double a[] = {1.0, -2.0, 3.0, 0.5};
    ml_matrix* m = NULL;
    ml_matrix* d = NULL;
    double v = 0.0;
    CHECK_OK(ml_matrix_create(2, 2, a, &m));
    CHECK(ml_matrix_rows(m) == 2 && ml_matrix_cols(m) == 2);
    CHECK(ml_matrix_data(m)[2] == 3.0);
    CHECK_OK(ml_norm(m, "ewinf", &v));
    CHECK(v == 3.0);
    CHECK_OK(ml_norm(m, "ew1", &v));
    CHECK(v == 6.5);
    CHECK_OK(ml_dual_norm(m, "ewinf", &v));
    CHECK(v == 6.5);
    CHECK_OK(ml_lmo(m, "ewinf", &d));
    CHECK(ml_matrix_data(d)[0] == 1.0 && ml_matrix_data(d)[1] == -1.0);
    ml_matrix_free(d);
    d = NULL;
    CHECK_OK(ml_lmo(m, "sinf", &d));
    CHECK_OK(ml_norm(d, "sinf", &v));
    CHECK(fabs(v - 1.0) < 1e-12);
    ml_matrix_free(d);
    d = NULL;
    CHECK_OK(ml_project_ball(m, "ew2", 1.0, &d));
    CHECK_OK(ml_norm(d, "ew2", &v));
    CHECK(fabs(v - 1.0) < 1e-12);
    ml_matrix_free(d);
    d = NULL;
    CHECK_OK(ml_newton_schulz(m, 8, &d));
    ml_matrix_free(d);

    CHECK(ml_norm(m, "ew0.5", &v) == ML_INVALID_EXPONENT);
    CHECK(strlen(ml_last_error()) > 0);
    CHECK(ml_norm(m, "bogus", &v) != ML_OK);
    CHECK(ml_norm(NULL, "ew2", &v) == ML_INVALID_ARGUMENT);
    CHECK_OK(ml_norm(m, "ew2", &v));
    CHECK(strlen(ml_last_error()) == 0);
    ml_matrix_free(m);
}

static void test_dataset_and_margin(void) {
    const double h[] = {1.0, 0.0, 0.0, 1.0};
    const int y[] = {0, 1};
    ml_dataset* data = NULL;
    ml_dataset* fix = NULL;
    ml_margin* mg = NULL;
    double gamma = 0.0;
    CHECK_OK(ml_dataset_create(h, y, 2, 2, 2, &data));
    CHECK(ml_dataset_size(data) == 2 && ml_dataset_dim(data) == 2 && ml_dataset_classes(data) == 2);
    CHECK(ml_dataset_bound(data) == 1.0);
    CHECK_OK(ml_dataset_load("fixtures/orthogonal-2", &fix));
    CHECK(ml_dataset_hash(fix) == ml_dataset_hash(data));

    CHECK_OK(ml_margin_solve(data, "ewinf", &mg));
    CHECK(fabs(ml_margin_gamma(mg) - 2.0) < 1e-6);
    CHECK(ml_margin_upper_bound(mg) >= ml_margin_gamma(mg) - 1e-9);
    CHECK(!ml_margin_non_separable(mg));
    CHECK(ml_matrix_rows(ml_margin_separator(mg)) == 2);
    CHECK_OK(ml_attained_margin(data, ml_margin_separator(mg), &gamma));
    CHECK(fabs(gamma - 2.0) < 1e-6);
    ml_margin_free(mg);

    CHECK_OK(ml_margin_brute_force(data, "ew2", 41, &gamma));
    CHECK(fabs(gamma - 1.0) < 1e-2);
    CHECK(ml_margin_solve(data, "ew3", &mg) == ML_UNSUPPORTED_PROJECTION);

    {
        const int bad[] = {0, 5};
        ml_dataset* x = NULL;
        CHECK(ml_dataset_create(h, bad, 2, 2, 2, &x) != ML_OK);
        CHECK(x == NULL);
    }
    ml_dataset_free(fix);
    ml_dataset_free(data);

    CHECK_OK(ml_dataset_load("colinear-nonsep", &fix));
    CHECK_OK(ml_margin_solve(fix, "ewinf", &mg));
    CHECK(ml_margin_non_separable(mg));
    ml_margin_free(mg);
    ml_dataset_free(fix);
    CHECK(ml_dataset_load("no/such/file.csv", &fix) == ML_IO_ERROR);
}

static void test_loss_and_optimizer(void) {
    ml_dataset* data = NULL;
    ml_matrix* w = NULL;
    ml_matrix* g = NULL;
    ml_optimizer* opt = NULL;
    double loss = 0.0, proxy = 0.0;
    int t;
    CHECK_OK(ml_dataset_load("orthogonal-2", &data));
    CHECK_OK(ml_matrix_create(2, 2, NULL, &w));
    CHECK_OK(ml_loss_eval(data, "ce", w, &loss, &proxy, &g));
    CHECK(fabs(loss - log(2.0)) < 1e-15);
    CHECK(ml_matrix_rows(g) == 2);
    ml_matrix_free(g);
    CHECK(ml_loss_eval(data, "hinge", w, &loss, NULL, NULL) == ML_PARSE_ERROR);

    CHECK_OK(ml_optimizer_create("{\"kind\":\"signgd\"}", w, 0.1, 0.5, &opt));
    for (t = 0; t < 100; ++t) CHECK_OK(ml_optimizer_step(opt, data, "ce"));
    CHECK(ml_optimizer_steps(opt) == 100);
    CHECK(!ml_optimizer_converged(opt));
    ml_matrix_free(w);
    w = NULL;
    CHECK_OK(ml_optimizer_weights(opt, &w));
    CHECK(ml_matrix_data(w)[0] > 0.0 && ml_matrix_data(w)[1] < 0.0);
    ml_optimizer_free(opt);
    opt = NULL;
    CHECK(ml_optimizer_create("{\"kind\":\"adam\",\"norm\":\"ew2\"}", w, 0.1, 0.5, &opt) == ML_PARSE_ERROR);
    CHECK(ml_optimizer_create("{\"kind\":\"muon\",\"beta1\":1.5}", w, 0.1, 0.5, &opt) == ML_INVALID_ARGUMENT);
    CHECK(ml_optimizer_create("{\"kind\":\"muon\"}", w, -1.0, 0.5, &opt) == ML_INVALID_ARGUMENT);
    ml_matrix_free(w);
    ml_dataset_free(data);
}

static void test_reports(void) {
    ml_dataset* data = NULL;
    ml_report* r = NULL;
    double slope = 0.0;
    size_t points = 0;
    CHECK_OK(ml_dataset_load("orthogonal-2", &data));
    CHECK_OK(ml_verify(data, 100, 1, NULL, &r));
    CHECK(ml_report_passed(r));
    CHECK(strstr(ml_report_text(r), "verify: PASS") != NULL);
    ml_report_free(r);
    CHECK_OK(ml_verify(data, 100, 1, "gradient_lower", &r));
    CHECK(!ml_report_passed(r));
    ml_report_free(r);
    ml_dataset_free(data);

    CHECK_OK(ml_run_experiment_json("{\"dataset\":{\"path\":\"orthogonal-2\"},\"algorithm\":{\"kind\":\"ngd\"},"
                                    "\"steps\":300,\"output\":\"capi_metrics.csv\",\"track\":[\"ew2\"]}",
                                    &r));
    CHECK(strstr(ml_report_text(r), "steps: 300") != NULL);
    ml_report_free(r);
    CHECK_OK(ml_fit_rate("capi_metrics.csv", "eta", 100, 300, &slope, NULL, NULL, &points));
    /* Row t logs the rate of step t, eta0 / sqrt(t - 1). */
    CHECK(fabs(slope + 0.5) < 0.01);
    CHECK(points >= 10);
    CHECK(ml_fit_rate("capi_metrics.csv", "nope", 100, 300, &slope, NULL, NULL, NULL) != ML_OK);
    CHECK(ml_run_experiment_json("{\"bad\":1}", &r) == ML_PARSE_ERROR);
    CHECK(ml_run_experiment_file("missing.json", &r) == ML_IO_ERROR);
}

int main(void) {
    CHECK(strlen(ml_version()) > 0);
    CHECK(strcmp(ml_status_name(ML_NON_SEPARABLE), "non-separable") == 0);
    test_matrix_and_norms();
    test_dataset_and_margin();
    test_loss_and_optimizer();
    test_reports();
    if (failures) {
        fprintf(stderr, "%d check(s) failed\n", failures);
        return 1;
    }
    printf("capi: all checks passed\n");
    return 0;
}

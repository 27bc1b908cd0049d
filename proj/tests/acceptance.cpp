// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per headline criterion.
// Usage: acceptance [name...]   (no names runs everything)
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "marginlab/datagen.hpp"
#include "marginlab/error.hpp"
#include "marginlab/geometry.hpp"
#include "marginlab/harness.hpp"
#include "marginlab/losses.hpp"
#include "marginlab/margins.hpp"
#include "marginlab/norms.hpp"
#include "marginlab/optimizers.hpp"

using namespace marginlab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<NormSpec> nine_specs() {
    std::vector<NormSpec> out;
    for (double p : {1.0, 1.5, 2.0, 3.0}) out.push_back({NormFamily::entrywise, Exponent{p}});
    out.push_back(NormSpec::max_norm());
    for (double p : {1.0, 2.0, 3.0}) out.push_back({NormFamily::schatten, Exponent{p}});
    out.push_back(NormSpec::spectral());
    return out;
}

// 1000 matrices, shapes up to 20 x 30, entry scales spread over six decades.
std::vector<Matrix> matrix_corpus() {
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<int> rows(1, 20), cols(1, 30);
    std::uniform_real_distribution<double> log_scale(-3.0, 3.0);
    std::normal_distribution<double> normal;
    std::vector<Matrix> out;
    for (int i = 0; i < 1000; ++i) {
        Matrix m(static_cast<std::size_t>(rows(rng)), static_cast<std::size_t>(cols(rng)));
        const double s = std::pow(10.0, log_scale(rng));
        for (double& x : m.values()) x = s * normal(rng);
        out.push_back(std::move(m));
    }
    return out;
}

Outcome lmo_duality() {
    const auto corpus = matrix_corpus();
    const auto specs = nine_specs();
    const auto start = Clock::now();
    double worst = 0.0, worst_norm = 0.0;
    for (const auto& g : corpus) {
        for (const auto& spec : specs) {
            const Matrix d = lmo(g, spec);
            const double dual = dual_norm(g, spec);
            worst = std::max(worst, std::abs(inner(g, d) - dual) / dual);
            worst_norm = std::max(worst_norm, norm(d, spec) - 1.0);
        }
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-8 && worst_norm <= 1e-8 && secs < 10.0,
            fmt("9000 pairs, max rel |<G,lmo>-dual| %.2e, max norm(lmo)-1 %.2e, %.2f s", worst, worst_norm, secs)};
}

Outcome norm_ordering() {
    const auto corpus = matrix_corpus();
    const auto specs = nine_specs();
    long violations = 0;
    for (const auto& a : corpus) {
        const double lo = entrywise_norm(a, Exponent::infinity());
        const double hi = entrywise_norm(a, Exponent{1.0});
        for (const auto& spec : specs) {
            const double n = norm(a, spec);
            if (n < lo || n > hi) ++violations;
        }
    }
    return {violations == 0, fmt("9000 evaluations, %ld violations of max <= norm <= sum", violations)};
}

Outcome gradient_fd() {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<int> kdist(2, 5), ddist(1, 6), extra(0, 10);
    double worst = 0.0;
    std::map<LossKind, double> per_loss;
    for (LossKind kind : {LossKind::cross_entropy, LossKind::exponential, LossKind::pair_log_loss}) {
        double loss_worst = 0.0;
        for (int pair = 0; pair < 50; ++pair) {
            const int k = kdist(rng);
            const auto d = static_cast<std::size_t>(ddist(rng));
            const auto n = static_cast<std::size_t>(k + extra(rng));
            Matrix h(n, d);
            for (double& x : h.values()) x = normal(rng);
            std::vector<int> y(n);
            for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % static_cast<std::size_t>(k));
            const Dataset data(std::move(h), std::move(y), k);
            Matrix w(static_cast<std::size_t>(k), d);
            for (double& x : w.values()) x = normal(rng);

            const Matrix g = evaluate(kind, w, data).gradient;
            Matrix fd(g.rows(), g.cols());
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double step = 1e-5 * std::max(1.0, std::abs(w.values()[i]));
                Matrix wp = w, wm = w;
                wp.values()[i] += step;
                wm.values()[i] -= step;
                fd.values()[i] = (loss_value(kind, wp, data) - loss_value(kind, wm, data)) / (2 * step);
            }
            const double rel = entrywise_norm(fd - g, Exponent{2.0}) / entrywise_norm(g, Exponent{2.0});
            loss_worst = std::max(loss_worst, rel);
        }
        per_loss[kind] = loss_worst;
        worst = std::max(worst, loss_worst);
    }
    return {worst <= 1e-5, fmt("50 pairs per loss, max relative error ce %.2e exp %.2e pll %.2e",
                               per_loss[LossKind::cross_entropy], per_loss[LossKind::exponential],
                               per_loss[LossKind::pair_log_loss])};
}

Outcome inequality_suite() {
    GaussianParams p;
    p.k = 4;
    p.d = 6;
    p.per_class = 10;
    p.sigma = 0.5;
    p.seed = 3;
    const Dataset generated = gen_gaussian(p).data;
    const auto start = Clock::now();
    const VerifyReport a = verify_inequalities(fixture("orthogonal-2"), 1000, 1);
    const VerifyReport b = verify_inequalities(generated, 1000, 2);
    const double secs = seconds_since(start);
    long violations = 0;
    std::set<std::string> unexercised;
    for (const auto& name : verify_check_names()) unexercised.insert(name);
    for (const auto* r : {&a, &b}) {
        for (const auto& c : r->checks) {
            violations += c.violations;
            if (c.evaluated > 0) unexercised.erase(c.name);
        }
    }
    std::string detail = fmt("%zu checks x 2 datasets x 1000 trials, %ld violations, %.1f s", a.checks.size(),
                             violations, secs);
    for (const auto& name : unexercised) detail += ", never exercised: " + name;
    return {violations == 0 && unexercised.empty() && !a.vacuous && !b.vacuous && secs < 60.0, detail};
}

Outcome margin_oracle() {
    const std::pair<const char*, Dataset> sets[] = {{"orthogonal-2", fixture("orthogonal-2")},
                                                    {"single-point", single_point_dataset()}};
    bool ok = true;
    std::string detail;
    for (const auto& [name, data] : sets) {
        for (const auto& spec : {NormSpec::max_norm(), NormSpec::frobenius(), NormSpec::spectral()}) {
            const double gamma = data_margin(data, spec).gamma;
            const double e41 = std::abs(gamma - brute_force_margin(data, spec, 41));
            const double e201 = std::abs(gamma - brute_force_margin(data, spec, 201));
            ok = ok && e41 <= 1e-2 && e201 <= 1e-3;
            detail += fmt("%s%s/%s %.6f (grid41 %.1e, grid201 %.1e)", detail.empty() ? "" : "; ", name,
                          spec.name().c_str(), gamma, e41, e201);
        }
    }
    return {ok, detail};
}

// The headline setting: k=10, d=25, sigma=0.1, 50 points per class, a=1/2.
struct HeadlineSetting {
    Dataset data;
    MarginCache cache;
    std::map<std::string, ExperimentResult> runs;

    HeadlineSetting() : data(make()), cache() {}

    static Dataset make() {
        GaussianParams p;
        p.k = 10;
        p.d = 25;
        p.per_class = 50;
        p.sigma = 0.1;
        p.seed = 7;
        return gen_gaussian(p).data;
    }

    const ExperimentResult& run(const std::string& name, AlgorithmKind kind, double eta0, std::int64_t steps) {
        auto it = runs.find(name);
        if (it != runs.end()) return it->second;
        ExperimentConfig cfg;
        cfg.path = "<memory>";
        cfg.algorithm = std::move(kind);
        cfg.schedule = Schedule{eta0, 0.5};
        cfg.steps = steps;
        cfg.track = {NormSpec::max_norm(), NormSpec::frobenius(), NormSpec::spectral()};
        return runs.emplace(name, run_experiment(cfg, data, cache)).first->second;
    }

    // SignGD, NGD, Spectral-GD and Muon, 2e4 steps each.
    const ExperimentResult& four_runs(const std::string& name) {
        if (name == "SignGD") return run(name, Nsd{NormSpec::max_norm()}, 0.1, 20000);
        if (name == "NGD") return run(name, Nsd{NormSpec::frobenius()}, 0.1, 20000);
        if (name == "Spectral-GD") return run(name, Nsd{NormSpec::spectral()}, 0.05, 20000);
        return run(name, Nmd{NormSpec::spectral(), 0.9}, 0.05, 20000);
    }
};

HeadlineSetting& headline() {
    static HeadlineSetting s;
    return s;
}

const char* kSpecNames[] = {"ewinf", "ew2", "sinf"};

struct RunCase {
    const char* algorithm;
    std::size_t matched;  // index into kSpecNames
};
const RunCase kFourRuns[] = {{"SignGD", 0}, {"NGD", 1}, {"Spectral-GD", 2}, {"Muon", 2}};

Outcome norm_preference() {
    const auto start = Clock::now();
    bool ok = true;
    std::string detail;
    for (const auto& c : kFourRuns) {
        const auto& r = headline().four_runs(c.algorithm);
        const MetricsRecord& last = r.records.back();
        std::size_t best = 0;
        for (std::size_t s = 1; s < 3; ++s)
            if (*last.gap[s] < *last.gap[best]) best = s;
        ok = ok && best == c.matched && last.t == 20000;
        detail += fmt("%s%s gaps ewinf %.4f ew2 %.4f sinf %.4f", detail.empty() ? "" : "; ", c.algorithm,
                      *last.gap[0], *last.gap[1], *last.gap[2]);
    }
    detail += fmt("; %.0f s", seconds_since(start));
    return {ok, detail};
}

Outcome correlation_preference() {
    bool ok = true;
    std::string detail;
    for (const auto& c : kFourRuns) {
        const MetricsRecord& last = headline().four_runs(c.algorithm).records.back();
        double other = -1.0;
        for (std::size_t s = 0; s < 3; ++s)
            if (s != c.matched) other = std::max(other, *last.correlation[s]);
        const double lead = *last.correlation[c.matched] - other;
        ok = ok && lead >= 0.02;
        detail += fmt("%s%s corr(%s) %.4f, lead %.4f", detail.empty() ? "" : "; ", c.algorithm, kSpecNames[c.matched],
                      *last.correlation[c.matched], lead);
    }
    return {ok, detail};
}

Outcome rate_slopes() {
    bool ok = true;
    std::string detail;
    const std::vector<NormSpec> track{NormSpec::max_norm(), NormSpec::frobenius(), NormSpec::spectral()};
    for (const auto& c : {kFourRuns[0], kFourRuns[1], kFourRuns[2]}) {
        const MetricsTable t = to_table(headline().four_runs(c.algorithm).records, track);
        const std::string column = std::string("gap_") + kSpecNames[c.matched];
        const RateFit f = fit_rate(t, column, 100, 10000);
        ok = ok && f.slope <= -0.35;
        detail += fmt("%s%s %s slope %.3f (%zu points)", detail.empty() ? "" : "; ", c.algorithm, column.c_str(),
                      f.slope, f.points);
    }
    return {ok, detail};
}

std::vector<Matrix> trajectory(const AlgorithmKind& kind, const Dataset& data, const Matrix& w0) {
    std::vector<Matrix> out;
    run(w0, kind, Schedule{}, data, LossKind::cross_entropy, 100, Cadence::every(),
        [&](const StepInfo& info) { out.push_back(info.state.weights()); });
    return out;
}

double worst_diff(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
    if (a.size() != b.size()) return INFINITY;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j)
            m = std::max(m, std::abs(a[i].values()[j] - b[i].values()[j]));
    return m;
}

Outcome reduction_identities() {
    const Dataset fix = fixture("orthogonal-2");
    const Matrix w0(2, 2);
    double nmd = 0.0;
    for (const auto& spec : {NormSpec::sum_norm(), NormSpec::frobenius(), NormSpec::max_norm(), NormSpec::nuclear(),
                             NormSpec::spectral()})
        nmd = std::max(nmd, worst_diff(trajectory(Nmd{spec, 0.0}, fix, w0), trajectory(Nsd{spec}, fix, w0)));
    const double adam =
        worst_diff(trajectory(Adam{0.0, 0.0, 0.0}, fix, w0), trajectory(Nsd{NormSpec::max_norm()}, fix, w0));
    return {nmd <= 1e-12 && adam <= 1e-12,
            fmt("100 steps on orthogonal-2: nmd(beta1=0) vs nsd max diff %.1e over 5 norms, adam(0,0,0) vs SignGD %.1e",
                nmd, adam)};
}

Outcome adam_moment_bound() {
    const double alpha = adam_alpha(0.9, 0.99);
    double worst = 0.0;
    long violations = 0, logged = 0;
    run(Matrix(10, 25), Adam{0.9, 0.99, 0.0}, Schedule{0.1, 0.5}, headline().data, LossKind::cross_entropy, 10000,
        Cadence::every(), [&](const StepInfo& info) {
            const double r = info.state.moment_ratio().max_abs();
            worst = std::max(worst, r);
            violations += r > alpha;
            ++logged;
        });
    return {violations == 0 && logged == 10000,
            fmt("%ld steps logged, max |M/sqrt(V)| %.4f <= alpha %.4f, %ld violations", logged, worst, alpha,
                violations)};
}

std::optional<double> column_at(const ExperimentResult& r, std::int64_t t, std::size_t spec) {
    for (const auto& rec : r.records)
        if (rec.t == t) return rec.normalized_margin[spec];
    return std::nullopt;
}

Outcome adam_epsilon_effect() {
    const auto start = Clock::now();
    const auto& zero = headline().run("adam eps=0", Adam{0.9, 0.99, 0.0}, 0.1, 100000);
    const auto& small = headline().run("adam eps=1e-6", Adam{0.9, 0.99, 1e-6}, 0.1, 100000);
    const auto z_inf = column_at(zero, 100000, 0);
    const auto s_inf = column_at(small, 100000, 0);
    const auto s2_start = column_at(small, 10000, 1);
    const auto s2_end = column_at(small, 100000, 1);
    if (!z_inf || !s_inf || !s2_start || !s2_end) return {false, "missing records at t = 1e4 or 1e5"};
    return {*z_inf > *s_inf && *s2_end > *s2_start,
            fmt("max-norm normalized margin at 1e5: eps=0 %.4f vs eps=1e-6 %.4f; eps=1e-6 ew2 margin %.4f -> %.4f "
                "over [1e4, 1e5]; %.0f s",
                *z_inf, *s_inf, *s2_start, *s2_end, seconds_since(start))};
}

struct Criterion {
    const char* name;
    const char* text;
    Outcome (*fn)();
};

const Criterion kCriteria[] = {
    {"lmo_duality", "LMO duality <G, lmo(G)> = dual_norm(G) on 1000 matrices x 9 norms, under 10 s", lmo_duality},
    {"norm_ordering", "max-norm <= norm <= sum-norm on the same corpus", norm_ordering},
    {"gradient_fd", "CE/EXP/PLL gradients match central differences to 1e-5", gradient_fd},
    {"inequality_suite", "inequality suite, 1000 trials on a fixture and a generated dataset, under 60 s", inequality_suite},
    {"margin_oracle", "solver matches brute force within 1e-2 (grid 41) and 1e-3 (grid 201)", margin_oracle},
    {"norm_preference", "each algorithm has its smallest relative gap in its own norm after 2e4 steps",
     norm_preference},
    {"correlation", "final correlation to the matched separator leads the others by >= 0.02",
     correlation_preference},
    {"rate_slopes", "gap slopes over t in [1e2, 1e4] are <= -0.35 for SignGD, NGD, Spectral-GD", rate_slopes},
    {"reduction_identities", "nmd(beta1=0) = nsd and adam(0,0,0) = SignGD over 100 steps to 1e-12",
     reduction_identities},
    {"adam_moment_bound", "Adam |M/sqrt(V)| <= alpha at every step of a 1e4-step run", adam_moment_bound},
    {"adam_epsilon_effect", "Adam eps=0 beats eps=1e-6 on the max-norm margin; eps=1e-6 ew2 margin still rising",
     adam_epsilon_effect},
};

}  // namespace

int main(int argc, char** argv) {
    std::setvbuf(stdout, nullptr, _IONBF, 0);
    std::set<std::string> only(argv + 1, argv + argc);
    int failed = 0, ran = 0;
    for (const auto& c : kCriteria) {
        if (!only.empty() && !only.count(c.name)) continue;
        ++ran;
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %s: %s [%s]\n", o.pass ? "PASS" : "FAIL", c.name, c.text, o.detail.c_str());
    }
    if (ran == 0) {
        std::fprintf(stderr, "no criterion matched\n");
        return 1;
    }
    std::printf("%d/%d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}

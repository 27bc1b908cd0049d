// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>

#include "marginlab/error.hpp"
#include "marginlab/harness.hpp"

namespace marginlab {

namespace {

const std::vector<NormSpec>& suite_specs() {
    static const std::vector<NormSpec> specs{NormSpec::sum_norm(), NormSpec::frobenius(), NormSpec::max_norm(),
                                             NormSpec::nuclear(), NormSpec::spectral()};
    return specs;
}

class Suite {
public:
    Suite(const VerifyOptions& opts) : opts_(opts) {
        for (const auto& name : verify_check_names()) {
            index_[name] = results_.size();
            results_.push_back({name, 0, 0, std::numeric_limits<double>::infinity()});
        }
        if (!opts.perturb_check.empty() && !index_.count(opts.perturb_check))
            throw Error(ErrorCode::invalid_argument, "unknown check '" + opts.perturb_check + "'");
    }

    // Records lhs <= rhs.
    void check(const std::string& name, double lhs, double rhs) {
        if (name == opts_.perturb_check) {
            if (rhs > 0.0)
                rhs *= opts_.perturb_factor;
            else if (rhs < 0.0)
                rhs /= opts_.perturb_factor;
            else
                rhs -= 1.0 - opts_.perturb_factor;
        }
        CheckResult& r = results_[index_.at(name)];
        ++r.evaluated;
        const double slack = rhs - lhs;
        if (!(slack >= -opts_.slack)) ++r.violations;  // NaN counts as a violation
        r.worst_slack = std::isnan(slack) ? slack : std::min(r.worst_slack, slack);
    }

    std::vector<CheckResult> finish() {
        for (auto& r : results_)
            if (r.evaluated == 0) r.worst_slack = 0.0;
        return results_;
    }

private:
    const VerifyOptions& opts_;
    std::map<std::string, std::size_t> index_;
    std::vector<CheckResult> results_;
};

struct Sampler {
    std::mt19937_64 engine;
    std::normal_distribution<double> normal{0.0, 1.0};
    std::uniform_real_distribution<double> unit{0.0, 1.0};

    explicit Sampler(std::uint64_t seed) : engine(seed) {}

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(engine); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    // uniform in (0, 1]
    double open_unit() { return 1.0 - unit(engine); }

    Matrix gaussian(std::size_t r, std::size_t c, double scale) {
        Matrix m(r, c);
        for (double& x : m.values()) x = scale * normal(engine);
        return m;
    }

    std::vector<double> simplex(std::size_t k) {
        // Mix flat and peaked points so the bounds near vertices get exercised.
        const double conc = log_uniform(0.05, 5.0);
        std::gamma_distribution<double> g(conc, 1.0);
        std::vector<double> s(k);
        double total = 0.0;
        for (double& x : s) total += (x = g(engine) + 1e-300);
        for (double& x : s) x /= total;
        return s;
    }
};

}  // namespace

const std::vector<std::string>& verify_check_names() {
    static const std::vector<std::string> names{
        "norm_ordering",       "schatten_monotonicity", "gradient_lower",  "gradient_upper",
        "proxy_loss_upper",    "proxy_loss_lower",      "loss_le_twice_proxy", "small_loss_separates",
        "hessian_quadratic",   "simplex_quadratic",     "loss_lipschitz",  "proxy_ratio",
        "adam_moment_ratio",   "pll_self_bound",
    };
    return names;
}

bool VerifyReport::passed() const {
    for (const auto& c : checks)
        if (c.violations > 0) return false;
    return true;
}

std::string VerifyReport::format() const {
    std::string out;
    char buf[256];
    if (vacuous) return "verify: vacuous (0 trials)\n";
    for (const auto& c : checks) {
        std::snprintf(buf, sizeof buf, "%-22s evaluated=%-7lld violations=%-5lld worst_slack=%.3e%s\n",
                      c.name.c_str(), static_cast<long long>(c.evaluated), static_cast<long long>(c.violations),
                      c.worst_slack, c.evaluated == 0 ? "  (not exercised)" : "");
        out += buf;
    }
    out += passed() ? "verify: PASS\n" : "verify: FAIL\n";
    return out;
}

VerifyReport verify_inequalities(const Dataset& data, std::int64_t trials, std::uint64_t seed,
                                 const VerifyOptions& opts) {
    if (trials < 0) throw Error(ErrorCode::invalid_argument, "trials must be >= 0");
    VerifyReport report;
    report.trials = trials;
    if (trials == 0) {
        report.vacuous = true;
        return report;
    }
    Suite suite(opts);
    Sampler rng(seed);
    const auto k = static_cast<std::size_t>(data.num_classes());
    const std::size_t d = data.dim();
    const double n = static_cast<double>(data.size());
    const double b = data.data_bound();
    const auto& specs = suite_specs();

    std::vector<double> gammas;
    for (const auto& spec : specs) gammas.push_back(data_margin(data, spec, opts.margin_solver).gamma);
    const MarginSolution v2 = data_margin(data, NormSpec::frobenius(), opts.margin_solver);
    const bool separable = !v2.non_separable;

    for (std::int64_t trial = 0; trial < trials; ++trial) {
        // Classifier: half random, half a scaled max-margin direction plus noise
        // so that small-loss regimes are reached.
        Matrix w;
        if (separable && trial % 2 == 1) {
            const double s = rng.log_uniform(0.1, 60.0) / v2.gamma;
            w = v2.v * s + rng.gaussian(k, d, rng.uniform(0.0, 0.2) * s / std::sqrt(static_cast<double>(k * d)));
        } else {
            w = rng.gaussian(k, d, rng.log_uniform(1e-3, 10.0) / b);
        }
        const LossEval ce = evaluate(LossKind::cross_entropy, w, data);
        const double big_g = ce.proxy;
        const double big_l = ce.loss;

        // Norm ordering and Schatten monotonicity on a random matrix.
        {
            Matrix a = rng.gaussian(1 + trial % 6, 1 + (trial / 6) % 7, rng.log_uniform(1e-3, 1e3));
            const double mx = entrywise_norm(a, Exponent::infinity());
            const double sm = entrywise_norm(a, Exponent{1.0});
            for (auto fam : {NormFamily::entrywise, NormFamily::schatten}) {
                for (double p : {1.0, 1.5, 2.0, 3.0, std::numeric_limits<double>::infinity()}) {
                    const double v = norm(a, {fam, Exponent{p}});
                    suite.check("norm_ordering", mx, v);
                    suite.check("norm_ordering", v, sm);
                }
            }
            const double s_inf = schatten_norm(a, Exponent::infinity());
            const double s_p = schatten_norm(a, Exponent{rng.uniform(1.0, 8.0)});
            const double s_1 = schatten_norm(a, Exponent{1.0});
            suite.check("schatten_monotonicity", s_inf, s_p);
            suite.check("schatten_monotonicity", s_p, s_1);
        }

        // Gradient sandwich.
        for (std::size_t s = 0; s < specs.size(); ++s) {
            const double dn = dual_norm(ce.gradient, specs[s]);
            if (gammas[s] > 0.0) suite.check("gradient_lower", gammas[s] * big_g, dn);
            suite.check("gradient_upper", dn, 2.0 * b * big_g);
        }

        // Proxy versus loss.
        if (big_l > 0.0) {
            suite.check("proxy_loss_upper", big_g, big_l);
            suite.check("proxy_loss_lower", (1.0 - n * big_l / 2.0) * big_l, big_g);
        }
        if (big_l <= std::log(2.0) / n || big_g <= 1.0 / (2.0 * n)) suite.check("loss_le_twice_proxy", big_l, 2.0 * big_g);
        if (big_l <= std::log(2.0) / n) suite.check("small_loss_separates", -attained_margin(w, data), 0.0);

        // Softmax Hessian and simplex bounds.
        {
            const auto s = rng.simplex(k);
            const std::size_t c = static_cast<std::size_t>(trial) % k;
            std::vector<double> v(k);
            const double vs = rng.log_uniform(1e-2, 1e2);
            for (double& x : v) x = vs * rng.normal(rng.engine);
            double mean = 0.0, second = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                mean += s[i] * v[i];
                second += s[i] * v[i] * v[i];
            }
            const double quad = second - mean * mean;
            Matrix vvt(k, k);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j) vvt(i, j) = v[i] * v[j];
            for (const auto& spec : specs) suite.check("hessian_quadratic", quad, 4.0 * (1.0 - s[c]) * norm(vvt, spec));
            double lhs = 0.0;
            for (double x : s) lhs += x * (1.0 - x);
            for (std::size_t cc = 0; cc < k; ++cc) suite.check("simplex_quadratic", lhs, 2.0 * (1.0 - s[cc]));
        }

        // Loss Lipschitz bound and the proxy ratio along a bounded step.
        {
            const Matrix w0 = rng.gaussian(k, d, rng.log_uniform(1e-3, 10.0) / b);
            const double l0 = loss_value(LossKind::cross_entropy, w0, data);
            for (const auto& spec : specs)
                suite.check("loss_lipschitz", std::abs(big_l - l0), 2.0 * b * norm(w - w0, spec));

            const NormSpec& spec = specs[static_cast<std::size_t>(trial) % specs.size()];
            Matrix delta = rng.gaussian(k, d, 1.0);
            delta *= rng.open_unit() / norm(delta, spec);
            const double psi = rng.open_unit();
            const double eta = rng.open_unit();
            const double g_moved = evaluate(LossKind::cross_entropy, w - delta * (psi * eta), data).proxy;
            if (big_g > 0.0)
                suite.check("proxy_ratio", g_moved / big_g,
                            std::exp(2.0 * b * eta * psi * entrywise_norm(delta, Exponent::infinity())));
        }

        // Moment ratio bound on a random gradient stream.
        {
            const double beta2 = rng.uniform(0.0, 0.999);
            const double beta1 = rng.uniform(0.0, beta2);
            const double alpha = adam_alpha(beta1, beta2);
            double m = 0.0, v = 0.0;
            const double scale = rng.log_uniform(1e-6, 1e2);
            for (int t = 0; t < 40; ++t) {
                double g = scale * rng.normal(rng.engine);
                if (g == 0.0) g = scale;
                m = beta1 * m + (1 - beta1) * g;
                v = beta2 * v + (1 - beta2) * g * g;
                suite.check("adam_moment_ratio", std::abs(m), alpha * std::sqrt(v));
            }
        }

        const LossEval pll = evaluate(LossKind::pair_log_loss, w, data);
        suite.check("pll_self_bound", pll.proxy, pll.loss);
    }
    report.checks = suite.finish();
    return report;
}

}  // namespace marginlab

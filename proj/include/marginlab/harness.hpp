// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "marginlab/datagen.hpp"
#include "marginlab/margins.hpp"
#include "marginlab/optimizers.hpp"

namespace marginlab {

struct InitSpec {
    /// 0 gives W0 = 0; otherwise entries ~ scale * N(0, 1) drawn with seed.
    double scale = 0.0;
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    /// Exactly one of generate / path is used.
    std::optional<GaussianParams> generate;
    std::string path;

    AlgorithmKind algorithm = Nsd{NormSpec::max_norm()};
    Schedule schedule;
    LossKind loss = LossKind::cross_entropy;
    std::int64_t steps = 1000;
    Cadence cadence;
    std::vector<NormSpec> track{NormSpec::max_norm(), NormSpec::frobenius(), NormSpec::spectral()};
    InitSpec init;
    /// Metrics CSV; empty keeps the log in memory only.
    std::string output;
    /// Sidecar with cached margins; empty picks margins-<hash>.json next to output.
    std::string margin_cache;
    MarginSolverConfig margin_solver;

    void validate() const;
};

/// Parses the JSON form. Unknown keys are rejected at every level.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string to_json(const ExperimentConfig& cfg);

/// Parses a lone algorithm object such as {"kind":"muon"}.
AlgorithmKind parse_algorithm_config(const std::string& json_text);

/// Only these five specs have metrics columns.
bool is_trackable(const NormSpec& spec);

struct MetricsRecord {
    std::int64_t t = 0;
    double eta = 0.0;
    double loss = 0.0;
    double proxy = 0.0;
    std::optional<double> proxy_loss_ratio;
    std::vector<double> dual_norm;  // per tracked spec
    double margin = 0.0;
    std::vector<std::optional<double>> normalized_margin;
    std::vector<std::optional<double>> gap;  // (gamma - normalized) / gamma
    std::vector<std::optional<double>> correlation;
    std::optional<double> mom_gap_sum;
    std::optional<double> adam_ratio_max;
};

std::string metrics_header(const std::vector<NormSpec>& track);
std::string metrics_row(const MetricsRecord& rec);

/// Column-addressable view of a metrics log; empty cells are NaN.
struct MetricsTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] std::size_t column_index(const std::string& name) const;
    [[nodiscard]] std::vector<double> column(const std::string& name) const;
};

MetricsTable to_table(const std::vector<MetricsRecord>& records, const std::vector<NormSpec>& track);
MetricsTable parse_metrics_csv(const std::string& text);
MetricsTable read_metrics_csv(const std::string& path);

/// Margins of one dataset under several specs, cached on disk by dataset hash.
class MarginCache {
public:
    /// path may be empty (memory only).
    explicit MarginCache(std::string path = {});

    const MarginSolution& get(const Dataset& data, const NormSpec& spec, const MarginSolverConfig& cfg = {});

private:
    std::string path_;
    std::uint64_t hash_ = 0;
    std::map<std::string, MarginSolution> entries_;
    void load(std::uint64_t hash);
    void save() const;
};

struct ExperimentResult {
    Dataset data;
    std::vector<MetricsRecord> records;
    Matrix final_weights;
    std::int64_t steps_taken = 0;
    bool converged = false;
    /// Per tracked spec (absent when the data is not separable).
    std::vector<std::optional<MarginSolution>> margins;
};

Dataset load_experiment_data(const ExperimentConfig& cfg);

/// Runs the configured training, logging at the cadence. On failure a
/// `# FAILED ...` row is appended to the partial CSV and the error rethrown.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// As above with a caller-owned cache and data (the cache must match data).
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data, MarginCache& cache);

struct CheckResult {
    std::string name;
    std::int64_t evaluated = 0;  // trials where the inequality applied
    std::int64_t violations = 0;
    /// Smallest (bound - value) seen; negative means violated.
    double worst_slack = 0.0;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    std::int64_t trials = 0;
    bool vacuous = false;
    [[nodiscard]] bool passed() const;
    [[nodiscard]] std::string format() const;
};

struct VerifyOptions {
    /// Self-test: tighten the bound of this check by `factor`.
    std::string perturb_check;
    double perturb_factor = 0.5;
    double slack = 1e-9;
    MarginSolverConfig margin_solver = [] {
        MarginSolverConfig c;
        c.max_iters = 20000;
        c.refine_max_iters = 3000;
        return c;
    }();
};

const std::vector<std::string>& verify_check_names();

/// Samples random W, directions, simplex points and momentum parameters and
/// evaluates every inequality of the suite.
VerifyReport verify_inequalities(const Dataset& data, std::int64_t trials, std::uint64_t seed,
                                 const VerifyOptions& opts = {});

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    /// RMS residual in log space.
    double residual = 0.0;
    std::size_t points = 0;
};

/// Least squares of log(value) against log(t) over t in [t_from, t_to].
/// Non-positive and empty values are dropped; fewer than 10 left is an error.
RateFit fit_rate(const MetricsTable& log, const std::string& column, double t_from, double t_to);

}  // namespace marginlab

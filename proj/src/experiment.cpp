// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "marginlab/error.hpp"
#include "marginlab/geometry.hpp"
#include "marginlab/harness.hpp"

namespace marginlab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::mutex& cache_file_mutex() {
    static std::mutex m;
    return m;
}

std::string hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json solution_json(const MarginSolution& s) {
    json v = json::array();
    for (double x : s.v.values()) v.push_back(x);
    return {{"gamma", s.gamma},
            {"upper_bound", s.upper_bound},
            {"iterations", s.iterations},
            {"non_separable", s.non_separable},
            {"rows", s.v.rows()},
            {"cols", s.v.cols()},
            {"v", v}};
}

MarginSolution solution_from_json(const json& j, const NormSpec& spec) {
    MarginSolution s;
    s.spec = spec;
    s.gamma = j.at("gamma").get<double>();
    s.upper_bound = j.at("upper_bound").get<double>();
    s.duality_gap_estimate = s.upper_bound - s.gamma;
    s.iterations = j.at("iterations").get<std::int64_t>();
    s.non_separable = j.at("non_separable").get<bool>();
    s.v = Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                 j.at("v").get<std::vector<double>>());
    return s;
}

json read_cache_file(const std::string& path, std::uint64_t hash) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return json::object();
    try {
        json j = json::parse(f);
        if (j.value("hash", std::string()) != hex(hash)) return json::object();
        return j.value("margins", json::object());
    } catch (const json::exception&) {
        return json::object();
    }
}

}  // namespace

MarginCache::MarginCache(std::string path) : path_(std::move(path)) {}

void MarginCache::load(std::uint64_t hash) {
    entries_.clear();
    hash_ = hash;
    if (path_.empty()) return;
    std::lock_guard lock(cache_file_mutex());
    const json margins = read_cache_file(path_, hash);
    for (const auto& [name, entry] : margins.items()) {
        try {
            entries_.emplace(name, solution_from_json(entry, NormSpec::parse(name)));
        } catch (const std::exception&) {
            // stale or foreign entry; recomputed on demand
        }
    }
}

void MarginCache::save() const {
    if (path_.empty()) return;
    std::lock_guard lock(cache_file_mutex());
    json margins = read_cache_file(path_, hash_);
    for (const auto& [name, sol] : entries_) margins[name] = solution_json(sol);
    const json root{{"hash", hex(hash_)}, {"margins", margins}};
    const fs::path target(path_);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const std::string tmp = path_ + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw Error(ErrorCode::io_error, "cannot write margin cache '" + tmp + "'");
        f << root.dump(1) << "\n";
    }
    fs::rename(tmp, target);
}

const MarginSolution& MarginCache::get(const Dataset& data, const NormSpec& spec, const MarginSolverConfig& cfg) {
    const std::uint64_t h = dataset_hash(data);
    if (h != hash_ || (entries_.empty() && !path_.empty())) load(h);
    const std::string key = spec.name();
    auto it = entries_.find(key);
    if (it != entries_.end() && it->second.v.rows() == static_cast<std::size_t>(data.num_classes()) &&
        it->second.v.cols() == data.dim())
        return it->second;
    MarginSolution sol = data_margin(data, spec, cfg);
    sol.trace.clear();
    entries_[key] = std::move(sol);
    save();
    return entries_[key];
}

Dataset load_experiment_data(const ExperimentConfig& cfg) {
    if (cfg.generate) return gen_gaussian(*cfg.generate).data;
    return load_dataset(cfg.path);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    Dataset data = load_experiment_data(cfg);
    std::string cache_path = cfg.margin_cache;
    if (cache_path.empty() && !cfg.output.empty()) {
        const fs::path out(cfg.output);
        cache_path = (out.parent_path() / ("margins-" + hex(dataset_hash(data)) + ".json")).string();
    }
    MarginCache cache(cache_path);
    return run_experiment(cfg, data, cache);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data, MarginCache& cache) {
    cfg.validate();
    const auto k = static_cast<std::size_t>(data.num_classes());
    ExperimentResult result{data, {}, Matrix(k, data.dim()), 0, false, {}};
    for (const auto& spec : cfg.track) {
        const MarginSolution& sol = cache.get(data, spec, cfg.margin_solver);
        if (sol.non_separable)
            result.margins.emplace_back();
        else
            result.margins.emplace_back(sol);
    }

    Matrix w0(k, data.dim());
    if (cfg.init.scale > 0.0) {
        NormalSampler normal(cfg.init.seed);
        for (double& x : w0.values()) x = cfg.init.scale * normal();
    }

    std::ofstream out;
    if (!cfg.output.empty()) {
        const fs::path p(cfg.output);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        out.open(cfg.output, std::ios::binary);
        if (!out) throw Error(ErrorCode::io_error, "cannot open metrics log '" + cfg.output + "'");
        out << metrics_header(cfg.track) << "\n";
    }

    const bool momentum = !std::holds_alternative<Nsd>(cfg.algorithm);
    const bool adam = std::holds_alternative<Adam>(cfg.algorithm);
    std::int64_t last_t = 0;

    auto hook = [&](const StepInfo& info) {
        const Matrix& w = info.state.weights();
        const LossEval ev = evaluate(cfg.loss, w, data);
        MetricsRecord rec;
        rec.t = info.t;
        rec.eta = info.eta;
        rec.loss = ev.loss;
        rec.proxy = ev.proxy;
        if (ev.loss > 0.0) rec.proxy_loss_ratio = ev.proxy / ev.loss;
        rec.margin = attained_margin(w, data);
        const bool nonzero = !w.is_zero();
        for (std::size_t s = 0; s < cfg.track.size(); ++s) {
            const NormSpec& spec = cfg.track[s];
            rec.dual_norm.push_back(dual_norm(ev.gradient, spec));
            std::optional<double> nm;
            if (nonzero) nm = rec.margin / norm(w, spec);
            rec.normalized_margin.push_back(nm);
            const auto& sol = result.margins[s];
            rec.gap.push_back(sol && nm ? std::optional<double>((sol->gamma - *nm) / sol->gamma) : std::nullopt);
            rec.correlation.push_back(sol && nonzero ? std::optional<double>(correlation(w, sol->v)) : std::nullopt);
        }
        if (momentum) rec.mom_gap_sum = entrywise_norm(info.state.first_moment() - info.eval.gradient, Exponent{1.0});
        if (adam) rec.adam_ratio_max = info.state.moment_ratio().max_abs();
        if (out.is_open()) out << metrics_row(rec) << "\n";
        last_t = info.t;
        result.records.push_back(std::move(rec));
    };

    try {
        OptimizerState final_state =
            run(w0, cfg.algorithm, cfg.schedule, data, cfg.loss, cfg.steps, cfg.cadence, hook);
        result.final_weights = final_state.weights();
        result.steps_taken = final_state.steps();
        result.converged = final_state.converged();
    } catch (const Error& e) {
        if (out.is_open()) {
            out << "# FAILED after t=" << last_t << ": " << to_string(e.code()) << ": " << e.what() << "\n";
            out.flush();
        }
        throw;
    }
    if (out.is_open()) {
        out.flush();
        if (!out) throw Error(ErrorCode::io_error, "write to metrics log '" + cfg.output + "' failed");
    }
    return result;
}

}  // namespace marginlab

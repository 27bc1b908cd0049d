// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "marginlab/error.hpp"
#include "marginlab/harness.hpp"

namespace marginlab {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::parse_error, "config: " + msg); }

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) bad(where + " must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) bad("unknown key '" + key + "' in " + where);
}

double number(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) bad(std::string("'") + key + "' must be a number");
    return j.at(key).get<double>();
}

std::int64_t integer(const json& j, const char* key, std::int64_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) bad(std::string("'") + key + "' must be an integer");
    return j.at(key).get<std::int64_t>();
}

bool boolean(const json& j, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) bad(std::string("'") + key + "' must be true or false");
    return j.at(key).get<bool>();
}

std::string text(const json& j, const char* key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) bad(std::string("'") + key + "' must be a string");
    return j.at(key).get<std::string>();
}

AlgorithmKind parse_algorithm(const json& j) {
    allow_keys(j, "algorithm", {"kind", "norm", "beta1", "beta2", "epsilon", "newton_schulz", "newton_schulz_steps"});
    const std::string kind = text(j, "kind", "");
    auto reject = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys)
            if (j.contains(k)) bad(std::string("'") + k + "' does not apply to algorithm '" + kind + "'");
    };
    auto nsd = [&](const char* norm) -> AlgorithmKind {
        reject({"beta1", "beta2", "epsilon", "newton_schulz", "newton_schulz_steps"});
        if (norm && j.contains("norm")) bad("'norm' is implied by algorithm '" + kind + "'");
        return Nsd{NormSpec::parse(norm ? norm : text(j, "norm", "ewinf"))};
    };
    auto nmd = [&](const char* norm) -> AlgorithmKind {
        reject({"beta2", "epsilon"});
        if (norm && j.contains("norm")) bad("'norm' is implied by algorithm '" + kind + "'");
        Nmd n;
        n.spec = NormSpec::parse(norm ? norm : text(j, "norm", "ewinf"));
        n.beta1 = number(j, "beta1", 0.9);
        n.use_newton_schulz = boolean(j, "newton_schulz", false);
        n.newton_schulz_steps = static_cast<int>(integer(j, "newton_schulz_steps", 8));
        return n;
    };
    if (kind == "nsd") return nsd(nullptr);
    if (kind == "signgd") return nsd("ewinf");
    if (kind == "ngd") return nsd("ew2");
    if (kind == "spectral-gd") return nsd("sinf");
    if (kind == "nmd") return nmd(nullptr);
    if (kind == "signum") return nmd("ewinf");
    if (kind == "nmd-gd") return nmd("ew2");
    if (kind == "muon") return nmd("sinf");
    if (kind == "adam") {
        reject({"norm", "newton_schulz", "newton_schulz_steps"});
        return Adam{number(j, "beta1", 0.9), number(j, "beta2", 0.99), number(j, "epsilon", 0.0)};
    }
    bad("unknown algorithm kind '" + kind + "'");
}

json algorithm_json(const AlgorithmKind& kind) {
    return std::visit(overloaded{
                          [](const Nsd& k) { return json{{"kind", "nsd"}, {"norm", k.spec.name()}}; },
                          [](const Nmd& k) {
                              return json{{"kind", "nmd"},
                                          {"norm", k.spec.name()},
                                          {"beta1", k.beta1},
                                          {"newton_schulz", k.use_newton_schulz},
                                          {"newton_schulz_steps", k.newton_schulz_steps}};
                          },
                          [](const Adam& k) {
                              return json{{"kind", "adam"}, {"beta1", k.beta1}, {"beta2", k.beta2},
                                          {"epsilon", k.epsilon}};
                          },
                      },
                      kind);
}

}  // namespace

AlgorithmKind parse_algorithm_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        bad(std::string("algorithm: ") + e.what());
    }
    AlgorithmKind kind = parse_algorithm(j);
    validate(kind);
    return kind;
}

bool is_trackable(const NormSpec& spec) {
    const std::string n = spec.name();
    return n == "ew1" || n == "ew2" || n == "ewinf" || n == "s1" || n == "sinf";
}

void ExperimentConfig::validate() const {
    if (generate.has_value() == !path.empty())
        throw Error(ErrorCode::invalid_argument, "config needs exactly one dataset source (generate or path)");
    if (steps < 1) throw Error(ErrorCode::invalid_argument, "steps must be >= 1");
    if (track.empty()) throw Error(ErrorCode::invalid_argument, "at least one norm must be tracked");
    std::set<std::string> seen;
    for (const auto& s : track) {
        if (!is_trackable(s))
            throw Error(ErrorCode::invalid_argument, "tracked norms are ew1, ew2, ewinf, s1, sinf; got " + s.name());
        if (!seen.insert(s.name()).second) throw Error(ErrorCode::invalid_argument, "norm tracked twice: " + s.name());
    }
    if (!(init.scale >= 0.0) || !std::isfinite(init.scale))
        throw Error(ErrorCode::invalid_argument, "init scale must be finite and >= 0");
    marginlab::validate(algorithm);
    schedule.validate();
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        bad(std::string("invalid JSON: ") + e.what());
    }
    allow_keys(root, "config", {"dataset", "algorithm", "schedule", "loss", "steps", "cadence", "track", "init",
                                "output", "margin_cache", "margin_solver"});
    ExperimentConfig cfg;
    try {
        if (!root.contains("dataset")) bad("missing 'dataset'");
        const json& ds = root.at("dataset");
        allow_keys(ds, "dataset", {"generate", "path"});
        if (ds.contains("generate")) {
            const json& g = ds.at("generate");
            allow_keys(g, "dataset.generate", {"k", "d", "per_class", "sigma", "seed"});
            GaussianParams p;
            p.k = static_cast<int>(integer(g, "k", p.k));
            const auto d = integer(g, "d", static_cast<std::int64_t>(p.d));
            const auto pc = integer(g, "per_class", static_cast<std::int64_t>(p.per_class));
            if (d < 1 || pc < 1) bad("d and per_class must be >= 1");
            p.d = static_cast<std::size_t>(d);
            p.per_class = static_cast<std::size_t>(pc);
            p.sigma = number(g, "sigma", p.sigma);
            const auto seed = integer(g, "seed", 0);
            if (seed < 0) bad("seed must be >= 0");
            p.seed = static_cast<std::uint64_t>(seed);
            cfg.generate = p;
        }
        cfg.path = text(ds, "path", "");

        if (!root.contains("algorithm")) bad("missing 'algorithm'");
        cfg.algorithm = parse_algorithm(root.at("algorithm"));
        if (root.contains("schedule")) {
            const json& s = root.at("schedule");
            allow_keys(s, "schedule", {"eta0", "a"});
            cfg.schedule.eta0 = number(s, "eta0", cfg.schedule.eta0);
            cfg.schedule.decay = number(s, "a", cfg.schedule.decay);
        }
        cfg.loss = parse_loss_kind(text(root, "loss", "ce").c_str());
        cfg.steps = integer(root, "steps", cfg.steps);
        if (root.contains("cadence")) {
            const json& c = root.at("cadence");
            if (c.is_string()) {
                if (c.get<std::string>() != "every") bad("cadence must be \"every\" or an object");
                cfg.cadence = Cadence::every();
            } else {
                allow_keys(c, "cadence", {"dense_until", "per_decade", "every_step"});
                cfg.cadence.dense_until = integer(c, "dense_until", cfg.cadence.dense_until);
                cfg.cadence.per_decade = static_cast<int>(integer(c, "per_decade", cfg.cadence.per_decade));
                cfg.cadence.every_step = boolean(c, "every_step", false);
            }
        }
        if (root.contains("track")) {
            const json& t = root.at("track");
            if (!t.is_array()) bad("'track' must be an array of norm names");
            cfg.track.clear();
            for (const auto& item : t) {
                if (!item.is_string()) bad("'track' entries must be strings");
                cfg.track.push_back(NormSpec::parse(item.get<std::string>()));
            }
        }
        if (root.contains("init")) {
            const json& i = root.at("init");
            allow_keys(i, "init", {"scale", "seed"});
            cfg.init.scale = number(i, "scale", 0.0);
            const auto seed = integer(i, "seed", 0);
            if (seed < 0) bad("init seed must be >= 0");
            cfg.init.seed = static_cast<std::uint64_t>(seed);
        }
        cfg.output = text(root, "output", "");
        cfg.margin_cache = text(root, "margin_cache", "");
        if (root.contains("margin_solver")) {
            const json& m = root.at("margin_solver");
            allow_keys(m, "margin_solver", {"max_iters", "refine", "refine_max_iters"});
            cfg.margin_solver.max_iters = integer(m, "max_iters", cfg.margin_solver.max_iters);
            cfg.margin_solver.refine = boolean(m, "refine", cfg.margin_solver.refine);
            cfg.margin_solver.refine_max_iters = integer(m, "refine_max_iters", cfg.margin_solver.refine_max_iters);
        }
    } catch (const json::exception& e) {
        bad(e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::io_error, "cannot open config '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_experiment_config(ss.str());
}

std::string to_json(const ExperimentConfig& cfg) {
    json j;
    if (cfg.generate) {
        const auto& p = *cfg.generate;
        j["dataset"]["generate"] = {{"k", p.k}, {"d", p.d}, {"per_class", p.per_class}, {"sigma", p.sigma},
                                    {"seed", p.seed}};
    } else {
        j["dataset"]["path"] = cfg.path;
    }
    j["algorithm"] = algorithm_json(cfg.algorithm);
    j["schedule"] = {{"eta0", cfg.schedule.eta0}, {"a", cfg.schedule.decay}};
    j["loss"] = to_string(cfg.loss);
    j["steps"] = cfg.steps;
    j["cadence"] = {{"dense_until", cfg.cadence.dense_until},
                    {"per_decade", cfg.cadence.per_decade},
                    {"every_step", cfg.cadence.every_step}};
    j["track"] = json::array();
    for (const auto& s : cfg.track) j["track"].push_back(s.name());
    j["init"] = {{"scale", cfg.init.scale}, {"seed", cfg.init.seed}};
    j["output"] = cfg.output;
    j["margin_cache"] = cfg.margin_cache;
    j["margin_solver"] = {{"max_iters", cfg.margin_solver.max_iters},
                          {"refine", cfg.margin_solver.refine},
                          {"refine_max_iters", cfg.margin_solver.refine_max_iters}};
    return j.dump(2);
}

}  // namespace marginlab

// SPDX-License-Identifier: Apache-2.0
#include "marginlab/datagen.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "marginlab/error.hpp"
#include "marginlab/margins.hpp"

namespace marginlab {

namespace {

double unit_open_closed(std::mt19937_64& engine) {
    // 53 random bits mapped to (0, 1]
    return static_cast<double>((engine() >> 11) + 1) * 0x1.0p-53;
}

}  // namespace

double NormalSampler::operator()() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = unit_open_closed(engine_);
    const double u2 = unit_open_closed(engine_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

GeneratedDataset gen_gaussian(const GaussianParams& params) {
    if (params.k < 2) throw Error(ErrorCode::invalid_argument, "k must be >= 2");
    if (params.d < 1) throw Error(ErrorCode::invalid_argument, "d must be >= 1");
    if (params.per_class < 1) throw Error(ErrorCode::invalid_argument, "per-class count must be >= 1");
    if (!(params.sigma >= 0.0) || !std::isfinite(params.sigma))
        throw Error(ErrorCode::invalid_argument, "sigma must be finite and >= 0");

    const auto k = static_cast<std::size_t>(params.k);
    const std::size_t n = k * params.per_class;
    MarginSolverConfig quick;
    quick.max_iters = 10000;
    quick.refine = false;

    for (int attempt = 0; attempt < kGenerationRetries; ++attempt) {
        const std::uint64_t seed = params.seed + static_cast<std::uint64_t>(attempt) * 0x9E3779B97F4A7C15ULL;
        NormalSampler normal(seed);
        Matrix centers(k, params.d);
        for (double& x : centers.values()) x = normal();
        Matrix h(n, params.d);
        std::vector<int> labels(n);
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t p = 0; p < params.per_class; ++p) {
                const std::size_t i = c * params.per_class + p;
                labels[i] = static_cast<int>(c);
                for (std::size_t j = 0; j < params.d; ++j) h(i, j) = centers(c, j) + params.sigma * normal();
            }
        }
        bool usable = true;
        for (std::size_t i = 0; i < n && usable; ++i) {
            double l1 = 0.0;
            for (double x : h.row(i)) l1 += std::abs(x);
            usable = l1 > 0.0;
        }
        if (!usable) continue;
        Dataset data(std::move(h), std::move(labels), params.k);
        if (data_margin(data, NormSpec::frobenius(), quick).gamma > 0.0)
            return {std::move(data), seed, attempt + 1};
    }
    throw Error(ErrorCode::generation_failure,
                "no separable draw after " + std::to_string(kGenerationRetries) + " attempts");
}

const std::vector<std::string>& fixture_names() {
    static const std::vector<std::string> names{"orthogonal-2", "orthogonal-3", "colinear-nonsep"};
    return names;
}

Dataset fixture(std::string_view name) {
    if (name == "orthogonal-2") return Dataset(Matrix::identity(2), {0, 1}, 2);
    if (name == "orthogonal-3") return Dataset(Matrix::identity(3), {0, 1, 2}, 3);
    if (name == "colinear-nonsep") return Dataset(Matrix{{1, 2}, {1, 2}}, {0, 1}, 2);
    throw Error(ErrorCode::invalid_argument, "unknown fixture '" + std::string(name) + "'");
}

Dataset single_point_dataset() { return Dataset(Matrix{{1.0}}, {0}, 2, ClassCoverage::allow_missing); }

std::string dataset_csv(const Dataset& data, std::optional<std::uint64_t> seed) {
    std::string out = "# k=" + std::to_string(data.num_classes()) + " d=" + std::to_string(data.dim()) +
                      " n=" + std::to_string(data.size());
    if (seed) out += " seed=" + std::to_string(*seed);
    out += "\n";
    for (std::size_t j = 0; j < data.dim(); ++j) out += "f" + std::to_string(j) + ",";
    out += "label\n";
    char buf[32];
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double x : data.features().row(i)) {
            std::snprintf(buf, sizeof buf, "%.17g,", x);
            out += buf;
        }
        out += std::to_string(data.labels()[i] + 1) + "\n";
    }
    return out;
}

void write_dataset_csv(const std::string& path, const Dataset& data, std::optional<std::uint64_t> seed) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::io_error, "cannot open '" + path + "' for writing");
    f << dataset_csv(data, seed);
    if (!f) throw Error(ErrorCode::io_error, "write to '" + path + "' failed");
}

namespace {

double parse_double(std::string_view field, std::size_t line) {
    double v = 0.0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (ec != std::errc() || ptr != end)
        throw Error(ErrorCode::parse_error,
                    "line " + std::to_string(line) + ": bad number '" + std::string(field) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

Dataset parse_dataset_csv(std::string_view text) {
    int k_meta = 0;
    std::size_t d = 0;
    bool have_header = false;
    std::vector<double> values;
    std::vector<int> labels;
    std::size_t line_no = 0;
    for (std::string_view line : split(text, '\n')) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line.front() == '#') {
            for (std::string_view tok : split(line.substr(1), ' ')) {
                if (tok.starts_with("k=")) k_meta = static_cast<int>(parse_double(tok.substr(2), line_no));
            }
            continue;
        }
        auto fields = split(line, ',');
        if (!have_header) {
            if (fields.size() < 2 || fields.back() != "label")
                throw Error(ErrorCode::parse_error, "expected a header ending in 'label'");
            d = fields.size() - 1;
            have_header = true;
            continue;
        }
        if (fields.size() != d + 1)
            throw Error(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": expected " +
                                                    std::to_string(d + 1) + " fields");
        for (std::size_t j = 0; j < d; ++j) values.push_back(parse_double(fields[j], line_no));
        const double lab = parse_double(fields[d], line_no);
        if (lab != std::floor(lab) || lab < 1)
            throw Error(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": labels are integers >= 1");
        labels.push_back(static_cast<int>(lab) - 1);
    }
    if (!have_header) throw Error(ErrorCode::parse_error, "missing header");
    if (labels.empty()) throw Error(ErrorCode::parse_error, "no data rows");
    int k = k_meta;
    for (int y : labels) k = std::max(k, y + 1);
    const std::size_t n = labels.size();
    return Dataset(Matrix(n, d, std::move(values)), std::move(labels), k);
}

Dataset read_dataset_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_dataset_csv(ss.str());
}

Dataset load_dataset(const std::string& source) {
    namespace fs = std::filesystem;
    if (fs::is_regular_file(source)) return read_dataset_csv(source);
    const fs::path p(source);
    const std::string parent = p.parent_path().filename().string();
    std::string stem = p.filename().string();
    if (stem.ends_with(".csv")) stem.resize(stem.size() - 4);
    if (parent.empty() || parent == "fixtures") {
        for (const auto& name : fixture_names())
            if (name == stem) return fixture(stem);
    }
    throw Error(ErrorCode::io_error, "no dataset file or fixture named '" + source + "'");
}

std::uint64_t dataset_hash(const Dataset& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](std::uint64_t word) {
        for (int b = 0; b < 8; ++b) {
            h ^= (word >> (8 * b)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    };
    mix(static_cast<std::uint64_t>(data.num_classes()));
    mix(data.dim());
    mix(data.size());
    for (double x : data.features().values()) mix(std::bit_cast<std::uint64_t>(x));
    for (int y : data.labels()) mix(static_cast<std::uint64_t>(y));
    return h;
}

}  // namespace marginlab

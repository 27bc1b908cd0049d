// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "marginlab/losses.hpp"

namespace marginlab {

/// Standard normal draws from mt19937_64 via the Box-Muller transform. The
/// standard library's normal_distribution is implementation-defined, so this
/// keeps seeds reproducible across toolchains.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

    double operator()();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct GaussianParams {
    int k = 10;
    std::size_t d = 25;
    std::size_t per_class = 50;
    double sigma = 0.1;
    std::uint64_t seed = 0;
};

struct GeneratedDataset {
    Dataset data;
    /// Seed of the accepted draw (differs from the requested one after retries).
    std::uint64_t seed;
    int attempts;
};

inline constexpr int kGenerationRetries = 20;

/// k centers ~ N(0, I_d); each class gets per_class points center + sigma * N(0, I_d),
/// stored class by class. Redraws with a derived seed until a quick
/// Euclidean margin pass finds a positive margin.
GeneratedDataset gen_gaussian(const GaussianParams& params);

/// Hand-built datasets: orthogonal-2, orthogonal-3, colinear-nonsep.
Dataset fixture(std::string_view name);
const std::vector<std::string>& fixture_names();

/// Single point h = (1), label 0, k = 2 (class 1 has no points).
Dataset single_point_dataset();

/// CSV with a `# k=.. d=.. n=.. seed=..` comment line, a `f0,...,label`
/// header and 1-based labels.
void write_dataset_csv(const std::string& path, const Dataset& data, std::optional<std::uint64_t> seed = {});
std::string dataset_csv(const Dataset& data, std::optional<std::uint64_t> seed = {});
Dataset read_dataset_csv(const std::string& path);
Dataset parse_dataset_csv(std::string_view text);

/// Reads a CSV file, or resolves `name`, `name.csv`, `fixtures/name` or
/// `fixtures/name.csv` to a built-in fixture when no such file exists.
Dataset load_dataset(const std::string& source);

/// FNV-1a over k, d, n, the feature bits and the labels.
std::uint64_t dataset_hash(const Dataset& data);

}  // namespace marginlab

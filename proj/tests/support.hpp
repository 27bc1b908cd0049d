// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "marginlab/losses.hpp"
#include "marginlab/matrix.hpp"
#include "marginlab/norms.hpp"

namespace testing_support {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using marginlab::Matrix;

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Matrix m(rows, cols);
    for (double& x : m.values()) x = normal(rng);
    return m;
}

inline std::vector<marginlab::NormSpec> five_specs() {
    using marginlab::NormSpec;
    return {NormSpec::sum_norm(), NormSpec::frobenius(), NormSpec::max_norm(), NormSpec::nuclear(),
            NormSpec::spectral()};
}

inline std::vector<marginlab::NormSpec> nine_specs() {
    using marginlab::Exponent;
    using marginlab::NormFamily;
    using marginlab::NormSpec;
    std::vector<NormSpec> out;
    for (auto fam : {NormFamily::entrywise, NormFamily::schatten}) {
        for (double p : {1.0, 1.5, 2.0, 3.0, kInf}) {
            if (fam == NormFamily::schatten && p == 1.5) continue;
            out.push_back({fam, Exponent{p}});
        }
    }
    return out;
}

/// Random labeled data with every class present.
inline marginlab::Dataset random_dataset(std::mt19937_64& rng, int k, std::size_t d, std::size_t n) {
    Matrix h = random_matrix(rng, n, d);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(k));
    return marginlab::Dataset(std::move(h), std::move(labels), k);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

}  // namespace testing_support

// SPDX-License-Identifier: Apache-2.0
#include "marginlab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "marginlab/error.hpp"

namespace marginlab {

namespace {

void require_shape(const Matrix& w, const Dataset& data) {
    if (w.rows() != static_cast<std::size_t>(data.num_classes()) || w.cols() != data.dim()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "classifier is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) + ", data needs " +
                        std::to_string(data.num_classes()) + "x" + std::to_string(data.dim()));
    }
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// 1 / (1 + exp(m)), i.e. |f'(m)| for the logistic loss f(m) = log(1 + e^{-m}).
double logistic_weight(double m) {
    if (m >= 0.0) {
        const double e = std::exp(-m);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(m));
}

struct Accumulator {
    double loss = 0.0;
    double proxy = 0.0;
    Matrix coeff;  // n x k; gradient = coeff^T H / n
    std::vector<double> g;
    std::vector<double> q;
};

// Per-point CE terms. 1 - s_y is accumulated as the sum of the competing
// probabilities so it stays accurate when s_y rounds to 1.
void cross_entropy_point(std::span<const double> z, int y, std::size_t i, std::span<double> ex, Accumulator& acc,
                         bool with_grad) {
    const std::size_t k = z.size();
    std::size_t top = 0;
    for (std::size_t c = 1; c < k; ++c)
        if (z[c] > z[top]) top = c;
    const double m = z[top];
    double rest = 0.0;  // sum over c != top of exp(z_c - m)
    double total = 1.0;
    for (std::size_t c = 0; c < k; ++c) {
        ex[c] = c == top ? 1.0 : std::exp(z[c] - m);
        if (c != top) rest += ex[c];
    }
    total += rest;
    const auto yy = static_cast<std::size_t>(y);
    acc.loss += (m - z[yy]) + std::log1p(rest);

    double others = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        if (c == yy) continue;
        const double s = ex[c] / total;
        others += s;
        acc.q[c] += s;
        if (with_grad) acc.coeff(i, c) = s;
    }
    acc.proxy += others;
    acc.g[yy] += others;
    if (with_grad) acc.coeff(i, yy) = -others;
}

void pairwise_point(LossKind kind, std::span<const double> z, int y, std::size_t i, Accumulator& acc,
                    bool with_grad) {
    const auto yy = static_cast<std::size_t>(y);
    double own = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
        if (c == yy) continue;
        const double margin = z[yy] - z[c];
        double weight = 0.0;
        if (kind == LossKind::exponential) {
            weight = std::exp(-margin);
            acc.loss += weight;
        } else {
            weight = logistic_weight(margin);
            acc.loss += softplus(-margin);
        }
        acc.proxy += weight;
        acc.g[yy] += weight;
        acc.q[c] += weight;
        own += weight;
        if (with_grad) acc.coeff(i, c) = weight;
    }
    if (with_grad) acc.coeff(i, yy) = -own;
}

Accumulator accumulate(LossKind kind, const Matrix& w, const Dataset& data, bool with_grad) {
    require_shape(w, data);
    if (!w.all_finite()) throw Error(ErrorCode::numerical_failure, "evaluate: non-finite classifier entry");
    const Matrix z = logits(w, data);
    const std::size_t n = data.size();
    const auto k = static_cast<std::size_t>(data.num_classes());
    Accumulator acc;
    acc.g.assign(k, 0.0);
    acc.q.assign(k, 0.0);
    if (with_grad) acc.coeff = Matrix(n, k);
    std::vector<double> scratch(k);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = data.labels()[i];
        if (kind == LossKind::cross_entropy) {
            cross_entropy_point(z.row(i), y, i, scratch, acc, with_grad);
        } else {
            pairwise_point(kind, z.row(i), y, i, acc, with_grad);
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    acc.loss *= inv_n;
    acc.proxy *= inv_n;
    for (double& x : acc.g) x *= inv_n;
    for (double& x : acc.q) x *= inv_n;
    if (!std::isfinite(acc.loss) || !std::isfinite(acc.proxy)) {
        throw Error(ErrorCode::numerical_failure, std::string("evaluate: ") + to_string(kind) +
                                                      " loss is not finite at this classifier (logit overflow)");
    }
    return acc;
}

}  // namespace

const char* to_string(LossKind kind) noexcept {
    switch (kind) {
        case LossKind::cross_entropy: return "ce";
        case LossKind::exponential: return "exp";
        case LossKind::pair_log_loss: return "pll";
    }
    return "unknown";
}

LossKind parse_loss_kind(const char* text) {
    if (std::strcmp(text, "ce") == 0 || std::strcmp(text, "cross_entropy") == 0) return LossKind::cross_entropy;
    if (std::strcmp(text, "exp") == 0 || std::strcmp(text, "exponential") == 0) return LossKind::exponential;
    if (std::strcmp(text, "pll") == 0 || std::strcmp(text, "pair_log_loss") == 0) return LossKind::pair_log_loss;
    throw Error(ErrorCode::parse_error, std::string("unknown loss kind '") + text + "' (expected ce, exp or pll)");
}

Matrix logits(const Matrix& w, const Dataset& data) {
    require_shape(w, data);
    return matmul_transposed(data.features(), w);
}

LossEval evaluate(LossKind kind, const Matrix& w, const Dataset& data) {
    Accumulator acc = accumulate(kind, w, data, true);
    LossEval out;
    out.loss = acc.loss;
    out.proxy = acc.proxy;
    out.per_class_g = std::move(acc.g);
    out.per_class_q = std::move(acc.q);
    out.gradient = transposed_matmul(acc.coeff, data.features());
    out.gradient *= 1.0 / static_cast<double>(data.size());
    return out;
}

double loss_value(LossKind kind, const Matrix& w, const Dataset& data) {
    return accumulate(kind, w, data, false).loss;
}

std::vector<MarginTerm> margin_terms(const Matrix& w, const Dataset& data) {
    const Matrix z = logits(w, data);
    const auto k = static_cast<std::size_t>(data.num_classes());
    std::vector<MarginTerm> out;
    out.reserve(data.size() * (k - 1));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto y = static_cast<std::size_t>(data.labels()[i]);
        for (std::size_t c = 0; c < k; ++c) {
            if (c == y) continue;
            out.push_back({i, static_cast<int>(c), z(i, y) - z(i, c)});
        }
    }
    return out;
}

double attained_margin(const Matrix& w, const Dataset& data) {
    const Matrix z = logits(w, data);
    const auto k = static_cast<std::size_t>(data.num_classes());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto y = static_cast<std::size_t>(data.labels()[i]);
        for (std::size_t c = 0; c < k; ++c)
            if (c != y) best = std::min(best, z(i, y) - z(i, c));
    }
    return best;
}

}  // namespace marginlab

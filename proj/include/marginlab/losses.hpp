// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "marginlab/matrix.hpp"

namespace marginlab {

enum class ClassCoverage { required, allow_missing };

/// Immutable labeled data set: n feature rows of dimension d and labels in
/// [0, k). The data bound B = max_i ||h_i||_1 is computed once here.
class Dataset {
public:
    Dataset(Matrix features, std::vector<int> labels, int num_classes,
            ClassCoverage coverage = ClassCoverage::required);

    [[nodiscard]] const Matrix& features() const noexcept { return features_; }
    [[nodiscard]] const std::vector<int>& labels() const noexcept { return labels_; }
    [[nodiscard]] int num_classes() const noexcept { return k_; }
    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return features_.cols(); }
    [[nodiscard]] double data_bound() const noexcept { return bound_; }
    [[nodiscard]] bool all_classes_present() const;

private:
    Matrix features_;
    std::vector<int> labels_;
    int k_;
    double bound_;
};

enum class LossKind { cross_entropy, exponential, pair_log_loss };

const char* to_string(LossKind kind) noexcept;
LossKind parse_loss_kind(const char* text);

struct LossEval {
    double loss = 0.0;
    Matrix gradient;
    /// G(W). Equals the loss for the exponential loss.
    double proxy = 0.0;
    /// Proxy split by true class (G_c) and by competing class (Q_c); each
    /// vector sums to proxy. For EXP and PLL these group the |l'| terms the
    /// same way as for CE.
    std::vector<double> per_class_g;
    std::vector<double> per_class_q;
};

/// Loss, analytic gradient and proxy quantities at W (k x d).
LossEval evaluate(LossKind kind, const Matrix& w, const Dataset& data);

/// Loss value only; cheaper than evaluate().
double loss_value(LossKind kind, const Matrix& w, const Dataset& data);

/// Logits H W^T, one row per data point.
Matrix logits(const Matrix& w, const Dataset& data);

struct MarginTerm {
    std::size_t index;
    int competitor;
    double value;  // (e_y - e_c)^T W h_i
};

/// All n (k - 1) logit differences, grouped by data point.
std::vector<MarginTerm> margin_terms(const Matrix& w, const Dataset& data);

/// min over margin_terms; may be negative.
double attained_margin(const Matrix& w, const Dataset& data);

}  // namespace marginlab

// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <string>

#include "marginlab/error.hpp"
#include "marginlab/losses.hpp"

namespace marginlab {

Dataset::Dataset(Matrix features, std::vector<int> labels, int num_classes, ClassCoverage coverage)
    : features_(std::move(features)), labels_(std::move(labels)), k_(num_classes), bound_(0.0) {
    if (k_ < 2) throw Error(ErrorCode::invalid_argument, "dataset: need at least two classes");
    if (features_.rows() == 0 || features_.cols() == 0) throw Error(ErrorCode::invalid_argument, "dataset: empty");
    if (features_.rows() != labels_.size()) {
        throw Error(ErrorCode::dimension_mismatch, "dataset: " + std::to_string(features_.rows()) + " rows but " +
                                                       std::to_string(labels_.size()) + " labels");
    }
    if (!features_.all_finite()) throw Error(ErrorCode::invalid_argument, "dataset: non-finite feature value");
    for (int y : labels_) {
        if (y < 0 || y >= k_) {
            throw Error(ErrorCode::invalid_argument,
                        "dataset: label " + std::to_string(y + 1) + " outside [1, " + std::to_string(k_) + "]");
        }
    }
    if (coverage == ClassCoverage::required && !all_classes_present()) {
        throw Error(ErrorCode::invalid_argument, "dataset: every class needs at least one data point");
    }
    for (std::size_t i = 0; i < features_.rows(); ++i) {
        double l1 = 0.0;
        for (double x : features_.row(i)) l1 += std::abs(x);
        bound_ = std::max(bound_, l1);
    }
    if (!(bound_ > 0.0)) throw Error(ErrorCode::invalid_argument, "dataset: all feature vectors are zero");
}

bool Dataset::all_classes_present() const {
    std::vector<bool> seen(static_cast<std::size_t>(k_), false);
    for (int y : labels_) seen[static_cast<std::size_t>(y)] = true;
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

}  // namespace marginlab

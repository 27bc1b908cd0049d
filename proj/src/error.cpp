// SPDX-License-Identifier: Apache-2.0
#include "marginlab/error.hpp"

namespace marginlab {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::dimension_mismatch: return "dimension-mismatch";
        case ErrorCode::invalid_exponent: return "invalid-exponent";
        case ErrorCode::numerical_failure: return "numerical-failure";
        case ErrorCode::degenerate_input: return "degenerate-input";
        case ErrorCode::zero_gradient: return "zero-gradient";
        case ErrorCode::unsupported_projection: return "unsupported-projection";
        case ErrorCode::non_separable: return "non-separable";
        case ErrorCode::undefined_quantity: return "undefined-quantity";
        case ErrorCode::generation_failure: return "generation-failure";
        case ErrorCode::instance_too_large: return "instance-too-large";
        case ErrorCode::io_error: return "io-error";
        case ErrorCode::parse_error: return "parse-error";
    }
    return "unknown";
}

}  // namespace marginlab

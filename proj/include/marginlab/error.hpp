// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace marginlab {

enum class ErrorCode {
    invalid_argument = 1,
    dimension_mismatch,
    invalid_exponent,
    numerical_failure,
    degenerate_input,
    zero_gradient,
    unsupported_projection,
    non_separable,
    undefined_quantity,
    generation_failure,
    instance_too_large,
    io_error,
    parse_error,
};

const char* to_string(ErrorCode code) noexcept;

/// Exception type thrown by every marginlab routine. The code survives the
/// trip through the C API as a status value.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace marginlab

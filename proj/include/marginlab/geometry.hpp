// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "marginlab/matrix.hpp"
#include "marginlab/norms.hpp"

namespace marginlab {

/// Steepest-ascent direction: argmax of <g, delta> over the unit ball of
/// spec, so that <g, lmo(g)> = dual_norm(g, spec).
///
/// Ties at p = 1 go to the lowest (row, col) index and sign(0) = 0 at
/// p = inf. Schatten directions come from an exact SVD of g. Throws
/// ErrorCode::zero_gradient when g == 0.
Matrix lmo(const Matrix& g, const NormSpec& spec);

/// Frobenius projection of a onto {x : norm(x, spec) <= radius}. Supported
/// for p in {1, 2, inf} of either family; other exponents throw
/// ErrorCode::unsupported_projection.
Matrix project_ball(const Matrix& a, const NormSpec& spec, double radius);

/// Euclidean projection of v onto the l1 ball of the given radius.
std::vector<double> project_l1_ball(std::span<const double> v, double radius);

}  // namespace marginlab

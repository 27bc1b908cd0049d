// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "marginlab/losses.hpp"
#include "marginlab/matrix.hpp"
#include "marginlab/norms.hpp"

namespace marginlab {

struct MarginSolverConfig {
    /// Subgradient step rho_s = rho0 / sqrt(s); 0 selects 0.5 / B.
    double rho0 = 0.0;
    std::int64_t max_iters = 200000;
    /// Stop once the best value gains less than stall_tol over stall_window iterations.
    std::int64_t stall_window = 10000;
    double stall_tol = 1e-6;
    /// Pairs within tie_tol of the minimum share the subgradient.
    double tie_tol = 1e-12;

    /// Second phase: accelerated projected ascent on a softmin smoothing with
    /// decreasing temperature, warm-started at the subgradient solution.
    bool refine = true;
    std::int64_t refine_max_iters = 60000;
    /// Stop refining once (upper - gamma) <= refine_tol * upper.
    double refine_tol = 1e-9;

    /// Record the best value after every iteration (tests only).
    bool record_trace = false;
};

struct MarginSolution {
    /// Best normalized margin found; a feasible lower bound on the true value.
    double gamma = 0.0;
    /// Classifier attaining gamma, with norm(v, spec) = 1 when gamma > 0.
    Matrix v;
    NormSpec spec;
    std::int64_t iterations = 0;
    /// min over the dual candidates of dual_norm(sum_j lambda_j A_j); an upper bound.
    double upper_bound = 0.0;
    /// upper_bound - gamma (>= 0 up to rounding).
    double duality_gap_estimate = 0.0;
    bool non_separable = false;
    std::vector<double> trace;
};

/// Max-margin classifier of data under spec:
/// max over norm(W) <= 1 of min_{i, c != y_i} (e_{y_i} - e_c)^T W h_i.
/// Needs a projection for spec (p in {1, 2, inf}).
MarginSolution data_margin(const Dataset& data, const NormSpec& spec, const MarginSolverConfig& cfg = {});

/// Same value by exhaustive search over a grid of the unit sphere. Entry-wise
/// specs use the surface of [-1, 1]^{kd} with `grid` points per axis, scaled
/// onto the sphere. Schatten specs support 2 x 2 (rotation-angle and
/// singular-value-ratio grid) and vector shapes. Refuses k d > 6.
double brute_force_margin(const Dataset& data, const NormSpec& spec, int grid);

/// gamma - attained_margin(w) / norm(w, spec). Throws undefined_quantity for w = 0.
double margin_gap(const Matrix& w, const Dataset& data, const NormSpec& spec, double gamma);

/// attained_margin(w) / norm(w, spec). Throws undefined_quantity for w = 0.
double normalized_margin(const Matrix& w, const Dataset& data, const NormSpec& spec);

/// Cosine similarity under the trace inner product.
double correlation(const Matrix& w, const Matrix& v);

}  // namespace marginlab

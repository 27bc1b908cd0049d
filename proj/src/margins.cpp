// SPDX-License-Identifier: Apache-2.0
#include "marginlab/margins.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "marginlab/error.hpp"
#include "marginlab/geometry.hpp"

namespace marginlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pair values a_{ic} = (e_{y_i} - e_c)^T W h_i stored densely as n x k with
// +inf in the label slot.
class PairSystem {
public:
    explicit PairSystem(const Dataset& data) : data_(data), n_(data.size()), k_(data.num_classes()) {}

    // Returns the minimum pair value.
    double values(const Matrix& w, std::vector<double>& a) const {
        const Matrix z = logits(w, data_);
        a.resize(n_ * k_);
        double m = kInf;
        for (std::size_t i = 0; i < n_; ++i) {
            const auto y = static_cast<std::size_t>(data_.labels()[i]);
            const double zy = z(i, y);
            for (std::size_t c = 0; c < k_; ++c) {
                const double v = c == y ? kInf : zy - z(i, c);
                a[i * k_ + c] = v;
                m = std::min(m, v);
            }
        }
        return m;
    }

    // sum_j weight_j A_j for weights laid out like values().
    Matrix combine(const std::vector<double>& weight) const {
        Matrix coeff(n_, k_);
        for (std::size_t i = 0; i < n_; ++i) {
            const auto y = static_cast<std::size_t>(data_.labels()[i]);
            double total = 0.0;
            for (std::size_t c = 0; c < k_; ++c) {
                if (c == y) continue;
                coeff(i, c) = -weight[i * k_ + c];
                total += weight[i * k_ + c];
            }
            coeff(i, y) = total;
        }
        return transposed_matmul(coeff, data_.features());
    }

    [[nodiscard]] std::size_t pairs() const noexcept { return n_ * (k_ - 1); }

private:
    const Dataset& data_;
    std::size_t n_;
    std::size_t k_;
};

struct Tracker {
    explicit Tracker(const NormSpec& s) : spec(s) {}

    const NormSpec& spec;
    double best = -kInf;
    Matrix best_w;
    double upper = kInf;

    // w lies in the unit ball; f is its min pair value.
    bool offer(const Matrix& w, double f) {
        double value = f;
        Matrix candidate = w;
        if (f > 0.0) {
            const double nrm = norm(w, spec);
            value = f / nrm;
            candidate *= 1.0 / nrm;
        }
        if (value > best) {
            best = value;
            best_w = std::move(candidate);
            return true;
        }
        return false;
    }

    void offer_dual(const Matrix& combination) { upper = std::min(upper, dual_norm(combination, spec)); }
};

// Softmin smoothing f_mu(W) = m - mu log sum_j exp(-(a_j - m) / mu), which
// satisfies f - mu log N <= f_mu <= f. Its gradient is a convex combination
// of the A_j and so doubles as a dual candidate.
struct Smoothed {
    double value;
    double fmin;
    Matrix grad;
};

Smoothed smoothed(const PairSystem& sys, const Matrix& w, double mu, std::vector<double>& a,
                  std::vector<double>& weight) {
    const double m = sys.values(w, a);
    weight.assign(a.size(), 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (a[j] == kInf) continue;
        weight[j] = std::exp(-(a[j] - m) / mu);
        total += weight[j];
    }
    for (double& x : weight) x /= total;
    return {m - mu * std::log(total), m, sys.combine(weight)};
}

double smoothed_value(const PairSystem& sys, const Matrix& w, double mu, std::vector<double>& a, double* fmin) {
    const double m = sys.values(w, a);
    double total = 0.0;
    for (double v : a)
        if (v != kInf) total += std::exp(-(v - m) / mu);
    *fmin = m;
    return m - mu * std::log(total);
}

void subgradient_phase(const PairSystem& sys, const Dataset& data, const MarginSolverConfig& cfg, Tracker& tr,
                       MarginSolution& sol) {
    const std::size_t k = static_cast<std::size_t>(data.num_classes());
    Matrix w(k, data.dim());
    Matrix ergodic(k, data.dim());
    double rho_total = 0.0;
    const double rho0 = cfg.rho0 > 0.0 ? cfg.rho0 : 0.5 / data.data_bound();
    std::vector<double> a, weight;

    double anchor = -kInf;
    std::int64_t anchor_iter = 0;
    std::int64_t s = 1;
    for (; s <= cfg.max_iters; ++s) {
        const double m = sys.values(w, a);
        tr.offer(w, m);
        if (cfg.record_trace) sol.trace.push_back(tr.best);
        if (tr.best > anchor + cfg.stall_tol) {
            anchor = tr.best;
            anchor_iter = s;
        } else if (s - anchor_iter >= cfg.stall_window) {
            break;
        }

        weight.assign(a.size(), 0.0);
        double count = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (a[j] <= m + cfg.tie_tol) {
                weight[j] = 1.0;
                count += 1.0;
            }
        }
        for (double& x : weight) x /= count;
        const Matrix g = sys.combine(weight);
        const double rho = rho0 / std::sqrt(static_cast<double>(s));
        ergodic.add_scaled(g, rho);
        rho_total += rho;
        w.add_scaled(g, rho);
        w = project_ball(w, tr.spec, 1.0);
    }
    sol.iterations = std::min(s, cfg.max_iters);
    tr.offer_dual(ergodic * (1.0 / rho_total));
}

void refine_phase(const PairSystem& sys, const MarginSolverConfig& cfg, Tracker& tr, MarginSolution& sol) {
    const double log_pairs = std::log(static_cast<double>(sys.pairs()));
    std::vector<double> a, weight;
    Matrix x = tr.best_w;
    double mu = 0.05 * tr.best;
    const double mu_floor = 0.1 * cfg.refine_tol * tr.best / std::max(log_pairs, 1.0);
    std::int64_t used = 0;

    auto certified = [&] { return tr.upper - tr.best <= cfg.refine_tol * tr.upper; };

    while (used < cfg.refine_max_iters && !certified()) {
        // One accelerated run at fixed temperature mu.
        Smoothed sx = smoothed(sys, x, mu, a, weight);
        tr.offer_dual(sx.grad);
        Matrix y = x;
        Smoothed sy = sx;
        double lip = 1.0 / mu;
        double theta = 1.0;
        double stage_start = sx.value;
        std::int64_t since_check = 0;
        const std::int64_t stage_cap = 4000;
        std::int64_t stage_iters = 0;
        for (; stage_iters < stage_cap && used < cfg.refine_max_iters; ++stage_iters, ++used) {
            lip = std::max(lip * 0.5, 1e-3);
            Matrix next;
            double next_value = 0.0, next_min = 0.0;
            for (int bt = 0; bt < 60; ++bt) {
                next = y;
                next.add_scaled(sy.grad, 1.0 / lip);
                next = project_ball(next, tr.spec, 1.0);
                next_value = smoothed_value(sys, next, mu, a, &next_min);
                const Matrix diff = next - y;
                const double model = sy.value + inner(sy.grad, diff) - 0.5 * lip * inner(diff, diff);
                if (next_value >= model - 1e-15 * std::abs(sy.value)) break;
                lip *= 2.0;
            }
            tr.offer(next, next_min);
            if (cfg.record_trace) sol.trace.push_back(tr.best);

            const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
            if (next_value < sx.value) {
                // function-value restart
                theta = 1.0;
                y = x;
                sy = sx;
                continue;
            }
            const Matrix step = next - x;
            y = next;
            y.add_scaled(step, (theta - 1.0) / theta_next);
            theta = theta_next;
            x = std::move(next);
            sx = smoothed(sys, x, mu, a, weight);
            sy = smoothed(sys, y, mu, a, weight);

            if (++since_check >= 10) {
                since_check = 0;
                tr.offer_dual(sx.grad);
                if (certified()) break;
            }
            // Stage is done once it stops gaining a small fraction of mu.
            if (stage_iters > 0 && stage_iters % 100 == 0) {
                if (sx.value - stage_start < 1e-3 * mu) break;
                stage_start = sx.value;
            }
        }
        tr.offer_dual(sx.grad);
        if (mu <= mu_floor && stage_iters >= stage_cap) break;
        mu = std::max(mu * 0.2, mu_floor);
        x = tr.best_w;
    }
    sol.iterations += used;
}

}  // namespace

MarginSolution data_margin(const Dataset& data, const NormSpec& spec, const MarginSolverConfig& cfg) {
    if (cfg.max_iters < 1 || cfg.stall_window < 1)
        throw Error(ErrorCode::invalid_argument, "margin solver iteration limits must be >= 1");
    // Fail early on exponents without a projection.
    project_ball(Matrix(1, 1), spec, 1.0);

    PairSystem sys(data);
    Tracker tr{spec};
    MarginSolution sol;
    sol.spec = spec;
    subgradient_phase(sys, data, cfg, tr, sol);
    if (cfg.refine && tr.best > 0.0) refine_phase(sys, cfg, tr, sol);

    sol.gamma = tr.best;
    sol.v = tr.best_w;
    sol.upper_bound = tr.upper;
    sol.duality_gap_estimate = tr.upper - tr.best;
    sol.non_separable = !(tr.best > 0.0);
    return sol;
}

namespace {

double min_pair(const Dataset& data, const std::vector<double>& w, std::size_t d) {
    const std::size_t n = data.size();
    const auto k = static_cast<std::size_t>(data.num_classes());
    double m = kInf;
    std::vector<double> z(k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto h = data.features().row(i);
        for (std::size_t c = 0; c < k; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += w[c * d + j] * h[j];
            z[c] = s;
        }
        const auto y = static_cast<std::size_t>(data.labels()[i]);
        for (std::size_t c = 0; c < k; ++c)
            if (c != y) m = std::min(m, z[y] - z[c]);
    }
    return m;
}

double brute_entrywise(const Dataset& data, Exponent p, int grid) {
    const auto k = static_cast<std::size_t>(data.num_classes());
    const std::size_t d = data.dim();
    const std::size_t dims = k * d;
    std::vector<double> axis(static_cast<std::size_t>(grid));
    for (int i = 0; i < grid; ++i) axis[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / (grid - 1);

    double best = -kInf;
    std::vector<double> w(dims), scaled(dims);
    std::vector<std::size_t> idx(dims - 1);
    // Each face of the cube: one coordinate pinned to +-1, the rest on the grid.
    for (std::size_t face = 0; face < dims; ++face) {
        for (double pinned : {-1.0, 1.0}) {
            std::fill(idx.begin(), idx.end(), 0);
            while (true) {
                for (std::size_t j = 0, free = 0; j < dims; ++j) w[j] = j == face ? pinned : axis[idx[free++]];
                const double nrm = vector_norm(w, p);
                for (std::size_t j = 0; j < dims; ++j) scaled[j] = w[j] / nrm;
                best = std::max(best, min_pair(data, scaled, d));
                std::size_t pos = 0;
                while (pos < idx.size() && ++idx[pos] == axis.size()) idx[pos++] = 0;
                if (pos == idx.size()) break;
            }
        }
    }
    return best;
}

// 2 x 2 boundary: R(theta) diag(1, s) R(phi)^T scaled to unit Schatten norm.
double brute_schatten_2x2(const Dataset& data, Exponent p, int grid) {
    const double two_pi = 2.0 * std::numbers::pi;
    double best = -kInf;
    std::vector<double> w(4);
    for (int a = 0; a < grid; ++a) {
        const double ca = std::cos(two_pi * a / grid), sa = std::sin(two_pi * a / grid);
        for (int b = 0; b < grid; ++b) {
            const double cb = std::cos(two_pi * b / grid), sb = std::sin(two_pi * b / grid);
            for (int i = 0; i < grid; ++i) {
                const double s = -1.0 + 2.0 * i / (grid - 1);
                const double scale = vector_norm(std::vector<double>{1.0, s}, p);
                // U = [[ca, -sa], [sa, ca]], V = [[cb, -sb], [sb, cb]]; W = U diag(1, s) V^T
                w[0] = (ca * cb + s * sa * sb) / scale;
                w[1] = (ca * sb - s * sa * cb) / scale;
                w[2] = (sa * cb - s * ca * sb) / scale;
                w[3] = (sa * sb + s * ca * cb) / scale;
                best = std::max(best, min_pair(data, w, 2));
            }
        }
    }
    return best;
}

}  // namespace

double brute_force_margin(const Dataset& data, const NormSpec& spec, int grid) {
    const std::size_t k = static_cast<std::size_t>(data.num_classes());
    const std::size_t d = data.dim();
    if (k * d > 6)
        throw Error(ErrorCode::instance_too_large, "brute-force margin needs k*d <= 6, got " + std::to_string(k * d));
    if (grid < 3) throw Error(ErrorCode::invalid_argument, "brute-force grid needs at least 3 points per axis");
    if (spec.family == NormFamily::entrywise) return brute_entrywise(data, spec.p, grid);
    // Schatten norms of a single row or column are Euclidean.
    if (k == 1 || d == 1) return brute_entrywise(data, Exponent{2.0}, grid);
    if (k == 2 && d == 2) return brute_schatten_2x2(data, spec.p, grid);
    throw Error(ErrorCode::instance_too_large, "brute-force Schatten margin supports 2x2 and vector shapes only");
}

double normalized_margin(const Matrix& w, const Dataset& data, const NormSpec& spec) {
    const double nrm = norm(w, spec);
    if (!(nrm > 0.0)) throw Error(ErrorCode::undefined_quantity, "normalized margin of the zero classifier");
    return attained_margin(w, data) / nrm;
}

double margin_gap(const Matrix& w, const Dataset& data, const NormSpec& spec, double gamma) {
    return gamma - normalized_margin(w, data, spec);
}

double correlation(const Matrix& w, const Matrix& v) {
    if (!w.same_shape(v)) throw Error(ErrorCode::dimension_mismatch, "correlation of differently shaped matrices");
    const double nw = entrywise_norm(w, Exponent{2.0});
    const double nv = entrywise_norm(v, Exponent{2.0});
    if (!(nw > 0.0) || !(nv > 0.0)) throw Error(ErrorCode::undefined_quantity, "correlation with a zero matrix");
    // Normalize first so that tiny or huge iterates do not underflow.
    return std::clamp(inner(w * (1.0 / nw), v * (1.0 / nv)), -1.0, 1.0);
}

}  // namespace marginlab

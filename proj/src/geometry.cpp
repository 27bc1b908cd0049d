// SPDX-License-Identifier: Apache-2.0
#include "marginlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "marginlab/error.hpp"

namespace marginlab {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

Matrix entrywise_lmo(const Matrix& g, Exponent p) {
    Matrix out(g.rows(), g.cols());
    auto gv = g.values();
    auto ov = out.values();
    if (p.is_infinite()) {
        for (std::size_t i = 0; i < gv.size(); ++i) ov[i] = sign(gv[i]);
        return out;
    }
    if (p.is_one()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < gv.size(); ++i)
            if (std::abs(gv[i]) > std::abs(gv[best])) best = i;
        ov[best] = sign(gv[best]);
        return out;
    }
    const double scale = g.max_abs();
    if (p.is_two()) {
        const double n = entrywise_norm(g, p);
        for (std::size_t i = 0; i < gv.size(); ++i) ov[i] = gv[i] / n;
        return out;
    }
    // sign(g) |g|^(q-1) / ||g||_q^(q-1), evaluated on g / max|g|.
    const double q = p.conjugate().value();
    double sum = 0.0;
    for (std::size_t i = 0; i < gv.size(); ++i) {
        const double r = std::abs(gv[i]) / scale;
        ov[i] = sign(gv[i]) * std::pow(r, q - 1.0);
        sum += std::pow(r, q);
    }
    const double denom = std::pow(sum, (q - 1.0) / q);
    for (double& x : ov) x /= denom;
    return out;
}

Matrix schatten_lmo(const Matrix& g, Exponent p) {
    if (p.is_two()) return entrywise_lmo(g, p);
    const SvdFactors f = svd(g);
    std::vector<double> w(f.rank(), 0.0);
    if (p.is_infinite()) {
        std::fill(w.begin(), w.end(), 1.0);
    } else if (p.is_one()) {
        w[0] = 1.0;
    } else {
        const double q = p.conjugate().value();
        const double smax = f.sigma[0];
        double sum = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double r = f.sigma[i] / smax;
            w[i] = std::pow(r, q - 1.0);
            sum += std::pow(r, q);
        }
        const double denom = std::pow(sum, (q - 1.0) / q);
        for (double& x : w) x /= denom;
    }
    Matrix uw = f.u;
    for (std::size_t r = 0; r < uw.rows(); ++r)
        for (std::size_t c = 0; c < w.size(); ++c) uw(r, c) *= w[c];
    return matmul(uw, f.vt);
}

void require_supported(const NormSpec& spec) {
    if (!(spec.p.is_one() || spec.p.is_two() || spec.p.is_infinite())) {
        throw Error(ErrorCode::unsupported_projection,
                    "project_ball: only p in {1, 2, inf} is supported, got " + spec.name());
    }
}

// Replaces the singular values of a by mapped ones, touching only the
// components that change so that the untouched part of a is kept bit-exact.
Matrix adjust_singular_values(const Matrix& a, const std::function<std::vector<double>(const std::vector<double>&)>& map) {
    const SvdFactors f = svd(a);
    const auto mapped = map(f.sigma);
    Matrix delta_u = f.u;
    for (std::size_t r = 0; r < delta_u.rows(); ++r)
        for (std::size_t c = 0; c < f.rank(); ++c) delta_u(r, c) *= f.sigma[c] - mapped[c];
    return a - matmul(delta_u, f.vt);
}

}  // namespace

Matrix lmo(const Matrix& g, const NormSpec& spec) {
    if (!g.all_finite()) throw Error(ErrorCode::numerical_failure, "lmo: non-finite input");
    if (g.is_zero()) throw Error(ErrorCode::zero_gradient, "lmo: zero input has no steepest direction");
    return spec.family == NormFamily::entrywise ? entrywise_lmo(g, spec.p) : schatten_lmo(g, spec.p);
}

std::vector<double> project_l1_ball(std::span<const double> v, double radius) {
    std::vector<double> out(v.begin(), v.end());
    double l1 = 0.0;
    for (double x : v) l1 += std::abs(x);
    if (l1 <= radius) return out;
    // Sort-based threshold search for the simplex projection of |v|.
    std::vector<double> mags(v.size());
    std::transform(v.begin(), v.end(), mags.begin(), [](double x) { return std::abs(x); });
    std::sort(mags.begin(), mags.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (std::size_t i = 0; i < mags.size(); ++i) {
        cumsum += mags[i];
        const double t = (cumsum - radius) / static_cast<double>(i + 1);
        if (mags[i] - t > 0.0) theta = t;
    }
    for (double& x : out) x = sign(x) * std::max(std::abs(x) - theta, 0.0);
    return out;
}

Matrix project_ball(const Matrix& a, const NormSpec& spec, double radius) {
    if (!(radius > 0.0)) throw Error(ErrorCode::invalid_argument, "project_ball: radius must be positive");
    if (!a.all_finite()) throw Error(ErrorCode::numerical_failure, "project_ball: non-finite input");
    require_supported(spec);
    const bool schatten = spec.family == NormFamily::schatten;

    if (spec.p.is_two()) {
        const double n = entrywise_norm(a, spec.p);
        return n <= radius ? a : a * (radius / n);
    }
    if (!schatten) {
        if (spec.p.is_infinite()) {
            Matrix out = a;
            for (double& x : out.values()) x = std::clamp(x, -radius, radius);
            return out;
        }
        const auto proj = project_l1_ball(a.values(), radius);
        return Matrix(a.rows(), a.cols(), proj);
    }
    if (spec.p.is_infinite()) {
        if (schatten_norm(a, spec.p) <= radius) return a;
        return adjust_singular_values(a, [radius](const std::vector<double>& s) {
            std::vector<double> out(s);
            for (double& x : out) x = std::min(x, radius);
            return out;
        });
    }
    if (schatten_norm(a, spec.p) <= radius) return a;
    return adjust_singular_values(a, [radius](const std::vector<double>& s) { return project_l1_ball(s, radius); });
}

}  // namespace marginlab

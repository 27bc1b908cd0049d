// SPDX-License-Identifier: Apache-2.0
#include "marginlab/norms.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "marginlab/error.hpp"

namespace marginlab {

Exponent::Exponent(double p) : value_(p), infinite_(false) {
    if (std::isnan(p) || p < 1.0) {
        std::ostringstream msg;
        msg << "norm exponent must satisfy p >= 1, got " << p;
        throw Error(ErrorCode::invalid_exponent, msg.str());
    }
    if (std::isinf(p)) {
        value_ = 0.0;
        infinite_ = true;
    }
}

Exponent Exponent::conjugate() const noexcept {
    if (infinite_) return Exponent{1.0, false};
    if (value_ == 1.0) return Exponent{};
    return Exponent{value_ / (value_ - 1.0), false};
}

std::string NormSpec::name() const {
    std::string out = family == NormFamily::entrywise ? "ew" : "s";
    if (p.is_infinite()) return out + "inf";
    std::ostringstream num;
    num.precision(15);
    num << p.value();
    return out + num.str();
}

NormSpec NormSpec::parse(std::string_view text) {
    NormSpec spec;
    std::string_view rest;
    if (text.starts_with("ew")) {
        spec.family = NormFamily::entrywise;
        rest = text.substr(2);
    } else if (text.starts_with("s")) {
        spec.family = NormFamily::schatten;
        rest = text.substr(1);
    } else {
        throw Error(ErrorCode::parse_error, "unknown norm spelling '" + std::string(text) + "' (expected ew<p> or s<p>)");
    }
    if (rest == "inf") {
        spec.p = Exponent::infinity();
        return spec;
    }
    double p = 0.0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), p);
    if (rest.empty() || ec != std::errc{} || ptr != rest.data() + rest.size()) {
        throw Error(ErrorCode::parse_error, "bad norm exponent in '" + std::string(text) + "'");
    }
    spec.p = Exponent{p};
    return spec;
}

double vector_norm(std::span<const double> v, Exponent p) {
    double scale = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    if (scale == 0.0 || p.is_infinite()) return scale;
    if (p.is_one()) {
        double s = 0.0;
        for (double x : v) s += std::abs(x);
        return s;
    }
    double s = 0.0;
    if (p.is_two()) {
        for (double x : v) {
            const double r = x / scale;
            s += r * r;
        }
        return scale * std::sqrt(s);
    }
    for (double x : v) s += std::pow(std::abs(x) / scale, p.value());
    return scale * std::pow(s, 1.0 / p.value());
}

double entrywise_norm(const Matrix& a, Exponent p) { return vector_norm(a.values(), p); }

double schatten_norm(const Matrix& a, Exponent p) {
    if (p.is_two()) return entrywise_norm(a, p);
    const auto sigma = singular_values(a);
    return vector_norm(sigma, p);
}

double norm(const Matrix& a, const NormSpec& spec) {
    return spec.family == NormFamily::entrywise ? entrywise_norm(a, spec.p) : schatten_norm(a, spec.p);
}

double dual_norm(const Matrix& a, const NormSpec& spec) { return norm(a, spec.dual()); }

Matrix newton_schulz_orthogonalize(const Matrix& a, int steps) {
    if (steps < 0) throw Error(ErrorCode::invalid_argument, "newton_schulz: negative step count");
    const double fro = entrywise_norm(a, Exponent{2.0});
    if (fro == 0.0) throw Error(ErrorCode::degenerate_input, "newton_schulz: zero matrix has no polar factor");
    if (!std::isfinite(fro)) throw Error(ErrorCode::numerical_failure, "newton_schulz: non-finite input");

    Matrix x = a * (1.0 / fro);
    const bool wide = x.rows() <= x.cols();
    // Bound on ||X||_F: every singular value stays in (0, 1].
    const double limit = 2.0 * std::sqrt(static_cast<double>(std::min(x.rows(), x.cols())));
    for (int s = 0; s < steps; ++s) {
        // X X^T X, forming the smaller Gram matrix.
        Matrix cubic = wide ? matmul(matmul_transposed(x, x), x) : matmul(x, transposed_matmul(x, x));
        x *= 1.5;
        x.add_scaled(cubic, -0.5);
        const double n = entrywise_norm(x, Exponent{2.0});
        if (!std::isfinite(n) || n > limit) {
            std::ostringstream msg;
            msg << "newton_schulz: iterate norm " << n << " exceeded " << limit << " at step " << s + 1;
            throw Error(ErrorCode::numerical_failure, msg.str());
        }
    }
    return x;
}

std::vector<double> softmax(std::span<const double> v) {
    std::vector<double> out(v.size());
    if (v.empty()) return out;
    const double m = *std::max_element(v.begin(), v.end());
    double z = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        z += out[i];
    }
    for (double& x : out) x /= z;
    return out;
}

Matrix softmax_jacobian(std::span<const double> v) {
    const auto s = softmax(v);
    const std::size_t k = s.size();
    Matrix j(k, k);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) j(a, b) = (a == b ? s[a] : 0.0) - s[a] * s[b];
    }
    return j;
}

}  // namespace marginlab

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include "marginlab/matrix.hpp"

namespace marginlab {

/// Exponent of a p-norm, p in [1, inf]. Infinity is a distinct state rather
/// than a large float so that duality and ordering stay exact.
class Exponent {
public:
    /// Throws ErrorCode::invalid_exponent unless p >= 1 and p is not NaN.
    /// Passing +inf yields the infinite exponent.
    explicit Exponent(double p);

    static Exponent infinity() noexcept { return Exponent{}; }

    [[nodiscard]] bool is_infinite() const noexcept { return infinite_; }
    [[nodiscard]] bool is_one() const noexcept { return !infinite_ && value_ == 1.0; }
    [[nodiscard]] bool is_two() const noexcept { return !infinite_ && value_ == 2.0; }
    /// Finite value; only meaningful when !is_infinite().
    [[nodiscard]] double value() const noexcept { return value_; }

    /// Hoelder conjugate q with 1/p + 1/q = 1.
    [[nodiscard]] Exponent conjugate() const noexcept;

    friend bool operator==(const Exponent&, const Exponent&) = default;

private:
    Exponent() noexcept : value_(0.0), infinite_(true) {}
    Exponent(double v, bool inf) noexcept : value_(v), infinite_(inf) {}

    double value_;
    bool infinite_;
};

enum class NormFamily { entrywise, schatten };

/// Selects the geometry of the optimizer and of the margin: entry-wise or
/// Schatten p-norm.
struct NormSpec {
    NormFamily family = NormFamily::entrywise;
    Exponent p = Exponent{2.0};

    [[nodiscard]] NormSpec dual() const noexcept { return {family, p.conjugate()}; }

    /// Spelling used in CSV columns and on the command line: ew1, ew2, ewinf,
    /// s1, sinf, ew1.5, ...
    [[nodiscard]] std::string name() const;
    static NormSpec parse(std::string_view text);

    static NormSpec max_norm() { return {NormFamily::entrywise, Exponent::infinity()}; }
    static NormSpec sum_norm() { return {NormFamily::entrywise, Exponent{1.0}}; }
    static NormSpec frobenius() { return {NormFamily::entrywise, Exponent{2.0}}; }
    static NormSpec spectral() { return {NormFamily::schatten, Exponent::infinity()}; }
    static NormSpec nuclear() { return {NormFamily::schatten, Exponent{1.0}}; }

    friend bool operator==(const NormSpec&, const NormSpec&) = default;
};

/// (sum |a_ij|^p)^(1/p), or max |a_ij| for p = inf.
double entrywise_norm(const Matrix& a, Exponent p);
/// p-norm of the singular values.
double schatten_norm(const Matrix& a, Exponent p);
double norm(const Matrix& a, const NormSpec& spec);
/// Norm under spec.dual().
double dual_norm(const Matrix& a, const NormSpec& spec);

/// Vector p-norm, computed with max-scaling.
double vector_norm(std::span<const double> v, Exponent p);

struct SvdFactors {
    Matrix u;                   // rows x r, orthonormal columns
    std::vector<double> sigma;  // non-increasing, positive
    Matrix vt;                  // r x cols, orthonormal rows

    [[nodiscard]] std::size_t rank() const noexcept { return sigma.size(); }
    [[nodiscard]] Matrix reconstruct() const;
};

inline constexpr double kDefaultRankTol = 1e-12;

/// Thin SVD (Eigen JacobiSVD). Singular values at
/// or below rank_tol * sigma_max are dropped. The largest-magnitude entry of
/// each left singular vector is made positive. A zero matrix yields rank 0.
SvdFactors svd(const Matrix& a, double rank_tol = kDefaultRankTol);

/// Singular values only (untruncated, non-increasing).
std::vector<double> singular_values(const Matrix& a);

/// Cubic Newton-Schulz iteration X <- 1.5 X - 0.5 X X^T X started from
/// A / ||A||_F. Converges to the polar factor U V^T of A.
Matrix newton_schulz_orthogonalize(const Matrix& a, int steps);

std::vector<double> softmax(std::span<const double> v);
/// diag(s) - s s^T with s = softmax(v).
Matrix softmax_jacobian(std::span<const double> v);

}  // namespace marginlab

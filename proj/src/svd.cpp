// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "marginlab/error.hpp"
#include "marginlab/norms.hpp"

namespace marginlab {

namespace {

using EigenMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Power-of-two scale that brings max|a| near 1 without rounding error, so
// that squares inside the decomposition neither underflow nor overflow.
int scale_exponent(const Matrix& a) {
    const double m = a.max_abs();
    if (m == 0.0 || !std::isfinite(m)) return 0;
    int e = 0;
    std::frexp(m, &e);
    return e;
}

EigenMatrix to_eigen(const Matrix& a, int e) {
    EigenMatrix out(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = std::ldexp(a(r, c), -e);
    return out;
}

}  // namespace

Matrix SvdFactors::reconstruct() const {
    Matrix us = u;
    for (std::size_t r = 0; r < us.rows(); ++r)
        for (std::size_t c = 0; c < sigma.size(); ++c) us(r, c) *= sigma[c];
    return matmul(us, vt);
}

SvdFactors svd(const Matrix& a, double rank_tol) {
    if (!a.all_finite()) throw Error(ErrorCode::numerical_failure, "svd: non-finite input");
    if (!(rank_tol >= 0.0)) throw Error(ErrorCode::invalid_argument, "svd: rank_tol must be non-negative");
    const std::size_t k = a.rows();
    const std::size_t d = a.cols();
    if (k == 0 || d == 0) return {Matrix(k, 0), {}, Matrix(0, d)};
    const int e = scale_exponent(a);
    const Eigen::JacobiSVD<EigenMatrix> dec(to_eigen(a, e), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sig = dec.singularValues();  // non-increasing
    const auto& eu = dec.matrixU();
    const auto& ev = dec.matrixV();

    const double smax = sig.size() == 0 ? 0.0 : sig(0);
    std::size_t rank = 0;
    while (rank < static_cast<std::size_t>(sig.size()) && sig(static_cast<Eigen::Index>(rank)) > rank_tol * smax &&
           sig(static_cast<Eigen::Index>(rank)) > 0.0)
        ++rank;

    SvdFactors f{Matrix(k, rank), std::vector<double>(rank), Matrix(rank, d)};
    for (std::size_t r = 0; r < rank; ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        f.sigma[r] = std::ldexp(sig(ri), e);
        // Make the largest-magnitude entry of u_r positive.
        Eigen::Index argmax = 0;
        eu.col(ri).cwiseAbs().maxCoeff(&argmax);
        const double sign = eu(argmax, ri) < 0.0 ? -1.0 : 1.0;
        for (std::size_t t = 0; t < k; ++t) f.u(t, r) = sign * eu(static_cast<Eigen::Index>(t), ri);
        for (std::size_t t = 0; t < d; ++t) f.vt(r, t) = sign * ev(static_cast<Eigen::Index>(t), ri);
    }
    return f;
}

std::vector<double> singular_values(const Matrix& a) {
    if (!a.all_finite()) throw Error(ErrorCode::numerical_failure, "singular_values: non-finite input");
    if (a.rows() == 0 || a.cols() == 0) return {};
    const int e = scale_exponent(a);
    const Eigen::JacobiSVD<EigenMatrix> dec(to_eigen(a, e));
    std::vector<double> sig(static_cast<std::size_t>(dec.singularValues().size()));
    for (std::size_t i = 0; i < sig.size(); ++i) sig[i] = std::ldexp(dec.singularValues()(static_cast<Eigen::Index>(i)), e);
    return sig;
}

}  // namespace marginlab

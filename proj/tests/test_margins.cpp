// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "marginlab/datagen.hpp"
#include "marginlab/error.hpp"
#include "marginlab/margins.hpp"
#include "marginlab/optimizers.hpp"
#include "support.hpp"

using namespace marginlab;

namespace {

const NormSpec kSpecs[] = {NormSpec::max_norm(), NormSpec::frobenius(), NormSpec::spectral()};

}  // namespace

TEST_CASE("attained margin by hand") {
    const Dataset o2 = fixture("orthogonal-2");
    CHECK(attained_margin(Matrix(2, 2), o2) == 0.0);
    CHECK(attained_margin(Matrix::identity(2), o2) == 1.0);
    CHECK(attained_margin(Matrix{{1, -1}, {-1, 1}}, o2) == 2.0);
    CHECK_THROWS_AS(attained_margin(Matrix(2, 3), o2), Error);
}

TEST_CASE("hand-computed data margins") {
    const Dataset o2 = fixture("orthogonal-2");
    const Dataset sp = single_point_dataset();
    struct Case {
        const Dataset* data;
        NormSpec spec;
        double gamma;
    };
    const Case cases[] = {
        {&o2, NormSpec::max_norm(), 2.0},       {&o2, NormSpec::frobenius(), 1.0},
        {&o2, NormSpec::spectral(), 1.0},       {&sp, NormSpec::max_norm(), 2.0},
        {&sp, NormSpec::frobenius(), std::sqrt(2.0)}, {&sp, NormSpec::spectral(), std::sqrt(2.0)},
    };
    for (const auto& c : cases) {
        CAPTURE(c.spec.name());
        const MarginSolution s = data_margin(*c.data, c.spec);
        CHECK(s.gamma == doctest::Approx(c.gamma).epsilon(1e-6));
        CHECK(s.gamma <= c.gamma + 1e-12);
        CHECK(s.upper_bound >= c.gamma - 1e-9);
        CHECK(!s.non_separable);
        CHECK(norm(s.v, c.spec) <= 1.0 + 1e-6);
        CHECK(attained_margin(s.v, *c.data) == doctest::Approx(s.gamma).epsilon(1e-9));
    }
}

TEST_CASE("solver agrees with the brute-force oracle") {
    const Dataset sets[] = {fixture("orthogonal-2"), single_point_dataset()};
    for (const auto& data : sets) {
        for (const auto& spec : kSpecs) {
            CAPTURE(spec.name());
            const double gamma = data_margin(data, spec).gamma;
            const double coarse = brute_force_margin(data, spec, 41);
            const double fine = brute_force_margin(data, spec, 201);
            CHECK(std::abs(gamma - coarse) <= 1e-2);
            CHECK(std::abs(gamma - fine) <= 1e-3);
            // The grid only ever finds feasible points.
            CHECK(fine <= gamma + 1e-9);
        }
    }
}

TEST_CASE("brute force on random tiny instances bounds the solver from below") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        const Dataset data = testing_support::random_dataset(rng, 2, 2, 3);
        for (const auto& spec : kSpecs) {
            const MarginSolution s = data_margin(data, spec);
            const double grid = brute_force_margin(data, spec, 81);
            CAPTURE(spec.name());
            CHECK(grid <= s.gamma + 1e-9);
            // f is 2 B sqrt(kd)-Lipschitz; the grid spacing is 2 / 80.
            const double tol = 2.0 * data.data_bound() * 2.0 * (2.0 / 80.0);
            if (!s.non_separable) CHECK(s.gamma - grid <= tol);
        }
    }
}

TEST_CASE("brute force refuses large instances") {
    const Dataset o3 = fixture("orthogonal-3");
    CHECK_THROWS_AS(brute_force_margin(o3, NormSpec::max_norm(), 11), Error);
    try {
        brute_force_margin(o3, NormSpec::max_norm(), 11);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::instance_too_large);
    }
}

TEST_CASE("non-separable data is flagged") {
    const Dataset dup = fixture("colinear-nonsep");
    for (const auto& spec : kSpecs) {
        const MarginSolution s = data_margin(dup, spec);
        CHECK(s.non_separable);
        CHECK(s.gamma <= 0.0);
    }
}

TEST_CASE("unsupported projection") {
    const NormSpec ew3{NormFamily::entrywise, Exponent{3.0}};
    CHECK_THROWS_AS(data_margin(fixture("orthogonal-2"), ew3), Error);
}

TEST_CASE("best-so-far trace is monotone") {
    MarginSolverConfig cfg;
    cfg.record_trace = true;
    std::mt19937_64 rng(2);
    const Dataset data = testing_support::random_dataset(rng, 3, 4, 12);
    for (const auto& spec : kSpecs) {
        const MarginSolution s = data_margin(data, spec, cfg);
        REQUIRE(!s.trace.empty());
        for (std::size_t i = 1; i < s.trace.size(); ++i) CHECK(s.trace[i] >= s.trace[i - 1]);
        CHECK(s.trace.back() == s.gamma);
    }
}

TEST_CASE("margin gap and scale invariance") {
    const Dataset o2 = fixture("orthogonal-2");
    for (const auto& spec : kSpecs) {
        const MarginSolution s = data_margin(o2, spec);
        CHECK(margin_gap(s.v, o2, spec, s.gamma) <= 1e-9);
        CHECK(margin_gap(2.0 * s.v, o2, spec, s.gamma) == doctest::Approx(margin_gap(s.v, o2, spec, s.gamma)));
        CHECK(normalized_margin(7.5 * s.v, o2, spec) == doctest::Approx(s.gamma));
    }
    CHECK_THROWS_AS(margin_gap(Matrix(2, 2), o2, NormSpec::max_norm(), 2.0), Error);
    CHECK_THROWS_AS(normalized_margin(Matrix(2, 2), o2, NormSpec::max_norm()), Error);
}

TEST_CASE("correlation") {
    const Matrix v{{1, 2}, {3, -1}};
    CHECK(correlation(v, v) == doctest::Approx(1.0));
    CHECK(correlation(-1.0 * v, v) == doctest::Approx(-1.0));
    CHECK(correlation(Matrix{{1, 0}, {0, 0}}, Matrix{{0, 1}, {0, 0}}) == 0.0);
    CHECK_THROWS_AS(correlation(Matrix(2, 2), v), Error);
}

TEST_CASE("SignGD on small data prefers the max-norm margin") {
    const Dataset o2 = fixture("orthogonal-2");
    const auto st = run(Matrix(2, 2), Nsd{NormSpec::max_norm()}, Schedule{0.1, 0.5}, o2, LossKind::cross_entropy,
                        10000, Cadence{}, nullptr);
    const double g_inf = data_margin(o2, NormSpec::max_norm()).gamma;
    const double g_2 = data_margin(o2, NormSpec::frobenius()).gamma;
    // Both relative gaps vanish on this symmetric fixture.
    const double rel_inf = margin_gap(st.weights(), o2, NormSpec::max_norm(), g_inf) / g_inf;
    const double rel_2 = margin_gap(st.weights(), o2, NormSpec::frobenius(), g_2) / g_2;
    CHECK(rel_inf <= rel_2 + 1e-12);

    GaussianParams p;
    p.k = 3;
    p.d = 4;
    p.per_class = 8;
    p.sigma = 0.3;
    p.seed = 5;
    const Dataset data = gen_gaussian(p).data;
    const auto sg = run(Matrix(3, 4), Nsd{NormSpec::max_norm()}, Schedule{0.1, 0.5}, data, LossKind::cross_entropy,
                        10000, Cadence{}, nullptr);
    const double gi = data_margin(data, NormSpec::max_norm()).gamma;
    const double g2 = data_margin(data, NormSpec::frobenius()).gamma;
    CHECK(margin_gap(sg.weights(), data, NormSpec::max_norm(), gi) / gi <
          margin_gap(sg.weights(), data, NormSpec::frobenius(), g2) / g2);
}

// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <set>

#include "marginlab/datagen.hpp"
#include "marginlab/error.hpp"
#include "marginlab/margins.hpp"

using namespace marginlab;

namespace {

GaussianParams small(std::uint64_t seed, double sigma = 0.1) {
    GaussianParams p;
    p.k = 4;
    p.d = 5;
    p.per_class = 6;
    p.sigma = sigma;
    p.seed = seed;
    return p;
}

bool identical(const Dataset& a, const Dataset& b) {
    if (a.size() != b.size() || a.dim() != b.dim() || a.num_classes() != b.num_classes()) return false;
    if (a.labels() != b.labels()) return false;
    for (std::size_t i = 0; i < a.features().size(); ++i)
        if (std::bit_cast<std::uint64_t>(a.features().values()[i]) != std::bit_cast<std::uint64_t>(b.features().values()[i]))
            return false;
    return true;
}

}  // namespace

TEST_CASE("normal sampler moments") {
    NormalSampler s(123);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = s();
        sum += x;
        sq += x * x;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("full-size generation") {
    GaussianParams p;
    p.seed = 7;
    const GeneratedDataset g = gen_gaussian(p);
    CHECK(g.data.size() == 500);
    CHECK(g.data.dim() == 25);
    CHECK(g.data.num_classes() == 10);
    const std::set<int> labels(g.data.labels().begin(), g.data.labels().end());
    CHECK(labels.size() == 10);
    CHECK(g.data.all_classes_present());
}

TEST_CASE("generation is deterministic") {
    CHECK(identical(gen_gaussian(small(9)).data, gen_gaussian(small(9)).data));
    CHECK_FALSE(identical(gen_gaussian(small(9)).data, gen_gaussian(small(10)).data));
}

TEST_CASE("sigma = 0 collapses each class onto its center") {
    const Dataset d = gen_gaussian(small(3, 0.0)).data;
    for (std::size_t i = 1; i < d.size(); ++i) {
        if (d.labels()[i] != d.labels()[i - 1]) continue;
        for (std::size_t j = 0; j < d.dim(); ++j) CHECK(d.features()(i, j) == d.features()(i - 1, j));
    }
    CHECK(data_margin(d, NormSpec::frobenius()).gamma > 0.0);
}

TEST_CASE("generated data is separable") {
    for (std::uint64_t seed : {1u, 2u, 3u}) CHECK(!data_margin(gen_gaussian(small(seed, 0.5)).data, NormSpec::frobenius()).non_separable);
}

TEST_CASE("generation gives up on hopeless parameters") {
    // Two classes with many points each in one dimension and huge noise
    // never separate linearly through the origin.
    GaussianParams p;
    p.k = 2;
    p.d = 1;
    p.per_class = 40;
    p.sigma = 100.0;
    p.seed = 1;
    CHECK_THROWS_AS(gen_gaussian(p), Error);
    try {
        gen_gaussian(p);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::generation_failure);
    }
}

TEST_CASE("parameter validation") {
    GaussianParams p = small(1);
    p.k = 1;
    CHECK_THROWS_AS(gen_gaussian(p), Error);
    p = small(1);
    p.sigma = -1.0;
    CHECK_THROWS_AS(gen_gaussian(p), Error);
    p = small(1);
    p.per_class = 0;
    CHECK_THROWS_AS(gen_gaussian(p), Error);
}

TEST_CASE("fixtures") {
    const Dataset o2 = fixture("orthogonal-2");
    CHECK(o2.size() == 2);
    CHECK(o2.data_bound() == 1.0);
    CHECK(fixture("orthogonal-3").num_classes() == 3);
    CHECK(data_margin(fixture("colinear-nonsep"), NormSpec::max_norm()).non_separable);
    CHECK_THROWS_AS(fixture("nope"), Error);
    // Frozen from the brute-force oracle.
    CHECK(brute_force_margin(o2, NormSpec::max_norm(), 41) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("shipped fixture files match the built-ins") {
    const std::filesystem::path dir = MARGINLAB_FIXTURE_DIR;
    for (const auto& name : fixture_names()) {
        CAPTURE(name);
        CHECK(identical(read_dataset_csv((dir / (name + ".csv")).string()), fixture(name)));
    }
}

TEST_CASE("csv round trip") {
    const GeneratedDataset g = gen_gaussian(small(4));
    const std::string text = dataset_csv(g.data, g.seed);
    CHECK(text.rfind("# k=4 d=5 n=24 seed=", 0) == 0);
    CHECK(identical(parse_dataset_csv(text), g.data));

    const auto path = std::filesystem::temp_directory_path() / "marginlab_datagen_roundtrip.csv";
    write_dataset_csv(path.string(), g.data, g.seed);
    CHECK(identical(read_dataset_csv(path.string()), g.data));
    CHECK(identical(load_dataset(path.string()), g.data));
    std::filesystem::remove(path);
}

TEST_CASE("csv errors") {
    CHECK_THROWS_AS(parse_dataset_csv(""), Error);
    CHECK_THROWS_AS(parse_dataset_csv("f0,label\n1,x\n"), Error);
    CHECK_THROWS_AS(parse_dataset_csv("f0,f1,label\n1,2\n"), Error);
    CHECK_THROWS_AS(parse_dataset_csv("f0,label\n1,0\n"), Error);  // labels are 1-based
    CHECK_THROWS_AS(read_dataset_csv("/nonexistent/file.csv"), Error);
}

TEST_CASE("load by fixture name") {
    CHECK(identical(load_dataset("orthogonal-2"), fixture("orthogonal-2")));
    CHECK(identical(load_dataset("fixtures/orthogonal-2"), fixture("orthogonal-2")));
    CHECK_THROWS_AS(load_dataset("fixtures/unknown"), Error);
}

TEST_CASE("dataset hash") {
    CHECK(dataset_hash(fixture("orthogonal-2")) == dataset_hash(fixture("orthogonal-2")));
    CHECK(dataset_hash(fixture("orthogonal-2")) != dataset_hash(fixture("colinear-nonsep")));
    CHECK(dataset_hash(gen_gaussian(small(1)).data) != dataset_hash(gen_gaussian(small(2)).data));
}

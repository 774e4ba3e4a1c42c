// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "depthdecode/rng.hpp"

using depthdecode::derive_seed;
using depthdecode::Rng;

TEST_CASE("same seed gives the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("derived streams differ by name and index") {
    REQUIRE(derive_seed(1, "init") != derive_seed(1, "batch"));
    REQUIRE(derive_seed(1, "batch", 0) != derive_seed(1, "batch", 1));
    REQUIRE(derive_seed(1, "batch", 3) == derive_seed(1, "batch", 3));
    REQUIRE(derive_seed(1, "batch") != derive_seed(2, "batch"));
}

TEST_CASE("uniform stays in range") {
    Rng r(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform(-2.0, 3.0);
        REQUIRE(u >= -2.0);
        REQUIRE(u < 3.0);
    }
}

TEST_CASE("uniform_int covers inclusive bounds") {
    Rng r(11);
    std::set<int> seen;
    for (int i = 0; i < 1000; ++i) {
        const int v = r.uniform_int(3, 6);
        REQUIRE(v >= 3);
        REQUIRE(v <= 6);
        seen.insert(v);
    }
    REQUIRE(seen.size() == 4);
}

TEST_CASE("normal has roughly standard moments") {
    Rng r(19);
    const int n = 50000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = r.normal();
        s += v;
        s2 += v * v;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    REQUIRE(std::fabs(mean) < 0.02);
    REQUIRE(std::fabs(var - 1.0) < 0.05);
}

TEST_CASE("shuffle is a permutation and is seed stable") {
    std::vector<int> v(100);
    for (int i = 0; i < 100; ++i) v[static_cast<size_t>(i)] = i;
    std::vector<int> w = v;

    Rng a(5);
    a.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    REQUIRE(sorted == w);

    std::vector<int> v2 = w;
    Rng b(5);
    b.shuffle(v2);
    REQUIRE(v2 == v);
}

TEST_CASE("sample_without_replacement yields distinct in-range indices") {
    Rng r(23);
    auto s = r.sample_without_replacement(50, 10);
    REQUIRE(s.size() == 10);
    std::set<int> uniq(s.begin(), s.end());
    REQUIRE(uniq.size() == 10);
    for (int v : s) {
        REQUIRE(v >= 0);
        REQUIRE(v < 50);
    }

    auto all = r.sample_without_replacement(5, 9);
    REQUIRE(all.size() == 5);
}

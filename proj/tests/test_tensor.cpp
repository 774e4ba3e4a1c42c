// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include <stdexcept>

#include "depthdecode/tensor.hpp"

using depthdecode::Tensor;

TEST_CASE("tensor shape and numel") {
    Tensor t({2, 3, 4, 5});
    REQUIRE(t.ndim() == 4);
    REQUIRE(t.dim(0) == 2);
    REQUIRE(t.dim(3) == 5);
    REQUIRE(t.numel() == 120);
    REQUIRE_FALSE(t.empty());
    for (int64_t i = 0; i < t.numel(); ++i) REQUIRE(t[i] == 0.0f);

    Tensor f({3}, 2.5f);
    REQUIRE(f[0] == 2.5f);
    REQUIRE(f[2] == 2.5f);
}

TEST_CASE("tensor 4d indexing is row major") {
    Tensor t({2, 3, 4, 5});
    t.at(1, 2, 3, 4) = 7.0f;
    // flat offset of the last element
    REQUIRE(t[t.numel() - 1] == 7.0f);

    t.at(0, 1, 0, 0) = 3.0f;
    REQUIRE(t[1 * 4 * 5] == 3.0f);
}

TEST_CASE("tensor reshape preserves data and validates element count") {
    Tensor t({2, 6});
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(i);
    Tensor r = t.reshaped({3, 4});
    REQUIRE(r.ndim() == 2);
    REQUIRE(r.numel() == 12);
    for (int64_t i = 0; i < r.numel(); ++i) REQUIRE(r[i] == static_cast<float>(i));

    REQUIRE_THROWS_AS(t.reshaped({5, 5}), std::invalid_argument);
}

TEST_CASE("tensor rejects negative dimensions") {
    REQUIRE_THROWS_AS(Tensor({2, -1}), std::invalid_argument);
}

TEST_CASE("zeros_like matches shape") {
    Tensor t({4, 7}, 1.0f);
    Tensor z = Tensor::zeros_like(t);
    REQUIRE(z.same_shape(t));
    REQUIRE(z[0] == 0.0f);
    REQUIRE(z[z.numel() - 1] == 0.0f);
}

TEST_CASE("fill and zero") {
    Tensor t({3, 3});
    t.fill(4.0f);
    REQUIRE(t[4] == 4.0f);
    t.zero();
    REQUIRE(t[4] == 0.0f);
}

TEST_CASE("shape_str formats dimensions") {
    Tensor t({2, 3});
    REQUIRE(t.shape_str() == "(2,3)");
}

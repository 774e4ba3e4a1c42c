// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include <cmath>
#include <filesystem>
#include <memory>

#include "depthdecode/io.hpp"
#include "depthdecode/nn.hpp"
#include "gradcheck.hpp"

using namespace depthdecode;
using testutil::input_grad_error;
using testutil::param_grad_error;
using testutil::quadratic_loss;
using testutil::randn_tensor;

TEST_CASE("conv2d gradients match finite differences") {
    Rng rng(1);
    nn::Sequential net;
    net.emplace<nn::Conv2d>(2, 3, rng);
    Tensor x = randn_tensor({2, 2, 6, 6}, 10, 0.7f);
    Tensor target = randn_tensor({2, 3, 6, 6}, 11, 0.7f);
    auto loss = quadratic_loss(target);
    REQUIRE(param_grad_error(net, x, loss) < 5e-3);
    REQUIRE(input_grad_error(net, x, loss) < 5e-3);
}

TEST_CASE("linear gradients match finite differences") {
    Rng rng(2);
    nn::Sequential net;
    net.emplace<nn::Flatten>();
    net.emplace<nn::Linear>(18, 7, rng);
    Tensor x = randn_tensor({3, 2, 3, 3}, 12, 0.8f);
    Tensor target = randn_tensor({3, 7}, 13, 0.8f);
    auto loss = quadratic_loss(target);
    REQUIRE(param_grad_error(net, x, loss) < 5e-3);
    REQUIRE(input_grad_error(net, x, loss) < 5e-3);
}

TEST_CASE("composite network gradients match finite differences") {
    Rng rng(3);
    nn::Sequential net;
    net.emplace<nn::Conv2d>(1, 4, rng);
    net.emplace<nn::ReLU>();
    net.emplace<nn::MaxPool2>();
    net.emplace<nn::Conv2d>(4, 3, rng);
    net.emplace<nn::ReLU>();
    net.emplace<nn::AvgPool>(2, 2);
    net.emplace<nn::Flatten>();
    net.emplace<nn::Linear>(12, 5, rng);
    net.emplace<nn::Sigmoid>();

    Tensor x = randn_tensor({2, 1, 8, 8}, 14, 0.9f);
    Tensor target = randn_tensor({2, 5}, 15, 0.5f);
    auto loss = quadratic_loss(target);
    // a smaller step keeps the probe from crossing relu and argmax kinks
    REQUIRE(param_grad_error(net, x, loss, 16, 1e-3) < 5e-3);
    REQUIRE(input_grad_error(net, x, loss, 32, 1e-3) < 5e-3);
}

TEST_CASE("decoder-style network gradients match finite differences") {
    Rng rng(4);
    nn::Sequential net;
    net.emplace<nn::Linear>(6, 4 * 2 * 2, rng);
    net.emplace<nn::Reshape>(4, 2, 2);
    net.emplace<nn::Upsample2>();
    net.emplace<nn::Conv2d>(4, 2, rng);
    net.emplace<nn::ReLU>();
    net.emplace<nn::Upsample2>();
    net.emplace<nn::Conv2d>(2, 1, rng);
    net.emplace<nn::Sigmoid>();

    Tensor x = randn_tensor({2, 6}, 16, 0.8f);
    Tensor target = randn_tensor({2, 1, 8, 8}, 17, 0.4f);
    auto loss = quadratic_loss(target);
    REQUIRE(param_grad_error(net, x, loss, 16, 1e-3) < 5e-3);
    REQUIRE(input_grad_error(net, x, loss, 32, 1e-3) < 5e-3);
}

TEST_CASE("gradients accumulate across backward calls until zeroed") {
    Rng rng(5);
    nn::Sequential net;
    net.emplace<nn::Conv2d>(1, 2, rng);
    Tensor x = randn_tensor({1, 1, 4, 4}, 18);
    Tensor target = randn_tensor({1, 2, 4, 4}, 19);
    auto loss = quadratic_loss(target);

    net.zero_grad();
    auto out = net.forward(x, true);
    net.backward(loss(out).second);
    auto* conv = dynamic_cast<nn::Conv2d*>(&net.layer(0));
    REQUIRE(conv != nullptr);
    const float once = conv->gw[0];
    REQUIRE(once != 0.0f);

    out = net.forward(x, true);
    net.backward(loss(out).second);
    REQUIRE(conv->gw[0] == Approx(2.0f * once).epsilon(1e-5));

    net.zero_grad();
    REQUIRE(conv->gw[0] == 0.0f);
}

TEST_CASE("identical seeds build identical networks") {
    auto build = [](uint64_t seed) {
        Rng rng(seed);
        auto net = std::make_unique<nn::Sequential>();
        net->emplace<nn::Conv2d>(3, 8, rng);
        net->emplace<nn::ReLU>();
        net->emplace<nn::Conv2d>(8, 4, rng);
        return net;
    };
    auto a = build(42), b = build(42), c = build(43);
    REQUIRE(a->params_checksum() == b->params_checksum());
    REQUIRE(a->params_checksum() != c->params_checksum());
    REQUIRE(a->arch_hash() == c->arch_hash());
}

TEST_CASE("architecture hash reflects structure") {
    Rng rng(6);
    nn::Sequential a, b, c;
    a.emplace<nn::Conv2d>(1, 4, rng);
    a.emplace<nn::ReLU>();
    b.emplace<nn::Conv2d>(1, 4, rng);
    b.emplace<nn::ReLU>();
    c.emplace<nn::Conv2d>(1, 5, rng);
    c.emplace<nn::ReLU>();
    REQUIRE(a.arch_hash() == b.arch_hash());
    REQUIRE(a.arch_hash() != c.arch_hash());
}

TEST_CASE("checkpoint round-trip restores parameters exactly") {
    const auto path = (std::filesystem::temp_directory_path() / "nn_roundtrip.ckpt").string();
    Rng rng(7);
    nn::Sequential net;
    net.emplace<nn::Conv2d>(2, 3, rng);
    net.emplace<nn::ReLU>();
    net.emplace<nn::Conv2d>(3, 1, rng);

    io::Checkpoint ckpt;
    net.save(ckpt);
    ckpt.meta["seed"] = "7";
    io::save_checkpoint(path, ckpt);

    Rng rng2(999);
    nn::Sequential other;
    other.emplace<nn::Conv2d>(2, 3, rng2);
    other.emplace<nn::ReLU>();
    other.emplace<nn::Conv2d>(3, 1, rng2);
    REQUIRE(other.params_checksum() != net.params_checksum());

    other.load(io::load_checkpoint(path));
    REQUIRE(other.params_checksum() == net.params_checksum());

    Tensor x = randn_tensor({1, 2, 6, 6}, 20);
    Tensor ya = net.forward(x, false);
    Tensor yb = other.forward(x, false);
    for (int64_t i = 0; i < ya.numel(); ++i) REQUIRE(ya[i] == yb[i]);

    std::remove(path.c_str());
    std::remove((path + ".manifest").c_str());
}

TEST_CASE("checkpoint load rejects missing and mis-shaped tensors") {
    Rng rng(8);
    nn::Sequential net;
    net.emplace<nn::Linear>(4, 2, rng);

    io::Checkpoint empty;
    REQUIRE_THROWS_WITH(net.load(empty), Catch::Contains("missing"));

    io::Checkpoint wrong;
    wrong.tensors.emplace("0.w", Tensor({3, 3}));
    wrong.tensors.emplace("0.b", Tensor({2}));
    REQUIRE_THROWS_WITH(net.load(wrong), Catch::Contains("shape"));
}

TEST_CASE("adam fits a small linear regression") {
    Rng rng(9);
    nn::Sequential net;
    net.emplace<nn::Linear>(3, 1, rng);

    // ground truth y = 2 x0 - x1 + 0.5 x2 + 0.25
    const int n = 64;
    Tensor x = randn_tensor({n, 3}, 21);
    Tensor y({n, 1});
    for (int i = 0; i < n; ++i)
        y[i] = 2.0f * x.at(i, 0) - x.at(i, 1) + 0.5f * x.at(i, 2) + 0.25f;

    nn::Adam opt(net.params(), {.lr = 0.05});
    auto loss = quadratic_loss(y);
    double final_loss = 1e30;
    for (int step = 0; step < 400; ++step) {
        net.zero_grad();
        auto out = net.forward(x, true);
        auto [l, g] = loss(out);
        net.backward(g);
        opt.step();
        final_loss = l / n;
    }
    REQUIRE(final_loss < 1e-4);

    auto* lin = dynamic_cast<nn::Linear*>(&net.layer(0));
    REQUIRE(lin->w[0] == Approx(2.0f).margin(0.02));
    REQUIRE(lin->w[1] == Approx(-1.0f).margin(0.02));
    REQUIRE(lin->b[0] == Approx(0.25f).margin(0.02));
}

TEST_CASE("adam updates change the parameter checksum") {
    Rng rng(10);
    nn::Sequential net;
    net.emplace<nn::Linear>(2, 2, rng);
    const auto before = net.params_checksum();

    nn::Adam opt(net.params(), {});
    net.zero_grad();
    Tensor x = randn_tensor({4, 2}, 22);
    auto out = net.forward(x, true);
    net.backward(quadratic_loss(randn_tensor({4, 2}, 23))(out).second);
    opt.step();
    REQUIRE(net.params_checksum() != before);
}

TEST_CASE("cosine schedule decays from lr0 to lr_min") {
    const double lr0 = 0.1, lrmin = 0.001;
    REQUIRE(nn::cosine_lr(0, 100, lr0, lrmin) == Approx(lr0));
    REQUIRE(nn::cosine_lr(99, 100, lr0, lrmin) == Approx(lrmin));
    double prev = lr0 + 1.0;
    for (int s = 0; s < 100; ++s) {
        const double lr = nn::cosine_lr(s, 100, lr0, lrmin);
        REQUIRE(lr <= prev + 1e-12);
        REQUIRE(lr >= lrmin - 1e-12);
        prev = lr;
    }
}

TEST_CASE("shape mismatches raise informative errors") {
    Rng rng(11);
    nn::Sequential net;
    net.emplace<nn::Conv2d>(3, 4, rng);
    REQUIRE_THROWS_AS(net.forward(randn_tensor({1, 2, 8, 8}, 24), false),
                      std::invalid_argument);

    nn::MaxPool2 pool;
    REQUIRE_THROWS_AS(pool.forward(randn_tensor({1, 1, 1, 4}, 25), false),
                      std::invalid_argument);

    nn::AvgPool avg(3, 3);
    REQUIRE_THROWS_AS(avg.forward(randn_tensor({1, 1, 8, 8}, 26), false),
                      std::invalid_argument);
}

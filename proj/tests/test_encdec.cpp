// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include "depthdecode/encdec.hpp"

#include <catch2/catch.hpp>
#include <cmath>

#include "depthdecode/kernels.hpp"
#include "depthdecode/rng.hpp"
#include "depthdecode/scene.hpp"
#include "gradcheck.hpp"
#include "helpers.hpp"

using namespace depthdecode;
using testutil::randn_tensor;
using testutil::TempDir;
using encdec::Decoder;
using encdec::Encoder;
using encdec::EncoderConfig;
using encdec::EncoderLossConfig;
using features::CosineAggregation;
using features::FeatureExtractor;

namespace {

FmriVector vec(std::initializer_list<float> vals) {
    FmriVector r;
    r.values = vals;
    return r;
}

FmriVector randn_vec(int n, uint64_t seed) {
    FmriVector r;
    Rng rng(seed, "fmri");
    r.values.resize(static_cast<size_t>(n));
    for (auto& x : r.values) x = static_cast<float>(rng.normal());
    return r;
}

Tensor uniform_input(const std::vector<int>& shape, uint64_t seed, double lo = 0.1,
                     double hi = 0.9) {
    Tensor t(shape);
    Rng rng(seed, "uniform-input");
    for (int64_t i = 0; i < t.numel(); ++i)
        t.data()[i] = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

RgbdSample depth_sample(Tensor raster) {
    RgbdSample s;
    s.mode = ChannelMode::DepthOnly;
    s.raster = std::move(raster);
    return s;
}

}  // namespace

TEST_CASE("encoder loss hits its hand-computed fixtures") {
    // identical nonzero vectors: MSE 0, cosine 1
    const auto r = randn_vec(16, 3);
    REQUIRE(encdec::encoder_loss(r, r) == Approx(-0.1).margin(1e-6));

    // orthogonal unit vectors: MSE 1, cosine 0
    REQUIRE(encdec::encoder_loss(vec({0, 1}), vec({1, 0})) == Approx(0.9).margin(1e-6));

    // parallel but scaled: MSE 1, cosine 1
    REQUIRE(encdec::encoder_loss(vec({2, 2}), vec({1, 1})) == Approx(0.8).margin(1e-6));

    // alpha reweights the same two terms
    REQUIRE(encdec::encoder_loss(vec({2, 2}), vec({1, 1}), {0.5}) ==
            Approx(0.0).margin(1e-6));

    REQUIRE_THROWS_AS(encdec::encoder_loss(vec({1, 2}), vec({1})),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(encdec::encoder_loss(vec({}), vec({})), std::invalid_argument);
    REQUIRE_THROWS_AS(encdec::encoder_loss(r, r, {1.5}), std::invalid_argument);
}

TEST_CASE("the zero vector is handled by the cosine epsilon, not a crash") {
    const auto z = vec({0, 0, 0});
    REQUIRE(std::isfinite(encdec::encoder_loss(z, z)));
    REQUIRE(encdec::encoder_loss(z, z) == Approx(0.0).margin(1e-6));
    REQUIRE(std::isfinite(encdec::encoder_loss(z, vec({1, 2, 3}))));
}

TEST_CASE("encoder loss is minimized at r_hat == r") {
    const auto r = randn_vec(32, 7);
    const double at_truth = encdec::encoder_loss(r, r);
    for (int trial = 0; trial < 100; ++trial) {
        const auto r_hat = randn_vec(32, 100 + static_cast<uint64_t>(trial));
        REQUIRE(at_truth <= encdec::encoder_loss(r_hat, r));
    }
}

TEST_CASE("batched encoder loss means the per-row values") {
    const Tensor r_hat = randn_tensor({3, 8}, 21);
    const Tensor r = randn_tensor({3, 8}, 22);
    Tensor grad;
    const double batched = encdec::encoder_loss_grad(r_hat, r, {}, grad);

    double manual = 0.0;
    for (int n = 0; n < 3; ++n) {
        FmriVector a, b;
        for (int v = 0; v < 8; ++v) {
            a.values.push_back(r_hat.at(n, v));
            b.values.push_back(r.at(n, v));
        }
        manual += encdec::encoder_loss(a, b);
    }
    REQUIRE(batched == Approx(manual / 3.0).margin(1e-9));
    REQUIRE(grad.same_shape(r_hat));

    Tensor g2;
    REQUIRE_THROWS_AS(encdec::encoder_loss_grad(r_hat, randn_tensor({3, 9}, 23), {}, g2),
                      std::invalid_argument);
}

TEST_CASE("encoder loss gradients match finite differences") {
    // smooth away from the origin, so plain gaussian fixtures are safe
    Tensor r_hat = randn_tensor({3, 8}, 31);
    const Tensor r = randn_tensor({3, 8}, 32);
    Tensor grad;
    encdec::encoder_loss_grad(r_hat, r, {}, grad);

    const double h = 1e-3;
    double err2 = 0.0, fd2 = 0.0;
    for (int64_t i = 0; i < r_hat.numel(); ++i) {
        const float keep = r_hat[i];
        Tensor g2;
        r_hat.data()[i] = keep + static_cast<float>(h);
        const double up = encdec::encoder_loss_grad(r_hat, r, {}, g2);
        r_hat.data()[i] = keep - static_cast<float>(h);
        const double dn = encdec::encoder_loss_grad(r_hat, r, {}, g2);
        r_hat.data()[i] = keep;
        const double fd = (up - dn) / (2.0 * h);
        err2 += (fd - grad[i]) * (fd - grad[i]);
        fd2 += fd * fd;
    }
    REQUIRE(fd2 > 0.0);
    REQUIRE(std::sqrt(err2 / fd2) < 1e-3);
}

TEST_CASE("total variation of a constant raster is zero") {
    RgbdSample s;
    s.mode = ChannelMode::Rgbd;
    s.raster = Tensor({4, 9, 9});
    s.raster.fill(0.42f);
    REQUIRE(encdec::tv_regularizer(s) == 0.0);
}

TEST_CASE("the 2x2 column fixture scores exactly 0.05") {
    // [[0,1],[0,1]]: horizontal diffs 1 and 1, vertical diffs 0 and 0,
    // mean over the 4 valid pairs is 0.5, scaled by the 0.1 default weight
    Tensor t({1, 2, 2});
    t.at(0, 0, 1) = 1.0f;
    t.at(0, 1, 1) = 1.0f;
    REQUIRE(encdec::tv_regularizer(depth_sample(t)) == Approx(0.05).margin(1e-12));
    REQUIRE(encdec::tv_regularizer(depth_sample(t), 0.3) ==
            Approx(0.15).margin(1e-12));
}

TEST_CASE("the checkerboard maximizes TV over all binary 3x3 rasters") {
    double best = -1.0;
    std::vector<int> argbest;
    for (int bits = 0; bits < 512; ++bits) {
        Tensor t({1, 3, 3});
        for (int i = 0; i < 9; ++i) t[i] = (bits >> i) & 1 ? 1.0f : 0.0f;
        const double tv = encdec::tv_regularizer(depth_sample(t));
        if (tv > best + 1e-12) {
            best = tv;
            argbest = {bits};
        } else if (tv > best - 1e-12) {
            argbest.push_back(bits);
        }
    }
    // both checkerboard parities: 0b101010101 and its complement
    const int checker = 0b101010101;
    REQUIRE(std::count(argbest.begin(), argbest.end(), checker) == 1);
    REQUIRE(std::count(argbest.begin(), argbest.end(), 0b010101010) == 1);
    REQUIRE(argbest.size() == 2);

    Tensor t({1, 3, 3});
    for (int i = 0; i < 9; ++i) t[i] = (checker >> i) & 1 ? 1.0f : 0.0f;
    // every one of the 12 valid pairs differs, so the mean is 1
    REQUIRE(encdec::tv_regularizer(depth_sample(t)) == Approx(0.1).margin(1e-12));
}

TEST_CASE("cyclic shifts of periodic rasters leave TV unchanged") {
    const auto shifted = [](const Tensor& t, int dy, int dx) {
        const int H = t.dim(1), W = t.dim(2);
        Tensor out({1, H, W});
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                out.at(0, y, x) = t.at(0, (y + dy) % H, (x + dx) % W);
        return out;
    };

    Tensor checker({1, 4, 4});
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) checker.at(0, y, x) = static_cast<float>((y + x) % 2);
    const double base = encdec::tv_regularizer(depth_sample(checker));
    for (int dy = 0; dy < 4; ++dy)
        for (int dx = 0; dx < 4; ++dx)
            REQUIRE(encdec::tv_regularizer(depth_sample(shifted(checker, dy, dx))) ==
                    Approx(base).margin(1e-12));

    Tensor stripes({1, 4, 4});
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) stripes.at(0, y, x) = static_cast<float>(x % 2);
    const double sbase = encdec::tv_regularizer(depth_sample(stripes));
    for (int dx = 0; dx < 4; ++dx)
        REQUIRE(encdec::tv_regularizer(depth_sample(shifted(stripes, 0, dx))) ==
                Approx(sbase).margin(1e-12));
}

TEST_CASE("TV gradients match finite differences") {
    Tensor x = uniform_input({1, 2, 5, 5}, 106, 0.0, 1.0);
    const double h = 1e-3;
    // fixture sanity: every neighbor pair sits well clear of the |.| kink
    for (int c = 0; c < 2; ++c)
        for (int y = 0; y < 5; ++y)
            for (int xx = 0; xx < 5; ++xx) {
                if (xx + 1 < 5)
                    REQUIRE(std::abs(x.at(0, c, y, xx) - x.at(0, c, y, xx + 1)) > 3 * h);
                if (y + 1 < 5)
                    REQUIRE(std::abs(x.at(0, c, y, xx) - x.at(0, c, y + 1, xx)) > 3 * h);
            }

    Tensor grad;
    encdec::tv_regularizer_grad(x, 0.1, grad);
    double err2 = 0.0, fd2 = 0.0;
    for (int64_t i = 0; i < x.numel(); ++i) {
        const float keep = x[i];
        Tensor g2;
        x.data()[i] = keep + static_cast<float>(h);
        const double up = encdec::tv_regularizer_grad(x, 0.1, g2);
        x.data()[i] = keep - static_cast<float>(h);
        const double dn = encdec::tv_regularizer_grad(x, 0.1, g2);
        x.data()[i] = keep;
        const double fd = (up - dn) / (2.0 * h);
        err2 += (fd - grad[i]) * (fd - grad[i]);
        fd2 += fd * fd;
    }
    REQUIRE(fd2 > 0.0);
    REQUIRE(std::sqrt(err2 / fd2) < 1e-3);
}

TEST_CASE("identical constant rasters have zero image loss") {
    auto phi = FeatureExtractor::make(ChannelMode::DepthOnly, 5);
    RgbdSample s;
    s.mode = ChannelMode::DepthOnly;
    s.raster = Tensor({1, 112, 112});
    s.raster.fill(0.5f);
    REQUIRE(encdec::image_loss(s, s, phi) < 1e-6);
}

TEST_CASE("a binary complement maxes out the l1 term") {
    auto phi = FeatureExtractor::make(ChannelMode::DepthOnly, 5);
    RgbdSample s, s_hat;
    s.mode = s_hat.mode = ChannelMode::DepthOnly;
    s.raster = Tensor({1, 112, 112});
    for (int y = 0; y < 112; ++y)
        for (int x = 0; x < 112; ++x) s.raster.at(0, y, x) = static_cast<float>((y + x) % 2);
    s_hat.raster = Tensor({1, 112, 112});
    for (int64_t i = 0; i < s.raster.numel(); ++i) s_hat.raster[i] = 1.0f - s.raster[i];

    const auto terms = encdec::image_loss_terms(s_hat, s, phi);
    REQUIRE(terms.l1 == Approx(1.0).margin(1e-6));
}

TEST_CASE("the image loss decomposes into its three published terms") {
    auto phi = FeatureExtractor::make(ChannelMode::Rgbd, 5);
    RgbdSample s_hat, s;
    s_hat.mode = s.mode = ChannelMode::Rgbd;
    s_hat.raster = uniform_input({4, 112, 112}, 61, 0.0, 1.0);
    s.raster = uniform_input({4, 112, 112}, 62, 0.0, 1.0);

    const auto terms = encdec::image_loss_terms(s_hat, s, phi);
    REQUIRE(terms.l1 >= 0.0);
    REQUIRE(terms.l1 <= 1.0);
    REQUIRE(terms.perceptual >= 0.0);
    REQUIRE(terms.perceptual <= 1.0);
    REQUIRE(terms.tv >= 0.0);
    REQUIRE(terms.tv <= 1.0);

    double l1 = 0.0;
    for (int64_t i = 0; i < s.raster.numel(); ++i)
        l1 += std::abs(static_cast<double>(s_hat.raster[i]) - s.raster[i]);
    l1 /= static_cast<double>(s.raster.numel());

    REQUIRE(terms.l1 == Approx(l1).margin(1e-6));
    REQUIRE(terms.perceptual ==
            Approx(features::perceptual_loss(s_hat, s, phi)).margin(1e-6));
    REQUIRE(terms.tv == Approx(encdec::tv_regularizer(s_hat)).margin(1e-6));
    REQUIRE(encdec::image_loss(s_hat, s, phi) ==
            Approx(terms.l1 + terms.perceptual + terms.tv).margin(1e-6));

    RgbdSample wrong;
    wrong.mode = ChannelMode::DepthOnly;
    wrong.raster = uniform_input({1, 112, 112}, 63);
    REQUIRE_THROWS_AS(encdec::image_loss_terms(wrong, s, phi), std::invalid_argument);
}

TEST_CASE("image loss gradients match finite differences") {
    // seeds picked so no probe crosses an l1 or TV kink or a pooling argmax;
    // the minimum pixel and neighbor gaps are asserted below to keep the
    // fixture honest if the RNG ever changes
    FeatureExtractor phi(ChannelMode::DepthOnly, {4, 6}, 2, 55);
    Tensor s_hat = uniform_input({1, 1, 8, 8}, 35, 0.2, 0.8);
    const Tensor s = uniform_input({1, 1, 8, 8}, 37, 0.2, 0.8);

    const double h = 1e-3;
    for (int64_t i = 0; i < s_hat.numel(); ++i)
        REQUIRE(std::abs(s_hat[i] - s[i]) > 3 * h);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            if (x + 1 < 8)
                REQUIRE(std::abs(s_hat.at(0, 0, y, x) - s_hat.at(0, 0, y, x + 1)) > 3 * h);
            if (y + 1 < 8)
                REQUIRE(std::abs(s_hat.at(0, 0, y, x) - s_hat.at(0, 0, y + 1, x)) > 3 * h);
        }

    for (auto agg : {CosineAggregation::Flattened, CosineAggregation::PerPositionMean}) {
        Tensor grad;
        const auto at = encdec::image_loss_grad(s_hat, s, phi, grad, agg);
        REQUIRE(at.total() > 0.0);

        double err2 = 0.0, fd2 = 0.0;
        for (int64_t i = 0; i < s_hat.numel(); ++i) {
            const float keep = s_hat[i];
            Tensor g2;
            s_hat.data()[i] = keep + static_cast<float>(h);
            const double up = encdec::image_loss_grad(s_hat, s, phi, g2, agg).total();
            s_hat.data()[i] = keep - static_cast<float>(h);
            const double dn = encdec::image_loss_grad(s_hat, s, phi, g2, agg).total();
            s_hat.data()[i] = keep;
            const double fd = (up - dn) / (2.0 * h);
            err2 += (fd - grad[i]) * (fd - grad[i]);
            fd2 += fd * fd;
        }
        REQUIRE(fd2 > 0.0);
        REQUIRE(std::sqrt(err2 / fd2) < 1e-3);
    }
}

TEST_CASE("the encoder maps stimuli to fixed-length voxel vectors") {
    Encoder enc(FeatureExtractor::make(ChannelMode::DepthOnly, 5), 32, {}, 9);
    REQUIRE(enc.voxels() == 32);
    REQUIRE(enc.mode() == ChannelMode::DepthOnly);
    REQUIRE(enc.backbone_blocks() == 3);
    REQUIRE(enc.backbone_frozen());

    const Tensor x = uniform_input({2, 1, 112, 112}, 70);
    const Tensor out = enc.forward(x, false);
    REQUIRE(out.shape() == std::vector<int>({2, 32}));

    // inference is deterministic, and encode() agrees with forward()
    const Tensor again = enc.forward(x, false);
    for (int64_t i = 0; i < out.numel(); ++i) REQUIRE(out[i] == again[i]);

    RgbdSample s;
    s.mode = ChannelMode::DepthOnly;
    s.raster = uniform_input({1, 112, 112}, 71);
    const auto r1 = enc.encode(s);
    const auto r2 = enc.encode(s);
    REQUIRE(r1.size() == 32);
    REQUIRE(r1.values == r2.values);

    Tensor one({1, 1, 112, 112});
    std::copy(s.raster.data(), s.raster.data() + s.raster.numel(), one.data());
    const Tensor row = enc.forward(one, false);
    for (int v = 0; v < 32; ++v) REQUIRE(row[v] == r1.values[static_cast<size_t>(v)]);

    // mode and shape guards
    RgbdSample rgb;
    rgb.mode = ChannelMode::Rgb;
    rgb.raster = uniform_input({3, 112, 112}, 72);
    REQUIRE_THROWS_AS(enc.encode(rgb), std::invalid_argument);
    REQUIRE_THROWS_AS(enc.forward(uniform_input({1, 1, 56, 56}, 73), false),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(enc.forward(uniform_input({1, 3, 112, 112}, 74), false),
                      std::invalid_argument);
}

TEST_CASE("encoder construction rejects bad block counts") {
    EncoderConfig cfg;
    cfg.backbone_blocks = 6;
    REQUIRE_THROWS_AS(Encoder(FeatureExtractor::make(ChannelMode::DepthOnly, 5), 8, cfg, 9),
                      std::invalid_argument);
    cfg.backbone_blocks = 0;
    REQUIRE_THROWS_AS(Encoder(FeatureExtractor::make(ChannelMode::DepthOnly, 5), 8, cfg, 9),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(Encoder(FeatureExtractor::make(ChannelMode::DepthOnly, 5), 0, {}, 9),
                      std::invalid_argument);

    // all five blocks still pool cleanly (112 -> 3 -> 3x3 average)
    EncoderConfig five;
    five.backbone_blocks = 5;
    Encoder deep(FeatureExtractor::make(ChannelMode::DepthOnly, 5), 8, five, 9);
    REQUIRE(deep.forward(uniform_input({1, 1, 112, 112}, 75), false).shape() ==
            std::vector<int>({1, 8}));
}

TEST_CASE("a frozen backbone trains only the head") {
    FeatureExtractor phi(ChannelMode::DepthOnly, {4, 6}, 2, 80);
    EncoderConfig cfg;
    cfg.backbone_blocks = 2;
    cfg.input_hw = 28;

    Encoder frozen(phi.clone(), 16, cfg, 81);
    // head linear weight and bias only
    REQUIRE(frozen.trainable_params().size() == 2);
    REQUIRE(frozen.all_params().size() > frozen.trainable_params().size());

    cfg.freeze_backbone = false;
    Encoder thawed(phi.clone(), 16, cfg, 81);
    // two backbone convs contribute weight and bias each
    REQUIRE(thawed.trainable_params().size() == 6);

    // backward through the frozen encoder leaves backbone grads untouched
    const Tensor x = uniform_input({2, 1, 28, 28}, 82);
    frozen.zero_grad();
    Tensor out = frozen.forward(x, true);
    Tensor gout(out.shape());
    gout.fill(1.0f);
    frozen.backward(gout);
    double head_grad = 0.0, backbone_grad = 0.0;
    for (auto& p : frozen.all_params()) {
        const double g = kernels::sum_abs(p.grad->data(), p.grad->numel());
        if (p.name.rfind("head.", 0) == 0)
            head_grad += g;
        else
            backbone_grad += g;
    }
    REQUIRE(head_grad > 0.0);
    REQUIRE(backbone_grad == 0.0);

    // the thawed encoder reaches its backbone
    thawed.zero_grad();
    out = thawed.forward(x, true);
    thawed.backward(gout);
    double thawed_backbone = 0.0;
    for (auto& p : thawed.trainable_params())
        if (p.name.rfind("backbone", 0) == 0)
            thawed_backbone += kernels::sum_abs(p.grad->data(), p.grad->numel());
    REQUIRE(thawed_backbone > 0.0);
}

TEST_CASE("encoder checkpoints round-trip exactly") {
    TempDir dir("encdec");
    FeatureExtractor phi(ChannelMode::Rgbd, {4, 6}, 3, 90);
    EncoderConfig cfg;
    cfg.backbone_blocks = 2;
    cfg.input_hw = 28;
    Encoder enc(std::move(phi), 12, cfg, 91);

    io::Checkpoint ckpt;
    enc.save(ckpt);
    io::save_checkpoint(dir.file("enc.ckpt"), ckpt);
    const auto loaded_ckpt = io::load_checkpoint(dir.file("enc.ckpt"));
    Encoder loaded = Encoder::load(loaded_ckpt);

    REQUIRE(loaded.arch_hash() == enc.arch_hash());
    REQUIRE(loaded.params_checksum() == enc.params_checksum());
    REQUIRE(loaded.voxels() == 12);
    REQUIRE(loaded.mode() == ChannelMode::Rgbd);

    const Tensor x = uniform_input({1, 4, 28, 28}, 92);
    const Tensor a = enc.forward(x, false);
    const Tensor b = loaded.forward(x, false);
    for (int64_t i = 0; i < a.numel(); ++i) REQUIRE(a[i] == b[i]);

    // a decoder checkpoint is refused
    Decoder dec(12, ChannelMode::Rgbd, 93);
    io::Checkpoint wrong;
    dec.save(wrong);
    REQUIRE_THROWS_AS(Encoder::load(wrong), std::runtime_error);
}

TEST_CASE("the decoder emits bounded full-size rasters") {
    Decoder dec(16, ChannelMode::Rgbd, 5);
    REQUIRE(dec.voxels() == 16);
    REQUIRE(dec.mode() == ChannelMode::Rgbd);

    const Tensor out = dec.forward(randn_tensor({2, 16}, 6), false);
    REQUIRE(out.shape() == std::vector<int>({2, 4, 112, 112}));

    // extreme inputs stay inside the unit interval
    for (float extreme : {-100.0f, 100.0f}) {
        Tensor r({1, 16});
        r.fill(extreme);
        const Tensor y = dec.forward(r, false);
        for (int64_t i = 0; i < y.numel(); ++i) {
            REQUIRE(y[i] >= 0.0f);
            REQUIRE(y[i] <= 1.0f);
        }
    }

    Decoder mono(16, ChannelMode::DepthOnly, 5);
    const auto s = mono.decode(randn_vec(16, 7));
    REQUIRE(s.mode == ChannelMode::DepthOnly);
    REQUIRE(s.raster.shape() == std::vector<int>({1, 112, 112}));
    const auto s2 = mono.decode(randn_vec(16, 7));
    for (int64_t i = 0; i < s.raster.numel(); ++i)
        REQUIRE(s.raster[i] == s2.raster[i]);

    REQUIRE_THROWS_AS(mono.decode(randn_vec(15, 8)), std::invalid_argument);
    REQUIRE_THROWS_AS(dec.forward(randn_tensor({2, 15}, 9), false),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(Decoder(0, ChannelMode::Rgbd, 5), std::invalid_argument);
}

TEST_CASE("decoder checkpoints round-trip exactly") {
    TempDir dir("encdec");
    Decoder dec(24, ChannelMode::DepthOnly, 14);
    io::Checkpoint ckpt;
    dec.save(ckpt);
    io::save_checkpoint(dir.file("dec.ckpt"), ckpt);
    Decoder loaded = Decoder::load(io::load_checkpoint(dir.file("dec.ckpt")));

    REQUIRE(loaded.arch_hash() == dec.arch_hash());
    REQUIRE(loaded.params_checksum() == dec.params_checksum());
    const Tensor r = randn_tensor({1, 24}, 15);
    const Tensor a = dec.forward(r, false);
    const Tensor b = loaded.forward(r, false);
    for (int64_t i = 0; i < a.numel(); ++i) REQUIRE(a[i] == b[i]);

    io::Checkpoint wrong;
    Encoder enc(FeatureExtractor::make(ChannelMode::DepthOnly, 5), 8, {}, 16);
    enc.save(wrong);
    REQUIRE_THROWS_AS(Decoder::load(wrong), std::runtime_error);
}

TEST_CASE("cycle training on one item drives decode(encode(s)) to the stimulus") {
    // a rendered depth scene as the single training item
    const auto spec = sample_scene(33);
    const auto rendered = render_scene(spec);
    RgbdSample s;
    s.mode = ChannelMode::DepthOnly;
    s.raster = rendered.depth;

    auto phi = FeatureExtractor::make(ChannelMode::DepthOnly, 17);
    phi.set_frozen(true);  // fixed metric: skip its parameter gradient work

    Encoder enc(phi.clone(), 64, {}, 18);
    const std::string enc_before = enc.params_checksum();
    const FmriVector r = enc.encode(s);

    Decoder dec(64, ChannelMode::DepthOnly, 19);
    nn::Adam adam(dec.params(), {2e-3});

    Tensor r_batch({1, 64});
    std::copy(r.values.begin(), r.values.end(), r_batch.data());
    const Tensor s_batch = s.raster.reshaped({1, 1, 112, 112});

    double last = 1.0;
    for (int step = 0; step < 400; ++step) {
        const Tensor s_hat = dec.forward(r_batch, true);
        Tensor grad;
        last = encdec::image_loss_grad(s_hat, s_batch, phi, grad).total();
        if (last < 0.03) break;
        dec.backward(grad);
        adam.step();
        dec.zero_grad();
    }
    INFO("final training loss " << last);

    const RgbdSample s_hat = dec.decode(enc.encode(s));
    REQUIRE(encdec::image_loss(s_hat, s, phi) < 0.05);

    // nothing in the run touched the encoder
    REQUIRE(enc.params_checksum() == enc_before);
}

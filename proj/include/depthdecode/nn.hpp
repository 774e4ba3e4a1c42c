// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "depthdecode/io.hpp"
#include "depthdecode/rng.hpp"
#include "depthdecode/tensor.hpp"

// Minimal layer graph with explicit forward/backward. Layers cache whatever
// their backward pass needs during a training-mode forward; backward returns
// the input gradient and accumulates parameter gradients.

namespace depthdecode::nn {

struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool train) = 0;
    virtual Tensor backward(const Tensor& gout) = 0;
    virtual void collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
        (void)prefix;
        (void)out;
    }
    // A frozen layer keeps serving forward/backward but skips the parameter
    // gradient work; its weights are treated as constants.
    virtual void set_frozen(bool frozen) { (void)frozen; }
    // one-line structural signature, part of the architecture hash
    virtual std::string describe() const = 0;
};

class Conv2d final : public Layer {
public:
    Conv2d(int cin, int cout, Rng& rng, int k = 3, int pad = 1);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gout) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
    void set_frozen(bool frozen) override { frozen_ = frozen; }
    std::string describe() const override;

    Tensor w, b, gw, gb;

private:
    int cin_, cout_, k_, pad_;
    bool frozen_ = false;
    Tensor x_;  // cached input
};

class Linear final : public Layer {
public:
    Linear(int in, int out, Rng& rng);

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gout) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
    void set_frozen(bool frozen) override { frozen_ = frozen; }
    std::string describe() const override;

    Tensor w, b, gw, gb;

private:
    int in_, out_;
    bool frozen_ = false;
    Tensor x_;
};

class ReLU final : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gout) override;
    std::string describe() const override { return "relu"; }

private:
    Tensor x_;
};

class Sigmoid final : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gout) override;
    std::string describe() const override { return "sigmoid"; }

private:
    Tensor y_;
};

class MaxPool2 final : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gout) override;
    std::string describe() const override { return "maxpool2"; }

private:
    std::vector<int32_t> argmax_;
    std::vector<int> in_shape_;
};

// Average pooling to a fixed output size; input extents must be divisible
// by the target extents.
class AvgPool final : public Layer {
public:
    AvgPool(int oh, int ow) : oh_(oh), ow_(ow) {}
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gout) override;
    std::string describe() const override;

private:
    int oh_, ow_;
    std::vector<int> in_shape_;
};

class Upsample2 final : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gout) override;
    std::string describe() const override { return "upsample2"; }

private:
    std::vector<int> in_shape_;
};

// [N,C,H,W] -> [N,C*H*W]
class Flatten final : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gout) override;
    std::string describe() const override { return "flatten"; }

private:
    std::vector<int> in_shape_;
};

// [N,I] -> [N,c,h,w] with c*h*w == I
class Reshape final : public Layer {
public:
    Reshape(int c, int h, int w) : c_(c), h_(h), w_(w) {}
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gout) override;
    std::string describe() const override;

private:
    int c_, h_, w_;
    std::vector<int> in_shape_;
};

class Sequential final : public Layer {
public:
    Sequential() = default;

    Sequential& add(std::unique_ptr<Layer> layer);
    template <typename L, typename... Args>
    Sequential& emplace(Args&&... args) {
        return add(std::make_unique<L>(std::forward<Args>(args)...));
    }

    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& gout) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
    void set_frozen(bool frozen) override;
    std::string describe() const override;

    std::vector<ParamRef> params();
    void zero_grad();
    size_t size() const { return layers_.size(); }
    Layer& layer(size_t i) { return *layers_[i]; }

    // FNV hash of the structural description, hex encoded
    std::string arch_hash() const;
    // FNV hash of all parameter bytes, hex encoded; detects any drift
    std::string params_checksum();

    void save(io::Checkpoint& ckpt, const std::string& prefix = "");
    void load(const io::Checkpoint& ckpt, const std::string& prefix = "");

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

class Adam {
public:
    struct Config {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    Adam(std::vector<ParamRef> params, Config cfg);

    void step();  // consumes current grads; caller zeroes them afterwards
    void set_lr(double lr) { cfg_.lr = lr; }
    double lr() const { return cfg_.lr; }

private:
    std::vector<ParamRef> params_;
    std::vector<Tensor> m_, v_;
    Config cfg_;
    int64_t t_ = 0;
};

// Cosine decay from lr0 to lr_min over total steps.
double cosine_lr(int64_t step, int64_t total, double lr0, double lr_min);

}  // namespace depthdecode::nn

// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include "depthdecode/nn.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "depthdecode/kernels.hpp"

namespace k = depthdecode::kernels;

namespace depthdecode::nn {

namespace {

void expect_rank(const Tensor& t, int rank, const char* who) {
    if (t.ndim() != rank)
        throw std::invalid_argument(std::string(who) + ": expected rank " +
                                    std::to_string(rank) + " input, got " + t.shape_str());
}

Tensor he_normal(std::vector<int> shape, int fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    const float std = std::sqrt(2.0f / static_cast<float>(fan_in));
    for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<float>(rng.normal()) * std;
    return t;
}

}  // namespace

Conv2d::Conv2d(int cin, int cout, Rng& rng, int k, int pad)
    : w(he_normal({cout, cin, k, k}, cin * k * k, rng)),
      b({cout}),
      gw({cout, cin, k, k}),
      gb({cout}),
      cin_(cin),
      cout_(cout),
      k_(k),
      pad_(pad) {}

Tensor Conv2d::forward(const Tensor& x, bool train) {
    expect_rank(x, 4, "Conv2d");
    if (x.dim(1) != cin_)
        throw std::invalid_argument("Conv2d: expected " + std::to_string(cin_) +
                                    " input channels, got " + x.shape_str());
    const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
    const int Ho = H + 2 * pad_ - k_ + 1, Wo = W + 2 * pad_ - k_ + 1;
    Tensor out({N, cout_, Ho, Wo});
    k::conv2d_forward(x.data(), w.data(), b.data(), out.data(), N, cin_, H, W, cout_, k_,
                      pad_);
    if (train) x_ = x;
    return out;
}

Tensor Conv2d::backward(const Tensor& gout) {
    const int N = x_.dim(0), H = x_.dim(2), W = x_.dim(3);
    Tensor gin({N, cin_, H, W});
    k::conv2d_backward_input(gout.data(), w.data(), gin.data(), N, cin_, H, W, cout_, k_,
                             pad_);
    if (!frozen_) {
        Tensor dw({cout_, cin_, k_, k_}), db({cout_});
        k::conv2d_backward_params(x_.data(), gout.data(), dw.data(), db.data(), N, cin_,
                                  H, W, cout_, k_, pad_);
        k::axpy(gw.data(), 1.0f, dw.data(), gw.numel());
        k::axpy(gb.data(), 1.0f, db.data(), gb.numel());
    }
    return gin;
}

void Conv2d::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + "w", &w, &gw});
    out.push_back({prefix + "b", &b, &gb});
}

std::string Conv2d::describe() const {
    std::ostringstream os;
    os << "conv2d(" << cin_ << "->" << cout_ << ",k" << k_ << ",p" << pad_ << ")";
    return os.str();
}

Linear::Linear(int in, int out, Rng& rng)
    : w(he_normal({out, in}, in, rng)), b({out}), gw({out, in}), gb({out}), in_(in), out_(out) {}

Tensor Linear::forward(const Tensor& x, bool train) {
    expect_rank(x, 2, "Linear");
    if (x.dim(1) != in_)
        throw std::invalid_argument("Linear: expected " + std::to_string(in_) +
                                    " inputs, got " + x.shape_str());
    const int N = x.dim(0);
    Tensor out({N, out_});
    k::linear_forward(x.data(), w.data(), b.data(), out.data(), N, in_, out_);
    if (train) x_ = x;
    return out;
}

Tensor Linear::backward(const Tensor& gout) {
    const int N = x_.dim(0);
    Tensor gin({N, in_});
    k::linear_backward_input(gout.data(), w.data(), gin.data(), N, in_, out_);
    if (!frozen_) {
        Tensor dw({out_, in_}), db({out_});
        k::linear_backward_params(x_.data(), gout.data(), dw.data(), db.data(), N, in_,
                                  out_);
        k::axpy(gw.data(), 1.0f, dw.data(), gw.numel());
        k::axpy(gb.data(), 1.0f, db.data(), gb.numel());
    }
    return gin;
}

void Linear::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + "w", &w, &gw});
    out.push_back({prefix + "b", &b, &gb});
}

std::string Linear::describe() const {
    return "linear(" + std::to_string(in_) + "->" + std::to_string(out_) + ")";
}

Tensor ReLU::forward(const Tensor& x, bool train) {
    Tensor out(x.shape());
    k::relu_forward(x.data(), out.data(), x.numel());
    if (train) x_ = x;
    return out;
}

Tensor ReLU::backward(const Tensor& gout) {
    Tensor gin(gout.shape());
    k::relu_backward(x_.data(), gout.data(), gin.data(), gout.numel());
    return gin;
}

Tensor Sigmoid::forward(const Tensor& x, bool train) {
    Tensor out(x.shape());
    k::sigmoid_forward(x.data(), out.data(), x.numel());
    if (train) y_ = out;
    return out;
}

Tensor Sigmoid::backward(const Tensor& gout) {
    Tensor gin(gout.shape());
    k::sigmoid_backward(y_.data(), gout.data(), gin.data(), gout.numel());
    return gin;
}

Tensor MaxPool2::forward(const Tensor& x, bool train) {
    expect_rank(x, 4, "MaxPool2");
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H < 2 || W < 2)
        throw std::invalid_argument("MaxPool2: spatial size too small " + x.shape_str());
    Tensor out({N, C, H / 2, W / 2});
    // inference passes must not disturb the indices a pending backward needs
    std::vector<int32_t> scratch;
    std::vector<int32_t>& am = train ? argmax_ : scratch;
    am.resize(static_cast<size_t>(out.numel()));
    k::maxpool2_forward(x.data(), out.data(), am.data(), N, C, H, W);
    if (train) in_shape_ = x.shape();
    return out;
}

Tensor MaxPool2::backward(const Tensor& gout) {
    Tensor gin(in_shape_);
    k::maxpool2_backward(gout.data(), argmax_.data(), gin.data(), in_shape_[0],
                         in_shape_[1], in_shape_[2], in_shape_[3]);
    return gin;
}

Tensor AvgPool::forward(const Tensor& x, bool train) {
    expect_rank(x, 4, "AvgPool");
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H % oh_ != 0 || W % ow_ != 0)
        throw std::invalid_argument("AvgPool: " + x.shape_str() + " not divisible by " +
                                    std::to_string(oh_) + "x" + std::to_string(ow_));
    Tensor out({N, C, oh_, ow_});
    k::avgpool_forward(x.data(), out.data(), N, C, H, W, oh_, ow_);
    if (train) in_shape_ = x.shape();
    return out;
}

Tensor AvgPool::backward(const Tensor& gout) {
    Tensor gin(in_shape_);
    k::avgpool_backward(gout.data(), gin.data(), in_shape_[0], in_shape_[1], in_shape_[2],
                        in_shape_[3], oh_, ow_);
    return gin;
}

std::string AvgPool::describe() const {
    return "avgpool(" + std::to_string(oh_) + "x" + std::to_string(ow_) + ")";
}

Tensor Upsample2::forward(const Tensor& x, bool train) {
    expect_rank(x, 4, "Upsample2");
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    Tensor out({N, C, 2 * H, 2 * W});
    k::upsample2_forward(x.data(), out.data(), N, C, H, W);
    if (train) in_shape_ = x.shape();
    return out;
}

Tensor Upsample2::backward(const Tensor& gout) {
    Tensor gin(in_shape_);
    k::upsample2_backward(gout.data(), gin.data(), in_shape_[0], in_shape_[1],
                          in_shape_[2], in_shape_[3]);
    return gin;
}

Tensor Flatten::forward(const Tensor& x, bool train) {
    if (train) in_shape_ = x.shape();
    const int N = x.dim(0);
    return x.reshaped({N, static_cast<int>(x.numel() / N)});
}

Tensor Flatten::backward(const Tensor& gout) { return gout.reshaped(in_shape_); }

Tensor Reshape::forward(const Tensor& x, bool train) {
    expect_rank(x, 2, "Reshape");
    if (x.dim(1) != c_ * h_ * w_)
        throw std::invalid_argument("Reshape: " + x.shape_str() + " does not hold " +
                                    std::to_string(c_ * h_ * w_) + " features");
    if (train) in_shape_ = x.shape();
    return x.reshaped({x.dim(0), c_, h_, w_});
}

Tensor Reshape::backward(const Tensor& gout) { return gout.reshaped(in_shape_); }

std::string Reshape::describe() const {
    return "reshape(" + std::to_string(c_) + "," + std::to_string(h_) + "," +
           std::to_string(w_) + ")";
}

Sequential& Sequential::add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
    return *this;
}

Tensor Sequential::forward(const Tensor& x, bool train) {
    Tensor cur = x;
    for (auto& l : layers_) cur = l->forward(cur, train);
    return cur;
}

Tensor Sequential::backward(const Tensor& gout) {
    Tensor cur = gout;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
    return cur;
}

void Sequential::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    for (size_t i = 0; i < layers_.size(); ++i)
        layers_[i]->collect_params(prefix + std::to_string(i) + ".", out);
}

void Sequential::set_frozen(bool frozen) {
    for (auto& l : layers_) l->set_frozen(frozen);
}

std::string Sequential::describe() const {
    std::ostringstream os;
    for (size_t i = 0; i < layers_.size(); ++i) {
        if (i) os << '|';
        os << layers_[i]->describe();
    }
    return os.str();
}

std::vector<ParamRef> Sequential::params() {
    std::vector<ParamRef> out;
    collect_params("", out);
    return out;
}

void Sequential::zero_grad() {
    for (auto& p : params()) p.grad->zero();
}

std::string Sequential::arch_hash() const {
    const std::string d = describe();
    std::ostringstream os;
    os << std::hex << fnv1a(d.data(), d.size());
    return os.str();
}

std::string Sequential::params_checksum() {
    uint64_t h = 1469598103934665603ull;
    for (auto& p : params())
        h = fnv1a(p.value->data(), sizeof(float) * static_cast<size_t>(p.value->numel()), h);
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

void Sequential::save(io::Checkpoint& ckpt, const std::string& prefix) {
    for (auto& p : params()) ckpt.tensors.emplace(prefix + p.name, *p.value);
}

void Sequential::load(const io::Checkpoint& ckpt, const std::string& prefix) {
    for (auto& p : params()) {
        const auto it = ckpt.tensors.find(prefix + p.name);
        if (it == ckpt.tensors.end())
            throw std::runtime_error("checkpoint is missing tensor '" + prefix + p.name + "'");
        if (!it->second.same_shape(*p.value))
            throw std::runtime_error("checkpoint tensor '" + prefix + p.name + "' has shape " +
                                     it->second.shape_str() + ", model expects " +
                                     p.value->shape_str());
        *p.value = it->second;
    }
}

Adam::Adam(std::vector<ParamRef> params, Config cfg) : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (auto& p : params_) {
        m_.emplace_back(p.value->shape());
        v_.emplace_back(p.value->shape());
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        float* w = params_[i].value->data();
        const float* g = params_[i].grad->data();
        float* m = m_[i].data();
        float* v = v_[i].data();
        const int64_t n = params_[i].value->numel();
        const float b1 = static_cast<float>(cfg_.beta1), b2 = static_cast<float>(cfg_.beta2);
        for (int64_t j = 0; j < n; ++j) {
            m[j] = b1 * m[j] + (1.0f - b1) * g[j];
            v[j] = b2 * v[j] + (1.0f - b2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= static_cast<float>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
        }
    }
}

double cosine_lr(int64_t step, int64_t total, double lr0, double lr_min) {
    if (total <= 1) return lr_min;
    const double frac = static_cast<double>(std::min(step, total - 1)) / static_cast<double>(total - 1);
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(frac * 3.14159265358979323846));
}

}  // namespace depthdecode::nn

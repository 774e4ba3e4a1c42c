// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include "depthdecode/encdec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "depthdecode/kernels.hpp"
#include "depthdecode/rng.hpp"

namespace depthdecode::encdec {

namespace {

constexpr double kCosEps = 1e-10;

// per-row alpha*MSE - (1-alpha)*cos with gradient w.r.t. the r_hat row
double row_loss(const float* rh, const float* r, int V, double alpha, float* grad) {
    double se = 0.0, dot = 0.0, nh2 = 0.0, nr2 = 0.0;
    for (int i = 0; i < V; ++i) {
        const double d = static_cast<double>(rh[i]) - r[i];
        se += d * d;
        dot += static_cast<double>(rh[i]) * r[i];
        nh2 += static_cast<double>(rh[i]) * rh[i];
        nr2 += static_cast<double>(r[i]) * r[i];
    }
    const double mse = se / V;
    const double nh = std::sqrt(nh2), nr = std::sqrt(nr2);
    const double den = nh * nr + kCosEps;
    const double cos = dot / den;
    if (grad) {
        const double ccoef = nh > 0.0 ? dot * nr / (den * den * nh) : 0.0;
        for (int i = 0; i < V; ++i) {
            const double dmse = 2.0 * (static_cast<double>(rh[i]) - r[i]) / V;
            const double dcos = r[i] / den - ccoef * rh[i];
            grad[i] = static_cast<float>(alpha * dmse - (1.0 - alpha) * dcos);
        }
    }
    return alpha * mse - (1.0 - alpha) * cos;
}

void check_alpha(const EncoderLossConfig& cfg) {
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0))
        throw std::invalid_argument("encoder_loss: alpha " + std::to_string(cfg.alpha) +
                                    " outside [0,1]");
}

}  // namespace

double encoder_loss(const FmriVector& r_hat, const FmriVector& r,
                    const EncoderLossConfig& cfg) {
    check_alpha(cfg);
    if (r_hat.values.size() != r.values.size())
        throw std::invalid_argument("encoder_loss: lengths " +
                                    std::to_string(r_hat.values.size()) + " and " +
                                    std::to_string(r.values.size()));
    if (r.values.empty()) throw std::invalid_argument("encoder_loss: empty vectors");
    return row_loss(r_hat.values.data(), r.values.data(),
                    static_cast<int>(r.values.size()), cfg.alpha, nullptr);
}

double encoder_loss_grad(const Tensor& r_hat, const Tensor& r,
                         const EncoderLossConfig& cfg, Tensor& grad) {
    check_alpha(cfg);
    if (r_hat.ndim() != 2 || !r_hat.same_shape(r))
        throw std::invalid_argument("encoder_loss_grad: expected matching [N,V], got " +
                                    r_hat.shape_str() + " and " + r.shape_str());
    const int N = r_hat.dim(0), V = r_hat.dim(1);
    grad = Tensor(r_hat.shape());
    double total = 0.0;
    for (int n = 0; n < N; ++n)
        total += row_loss(r_hat.data() + static_cast<int64_t>(n) * V,
                          r.data() + static_cast<int64_t>(n) * V, V, cfg.alpha,
                          grad.data() + static_cast<int64_t>(n) * V);
    kernels::scale(grad.data(), 1.0f / static_cast<float>(N), grad.numel());
    return total / N;
}

namespace {

// shared TV core over [N,C,H,W]; grad may be null
double tv_impl(const Tensor& x, double weight, Tensor* grad) {
    if (x.ndim() != 4)
        throw std::invalid_argument("tv_regularizer: expected [N,C,H,W], got " +
                                    x.shape_str());
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t pairs_per_chan =
        static_cast<int64_t>(H) * (W - 1) + static_cast<int64_t>(H - 1) * W;
    if (pairs_per_chan == 0) {
        if (grad) *grad = Tensor(x.shape());
        return 0.0;
    }
    const double norm = weight / (static_cast<double>(N) * C * pairs_per_chan);
    if (grad) *grad = Tensor(x.shape());
    const float* xp = x.data();
    float* gp = grad ? grad->data() : nullptr;
    double total = 0.0;
    const int64_t plane = static_cast<int64_t>(H) * W;
    for (int64_t nc = 0; nc < static_cast<int64_t>(N) * C; ++nc) {
        const float* p = xp + nc * plane;
        float* g = gp ? gp + nc * plane : nullptr;
        for (int y = 0; y < H; ++y)
            for (int x2 = 0; x2 + 1 < W; ++x2) {
                const double d = static_cast<double>(p[y * W + x2]) - p[y * W + x2 + 1];
                total += std::abs(d);
                if (g && d != 0.0) {
                    const float s = static_cast<float>(d > 0 ? norm : -norm);
                    g[y * W + x2] += s;
                    g[y * W + x2 + 1] -= s;
                }
            }
        for (int y = 0; y + 1 < H; ++y)
            for (int x2 = 0; x2 < W; ++x2) {
                const double d = static_cast<double>(p[y * W + x2]) - p[(y + 1) * W + x2];
                total += std::abs(d);
                if (g && d != 0.0) {
                    const float s = static_cast<float>(d > 0 ? norm : -norm);
                    g[y * W + x2] += s;
                    g[(y + 1) * W + x2] -= s;
                }
            }
    }
    return total * norm;
}

Tensor batch_of_one(const Tensor& chw) {
    return chw.reshaped({1, chw.dim(0), chw.dim(1), chw.dim(2)});
}

// mean |a - b| with optional gradient w.r.t. a added into grad
double l1_mean(const Tensor& a, const Tensor& b, Tensor* grad) {
    const int64_t n = a.numel();
    const double inv = 1.0 / static_cast<double>(n);
    const float* ap = a.data();
    const float* bp = b.data();
    float* gp = grad ? grad->data() : nullptr;
    double total = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(ap[i]) - bp[i];
        total += std::abs(d);
        if (gp && d != 0.0) gp[i] += static_cast<float>(d > 0 ? inv : -inv);
    }
    return total * inv;
}

}  // namespace

double tv_regularizer(const RgbdSample& s_hat, double weight) {
    return tv_impl(batch_of_one(s_hat.raster), weight, nullptr);
}

double tv_regularizer_grad(const Tensor& s_hat, double weight, Tensor& grad) {
    return tv_impl(s_hat, weight, &grad);
}

ImageLossTerms image_loss_terms(const RgbdSample& s_hat, const RgbdSample& s,
                                features::FeatureExtractor& phi,
                                features::CosineAggregation agg, double tv_weight) {
    if (s_hat.mode != s.mode || !s_hat.raster.same_shape(s.raster))
        throw std::invalid_argument("image_loss: samples disagree in mode or shape");
    ImageLossTerms t;
    t.l1 = l1_mean(s_hat.raster, s.raster, nullptr);
    t.perceptual = features::perceptual_loss(s_hat, s, phi, agg);
    t.tv = tv_regularizer(s_hat, tv_weight);
    return t;
}

double image_loss(const RgbdSample& s_hat, const RgbdSample& s,
                  features::FeatureExtractor& phi) {
    return image_loss_terms(s_hat, s, phi).total();
}

ImageLossTerms image_loss_grad(const Tensor& s_hat, const Tensor& s,
                               features::FeatureExtractor& phi, Tensor& grad,
                               features::CosineAggregation agg, double tv_weight) {
    if (s_hat.ndim() != 4 || !s_hat.same_shape(s))
        throw std::invalid_argument("image_loss_grad: expected matching [N,C,H,W], got " +
                                    s_hat.shape_str() + " and " + s.shape_str());
    ImageLossTerms t;
    t.perceptual = features::perceptual_loss_grad(s_hat, s, phi, grad, agg);
    t.l1 = l1_mean(s_hat, s, &grad);
    Tensor gtv;
    t.tv = tv_impl(s_hat, tv_weight, &gtv);
    kernels::axpy(grad.data(), 1.0f, gtv.data(), grad.numel());
    return t;
}

Encoder::Encoder(features::FeatureExtractor backbone, int voxels,
                 const EncoderConfig& cfg, uint64_t seed)
    : phi_(std::move(backbone)), cfg_(cfg), voxels_(voxels) {
    if (voxels_ < 1) throw std::invalid_argument("Encoder: voxel count must be positive");
    if (cfg_.backbone_blocks < 1 || cfg_.backbone_blocks > phi_.num_blocks())
        throw std::invalid_argument("Encoder: backbone_blocks " +
                                    std::to_string(cfg_.backbone_blocks) +
                                    " outside 1.." + std::to_string(phi_.num_blocks()));
    int spatial = cfg_.input_hw;
    for (int b = 0; b < cfg_.backbone_blocks; ++b) spatial /= 2;
    if (spatial < 1)
        throw std::invalid_argument("Encoder: input " + std::to_string(cfg_.input_hw) +
                                    " too small for " +
                                    std::to_string(cfg_.backbone_blocks) + " blocks");
    pool_hw_ = spatial >= 7 ? 7 : spatial;
    if (spatial % pool_hw_ != 0)
        throw std::invalid_argument("Encoder: backbone output " +
                                    std::to_string(spatial) + " not poolable to " +
                                    std::to_string(pool_hw_));
    const int feat = phi_.widths()[static_cast<size_t>(cfg_.backbone_blocks - 1)] *
                     pool_hw_ * pool_hw_;
    Rng rng(seed, "encoder-head");
    head_.emplace<nn::AvgPool>(pool_hw_, pool_hw_);
    head_.emplace<nn::Flatten>();
    head_.emplace<nn::Linear>(feat, voxels_, rng);
    if (cfg_.freeze_backbone)
        for (int b = 0; b < cfg_.backbone_blocks; ++b) phi_.block(b).set_frozen(true);
}

Tensor Encoder::forward(const Tensor& x, bool train) {
    if (x.ndim() != 4 || x.dim(1) != channel_count(mode()))
        throw std::invalid_argument("Encoder: expected [N," +
                                    std::to_string(channel_count(mode())) + ",H,W], got " +
                                    x.shape_str());
    if (x.dim(2) != cfg_.input_hw || x.dim(3) != cfg_.input_hw)
        throw std::invalid_argument("Encoder: built for " + std::to_string(cfg_.input_hw) +
                                    "x" + std::to_string(cfg_.input_hw) + " inputs, got " +
                                    x.shape_str());
    Tensor cur = x;
    // frozen backbone stages never need their caches outside fine-tuning
    const bool train_backbone = train && !cfg_.freeze_backbone;
    for (int b = 0; b < cfg_.backbone_blocks; ++b)
        cur = phi_.block(b).forward(cur, train_backbone);
    return head_.forward(cur, train);
}

Tensor Encoder::backward(const Tensor& gout) {
    Tensor g = head_.backward(gout);
    if (!cfg_.freeze_backbone)
        for (int b = cfg_.backbone_blocks - 1; b >= 0; --b) g = phi_.block(b).backward(g);
    return g;
}

FmriVector Encoder::encode(const RgbdSample& s) {
    if (s.mode != mode())
        throw std::invalid_argument(std::string("Encoder::encode: sample is ") +
                                    channel_mode_name(s.mode) + ", encoder wants " +
                                    channel_mode_name(mode()));
    const Tensor out = forward(batch_of_one(s.raster), false);
    FmriVector r;
    r.values.assign(out.data(), out.data() + out.numel());
    return r;
}

std::vector<nn::ParamRef> Encoder::trainable_params() {
    std::vector<nn::ParamRef> out;
    if (!cfg_.freeze_backbone)
        for (int b = 0; b < cfg_.backbone_blocks; ++b)
            phi_.block(b).collect_params("backbone" + std::to_string(b) + ".", out);
    head_.collect_params("head.", out);
    return out;
}

std::vector<nn::ParamRef> Encoder::all_params() {
    std::vector<nn::ParamRef> out = phi_.params();
    head_.collect_params("head.", out);
    return out;
}

void Encoder::zero_grad() {
    for (auto& p : all_params()) p.grad->zero();
}

std::string Encoder::arch_hash() const {
    const std::string desc = "enc:v" + std::to_string(voxels_) + ":k" +
                             std::to_string(cfg_.backbone_blocks) + ":p" +
                             std::to_string(pool_hw_) + ":in" +
                             std::to_string(cfg_.input_hw) + ":" + phi_.arch_hash() +
                             ":{" + head_.describe() + "}";
    std::ostringstream os;
    os << std::hex << fnv1a(desc.data(), desc.size());
    return os.str();
}

std::string Encoder::params_checksum() {
    uint64_t h = 1469598103934665603ull;
    for (auto& p : all_params())
        h = fnv1a(p.value->data(), sizeof(float) * static_cast<size_t>(p.value->numel()),
                  h);
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

void Encoder::save(io::Checkpoint& ckpt) {
    phi_.save(ckpt, "phi.");
    ckpt.meta["format"] = "encoder";
    ckpt.meta["voxels"] = std::to_string(voxels_);
    ckpt.meta["backbone_blocks"] = std::to_string(cfg_.backbone_blocks);
    ckpt.meta["freeze_backbone"] = cfg_.freeze_backbone ? "1" : "0";
    ckpt.meta["input_hw"] = std::to_string(cfg_.input_hw);
    ckpt.meta["arch"] = arch_hash();
    head_.save(ckpt, "enc_head.");
}

Encoder Encoder::load(const io::Checkpoint& ckpt) {
    const auto need = [&](const char* key) -> const std::string& {
        const auto it = ckpt.meta.find(key);
        if (it == ckpt.meta.end())
            throw std::runtime_error(std::string("encoder checkpoint lacks meta '") +
                                     key + "'");
        return it->second;
    };
    if (need("format") != "encoder")
        throw std::runtime_error("checkpoint format is '" + need("format") +
                                 "', expected 'encoder'");
    EncoderConfig cfg;
    cfg.backbone_blocks = std::stoi(need("backbone_blocks"));
    cfg.freeze_backbone = need("freeze_backbone") == "1";
    cfg.input_hw = std::stoi(need("input_hw"));
    Encoder enc(features::FeatureExtractor::load(ckpt, "phi."),
                std::stoi(need("voxels")), cfg, 0);
    enc.head_.load(ckpt, "enc_head.");
    if (need("arch") != enc.arch_hash())
        throw std::runtime_error("encoder checkpoint arch hash mismatch");
    return enc;
}

Decoder::Decoder(int voxels, ChannelMode mode, uint64_t seed)
    : voxels_(voxels), mode_(mode) {
    if (voxels_ < 1) throw std::invalid_argument("Decoder: voxel count must be positive");
    Rng rng(seed, "decoder");
    net_.emplace<nn::Linear>(voxels_, 128 * 7 * 7, rng);
    net_.emplace<nn::Reshape>(128, 7, 7);
    const int stage[5] = {128, 64, 32, 16, 8};
    for (int s = 0; s + 1 < 5; ++s) {
        net_.emplace<nn::Upsample2>();
        net_.emplace<nn::Conv2d>(stage[s], stage[s + 1], rng);
        net_.emplace<nn::ReLU>();
    }
    net_.emplace<nn::Conv2d>(stage[4], channel_count(mode_), rng);
    net_.emplace<nn::Sigmoid>();
}

Tensor Decoder::forward(const Tensor& r, bool train) {
    if (r.ndim() != 2 || r.dim(1) != voxels_)
        throw std::invalid_argument("Decoder: expected [N," + std::to_string(voxels_) +
                                    "], got " + r.shape_str());
    return net_.forward(r, train);
}

Tensor Decoder::backward(const Tensor& gout) { return net_.backward(gout); }

RgbdSample Decoder::decode(const FmriVector& r) {
    if (static_cast<int>(r.values.size()) != voxels_)
        throw std::invalid_argument("Decoder::decode: got " +
                                    std::to_string(r.values.size()) + " voxels, expected " +
                                    std::to_string(voxels_));
    Tensor in({1, voxels_});
    std::copy(r.values.begin(), r.values.end(), in.data());
    const Tensor out = forward(in, false);
    RgbdSample s;
    s.mode = mode_;
    s.raster = out.reshaped({out.dim(1), out.dim(2), out.dim(3)});
    return s;
}

std::vector<nn::ParamRef> Decoder::params() { return net_.params(); }

void Decoder::zero_grad() { net_.zero_grad(); }

std::string Decoder::arch_hash() const {
    const std::string desc = "dec:v" + std::to_string(voxels_) + ":" +
                             channel_mode_name(mode_) + ":{" + net_.describe() + "}";
    std::ostringstream os;
    os << std::hex << fnv1a(desc.data(), desc.size());
    return os.str();
}

std::string Decoder::params_checksum() { return net_.params_checksum(); }

void Decoder::save(io::Checkpoint& ckpt) {
    ckpt.meta["format"] = "decoder";
    ckpt.meta["voxels"] = std::to_string(voxels_);
    ckpt.meta["mode"] = channel_mode_name(mode_);
    ckpt.meta["arch"] = arch_hash();
    net_.save(ckpt, "dec.");
}

Decoder Decoder::load(const io::Checkpoint& ckpt) {
    const auto need = [&](const char* key) -> const std::string& {
        const auto it = ckpt.meta.find(key);
        if (it == ckpt.meta.end())
            throw std::runtime_error(std::string("decoder checkpoint lacks meta '") +
                                     key + "'");
        return it->second;
    };
    if (need("format") != "decoder")
        throw std::runtime_error("checkpoint format is '" + need("format") +
                                 "', expected 'decoder'");
    Decoder dec(std::stoi(need("voxels")), channel_mode_from_name(need("mode")), 0);
    dec.net_.load(ckpt, "dec.");
    if (need("arch") != dec.arch_hash())
        throw std::runtime_error("decoder checkpoint arch hash mismatch");
    return dec;
}

}  // namespace depthdecode::encdec

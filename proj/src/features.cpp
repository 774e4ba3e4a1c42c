// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include "depthdecode/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "depthdecode/dataset.hpp"
#include "depthdecode/kernels.hpp"
#include "depthdecode/rng.hpp"
#include "depthdecode/scene.hpp"

namespace depthdecode::features {

namespace {

constexpr double kNormEps = 1e-10;
constexpr double kCosEps = 1e-10;

void expect_rank4(const Tensor& t, const char* who) {
    if (t.ndim() != 4)
        throw std::invalid_argument(std::string(who) + ": expected [N,C,H,W], got " +
                                    t.shape_str());
}

// d loss / d u  ->  d loss / d f  through u = f / (||f|| + eps), applied per
// spatial position over the channel axis.
Tensor normalize_backward(const Tensor& f, const Tensor& gu, double eps) {
    Tensor gf(f.shape());
    const int N = f.dim(0), C = f.dim(1), H = f.dim(2), W = f.dim(3);
    const int64_t plane = static_cast<int64_t>(H) * W;
    const float* fp = f.data();
    const float* gp = gu.data();
    float* op = gf.data();
    for (int n = 0; n < N; ++n)
        for (int64_t yx = 0; yx < plane; ++yx) {
            const int64_t base = static_cast<int64_t>(n) * C * plane + yx;
            double nsq = 0.0, gdotf = 0.0;
            for (int c = 0; c < C; ++c) {
                const double fv = fp[base + c * plane];
                nsq += fv * fv;
                gdotf += gp[base + c * plane] * fv;
            }
            const double norm = std::sqrt(nsq);
            const double inv = 1.0 / (norm + eps);
            // the rank-one term vanishes with f; skipping it at norm == 0 is
            // the 0/0 limit, not a shortcut
            const double coef =
                norm > 0.0 ? gdotf / (norm * (norm + eps) * (norm + eps)) : 0.0;
            for (int c = 0; c < C; ++c) {
                const int64_t i = base + c * plane;
                op[i] = static_cast<float>(gp[i] * inv - fp[i] * coef);
            }
        }
    return gf;
}

// Cosine between the flattened tensors; optionally also d c / d u. Two
// identical all-zero blocks count as perfectly similar: a similarity metric
// must score x against itself as a perfect match even when the features
// collapse, and the epsilon-stabilized quotient would say 0 instead.
double flattened_cosine(const Tensor& u, const Tensor& v, Tensor* gu) {
    const int64_t n = u.numel();
    const float* up = u.data();
    const float* vp = v.data();
    double s = 0.0, nu2 = 0.0, nv2 = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        s += static_cast<double>(up[i]) * vp[i];
        nu2 += static_cast<double>(up[i]) * up[i];
        nv2 += static_cast<double>(vp[i]) * vp[i];
    }
    if (nu2 == 0.0 && nv2 == 0.0) {
        if (gu) *gu = Tensor(u.shape());
        return 1.0;
    }
    const double nu = std::sqrt(nu2), nv = std::sqrt(nv2);
    const double d = nu * nv + kCosEps;
    const double c = s / d;
    if (gu) {
        *gu = Tensor(u.shape());
        const double coef = nu > 0.0 ? s * nv / (d * d * nu) : 0.0;
        float* gp = gu->data();
        for (int64_t i = 0; i < n; ++i)
            gp[i] = static_cast<float>(vp[i] / d - coef * up[i]);
    }
    return c;
}

// Mean of per-position cosines. The inputs are already unit-normalized, so a
// position's cosine is just its channel dot product; positions where both
// vectors collapsed to zero count as matches, mirroring flattened_cosine.
double per_position_cosine(const Tensor& u, const Tensor& v, Tensor* gu) {
    const int N = u.dim(0), C = u.dim(1);
    const int64_t plane = static_cast<int64_t>(u.dim(2)) * u.dim(3);
    const int64_t positions = static_cast<int64_t>(N) * plane;
    const float* up = u.data();
    const float* vp = v.data();
    if (gu) *gu = Tensor(u.shape());
    float* gp = gu ? gu->data() : nullptr;
    const double inv = 1.0 / static_cast<double>(positions);
    double s = 0.0;
    for (int n = 0; n < N; ++n)
        for (int64_t yx = 0; yx < plane; ++yx) {
            const int64_t base = static_cast<int64_t>(n) * C * plane + yx;
            double dot = 0.0, nu2 = 0.0, nv2 = 0.0;
            for (int c = 0; c < C; ++c) {
                const double uv = up[base + c * plane];
                const double vv = vp[base + c * plane];
                dot += uv * vv;
                nu2 += uv * uv;
                nv2 += vv * vv;
            }
            if (nu2 == 0.0 && nv2 == 0.0) {
                s += 1.0;
                continue;
            }
            s += dot;
            if (gp)
                for (int c = 0; c < C; ++c) {
                    const int64_t i = base + c * plane;
                    gp[i] = static_cast<float>(vp[i] * inv);
                }
        }
    const double c = s * inv;
    return c;
}

// Core of the metric. When glevels is set it receives d loss / d hat_b for
// every block, ready for backward_pyramid.
double loss_impl(const FeaturePyramid& hat, const FeaturePyramid& ref,
                 CosineAggregation agg, FeaturePyramid* glevels) {
    if (hat.levels.empty() || hat.levels.size() != ref.levels.size())
        throw std::invalid_argument("perceptual_loss: pyramids have " +
                                    std::to_string(hat.levels.size()) + " and " +
                                    std::to_string(ref.levels.size()) + " levels");
    const int blocks = static_cast<int>(hat.levels.size());
    if (glevels) glevels->levels.assign(static_cast<size_t>(blocks), Tensor());
    double csum = 0.0;
    for (int b = 0; b < blocks; ++b) {
        const Tensor& fh = hat.levels[static_cast<size_t>(b)];
        const Tensor& fr = ref.levels[static_cast<size_t>(b)];
        expect_rank4(fh, "perceptual_loss");
        if (!fh.same_shape(fr))
            throw std::invalid_argument("perceptual_loss: block " + std::to_string(b) +
                                        " shapes differ, " + fh.shape_str() + " vs " +
                                        fr.shape_str());
        const Tensor u = channel_normalize(fh, kNormEps);
        const Tensor v = channel_normalize(fr, kNormEps);
        Tensor gu;
        const double c = agg == CosineAggregation::Flattened
                             ? flattened_cosine(u, v, glevels ? &gu : nullptr)
                             : per_position_cosine(u, v, glevels ? &gu : nullptr);
        csum += c;
        if (glevels) {
            // loss = (1 - mean_b c_b) / 2, so d loss / d c_b = -1 / (2 blocks)
            kernels::scale(gu.data(), static_cast<float>(-0.5 / blocks), gu.numel());
            glevels->levels[static_cast<size_t>(b)] = normalize_backward(fh, gu, kNormEps);
        }
    }
    return (1.0 - csum / blocks) / 2.0;
}

Tensor batch_of_one(const Tensor& chw) {
    return chw.reshaped({1, chw.dim(0), chw.dim(1), chw.dim(2)});
}

}  // namespace

CosineAggregation cosine_aggregation_from_name(const std::string& name) {
    if (name == "flattened") return CosineAggregation::Flattened;
    if (name == "per-position") return CosineAggregation::PerPositionMean;
    throw std::invalid_argument("unknown cosine aggregation '" + name +
                                "' (expected 'flattened' or 'per-position')");
}

std::string cosine_aggregation_name(CosineAggregation agg) {
    return agg == CosineAggregation::Flattened ? "flattened" : "per-position";
}

FeatureExtractor::FeatureExtractor(ChannelMode mode, std::vector<int> widths,
                                   int num_classes, uint64_t seed)
    : mode_(mode), widths_(std::move(widths)), num_classes_(num_classes) {
    if (widths_.empty())
        throw std::invalid_argument("FeatureExtractor: needs at least one block");
    for (int w : widths_)
        if (w < 1) throw std::invalid_argument("FeatureExtractor: non-positive width");
    if (num_classes_ < 2)
        throw std::invalid_argument("FeatureExtractor: head needs at least 2 classes");
    Rng rng(seed, "features");
    int cin = channel_count(mode_);
    for (int w : widths_) {
        nn::Sequential blk;
        blk.emplace<nn::MaxPool2>();
        blk.emplace<nn::Conv2d>(cin, w, rng);
        blk.emplace<nn::ReLU>();
        blocks_.push_back(std::move(blk));
        cin = w;
    }
    head_.emplace<nn::AvgPool>(1, 1);
    head_.emplace<nn::Flatten>();
    head_.emplace<nn::Linear>(widths_.back(), num_classes_, rng);
}

FeatureExtractor FeatureExtractor::make(ChannelMode mode, uint64_t seed,
                                        int num_classes) {
    return FeatureExtractor(mode, default_widths(), num_classes, seed);
}

FeaturePyramid FeatureExtractor::extract(const Tensor& x, bool train) {
    expect_rank4(x, "FeatureExtractor::extract");
    if (x.dim(1) != input_channels())
        throw std::invalid_argument("FeatureExtractor: expected " +
                                    std::to_string(input_channels()) +
                                    " input channels, got " + x.shape_str());
    FeaturePyramid pyr;
    Tensor cur = x;
    for (auto& blk : blocks_) {
        cur = blk.forward(cur, train);
        pyr.levels.push_back(cur);
    }
    return pyr;
}

Tensor FeatureExtractor::backward_pyramid(const FeaturePyramid& grads) {
    if (static_cast<int>(grads.levels.size()) != num_blocks())
        throw std::invalid_argument("backward_pyramid: got " +
                                    std::to_string(grads.levels.size()) +
                                    " levels, extractor has " +
                                    std::to_string(num_blocks()));
    Tensor g;
    for (int b = num_blocks() - 1; b >= 0; --b) {
        const Tensor& gl = grads.levels[static_cast<size_t>(b)];
        if (!gl.empty()) {
            if (g.empty()) {
                g = gl;
            } else {
                if (!g.same_shape(gl))
                    throw std::invalid_argument("backward_pyramid: block " +
                                                std::to_string(b) + " gradient is " +
                                                gl.shape_str() + ", flow expects " +
                                                g.shape_str());
                kernels::axpy(g.data(), 1.0f, gl.data(), g.numel());
            }
        }
        if (!g.empty()) g = blocks_[static_cast<size_t>(b)].backward(g);
    }
    if (g.empty())
        throw std::invalid_argument("backward_pyramid: every level is empty");
    return g;
}

Tensor FeatureExtractor::classify(const Tensor& x, bool train) {
    const FeaturePyramid pyr = extract(x, train);
    return head_.forward(pyr.levels.back(), train);
}

Tensor FeatureExtractor::backward_logits(const Tensor& gout) {
    Tensor g = head_.backward(gout);
    for (int b = num_blocks() - 1; b >= 0; --b)
        g = blocks_[static_cast<size_t>(b)].backward(g);
    return g;
}

std::vector<nn::ParamRef> FeatureExtractor::params() {
    std::vector<nn::ParamRef> out;
    for (size_t b = 0; b < blocks_.size(); ++b)
        blocks_[b].collect_params("block" + std::to_string(b) + ".", out);
    head_.collect_params("head.", out);
    return out;
}

void FeatureExtractor::zero_grad() {
    for (auto& p : params()) p.grad->zero();
}

void FeatureExtractor::set_frozen(bool frozen) {
    for (auto& blk : blocks_) blk.set_frozen(frozen);
    head_.set_frozen(frozen);
}

std::string FeatureExtractor::arch_hash() const {
    std::string desc = channel_mode_name(mode_);
    for (const auto& blk : blocks_) desc += "[" + blk.describe() + "]";
    desc += "{" + head_.describe() + "}";
    std::ostringstream os;
    os << std::hex << fnv1a(desc.data(), desc.size());
    return os.str();
}

std::string FeatureExtractor::params_checksum() {
    uint64_t h = 1469598103934665603ull;
    for (auto& p : params())
        h = fnv1a(p.value->data(), sizeof(float) * static_cast<size_t>(p.value->numel()),
                  h);
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

nn::Sequential& FeatureExtractor::block(int i) {
    if (i < 0 || i >= num_blocks())
        throw std::out_of_range("FeatureExtractor::block: index " + std::to_string(i) +
                                " of " + std::to_string(num_blocks()));
    return blocks_[static_cast<size_t>(i)];
}

FeatureExtractor FeatureExtractor::clone() {
    io::Checkpoint ckpt;
    save(ckpt);
    return load(ckpt);
}

void FeatureExtractor::save(io::Checkpoint& ckpt, const std::string& prefix) {
    ckpt.meta[prefix + "format"] = "feature-extractor";
    ckpt.meta[prefix + "mode"] = channel_mode_name(mode_);
    std::string ws;
    for (size_t i = 0; i < widths_.size(); ++i) {
        if (i) ws += ',';
        ws += std::to_string(widths_[i]);
    }
    ckpt.meta[prefix + "widths"] = ws;
    ckpt.meta[prefix + "num_classes"] = std::to_string(num_classes_);
    ckpt.meta[prefix + "arch"] = arch_hash();
    for (size_t b = 0; b < blocks_.size(); ++b)
        blocks_[b].save(ckpt, prefix + "block" + std::to_string(b) + ".");
    head_.save(ckpt, prefix + "head.");
}

FeatureExtractor FeatureExtractor::load(const io::Checkpoint& ckpt,
                                        const std::string& prefix) {
    const auto need = [&](const char* key) -> const std::string& {
        const auto it = ckpt.meta.find(prefix + key);
        if (it == ckpt.meta.end())
            throw std::runtime_error("feature checkpoint lacks meta '" + prefix + key +
                                     "'");
        return it->second;
    };
    if (need("format") != "feature-extractor")
        throw std::runtime_error("checkpoint format is '" + need("format") +
                                 "', expected 'feature-extractor'");
    std::vector<int> widths;
    std::stringstream ws(need("widths"));
    for (std::string tok; std::getline(ws, tok, ',');) widths.push_back(std::stoi(tok));
    FeatureExtractor phi(channel_mode_from_name(need("mode")), widths,
                         std::stoi(need("num_classes")), 0);
    for (size_t b = 0; b < phi.blocks_.size(); ++b)
        phi.blocks_[b].load(ckpt, prefix + "block" + std::to_string(b) + ".");
    phi.head_.load(ckpt, prefix + "head.");
    if (need("arch") != phi.arch_hash())
        throw std::runtime_error("feature checkpoint arch hash mismatch");
    return phi;
}

FeaturePyramid extract_features(const RgbdSample& x, FeatureExtractor& phi) {
    if (x.mode != phi.mode())
        throw std::invalid_argument(std::string("extract_features: sample is ") +
                                    channel_mode_name(x.mode) + ", extractor wants " +
                                    channel_mode_name(phi.mode()));
    return phi.extract(batch_of_one(x.raster), false);
}

Tensor channel_normalize(const Tensor& f, double eps) {
    expect_rank4(f, "channel_normalize");
    Tensor out(f.shape());
    const int N = f.dim(0), C = f.dim(1), H = f.dim(2), W = f.dim(3);
    const int64_t plane = static_cast<int64_t>(H) * W;
    const float* fp = f.data();
    float* op = out.data();
    for (int n = 0; n < N; ++n)
        for (int64_t yx = 0; yx < plane; ++yx) {
            const int64_t base = static_cast<int64_t>(n) * C * plane + yx;
            double nsq = 0.0;
            for (int c = 0; c < C; ++c) {
                const double v = fp[base + c * plane];
                nsq += v * v;
            }
            const double inv = 1.0 / (std::sqrt(nsq) + eps);
            for (int c = 0; c < C; ++c) {
                const int64_t i = base + c * plane;
                op[i] = static_cast<float>(fp[i] * inv);
            }
        }
    return out;
}

double perceptual_loss_from_pyramids(const FeaturePyramid& a, const FeaturePyramid& b,
                                     CosineAggregation agg) {
    return loss_impl(a, b, agg, nullptr);
}

double perceptual_loss(const RgbdSample& s_hat, const RgbdSample& s,
                       FeatureExtractor& phi, CosineAggregation agg) {
    if (s_hat.mode != phi.mode() || s.mode != phi.mode())
        throw std::invalid_argument("perceptual_loss: channel mode mismatch with extractor");
    if (!s_hat.raster.same_shape(s.raster))
        throw std::invalid_argument("perceptual_loss: rasters are " +
                                    s_hat.raster.shape_str() + " and " +
                                    s.raster.shape_str());
    const FeaturePyramid ph = phi.extract(batch_of_one(s_hat.raster), false);
    const FeaturePyramid pr = phi.extract(batch_of_one(s.raster), false);
    return loss_impl(ph, pr, agg, nullptr);
}

double perceptual_loss_grad(const Tensor& s_hat, const Tensor& s, FeatureExtractor& phi,
                            Tensor& grad, CosineAggregation agg) {
    expect_rank4(s_hat, "perceptual_loss_grad");
    if (!s_hat.same_shape(s))
        throw std::invalid_argument("perceptual_loss_grad: inputs are " +
                                    s_hat.shape_str() + " and " + s.shape_str());
    // reference pass first so its inference forward cannot disturb the
    // caches the backward pass needs
    const FeaturePyramid pr = phi.extract(s, false);
    const FeaturePyramid ph = phi.extract(s_hat, true);
    FeaturePyramid glevels;
    const double loss = loss_impl(ph, pr, agg, &glevels);
    grad = phi.backward_pyramid(glevels);
    return loss;
}

namespace {

// mean cross entropy over rows; fills glogits with (softmax - onehot) / N
double softmax_ce(const Tensor& logits, const std::vector<int>& labels,
                  Tensor& glogits) {
    const int N = logits.dim(0), K = logits.dim(1);
    glogits = Tensor(logits.shape());
    double total = 0.0;
    for (int n = 0; n < N; ++n) {
        const float* z = logits.data() + static_cast<int64_t>(n) * K;
        float* g = glogits.data() + static_cast<int64_t>(n) * K;
        double zmax = z[0];
        for (int k = 1; k < K; ++k) zmax = std::max(zmax, static_cast<double>(z[k]));
        double sum = 0.0;
        for (int k = 0; k < K; ++k) sum += std::exp(z[k] - zmax);
        const int y = labels[static_cast<size_t>(n)];
        total += std::log(sum) - (z[y] - zmax);
        for (int k = 0; k < K; ++k)
            g[k] = static_cast<float>((std::exp(z[k] - zmax) / sum - (k == y ? 1.0 : 0.0)) / N);
    }
    return total / N;
}

Tensor stack_samples(const std::vector<LabeledSample>& data, const std::vector<int>& idx) {
    const Tensor& first = data[static_cast<size_t>(idx[0])].x;
    const int C = first.dim(0), H = first.dim(1), W = first.dim(2);
    Tensor batch({static_cast<int>(idx.size()), C, H, W});
    const int64_t stride = static_cast<int64_t>(C) * H * W;
    for (size_t i = 0; i < idx.size(); ++i) {
        const Tensor& x = data[static_cast<size_t>(idx[i])].x;
        if (x.ndim() != 3 || x.dim(0) != C || x.dim(1) != H || x.dim(2) != W)
            throw std::invalid_argument("pretrain_classifier: sample " +
                                        std::to_string(idx[i]) + " is " + x.shape_str() +
                                        ", expected " + first.shape_str());
        std::copy(x.data(), x.data() + stride, batch.data() + i * stride);
    }
    return batch;
}

}  // namespace

PretrainResult pretrain_classifier(const std::vector<LabeledSample>& data,
                                   ChannelMode mode, const PretrainConfig& cfg) {
    if (data.size() < 4)
        throw std::invalid_argument("pretrain_classifier: needs a few samples, got " +
                                    std::to_string(data.size()));
    std::set<int> seen;
    for (const auto& d : data) {
        if (d.label < 0 || d.label >= cfg.num_classes)
            throw std::invalid_argument("pretrain_classifier: label " +
                                        std::to_string(d.label) + " outside 0.." +
                                        std::to_string(cfg.num_classes - 1));
        seen.insert(d.label);
    }
    if (seen.size() < 2)
        throw std::invalid_argument("pretrain_classifier: dataset has a single class");

    const int n = static_cast<int>(data.size());
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng(cfg.seed, "pretrain-split").shuffle(order);
    int n_val = static_cast<int>(std::lround(cfg.val_fraction * n));
    n_val = std::clamp(n_val, 1, n - 1);
    const std::vector<int> val_idx(order.begin(), order.begin() + n_val);
    const std::vector<int> train_idx(order.begin() + n_val, order.end());

    PretrainResult res{FeatureExtractor(mode, cfg.widths, cfg.num_classes, cfg.seed),
                       0.0, 0.0, static_cast<int>(train_idx.size()), n_val};
    FeatureExtractor& phi = res.extractor;

    nn::Adam opt(phi.params(), {cfg.lr, 0.9, 0.999, 1e-8});
    BatchSampler sampler(static_cast<int>(train_idx.size()), cfg.batch_size,
                         derive_seed(cfg.seed, "pretrain-batch"));
    const int steps_per_epoch =
        std::max<int>(1, static_cast<int>(train_idx.size()) /
                             std::min<int>(cfg.batch_size, static_cast<int>(train_idx.size())));
    const int64_t total_steps = static_cast<int64_t>(cfg.epochs) * steps_per_epoch;

    double epoch_loss = 0.0;
    int epoch_steps = 0;
    for (int64_t step = 0; step < total_steps; ++step) {
        std::vector<int> rel = sampler.next();
        std::vector<int> idx;
        std::vector<int> labels;
        for (int r : rel) {
            idx.push_back(train_idx[static_cast<size_t>(r)]);
            labels.push_back(data[static_cast<size_t>(idx.back())].label);
        }
        const Tensor xb = stack_samples(data, idx);
        const Tensor logits = phi.classify(xb, true);
        Tensor glogits;
        const double loss = softmax_ce(logits, labels, glogits);
        if (!std::isfinite(loss))
            throw std::runtime_error("pretrain_classifier: non-finite loss at step " +
                                     std::to_string(step));
        phi.zero_grad();
        phi.backward_logits(glogits);
        opt.set_lr(nn::cosine_lr(step, total_steps, cfg.lr, cfg.lr_min));
        opt.step();

        epoch_loss += loss;
        ++epoch_steps;
        if ((step + 1) % steps_per_epoch == 0) {
            res.final_train_loss = epoch_loss / epoch_steps;
            if (cfg.log)
                (*cfg.log) << "pretrain epoch " << (step + 1) / steps_per_epoch << "/"
                           << cfg.epochs << " loss " << res.final_train_loss << "\n";
            epoch_loss = 0.0;
            epoch_steps = 0;
        }
    }

    std::vector<LabeledSample> val;
    for (int i : val_idx) val.push_back(data[static_cast<size_t>(i)]);
    res.val_accuracy = classification_accuracy(phi, val);
    if (cfg.log) (*cfg.log) << "pretrain val accuracy " << res.val_accuracy << "\n";
    return res;
}

double classification_accuracy(FeatureExtractor& phi,
                               const std::vector<LabeledSample>& data) {
    if (data.empty())
        throw std::invalid_argument("classification_accuracy: empty dataset");
    const int n = static_cast<int>(data.size());
    const int B = 16;
    int correct = 0;
    for (int start = 0; start < n; start += B) {
        std::vector<int> idx;
        for (int i = start; i < std::min(n, start + B); ++i) idx.push_back(i);
        const Tensor logits = phi.classify(stack_samples(data, idx), false);
        const int K = logits.dim(1);
        for (size_t r = 0; r < idx.size(); ++r) {
            const float* z = logits.data() + static_cast<int64_t>(r) * K;
            int arg = 0;
            for (int k = 1; k < K; ++k)
                if (z[k] > z[arg]) arg = k;
            if (arg == data[static_cast<size_t>(idx[r])].label) ++correct;
        }
    }
    return static_cast<double>(correct) / n;
}

std::vector<LabeledSample> make_shape_class_dataset(int n, ChannelMode mode,
                                                    uint64_t seed, int height,
                                                    int width) {
    if (n < 1) throw std::invalid_argument("make_shape_class_dataset: n must be positive");
    std::vector<LabeledSample> out;
    out.reserve(static_cast<size_t>(n));
    const float mindim = static_cast<float>(std::min(height, width));
    for (int i = 0; i < n; ++i) {
        const int label = i % 4;
        Rng rng(seed, "shape-class", static_cast<uint64_t>(i));
        SceneSpec spec;
        spec.seed = seed;
        spec.height = height;
        spec.width = width;
        for (int c = 0; c < 3; ++c)
            spec.background[c] = static_cast<float>(rng.uniform(0.0, 0.3));
        SceneObject o;
        o.shape = (label & 1) ? ShapeKind::Ellipse : ShapeKind::Rectangle;
        const bool near = (label & 2) != 0;
        o.depth_plane = static_cast<float>(near ? rng.uniform(0.65, 0.9)
                                                : rng.uniform(0.15, 0.4));
        const float base = (0.10f + 0.28f * o.depth_plane) * mindim;
        o.half_w = base * static_cast<float>(rng.uniform(0.75, 1.25));
        o.half_h = base * static_cast<float>(rng.uniform(0.75, 1.25));
        o.cx = static_cast<float>(rng.uniform(0.15, 0.85)) * static_cast<float>(width);
        o.cy = static_cast<float>(std::clamp(0.25 + 0.5 * o.depth_plane +
                                                 rng.uniform(-0.12, 0.12),
                                             0.05, 0.95)) *
               static_cast<float>(height);
        for (int c = 0; c < 3; ++c) o.color[c] = static_cast<float>(rng.uniform(0.25, 1.0));
        spec.objects.push_back(o);

        const RenderedScene scene = render_scene(spec);
        Tensor x;
        switch (mode) {
            case ChannelMode::DepthOnly: x = scene.depth; break;
            case ChannelMode::Rgb: x = scene.rgb; break;
            case ChannelMode::Rgbd: x = scene_rgbd(scene); break;
        }
        out.push_back({std::move(x), label});
    }
    return out;
}

}  // namespace depthdecode::features

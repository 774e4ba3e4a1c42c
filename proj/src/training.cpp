// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include "depthdecode/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "depthdecode/dataset.hpp"
#include "depthdecode/kernels.hpp"
#include "depthdecode/rng.hpp"

namespace depthdecode::train {

namespace {

using json = nlohmann::json;
using clock_type = std::chrono::steady_clock;

void check_config(const TrainConfig& cfg, const std::string& who) {
    if (cfg.epochs < 1) throw std::invalid_argument(who + ": epochs must be >= 1");
    if (cfg.paired_batch < 1 || cfg.unpaired_batch < 1)
        throw std::invalid_argument(who + ": batch sizes must be >= 1");
    if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0)
        throw std::invalid_argument(who + ": val_fraction must be in [0,1)");
    if (cfg.patience < 1) throw std::invalid_argument(who + ": patience must be >= 1");
    if (cfg.encdec_weight < 0.0 || cfg.depth_weight < 0.0)
        throw std::invalid_argument(who + ": loss weights must be nonnegative");
}

void check_paired(const std::vector<PairedExample>& paired, ChannelMode mode,
                  const std::string& who) {
    if (paired.empty()) throw std::invalid_argument(who + ": empty paired collection");
    const int V = paired.front().response.size();
    if (V == 0) throw std::invalid_argument(who + ": empty fMRI vectors");
    const int H = paired.front().stimulus.height();
    const int W = paired.front().stimulus.width();
    for (const auto& p : paired) {
        if (p.stimulus.mode != mode)
            throw std::invalid_argument(who + ": stimulus channel mode mismatch");
        if (p.stimulus.height() != H || p.stimulus.width() != W)
            throw std::invalid_argument(who + ": mixed stimulus raster sizes");
        if (p.response.size() != V)
            throw std::invalid_argument(who + ": mixed fMRI vector lengths");
    }
}

template <class Item>
Tensor stack_stimuli(const std::vector<Item>& pool, const std::vector<int>& idx) {
    const Tensor& first = pool[static_cast<size_t>(idx.front())].stimulus.raster;
    const int C = first.dim(0), H = first.dim(1), W = first.dim(2);
    Tensor x({static_cast<int>(idx.size()), C, H, W});
    const int64_t step = first.numel();
    for (size_t b = 0; b < idx.size(); ++b) {
        const Tensor& r = pool[static_cast<size_t>(idx[b])].stimulus.raster;
        std::copy(r.data(), r.data() + step, x.data() + static_cast<int64_t>(b) * step);
    }
    return x;
}

Tensor stack_responses(const std::vector<PairedExample>& pool,
                       const std::vector<int>& idx) {
    const int V = static_cast<int>(pool[static_cast<size_t>(idx.front())].response.size());
    Tensor r({static_cast<int>(idx.size()), V});
    for (size_t b = 0; b < idx.size(); ++b) {
        const auto& vals = pool[static_cast<size_t>(idx[b])].response.values;
        std::copy(vals.begin(), vals.end(), r.data() + static_cast<int64_t>(b) * V);
    }
    return r;
}

// deterministic shuffle split; a single item trains without a holdout
void split_indices(int n, double val_fraction, uint64_t seed, const char* stream,
                   std::vector<int>& train_idx, std::vector<int>& val_idx) {
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng(seed, stream).shuffle(order);
    const int n_val =
        n >= 2 ? std::clamp(static_cast<int>(std::lround(val_fraction * n)), 1, n - 1)
               : 0;
    val_idx.assign(order.begin(), order.begin() + n_val);
    train_idx.assign(order.begin() + n_val, order.end());
}

std::vector<Tensor> snapshot(const std::vector<nn::ParamRef>& ps) {
    std::vector<Tensor> out;
    out.reserve(ps.size());
    for (const auto& p : ps) out.push_back(*p.value);
    return out;
}

void restore(const std::vector<nn::ParamRef>& ps, const std::vector<Tensor>& snap) {
    for (size_t i = 0; i < ps.size(); ++i) *ps[i].value = snap[i];
}

double cosine(const float* a, const float* b, int64_t n) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb) + 1e-10);
}

void check_term(double v, double hi, const char* name, int64_t step) {
    if (v < -1e-9 || v > hi + 1e-9)
        throw std::logic_error(std::string("loss term ") + name +
                               " out of bounds at step " + std::to_string(step) + ": " +
                               std::to_string(v));
}

void check_terms(const encdec::ImageLossTerms& t, double tv_weight, const char* tag,
                 int64_t step) {
    std::string base(tag);
    check_term(t.l1, 1.0, (base + ".l1").c_str(), step);
    check_term(t.perceptual, 1.0, (base + ".perceptual").c_str(), step);
    check_term(t.tv, std::max(1.0, tv_weight), (base + ".tv").c_str(), step);
}

struct DepthConstraint {
    depthest::DepthEstimator* est = nullptr;
    features::FeatureExtractor* phi_depth = nullptr;
    DepthLossKind kind = DepthLossKind::L1;
};

// Adds weight * d(term)/d(s_hat) into g and returns the term's components.
// The target pass runs first so the backward through s_hat keeps its caches.
encdec::ImageLossTerms apply_depth_constraint(const DepthConstraint& dc,
                                              const Tensor& s_hat, const Tensor& s,
                                              Tensor& g, double weight,
                                              double tv_weight) {
    depthest::DepthEstimator& est = *dc.est;
    const Tensor d = est.forward(s, false);
    const Tensor d_hat = est.forward(s_hat, true);
    encdec::ImageLossTerms terms;
    Tensor gd(d_hat.shape());
    if (dc.kind == DepthLossKind::L1) {
        const int64_t n = d_hat.numel();
        const double inv = 1.0 / static_cast<double>(n);
        double total = 0.0;
        for (int64_t i = 0; i < n; ++i) {
            const double diff = static_cast<double>(d_hat[i]) - d[i];
            total += std::abs(diff);
            if (diff != 0.0) gd[i] = static_cast<float>(diff > 0 ? inv : -inv);
        }
        terms.l1 = total * inv;
    } else {
        terms = encdec::image_loss_grad(d_hat, d, *dc.phi_depth, gd,
                                        features::CosineAggregation::Flattened,
                                        tv_weight);
    }
    const Tensor gs = est.backward(gd);
    kernels::axpy(g.data(), static_cast<float>(weight), gs.data(), g.numel());
    return terms;
}

double val_image_loss(encdec::Decoder& dec, const std::vector<PairedExample>& paired,
                      const std::vector<int>& idx, features::FeatureExtractor& phi,
                      double tv_weight) {
    double sum = 0.0;
    int count = 0;
    for (size_t start = 0; start < idx.size(); start += 8) {
        std::vector<int> chunk(idx.begin() + static_cast<ptrdiff_t>(start),
                               idx.begin() + static_cast<ptrdiff_t>(
                                                 std::min(idx.size(), start + 8)));
        const Tensor s = stack_stimuli(paired, chunk);
        const Tensor r = stack_responses(paired, chunk);
        Tensor s_hat = dec.forward(r, false);
        Tensor scratch;
        const auto terms = encdec::image_loss_grad(
            s_hat, s, phi, scratch, features::CosineAggregation::Flattened, tv_weight);
        sum += terms.total() * static_cast<double>(chunk.size());
        count += static_cast<int>(chunk.size());
    }
    return sum / count;
}

Phase2Result phase2_impl(const std::vector<PairedExample>& paired,
                         const std::vector<UnpairedExample>& unpaired,
                         encdec::Encoder& enc, features::FeatureExtractor& phi,
                         const TrainConfig& cfg, const DepthConstraint* dc,
                         const std::string& who) {
    check_config(cfg, who);
    check_paired(paired, cfg.mode, who);
    if (enc.mode() != cfg.mode)
        throw std::invalid_argument(who + ": encoder channel mode does not match cfg");
    if (phi.mode() != cfg.mode)
        throw std::invalid_argument(who + ": phi channel mode does not match cfg");
    if (paired.front().response.size() != enc.voxels())
        throw std::invalid_argument(who + ": fMRI length does not match encoder voxels");
    const int H = paired.front().stimulus.height();
    const int W = paired.front().stimulus.width();
    if (H != 112 || W != 112)
        throw std::invalid_argument(who + ": decoder reconstructs 112x112 rasters, got " +
                                    std::to_string(H) + "x" + std::to_string(W));
    for (const auto& u : unpaired) {
        if (u.stimulus.mode != cfg.mode)
            throw std::invalid_argument(who + ": unpaired stimulus channel mode mismatch");
        if (u.stimulus.height() != H || u.stimulus.width() != W)
            throw std::invalid_argument(who + ": unpaired stimulus raster size mismatch");
    }
    if (dc) {
        if (cfg.mode != ChannelMode::Rgb)
            throw std::invalid_argument(who + ": depth-constrained decoding is RGB only");
        if (dc->kind == DepthLossKind::Perceptual &&
            (!dc->phi_depth || dc->phi_depth->mode() != ChannelMode::DepthOnly))
            throw std::invalid_argument(
                who + ": perceptual depth constraint needs a depth-mode phi");
    }

    phi.set_frozen(true);
    if (dc) dc->est->set_frozen(true);
    const std::string enc_before = enc.params_checksum();
    const std::string est_before = dc ? dc->est->params_checksum() : std::string();

    std::vector<int> train_idx, val_idx;
    split_indices(static_cast<int>(paired.size()), cfg.val_fraction, cfg.seed,
                  "phase2-split", train_idx, val_idx);
    const auto& eval_idx = val_idx.empty() ? train_idx : val_idx;

    Phase2Result res{encdec::Decoder(enc.voxels(), cfg.mode, cfg.seed),
                     {},
                     {},
                     std::numeric_limits<double>::quiet_NaN(),
                     -1,
                     false,
                     false,
                     -1,
                     std::string()};
    encdec::Decoder& dec = res.decoder;

    nn::Adam opt(dec.params(), {cfg.lr, 0.9, 0.999, 1e-8});
    const int batch = std::min<int>(cfg.paired_batch, static_cast<int>(train_idx.size()));
    BatchSampler paired_sampler(static_cast<int>(train_idx.size()), batch,
                                derive_seed(cfg.seed, "phase2-paired"));
    const int ubatch = unpaired.empty()
                           ? 0
                           : std::min<int>(cfg.unpaired_batch,
                                           static_cast<int>(unpaired.size()));
    BatchSampler unpaired_sampler(std::max(1, static_cast<int>(unpaired.size())),
                                  std::max(1, ubatch),
                                  derive_seed(cfg.seed, "phase2-unpaired"));

    const int steps_per_epoch =
        std::max<int>(1, static_cast<int>(train_idx.size()) / batch);
    const int64_t total_steps = static_cast<int64_t>(cfg.epochs) * steps_per_epoch;

    std::vector<Tensor> last_good = snapshot(dec.params());
    std::vector<Tensor> best = last_good;
    double best_val = std::numeric_limits<double>::infinity();
    int wait = 0;

    double epoch_total = 0.0;
    int epoch_steps = 0;
    for (int64_t step = 0; step < total_steps; ++step) {
        const int epoch = static_cast<int>(step / steps_per_epoch);
        const auto t0 = clock_type::now();
        dec.zero_grad();

        std::vector<int> idx;
        for (int k : paired_sampler.next()) idx.push_back(train_idx[static_cast<size_t>(k)]);
        const Tensor s = stack_stimuli(paired, idx);
        const Tensor r = stack_responses(paired, idx);
        Tensor s_hat = dec.forward(r, true);
        Tensor g;
        const auto dec_terms = encdec::image_loss_grad(
            s_hat, s, phi, g, features::CosineAggregation::Flattened, cfg.tv_weight);
        encdec::ImageLossTerms dep_paired;
        if (dc)
            dep_paired =
                apply_depth_constraint(*dc, s_hat, s, g, cfg.depth_weight, cfg.tv_weight);
        dec.backward(g);

        encdec::ImageLossTerms cyc_terms, dep_unpaired;
        if (!unpaired.empty()) {
            const Tensor su = stack_stimuli(unpaired, unpaired_sampler.next());
            const Tensor r_hat = enc.forward(su, false);
            Tensor su_hat = dec.forward(r_hat, true);
            Tensor gu;
            cyc_terms = encdec::image_loss_grad(
                su_hat, su, phi, gu, features::CosineAggregation::Flattened,
                cfg.tv_weight);
            if (dc)
                dep_unpaired = apply_depth_constraint(*dc, su_hat, su, gu,
                                                      cfg.depth_weight, cfg.tv_weight);
            if (cfg.encdec_weight != 1.0)
                kernels::scale(gu.data(), static_cast<float>(cfg.encdec_weight),
                               gu.numel());
            dec.backward(gu);
        }

        const double total =
            dec_terms.total() + cfg.depth_weight * dep_paired.total() +
            cfg.encdec_weight * (cyc_terms.total() + cfg.depth_weight * dep_unpaired.total());
        if (!std::isfinite(total)) {
            restore(dec.params(), last_good);
            res.diverged = true;
            res.aborted_step = step;
            if (cfg.log)
                (*cfg.log) << who << ": non-finite loss at step " << step
                           << ", restored epoch " << epoch - 1 << " state\n";
            break;
        }
        check_terms(dec_terms, cfg.tv_weight, "dec", step);
        if (!unpaired.empty()) check_terms(cyc_terms, cfg.tv_weight, "encdec", step);
        if (dc) {
            check_terms(dep_paired, cfg.tv_weight, "depth_paired", step);
            if (!unpaired.empty())
                check_terms(dep_unpaired, cfg.tv_weight, "depth_unpaired", step);
        }

        opt.set_lr(nn::cosine_lr(step, total_steps, cfg.lr, cfg.lr_min));
        opt.step();

        if (cfg.step_log) {
            json rec{{"step", step},
                     {"epoch", epoch},
                     {"dec_l1", dec_terms.l1},
                     {"dec_perceptual", dec_terms.perceptual},
                     {"dec_tv", dec_terms.tv},
                     {"total", total},
                     {"wall_ms",
                      std::chrono::duration<double, std::milli>(clock_type::now() - t0)
                          .count()}};
            if (!unpaired.empty()) {
                rec["encdec_l1"] = cyc_terms.l1;
                rec["encdec_perceptual"] = cyc_terms.perceptual;
                rec["encdec_tv"] = cyc_terms.tv;
            }
            if (dc) {
                rec["depth_paired"] = dep_paired.total();
                if (!unpaired.empty()) rec["depth_unpaired"] = dep_unpaired.total();
            }
            (*cfg.step_log) << rec.dump() << "\n";
        }

        epoch_total += total;
        ++epoch_steps;
        if ((step + 1) % steps_per_epoch == 0) {
            res.epoch_train_total.push_back(epoch_total / epoch_steps);
            epoch_total = 0.0;
            epoch_steps = 0;
            last_good = snapshot(dec.params());

            const double v = val_image_loss(dec, paired, eval_idx, phi, cfg.tv_weight);
            res.epoch_val_image_loss.push_back(v);
            if (v < best_val) {
                best_val = v;
                best = last_good;
                res.best_epoch = epoch;
                wait = 0;
            } else {
                ++wait;
            }
            if (cfg.log)
                (*cfg.log) << who << " epoch " << epoch + 1 << "/" << cfg.epochs
                           << " train " << res.epoch_train_total.back() << " val " << v
                           << " best " << best_val << "\n";
            if (wait >= cfg.patience) {
                res.stopped_early = true;
                if (cfg.log)
                    (*cfg.log) << who << ": early stop after epoch " << epoch + 1 << "\n";
                break;
            }
        }
    }

    if (res.best_epoch >= 0) {
        restore(dec.params(), best);
        res.best_val_image_loss = best_val;
    }

    res.encoder_checksum = enc.params_checksum();
    if (res.encoder_checksum != enc_before)
        throw std::logic_error(who + ": encoder parameters changed during phase II");
    if (dc && dc->est->params_checksum() != est_before)
        throw std::logic_error(who + ": depth estimator parameters changed");
    return res;
}

}  // namespace

Phase1Result train_encoder_phase1(const std::vector<PairedExample>& paired,
                                  features::FeatureExtractor phi,
                                  const TrainConfig& cfg) {
    const std::string who = "train_encoder_phase1";
    check_config(cfg, who);
    if (phi.mode() != cfg.mode)
        throw std::invalid_argument(who + ": phi channel mode does not match cfg");
    check_paired(paired, cfg.mode, who);
    const int hw = paired.front().stimulus.height();
    if (paired.front().stimulus.width() != hw)
        throw std::invalid_argument(who + ": stimulus rasters must be square");

    std::vector<int> train_idx, val_idx;
    split_indices(static_cast<int>(paired.size()), cfg.val_fraction, cfg.seed,
                  "phase1-split", train_idx, val_idx);

    encdec::EncoderConfig ec;
    ec.backbone_blocks = cfg.backbone_blocks > 0 ? cfg.backbone_blocks : phi.num_blocks();
    ec.freeze_backbone = cfg.freeze_backbone;
    ec.input_hw = hw;
    const int voxels = static_cast<int>(paired.front().response.size());

    Phase1Result res{encdec::Encoder(std::move(phi), voxels, ec, cfg.seed),
                     {},
                     0.0,
                     0.0,
                     static_cast<int>(train_idx.size()),
                     static_cast<int>(val_idx.size()),
                     false,
                     -1};
    encdec::Encoder& enc = res.encoder;

    nn::Adam opt(enc.trainable_params(), {cfg.lr, 0.9, 0.999, 1e-8});
    const int batch = std::min<int>(cfg.paired_batch, static_cast<int>(train_idx.size()));
    BatchSampler sampler(static_cast<int>(train_idx.size()), batch,
                         derive_seed(cfg.seed, "phase1-batch"));
    const int steps_per_epoch =
        std::max<int>(1, static_cast<int>(train_idx.size()) / batch);
    const int64_t total_steps = static_cast<int64_t>(cfg.epochs) * steps_per_epoch;

    // the loss cannot sit below its cosine floor; treat that as a bug signal
    const double floor = -(1.0 - cfg.alpha) - 1e-9;
    std::vector<Tensor> last_good = snapshot(enc.trainable_params());

    double epoch_loss = 0.0;
    int epoch_steps = 0;
    for (int64_t step = 0; step < total_steps; ++step) {
        const int epoch = static_cast<int>(step / steps_per_epoch);
        const auto t0 = clock_type::now();
        std::vector<int> idx;
        for (int k : sampler.next()) idx.push_back(train_idx[static_cast<size_t>(k)]);
        const Tensor x = stack_stimuli(paired, idx);
        const Tensor r = stack_responses(paired, idx);
        Tensor r_hat = enc.forward(x, true);
        Tensor grad;
        const double loss = encdec::encoder_loss_grad(r_hat, r, {cfg.alpha}, grad);
        if (!std::isfinite(loss)) {
            restore(enc.trainable_params(), last_good);
            res.diverged = true;
            res.aborted_step = step;
            if (cfg.log)
                (*cfg.log) << who << ": non-finite loss at step " << step
                           << ", restored epoch " << epoch - 1 << " state\n";
            break;
        }
        if (loss < floor)
            throw std::logic_error(who + ": loss below its lower bound at step " +
                                   std::to_string(step));
        enc.zero_grad();
        enc.backward(grad);
        opt.set_lr(nn::cosine_lr(step, total_steps, cfg.lr, cfg.lr_min));
        opt.step();

        if (cfg.step_log) {
            json rec{{"step", step},
                     {"epoch", epoch},
                     {"loss", loss},
                     {"wall_ms",
                      std::chrono::duration<double, std::milli>(clock_type::now() - t0)
                          .count()}};
            (*cfg.step_log) << rec.dump() << "\n";
        }

        epoch_loss += loss;
        ++epoch_steps;
        if ((step + 1) % steps_per_epoch == 0) {
            res.epoch_loss.push_back(epoch_loss / epoch_steps);
            if (cfg.log)
                (*cfg.log) << who << " epoch " << epoch + 1 << "/" << cfg.epochs
                           << " loss " << res.epoch_loss.back() << "\n";
            epoch_loss = 0.0;
            epoch_steps = 0;
            last_good = snapshot(enc.trainable_params());
        }
    }

    const auto& eval_idx = val_idx.empty() ? train_idx : val_idx;
    double vloss = 0.0, vcos = 0.0;
    for (size_t start = 0; start < eval_idx.size(); start += 16) {
        std::vector<int> chunk(eval_idx.begin() + static_cast<ptrdiff_t>(start),
                               eval_idx.begin() + static_cast<ptrdiff_t>(std::min(
                                                      eval_idx.size(), start + 16)));
        const Tensor x = stack_stimuli(paired, chunk);
        const Tensor r = stack_responses(paired, chunk);
        Tensor r_hat = enc.forward(x, false);
        Tensor scratch;
        vloss += encdec::encoder_loss_grad(r_hat, r, {cfg.alpha}, scratch) *
                 static_cast<double>(chunk.size());
        const int V = r.dim(1);
        for (size_t b = 0; b < chunk.size(); ++b)
            vcos += cosine(r_hat.data() + static_cast<int64_t>(b) * V,
                           r.data() + static_cast<int64_t>(b) * V, V);
    }
    res.val_loss = vloss / static_cast<double>(eval_idx.size());
    res.val_cosine = vcos / static_cast<double>(eval_idx.size());
    if (cfg.log)
        (*cfg.log) << who << " val loss " << res.val_loss << " val cosine "
                   << res.val_cosine << "\n";
    return res;
}

Phase2Result train_decoder_phase2(const std::vector<PairedExample>& paired,
                                  const std::vector<UnpairedExample>& unpaired,
                                  encdec::Encoder& frozen_enc,
                                  features::FeatureExtractor& phi,
                                  const TrainConfig& cfg) {
    return phase2_impl(paired, unpaired, frozen_enc, phi, cfg, nullptr,
                       "train_decoder_phase2");
}

encdec::ImageLossTerms depth_constraint_terms(depthest::DepthEstimator& est,
                                              const Tensor& s_hat_rgb,
                                              const Tensor& s_rgb, DepthLossKind kind,
                                              features::FeatureExtractor* phi_depth,
                                              double tv_weight) {
    if (!s_hat_rgb.same_shape(s_rgb))
        throw std::invalid_argument("depth_constraint_terms: shape mismatch " +
                                    s_hat_rgb.shape_str() + " vs " + s_rgb.shape_str());
    if (kind == DepthLossKind::Perceptual &&
        (!phi_depth || phi_depth->mode() != ChannelMode::DepthOnly))
        throw std::invalid_argument(
            "depth_constraint_terms: perceptual kind needs a depth-mode phi");
    const Tensor d = est.forward(s_rgb, false);
    const Tensor d_hat = est.forward(s_hat_rgb, false);
    encdec::ImageLossTerms terms;
    if (kind == DepthLossKind::L1) {
        double total = 0.0;
        for (int64_t i = 0; i < d_hat.numel(); ++i)
            total += std::abs(static_cast<double>(d_hat[i]) - d[i]);
        terms.l1 = total / static_cast<double>(d_hat.numel());
    } else {
        Tensor scratch;
        terms = encdec::image_loss_grad(d_hat, d, *phi_depth, scratch,
                                        features::CosineAggregation::Flattened,
                                        tv_weight);
    }
    return terms;
}

Phase2Result train_rgb_only_with_depth_constraint(
    const std::vector<PairedExample>& paired,
    const std::vector<UnpairedExample>& unpaired, encdec::Encoder& frozen_enc,
    features::FeatureExtractor& phi_rgb, features::FeatureExtractor* phi_depth,
    depthest::DepthEstimator& depth_est, const TrainConfig& cfg, DepthLossKind kind) {
    DepthConstraint dc{&depth_est, phi_depth, kind};
    return phase2_impl(paired, unpaired, frozen_enc, phi_rgb, cfg, &dc,
                       "train_rgb_only_with_depth_constraint");
}

encdec::ImageLossTerms cycle_loss_terms(const BatchMap& decode, const BatchMap& encode,
                                        const Tensor& stimuli,
                                        features::FeatureExtractor& phi,
                                        double tv_weight) {
    if (!decode || !encode)
        throw std::invalid_argument("cycle_loss_terms: null callable");
    const Tensor r = encode(stimuli);
    const Tensor s_hat = decode(r);
    if (!s_hat.same_shape(stimuli))
        throw std::invalid_argument("cycle_loss_terms: decode(encode(s)) returned " +
                                    s_hat.shape_str() + " for stimuli " +
                                    stimuli.shape_str());
    Tensor scratch;
    return encdec::image_loss_grad(s_hat, stimuli, phi, scratch,
                                   features::CosineAggregation::Flattened, tv_weight);
}

}  // namespace depthdecode::train

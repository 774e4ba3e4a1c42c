// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include "depthdecode/depth_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "depthdecode/dataset.hpp"
#include "depthdecode/kernels.hpp"
#include "depthdecode/rng.hpp"

namespace depthdecode::depthest {

namespace fs = std::filesystem;

DepthEstimator::DepthEstimator(std::vector<int> widths, uint64_t seed)
    : widths_(std::move(widths)) {
    if (widths_.empty())
        throw std::invalid_argument("DepthEstimator: needs at least one stage");
    for (int w : widths_)
        if (w < 1) throw std::invalid_argument("DepthEstimator: widths must be positive");

    Rng rng(seed, "depth-estimator");
    int cin = 3;
    for (int w : widths_) {
        net_.emplace<nn::Conv2d>(cin, w, rng);
        net_.emplace<nn::ReLU>();
        net_.emplace<nn::MaxPool2>();
        cin = w;
    }
    for (int k = static_cast<int>(widths_.size()) - 1; k >= 0; --k) {
        const int cout = widths_[static_cast<size_t>(std::max(k - 1, 0))];
        net_.emplace<nn::Upsample2>();
        net_.emplace<nn::Conv2d>(cin, cout, rng);
        net_.emplace<nn::ReLU>();
        cin = cout;
    }
    net_.emplace<nn::Conv2d>(cin, 1, rng);
    net_.emplace<nn::Sigmoid>();
}

// The down path stores each pre-pool activation; the up path adds it back
// in after the matching upsample (channel counts mirror exactly), so the
// sharp object boundaries survive the 2^stages bottleneck.
Tensor DepthEstimator::forward(const Tensor& rgb, bool train) {
    if (rgb.ndim() != 4 || rgb.dim(1) != 3)
        throw std::invalid_argument("DepthEstimator: expected [N,3,H,W], got " +
                                    rgb.shape_str());
    const int div = 1 << stages();
    if (rgb.dim(2) % div != 0 || rgb.dim(3) % div != 0 || rgb.dim(2) < div ||
        rgb.dim(3) < div)
        throw std::invalid_argument("DepthEstimator: spatial size " +
                                    std::to_string(rgb.dim(2)) + "x" +
                                    std::to_string(rgb.dim(3)) +
                                    " must be a positive multiple of " +
                                    std::to_string(div));
    const int S = stages();
    skips_.assign(static_cast<size_t>(S), Tensor());
    Tensor h = rgb;
    for (int k = 0; k < S; ++k) {
        h = net_.layer(static_cast<size_t>(3 * k)).forward(h, train);
        h = net_.layer(static_cast<size_t>(3 * k + 1)).forward(h, train);
        skips_[static_cast<size_t>(k)] = h;
        h = net_.layer(static_cast<size_t>(3 * k + 2)).forward(h, train);
    }
    for (int j = 0; j < S; ++j) {
        const size_t base = static_cast<size_t>(3 * S + 3 * j);
        h = net_.layer(base).forward(h, train);
        const Tensor& a = skips_[static_cast<size_t>(S - 1 - j)];
        kernels::axpy(h.data(), 1.0f, a.data(), h.numel());
        h = net_.layer(base + 1).forward(h, train);
        h = net_.layer(base + 2).forward(h, train);
    }
    h = net_.layer(static_cast<size_t>(6 * S)).forward(h, train);
    return net_.layer(static_cast<size_t>(6 * S + 1)).forward(h, train);
}

Tensor DepthEstimator::backward(const Tensor& gout) {
    const int S = stages();
    Tensor h = net_.layer(static_cast<size_t>(6 * S + 1)).backward(gout);
    h = net_.layer(static_cast<size_t>(6 * S)).backward(h);
    std::vector<Tensor> skip_g(static_cast<size_t>(S));
    for (int j = S - 1; j >= 0; --j) {
        const size_t base = static_cast<size_t>(3 * S + 3 * j);
        h = net_.layer(base + 2).backward(h);
        h = net_.layer(base + 1).backward(h);
        // the add node routes this gradient to both branches
        skip_g[static_cast<size_t>(S - 1 - j)] = h;
        h = net_.layer(base).backward(h);
    }
    for (int k = S - 1; k >= 0; --k) {
        h = net_.layer(static_cast<size_t>(3 * k + 2)).backward(h);
        kernels::axpy(h.data(), 1.0f, skip_g[static_cast<size_t>(k)].data(), h.numel());
        h = net_.layer(static_cast<size_t>(3 * k + 1)).backward(h);
        h = net_.layer(static_cast<size_t>(3 * k)).backward(h);
    }
    return h;
}

Tensor DepthEstimator::estimate(const Tensor& rgb) {
    if (rgb.ndim() != 3 || rgb.dim(0) != 3)
        throw std::invalid_argument("DepthEstimator::estimate: expected [3,H,W], got " +
                                    rgb.shape_str());
    const Tensor out =
        forward(rgb.reshaped({1, 3, rgb.dim(1), rgb.dim(2)}), false);
    return out.reshaped({1, out.dim(2), out.dim(3)});
}

std::vector<nn::ParamRef> DepthEstimator::params() { return net_.params(); }

void DepthEstimator::zero_grad() { net_.zero_grad(); }

void DepthEstimator::set_frozen(bool frozen) { net_.set_frozen(frozen); }

std::string DepthEstimator::arch_hash() const {
    std::string desc = "depthest+skip:";
    for (int w : widths_) desc += std::to_string(w) + ",";
    desc += "{" + net_.describe() + "}";
    std::ostringstream os;
    os << std::hex << fnv1a(desc.data(), desc.size());
    return os.str();
}

std::string DepthEstimator::params_checksum() { return net_.params_checksum(); }

void DepthEstimator::save(io::Checkpoint& ckpt) {
    ckpt.meta["format"] = "depth-estimator";
    std::string w;
    for (size_t i = 0; i < widths_.size(); ++i)
        w += (i ? "," : "") + std::to_string(widths_[i]);
    ckpt.meta["widths"] = w;
    ckpt.meta["arch"] = arch_hash();
    net_.save(ckpt, "est.");
}

DepthEstimator DepthEstimator::load(const io::Checkpoint& ckpt) {
    const auto need = [&](const char* key) -> const std::string& {
        const auto it = ckpt.meta.find(key);
        if (it == ckpt.meta.end())
            throw std::runtime_error(
                std::string("depth-estimator checkpoint lacks meta '") + key + "'");
        return it->second;
    };
    if (need("format") != "depth-estimator")
        throw std::runtime_error("checkpoint format is '" + need("format") +
                                 "', expected 'depth-estimator'");
    std::vector<int> widths;
    std::stringstream ss(need("widths"));
    for (std::string tok; std::getline(ss, tok, ',');) widths.push_back(std::stoi(tok));
    DepthEstimator est(widths, 0);
    est.net_.load(ckpt, "est.");
    if (need("arch") != est.arch_hash())
        throw std::runtime_error("depth-estimator checkpoint arch hash mismatch");
    return est;
}

namespace {

void check_rgbd(const std::vector<RgbdSample>& data, const char* who) {
    if (data.empty())
        throw std::invalid_argument(std::string(who) + ": empty collection");
    const int H = data.front().height(), W = data.front().width();
    for (const auto& s : data) {
        if (s.mode != ChannelMode::Rgbd || s.channels() != 4)
            throw std::invalid_argument(std::string(who) +
                                        ": samples must be 4-channel RGBD");
        if (s.height() != H || s.width() != W)
            throw std::invalid_argument(std::string(who) + ": mixed raster sizes");
    }
}

// [B,3,H,W] inputs and [B,1,H,W] targets from RGBD samples
void stack_rgbd(const std::vector<RgbdSample>& data, const std::vector<int>& idx,
                Tensor& x, Tensor& y) {
    const int B = static_cast<int>(idx.size());
    const int H = data.front().height(), W = data.front().width();
    x = Tensor({B, 3, H, W});
    y = Tensor({B, 1, H, W});
    const int64_t plane = static_cast<int64_t>(H) * W;
    for (int b = 0; b < B; ++b) {
        const Tensor& r = data[static_cast<size_t>(idx[static_cast<size_t>(b)])].raster;
        std::copy(r.data(), r.data() + 3 * plane, x.data() + b * 3 * plane);
        std::copy(r.data() + 3 * plane, r.data() + 4 * plane, y.data() + b * plane);
    }
}

double l1_loss_grad(const Tensor& pred, const Tensor& target, Tensor& grad) {
    grad = Tensor(pred.shape());
    const int64_t n = pred.numel();
    const double inv = 1.0 / static_cast<double>(n);
    double total = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pred[i]) - target[i];
        total += std::abs(d);
        if (d != 0.0) grad[i] = static_cast<float>(d > 0 ? inv : -inv);
    }
    return total * inv;
}

}  // namespace

DepthEstResult train_depth_estimator(const std::vector<RgbdSample>& data,
                                     const DepthEstConfig& cfg) {
    check_rgbd(data, "train_depth_estimator");
    if (cfg.epochs < 1 || cfg.batch_size < 1)
        throw std::invalid_argument("train_depth_estimator: epochs and batch size must be >= 1");

    const int n = static_cast<int>(data.size());
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng(cfg.seed, "depth-split").shuffle(order);
    int n_val = n >= 2 ? std::clamp(static_cast<int>(std::lround(cfg.val_fraction * n)),
                                    1, n - 1)
                       : 0;
    const std::vector<int> val_idx(order.begin(), order.begin() + n_val);
    const std::vector<int> train_idx(order.begin() + n_val, order.end());

    DepthEstResult res{DepthEstimator(cfg.widths, cfg.seed), 0.0, 0.0,
                       static_cast<int>(train_idx.size()), n_val};
    DepthEstimator& est = res.estimator;

    nn::Adam opt(est.params(), {cfg.lr, 0.9, 0.999, 1e-8});
    const int batch = std::min<int>(cfg.batch_size, static_cast<int>(train_idx.size()));
    BatchSampler sampler(static_cast<int>(train_idx.size()), batch,
                         derive_seed(cfg.seed, "depth-batch"));
    const int steps_per_epoch =
        std::max<int>(1, static_cast<int>(train_idx.size()) / batch);
    const int64_t total_steps = static_cast<int64_t>(cfg.epochs) * steps_per_epoch;

    double epoch_loss = 0.0;
    int epoch_steps = 0;
    for (int64_t step = 0; step < total_steps; ++step) {
        std::vector<int> idx;
        for (int r : sampler.next()) idx.push_back(train_idx[static_cast<size_t>(r)]);
        Tensor x, y;
        stack_rgbd(data, idx, x, y);

        const Tensor pred = est.forward(x, true);
        Tensor grad;
        const double loss = l1_loss_grad(pred, y, grad);
        if (!std::isfinite(loss))
            throw std::runtime_error("train_depth_estimator: non-finite loss at step " +
                                     std::to_string(step) + " (epoch " +
                                     std::to_string(step / steps_per_epoch) + ")");
        est.zero_grad();
        est.backward(grad);
        opt.set_lr(nn::cosine_lr(step, total_steps, cfg.lr, cfg.lr_min));
        opt.step();

        epoch_loss += loss;
        ++epoch_steps;
        if ((step + 1) % steps_per_epoch == 0) {
            res.final_train_loss = epoch_loss / epoch_steps;
            if (cfg.log)
                (*cfg.log) << "depth-est epoch " << (step + 1) / steps_per_epoch << "/"
                           << cfg.epochs << " l1 " << res.final_train_loss << "\n";
            epoch_loss = 0.0;
            epoch_steps = 0;
        }
    }

    std::vector<RgbdSample> val;
    for (int i : n_val > 0 ? val_idx : train_idx)
        val.push_back(data[static_cast<size_t>(i)]);
    res.val_mae = depth_estimator_mae(est, val);
    if (cfg.log) (*cfg.log) << "depth-est val mae " << res.val_mae << "\n";
    return res;
}

double depth_estimator_mae(DepthEstimator& est, const std::vector<RgbdSample>& data) {
    check_rgbd(data, "depth_estimator_mae");
    double total = 0.0;
    int64_t count = 0;
    const int n = static_cast<int>(data.size());
    for (int start = 0; start < n; start += 8) {
        std::vector<int> idx;
        for (int i = start; i < std::min(n, start + 8); ++i) idx.push_back(i);
        Tensor x, y;
        stack_rgbd(data, idx, x, y);
        const Tensor pred = est.forward(x, false);
        for (int64_t i = 0; i < pred.numel(); ++i)
            total += std::abs(static_cast<double>(pred[i]) - y[i]);
        count += pred.numel();
    }
    return total / static_cast<double>(count);
}

double mean_depth_value(const std::vector<RgbdSample>& fit) {
    check_rgbd(fit, "mean_depth_value");
    double total = 0.0;
    int64_t count = 0;
    for (const auto& s : fit) {
        const int64_t plane = static_cast<int64_t>(s.height()) * s.width();
        const float* d = s.raster.data() + 3 * plane;
        for (int64_t i = 0; i < plane; ++i) total += d[i];
        count += plane;
    }
    return total / static_cast<double>(count);
}

double constant_predictor_mae(double value, const std::vector<RgbdSample>& eval) {
    check_rgbd(eval, "constant_predictor_mae");
    double total = 0.0;
    int64_t count = 0;
    for (const auto& s : eval) {
        const int64_t plane = static_cast<int64_t>(s.height()) * s.width();
        const float* d = s.raster.data() + 3 * plane;
        for (int64_t i = 0; i < plane; ++i) total += std::abs(d[i] - value);
        count += plane;
    }
    return total / static_cast<double>(count);
}

Tensor resize_bilinear(const Tensor& chw, int out_h, int out_w) {
    if (chw.ndim() != 3)
        throw std::invalid_argument("resize_bilinear: expected [C,H,W], got " +
                                    chw.shape_str());
    if (out_h < 1 || out_w < 1)
        throw std::invalid_argument("resize_bilinear: target size must be positive");
    const int C = chw.dim(0), H = chw.dim(1), W = chw.dim(2);
    if (H == out_h && W == out_w) return chw;

    Tensor out({C, out_h, out_w});
    const double sy = static_cast<double>(H) / out_h;
    const double sx = static_cast<double>(W) / out_w;
    for (int c = 0; c < C; ++c)
        for (int oy = 0; oy < out_h; ++oy) {
            // half-pixel centers, clamped at the borders
            const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, H - 1.0);
            const int y0 = static_cast<int>(fy);
            const int y1 = std::min(y0 + 1, H - 1);
            const double wy = fy - y0;
            for (int ox = 0; ox < out_w; ++ox) {
                const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, W - 1.0);
                const int x0 = static_cast<int>(fx);
                const int x1 = std::min(x0 + 1, W - 1);
                const double wx = fx - x0;
                const double top = (1.0 - wx) * chw.at(c, y0, x0) + wx * chw.at(c, y0, x1);
                const double bot = (1.0 - wx) * chw.at(c, y1, x0) + wx * chw.at(c, y1, x1);
                out.at(c, oy, ox) = static_cast<float>((1.0 - wy) * top + wy * bot);
            }
        }
    return out;
}

IngestResult ingest_precomputed_depth(const std::string& image_dir,
                                      const std::string& depth_dir, int target_hw) {
    if (!fs::is_directory(image_dir))
        throw std::runtime_error("ingest_precomputed_depth: no such directory " +
                                 image_dir);
    if (!fs::is_directory(depth_dir))
        throw std::runtime_error("ingest_precomputed_depth: no such directory " +
                                 depth_dir);

    std::set<std::string> stems;
    std::map<std::string, fs::path> image_paths;
    for (const auto& e : fs::directory_iterator(image_dir)) {
        if (!e.is_regular_file()) continue;
        const auto ext = e.path().extension().string();
        if (ext != ".png" && ext != ".ddr") continue;
        const auto stem = e.path().stem().string();
        stems.insert(stem);
        image_paths[stem] = e.path();
    }
    if (stems.empty())
        throw std::runtime_error("ingest_precomputed_depth: no .png or .ddr images in " +
                                 image_dir);

    std::vector<std::string> missing;
    for (const auto& stem : stems)
        if (!io::file_exists((fs::path(depth_dir) / (stem + ".ddr")).string()))
            missing.push_back(stem);
    if (!missing.empty()) {
        std::string msg = "ingest_precomputed_depth: missing depth rasters for:";
        for (const auto& s : missing) msg += " " + s;
        throw std::runtime_error(msg);
    }

    IngestResult res;
    for (const auto& stem : stems) {
        const auto& ipath = image_paths.at(stem);
        Tensor rgb = ipath.extension() == ".png" ? io::read_png_rgb(ipath.string())
                                                 : io::read_ddr(ipath.string());
        if (rgb.ndim() != 3 || rgb.dim(0) != 3)
            throw std::runtime_error("ingest_precomputed_depth: " + ipath.string() +
                                     " is not a 3-channel image");
        Tensor depth = io::read_ddr((fs::path(depth_dir) / (stem + ".ddr")).string());
        if (depth.ndim() != 3 || depth.dim(0) != 1)
            throw std::runtime_error("ingest_precomputed_depth: depth raster for " +
                                     stem + " is not single-channel");

        rgb = resize_bilinear(rgb, target_hw, target_hw);
        depth = resize_bilinear(depth, target_hw, target_hw);

        float lo = depth[0], hi = depth[0];
        for (int64_t i = 1; i < depth.numel(); ++i) {
            lo = std::min(lo, depth[i]);
            hi = std::max(hi, depth[i]);
        }
        if (hi - lo < 1e-12f) {
            depth.zero();
            res.warnings.push_back(stem + ": constant depth raster normalized to zeros");
        } else {
            const float inv = 1.0f / (hi - lo);
            for (int64_t i = 0; i < depth.numel(); ++i)
                depth[i] = (depth[i] - lo) * inv;
        }

        RgbdSample s;
        s.mode = ChannelMode::Rgbd;
        s.raster = Tensor({4, target_hw, target_hw});
        const int64_t plane = static_cast<int64_t>(target_hw) * target_hw;
        std::copy(rgb.data(), rgb.data() + 3 * plane, s.raster.data());
        std::copy(depth.data(), depth.data() + plane, s.raster.data() + 3 * plane);
        res.stems.push_back(stem);
        res.samples.push_back(std::move(s));
    }
    return res;
}

}  // namespace depthdecode::depthest

// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "depthdecode/io.hpp"
#include "depthdecode/nn.hpp"
#include "depthdecode/tensor.hpp"
#include "depthdecode/types.hpp"

// Depth-based recognition networks and the perceptual similarity built on
// their feature hierarchy. The extractors are trained once on a toy
// classification task; afterwards their feature pyramids serve as a fixed
// perceptual metric for decoder training and evaluation.

namespace depthdecode::features {

// Per-block feature maps, ordered from the earliest (highest-resolution)
// block to the deepest.
struct FeaturePyramid {
    std::vector<Tensor> levels;  // each [N, C_b, h_b, w_b]
};

// How the perceptual loss turns channel-normalized feature maps into one
// cosine per block. Flattened computes a single cosine over the whole block;
// PerPositionMean averages per-position cosines. Flattened is the default,
// the alternative stays available behind a config switch.
enum class CosineAggregation { Flattened, PerPositionMean };

CosineAggregation cosine_aggregation_from_name(const std::string& name);
std::string cosine_aggregation_name(CosineAggregation agg);

// VGG-style stack of [maxpool2 -> conv3x3 -> relu] stages plus a small
// classification head used only during pretraining. Feature taps sit after
// each stage's nonlinearity, so a 112x112 input yields maps of spatial size
// 56, 28, 14, 7 and 3. Between pretraining runs the extractor is immutable
// and can be shared across threads in inference mode.
class FeatureExtractor {
public:
    static std::vector<int> default_widths() { return {16, 32, 64, 128, 128}; }

    FeatureExtractor(ChannelMode mode, std::vector<int> widths, int num_classes,
                     uint64_t seed);
    // the stock five-block extractor
    static FeatureExtractor make(ChannelMode mode, uint64_t seed, int num_classes = 4);

    ChannelMode mode() const { return mode_; }
    int input_channels() const { return channel_count(mode_); }
    int num_blocks() const { return static_cast<int>(widths_.size()); }
    const std::vector<int>& widths() const { return widths_; }
    int num_classes() const { return num_classes_; }

    // Runs all blocks on x [N,C,H,W]. A training-mode pass keeps per-layer
    // caches so one backward pass can follow.
    FeaturePyramid extract(const Tensor& x, bool train);

    // Pushes per-level gradients back to the input of the last training-mode
    // extract(). Levels may be left empty when a term contributes nothing.
    Tensor backward_pyramid(const FeaturePyramid& grads);

    // Head logits for pretraining; runs extract() internally.
    Tensor classify(const Tensor& x, bool train);
    Tensor backward_logits(const Tensor& gout);

    // Direct access to one stage, for consumers that reuse a prefix of the
    // backbone (the encoder keeps the first few blocks).
    nn::Sequential& block(int i);

    // Deep copy through an in-memory checkpoint round trip.
    FeatureExtractor clone();

    std::vector<nn::ParamRef> params();
    void zero_grad();
    // Frozen extractors keep serving forwards and input gradients but skip
    // all parameter-gradient work.
    void set_frozen(bool frozen);

    std::string arch_hash() const;
    std::string params_checksum();

    // prefix namespaces both tensors and meta keys, so an extractor can be
    // embedded inside another model's checkpoint
    void save(io::Checkpoint& ckpt, const std::string& prefix = "");
    static FeatureExtractor load(const io::Checkpoint& ckpt,
                                 const std::string& prefix = "");

private:
    ChannelMode mode_;
    std::vector<int> widths_;
    int num_classes_;
    std::vector<nn::Sequential> blocks_;
    nn::Sequential head_;
};

// Feature pyramid of a single sample, inference mode. Errors when the sample
// channel mode does not match the extractor.
FeaturePyramid extract_features(const RgbdSample& x, FeatureExtractor& phi);

// Scales every spatial position's channel vector to unit norm, stabilized by
// eps so zero vectors pass through as (near) zero instead of dividing by 0.
Tensor channel_normalize(const Tensor& f, double eps = 1e-10);

// The similarity score: channel-normalize both pyramids, one cosine c_b per
// block, then (1 - mean_b c_b) / 2. Identical inputs score 0, orthogonal
// features 0.5, negated features 1.
double perceptual_loss_from_pyramids(
    const FeaturePyramid& a, const FeaturePyramid& b,
    CosineAggregation agg = CosineAggregation::Flattened);

double perceptual_loss(const RgbdSample& s_hat, const RgbdSample& s,
                       FeatureExtractor& phi,
                       CosineAggregation agg = CosineAggregation::Flattened);

// Batched loss with gradient: fills grad (shape of s_hat) with d loss /
// d s_hat and returns the loss. Freeze phi when its parameter gradients are
// not wanted; the input gradient is unaffected either way.
double perceptual_loss_grad(const Tensor& s_hat, const Tensor& s,
                            FeatureExtractor& phi, Tensor& grad,
                            CosineAggregation agg = CosineAggregation::Flattened);

// -- classification pretraining ----------------------------------------------

struct LabeledSample {
    Tensor x;  // [C,H,W]
    int label = 0;
};

struct PretrainConfig {
    std::vector<int> widths = FeatureExtractor::default_widths();
    int num_classes = 4;
    int epochs = 6;
    int batch_size = 16;
    double lr = 1e-3;
    double lr_min = 1e-5;
    double val_fraction = 0.2;
    uint64_t seed = 1;
    std::ostream* log = nullptr;  // per-epoch progress lines when set
};

struct PretrainResult {
    FeatureExtractor extractor;
    double val_accuracy = 0.0;
    double final_train_loss = 0.0;
    int num_train = 0;
    int num_val = 0;
};

// Trains a fresh extractor end to end on labeled rasters. Requires at least
// two distinct labels; aborts on a non-finite loss.
PretrainResult pretrain_classifier(const std::vector<LabeledSample>& data,
                                   ChannelMode mode, const PretrainConfig& cfg);

// Fraction of samples whose argmax logit matches the label, inference mode.
double classification_accuracy(FeatureExtractor& phi,
                               const std::vector<LabeledSample>& data);

// Single-object scenes labeled by shape x depth band: rectangles and
// ellipses on a far or a near plane, drawn with the same monocular size and
// position cues as sample_scene so the bands stay separable from color
// alone. Labels cycle 0..3 so every prefix is near balanced.
std::vector<LabeledSample> make_shape_class_dataset(int n, ChannelMode mode,
                                                    uint64_t seed, int height = 112,
                                                    int width = 112);

}  // namespace depthdecode::features

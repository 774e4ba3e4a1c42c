// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "depthdecode/features.hpp"
#include "depthdecode/io.hpp"
#include "depthdecode/nn.hpp"
#include "depthdecode/tensor.hpp"
#include "depthdecode/types.hpp"

// Encoder (stimulus -> fMRI) and Decoder (fMRI -> stimulus) networks plus
// the losses they train under: the fMRI loss (MSE/cosine blend), the image
// loss (l1 + perceptual + total variation), and the TV regularizer itself.

namespace depthdecode::encdec {

struct EncoderLossConfig {
    double alpha = 0.9;  // MSE weight; 1 - alpha goes to cosine proximity
};

// alpha * MSE(r_hat, r) - (1 - alpha) * cos(r_hat, r), epsilon-stabilized.
// Identical nonzero vectors score -(1 - alpha).
double encoder_loss(const FmriVector& r_hat, const FmriVector& r,
                    const EncoderLossConfig& cfg = {});

// Batched [N,V] mean with gradient w.r.t. r_hat.
double encoder_loss_grad(const Tensor& r_hat, const Tensor& r,
                         const EncoderLossConfig& cfg, Tensor& grad);

// Anisotropic total variation: mean |difference| over channels and valid
// horizontal plus vertical neighbor pairs, scaled by weight.
double tv_regularizer(const RgbdSample& s_hat, double weight = 0.1);

// Batched [N,C,H,W] value; fills grad with the gradient w.r.t. s_hat.
double tv_regularizer_grad(const Tensor& s_hat, double weight, Tensor& grad);

struct ImageLossTerms {
    double l1 = 0.0;
    double perceptual = 0.0;
    double tv = 0.0;
    double total() const { return l1 + perceptual + tv; }
};

// mean-l1 + perceptual + TV, each term in [0,1] for rasters in [0,1].
ImageLossTerms image_loss_terms(
    const RgbdSample& s_hat, const RgbdSample& s, features::FeatureExtractor& phi,
    features::CosineAggregation agg = features::CosineAggregation::Flattened,
    double tv_weight = 0.1);

double image_loss(const RgbdSample& s_hat, const RgbdSample& s,
                  features::FeatureExtractor& phi);

// Batched loss with gradient w.r.t. s_hat. phi serves as a fixed metric;
// freeze it to skip its parameter-gradient work.
ImageLossTerms image_loss_grad(
    const Tensor& s_hat, const Tensor& s, features::FeatureExtractor& phi,
    Tensor& grad,
    features::CosineAggregation agg = features::CosineAggregation::Flattened,
    double tv_weight = 0.1);

struct EncoderConfig {
    int backbone_blocks = 3;
    bool freeze_backbone = true;
    int input_hw = 112;  // expected stimulus height and width
};

// Stimulus -> fMRI vector. The first backbone_blocks stages of a pretrained
// recognition network feed a trainable head: average-pool to a small grid,
// flatten, linear map to V voxels. The full extractor travels with the
// encoder so checkpoints are self-contained.
class Encoder {
public:
    Encoder(features::FeatureExtractor backbone, int voxels, const EncoderConfig& cfg,
            uint64_t seed);

    ChannelMode mode() const { return phi_.mode(); }
    int voxels() const { return voxels_; }
    int backbone_blocks() const { return cfg_.backbone_blocks; }
    bool backbone_frozen() const { return cfg_.freeze_backbone; }

    Tensor forward(const Tensor& x, bool train);  // [N,C,H,W] -> [N,V]
    // Accumulates parameter gradients. Returns the gradient w.r.t. the input
    // when the backbone is trainable; with a frozen backbone the walk stops
    // at the head and the returned tensor is the head-input gradient.
    Tensor backward(const Tensor& gout);

    FmriVector encode(const RgbdSample& s);

    // parameters the optimizer may update (head only while frozen)
    std::vector<nn::ParamRef> trainable_params();
    // every parameter, including the frozen backbone; these define the
    // checksum that Phase II uses to prove the encoder never moved
    std::vector<nn::ParamRef> all_params();
    void zero_grad();

    std::string arch_hash() const;
    std::string params_checksum();

    void save(io::Checkpoint& ckpt);
    static Encoder load(const io::Checkpoint& ckpt);

private:
    features::FeatureExtractor phi_;
    EncoderConfig cfg_;
    int voxels_;
    int pool_hw_;
    nn::Sequential head_;
};

// fMRI vector -> stimulus raster in [0,1]: linear lift to a 7x7 grid of 128
// channels, then four nearest-neighbor upsample + conv stages down to the
// output channels, bounded by a sigmoid. Output is always C x 112 x 112.
class Decoder {
public:
    Decoder(int voxels, ChannelMode mode, uint64_t seed);

    int voxels() const { return voxels_; }
    ChannelMode mode() const { return mode_; }

    Tensor forward(const Tensor& r, bool train);  // [N,V] -> [N,C,112,112]
    Tensor backward(const Tensor& gout);

    RgbdSample decode(const FmriVector& r);

    std::vector<nn::ParamRef> params();
    void zero_grad();
    std::string arch_hash() const;
    std::string params_checksum();

    void save(io::Checkpoint& ckpt);
    static Decoder load(const io::Checkpoint& ckpt);

private:
    int voxels_;
    ChannelMode mode_;
    nn::Sequential net_;
};

}  // namespace depthdecode::encdec

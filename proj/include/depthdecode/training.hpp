// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "depthdecode/depth_estimator.hpp"
#include "depthdecode/encdec.hpp"
#include "depthdecode/features.hpp"
#include "depthdecode/types.hpp"

// The two-phase procedure. Phase I fits the encoder on paired data under the
// MSE-plus-cosine loss. Phase II holds that encoder fixed and fits the
// decoder, drawing one paired batch (decoder loss against the true stimulus)
// and one unpaired batch (cycle loss through the frozen encoder) per step.

namespace depthdecode::train {

struct TrainConfig {
    ChannelMode mode = ChannelMode::Rgbd;
    uint64_t seed = 1;
    int epochs = 30;          // per phase
    int paired_batch = 8;
    int unpaired_batch = 8;
    double lr = 1e-3;         // cosine-decayed to lr_min
    double lr_min = 1e-5;
    double alpha = 0.9;       // encoder loss: MSE weight vs cosine
    double tv_weight = 0.1;
    double encdec_weight = 1.0;     // cycle loss weight relative to decoder loss
    double depth_weight = 1.0;      // depth-constraint weight (RGB-only variant)
    double val_fraction = 0.1;      // held out from the paired pool
    int patience = 10;              // Phase II early stopping, in epochs
    int backbone_blocks = 0;        // encoder backbone depth; 0 means every block
    bool freeze_backbone = true;
    std::ostream* log = nullptr;       // per-epoch progress lines
    std::ostream* step_log = nullptr;  // one JSON record per step
};

struct Phase1Result {
    encdec::Encoder encoder;
    std::vector<double> epoch_loss;  // mean training loss per epoch
    double val_loss = 0.0;
    double val_cosine = 0.0;  // mean cosine(r_hat, r) on the held-out split
    int num_train = 0;
    int num_val = 0;
    // Non-finite loss aborts the run; the encoder is restored to the last
    // epoch-end state and these record where training stopped.
    bool diverged = false;
    int64_t aborted_step = -1;
};

// Supervised encoder fit. phi moves into the encoder; it is treated as a
// pretrained backbone and frozen inside unless cfg says otherwise.
Phase1Result train_encoder_phase1(const std::vector<PairedExample>& paired,
                                  features::FeatureExtractor phi,
                                  const TrainConfig& cfg);

struct Phase2Result {
    encdec::Decoder decoder;  // restored to the best-validation epoch
    std::vector<double> epoch_train_total;
    std::vector<double> epoch_val_image_loss;
    double best_val_image_loss = 0.0;
    int best_epoch = -1;
    bool stopped_early = false;
    bool diverged = false;
    int64_t aborted_step = -1;
    std::string encoder_checksum;  // proven identical before and after
};

// Decoder fit with the encoder held fixed. An empty unpaired collection
// reduces the objective to the supervised decoder loss. phi serves as the
// fixed perceptual metric and is frozen in place. Throws if the encoder's
// parameter checksum changes during the run.
Phase2Result train_decoder_phase2(const std::vector<PairedExample>& paired,
                                  const std::vector<UnpairedExample>& unpaired,
                                  encdec::Encoder& frozen_enc,
                                  features::FeatureExtractor& phi,
                                  const TrainConfig& cfg);

enum class DepthLossKind { Perceptual, L1 };

// The depth term added per comparison in the RGB-constrained variant:
// the frozen estimator maps both rasters to depth, and the term is either
// the full image loss under phi_depth or a bare mean absolute difference
// (reported in .l1, with the other fields zero).
encdec::ImageLossTerms depth_constraint_terms(depthest::DepthEstimator& est,
                                              const Tensor& s_hat_rgb,
                                              const Tensor& s_rgb,
                                              DepthLossKind kind,
                                              features::FeatureExtractor* phi_depth,
                                              double tv_weight = 0.1);

// Phase II for a 3-channel decoder with an extra depth-consistency term
// computed through the frozen differentiable depth estimator. phi_depth is
// required for the Perceptual kind and ignored for L1.
Phase2Result train_rgb_only_with_depth_constraint(
    const std::vector<PairedExample>& paired,
    const std::vector<UnpairedExample>& unpaired, encdec::Encoder& frozen_enc,
    features::FeatureExtractor& phi_rgb, features::FeatureExtractor* phi_depth,
    depthest::DepthEstimator& depth_est, const TrainConfig& cfg, DepthLossKind kind);

using BatchMap = std::function<Tensor(const Tensor&)>;

// Cycle loss terms for one stimulus batch through arbitrary encode/decode
// maps. This is the L^EncDec definition the trainer applies to unpaired
// batches, exposed over callables so closed-form encoder/decoder pairs can
// probe it directly.
encdec::ImageLossTerms cycle_loss_terms(const BatchMap& decode, const BatchMap& encode,
                                        const Tensor& stimuli,
                                        features::FeatureExtractor& phi,
                                        double tv_weight = 0.1);

}  // namespace depthdecode::train

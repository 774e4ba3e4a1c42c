// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "depthdecode/io.hpp"
#include "depthdecode/nn.hpp"
#include "depthdecode/tensor.hpp"
#include "depthdecode/types.hpp"

// The trainable RGB -> depth estimator and the precomputed-depth adapter.
// The estimator is a small hourglass (four downsampling stages, four
// upsampling stages, sigmoid output) with additive skip connections from
// each pre-pool activation to the matching up-path stage. It stands in for
// an external monocular depth network; unlike that network it is
// differentiable end to end, which the loss-through-estimator training
// variant needs.

namespace depthdecode::depthest {

class DepthEstimator {
public:
    // widths are the down-path channel counts; the up path mirrors them.
    // Inputs must be [N,3,H,W] with H and W divisible by 2^stages.
    DepthEstimator(std::vector<int> widths, uint64_t seed);

    static std::vector<int> default_widths() { return {16, 32, 64, 128}; }
    static DepthEstimator make(uint64_t seed) {
        return DepthEstimator(default_widths(), seed);
    }

    int stages() const { return static_cast<int>(widths_.size()); }
    const std::vector<int>& widths() const { return widths_; }

    Tensor forward(const Tensor& rgb, bool train);  // [N,3,H,W] -> [N,1,H,W]
    Tensor backward(const Tensor& gout);

    // single-raster inference: [3,H,W] -> [1,H,W] in [0,1]
    Tensor estimate(const Tensor& rgb);

    std::vector<nn::ParamRef> params();
    void zero_grad();
    void set_frozen(bool frozen);
    std::string arch_hash() const;
    std::string params_checksum();

    void save(io::Checkpoint& ckpt);
    static DepthEstimator load(const io::Checkpoint& ckpt);

private:
    std::vector<int> widths_;
    nn::Sequential net_;              // layer storage and persistence
    std::vector<Tensor> skips_;       // pre-pool activations of the last forward
};

struct DepthEstConfig {
    std::vector<int> widths = DepthEstimator::default_widths();
    int epochs = 6;
    int batch_size = 8;
    double lr = 2e-3;
    double lr_min = 1e-5;
    double val_fraction = 0.1;
    uint64_t seed = 1;
    std::ostream* log = nullptr;
};

struct DepthEstResult {
    DepthEstimator estimator;
    double val_mae = 0.0;  // mean absolute depth error on the held-out split
    double final_train_loss = 0.0;
    int num_train = 0;
    int num_val = 0;
};

// Trains on 4-channel RGBD samples: channels 0-2 are the input, channel 3
// the target. A single-item collection trains without a split and reports
// its error on that item.
DepthEstResult train_depth_estimator(const std::vector<RgbdSample>& data,
                                     const DepthEstConfig& cfg);

// Mean absolute error of the estimator over a collection.
double depth_estimator_mae(DepthEstimator& est, const std::vector<RgbdSample>& data);

// The trivial baseline: the scalar mean depth of `fit` and its MAE on `eval`.
double mean_depth_value(const std::vector<RgbdSample>& fit);
double constant_predictor_mae(double value, const std::vector<RgbdSample>& eval);

// Bilinear resample of a [C,H,W] raster to the target size.
Tensor resize_bilinear(const Tensor& chw, int out_h, int out_w);

struct IngestResult {
    std::vector<std::string> stems;  // sorted; index-aligned with samples
    std::vector<RgbdSample> samples;
    std::vector<std::string> warnings;  // one per degenerate depth raster
};

// Pairs every RGB image in image_dir (.png or 3-channel .ddr) with the
// same-stem .ddr depth raster in depth_dir, resizes both to target_hw, and
// min-max normalizes depth per image. Missing depth rasters are an error
// listing every offending stem; a constant depth raster normalizes to zeros
// with a warning.
IngestResult ingest_precomputed_depth(const std::string& image_dir,
                                      const std::string& depth_dir,
                                      int target_hw = 112);

}  // namespace depthdecode::depthest

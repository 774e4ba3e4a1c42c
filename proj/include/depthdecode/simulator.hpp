// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "depthdecode/io.hpp"
#include "depthdecode/tensor.hpp"
#include "depthdecode/types.hpp"

// The ground-truth world: a linear fMRI simulator paired with the scene
// renderer. Responses are a fixed seeded random linear map of the
// downsampled RGBD stimulus plus Gaussian noise, so encoder learnability,
// noise ceilings and voxel tuning all have exact oracles.

namespace depthdecode::sim {

struct BrainConfig {
    int voxels = 512;
    int grid = 14;       // stimuli are average-pooled to grid x grid
    int input_hw = 112;  // expected stimulus side; must be divisible by grid
    double sigma = 0.1;  // Gaussian noise std, shared by every voxel
    int depth_only_voxels = 32;  // planted: projection reads the depth channel only
    int color_only_voxels = 32;  // planted: projection reads the RGB channels only
    double lvc_fraction = 0.5;   // share of voxels with localized receptive fields
    uint64_t seed = 1;
};

// Fixed linear projection from downsampled RGBD features to V voxels.
//
// Voxel structure, all deterministic in the seed:
//   - regions cycle through V1/V2/V3 (localized 3x3 receptive fields, the
//     LVC share) and LOC/FFA/PPA (full-field pooled weights, the HVC share);
//   - planted depth-only and color-only voxels are spread evenly across the
//     index range, every other voxel mixes all four channels;
//   - weights are gaussian, scaled by the active feature count so response
//     magnitudes are comparable across voxel kinds.
// There is no bias term: a zero stimulus maps to a zero clean response.
class SimulatedBrain {
public:
    explicit SimulatedBrain(const BrainConfig& cfg);

    int voxels() const { return cfg_.voxels; }
    int feature_dim() const { return 4 * cfg_.grid * cfg_.grid; }
    const BrainConfig& config() const { return cfg_; }

    const std::vector<int>& depth_only() const { return depth_only_; }
    const std::vector<int>& color_only() const { return color_only_; }
    const std::vector<float>& sigma() const { return sigma_; }
    std::vector<io::VoxelInfo> voxel_table() const;

    // [4,grid,grid] block average of a 4-channel stimulus
    Tensor downsample(const RgbdSample& s) const;

    FmriVector clean_response(const RgbdSample& s) const;
    // clean response plus per-voxel Gaussian noise drawn from noise_seed
    FmriVector simulate_response(const RgbdSample& s, uint64_t noise_seed) const;

    const Tensor& projection() const { return w_; }  // [V, feature_dim]
    std::string projection_checksum() const;

private:
    BrainConfig cfg_;
    Tensor w_;
    std::vector<int> depth_only_, color_only_;
    std::vector<std::string> regions_;
    std::vector<float> sigma_;
};

FmriVector simulate_response(const SimulatedBrain& brain, const RgbdSample& s,
                             uint64_t seed);

struct BenchmarkConfig {
    int paired_train = 200;
    int paired_test = 50;
    int unpaired = 5000;
    int height = 112;
    int width = 112;
    BrainConfig brain;   // brain.seed is ignored; it derives from seed below
    uint64_t seed = 7;   // master seed; every stream derives from it by name
    bool force = false;  // overwrite an existing non-empty output directory
    std::ostream* log = nullptr;
};

struct BenchmarkSummary {
    int paired_train = 0;
    int paired_test = 0;
    int unpaired = 0;
    std::string projection_checksum;
    double mean_noise_ceiling = 0.0;  // per-voxel variance ratio, averaged
    double cosine_ceiling = 0.0;      // E[cos(clean, noisy)] over the test split
    std::string manifest_path;
};

// Writes a complete dataset tree (paired train/test, unpaired pool, fMRI
// vectors, voxel table) plus manifest.json recording seeds, the planted
// voxel groups, the projection checksum and per-voxel noise ceilings.
// Refuses to write into an existing non-empty directory unless cfg.force.
BenchmarkSummary build_benchmark(const BenchmarkConfig& cfg, const std::string& out_dir);

}  // namespace depthdecode::sim

// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "depthdecode/types.hpp"

// Dataset loading and preprocessing. The on-disk layout is
//
//   root/paired_train/<item_id>.{png|ddr}
//   root/paired_test/<item_id>.{png|ddr}
//   root/unpaired/<item_id>.{png|ddr}
//   root/fmri/<item_id>.ddf          (paired items only)
//   root/fmri/voxels.csv             (one row per voxel: id, region)
//
// Loading adapts rasters to the requested channel mode: a 4-channel RGBD
// raster yields its last channel in depth-only mode and its first three in
// RGB mode. Modes that need channels the file does not carry are errors.

namespace depthdecode {

struct Dataset {
    ChannelMode mode = ChannelMode::DepthOnly;
    int height = 0;
    int width = 0;
    std::vector<PairedExample> paired_train;
    std::vector<PairedExample> paired_test;
    std::vector<UnpairedExample> unpaired;
    VoxelTable voxels;

    int voxel_count() const { return voxels.size(); }
};

Dataset load_dataset(const std::string& root, ChannelMode mode);

// Per-voxel z-scoring statistics, estimated on the paired train split only.
struct FmriStats {
    std::vector<float> mean;
    std::vector<float> stdev;  // population std; zero-variance voxels replaced by 1
    std::vector<std::string> zero_variance_ids;
};

// Z-scores every response in the dataset in place using train statistics.
FmriStats normalize_fmri(Dataset& ds);

// Applies precomputed statistics to one vector (for encoding new responses).
void apply_fmri_stats(const FmriStats& stats, FmriVector& v);

// Shuffled epoch sampler. Every epoch is a fresh seeded permutation emitted
// in chunks of batch_size; a trailing partial chunk is dropped when the pool
// is larger than one batch.
class BatchSampler {
public:
    BatchSampler(int pool_size, int batch_size, uint64_t seed);

    std::vector<int> next();
    int epoch() const { return epoch_; }

private:
    void reshuffle();

    int pool_size_;
    int batch_size_;
    uint64_t seed_;
    int epoch_ = -1;
    size_t cursor_ = 0;
    std::vector<int> order_;
};

}  // namespace depthdecode

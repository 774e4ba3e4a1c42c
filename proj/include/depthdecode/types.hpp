// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "depthdecode/tensor.hpp"

namespace depthdecode {

// Channel layout of a stimulus raster. Depth-only and RGBD are the two
// first-class framework modes; RGB exists for the constrained color-decoding
// comparisons and carries no depth channel.
enum class ChannelMode { DepthOnly = 1, Rgb = 3, Rgbd = 4 };

inline int channel_count(ChannelMode m) { return static_cast<int>(m); }

const char* channel_mode_name(ChannelMode m);
ChannelMode channel_mode_from_name(const std::string& name);

// A stimulus raster in [0,1]: depth alone, color alone, or color plus depth.
// In RGBD layout the depth channel is always the last one.
struct RgbdSample {
    ChannelMode mode = ChannelMode::DepthOnly;
    Tensor raster;  // [C,H,W]

    int channels() const { return raster.ndim() == 3 ? raster.dim(0) : 0; }
    int height() const { return raster.ndim() == 3 ? raster.dim(1) : 0; }
    int width() const { return raster.ndim() == 3 ? raster.dim(2) : 0; }
};

// One fMRI activation vector. Voxel ids and region labels are shared across
// a dataset and live in the VoxelTable, index-aligned with values.
struct FmriVector {
    std::vector<float> values;

    int size() const { return static_cast<int>(values.size()); }
};

struct PairedExample {
    std::string item_id;
    RgbdSample stimulus;
    FmriVector response;
};

struct UnpairedExample {
    std::string item_id;
    RgbdSample stimulus;
};

// Region labels per voxel, index-aligned with FmriVector values. The two
// composite masks follow the usual atlas grouping: lower visual cortex is
// V1-V3, higher visual cortex is LOC, FFA and PPA.
struct VoxelTable {
    std::vector<std::string> ids;
    std::vector<std::string> regions;

    int size() const { return static_cast<int>(ids.size()); }

    std::vector<int> indices_in(const std::vector<std::string>& wanted) const;
    std::vector<int> lvc_indices() const { return indices_in({"V1", "V2", "V3"}); }
    std::vector<int> hvc_indices() const { return indices_in({"LOC", "FFA", "PPA"}); }
};

}  // namespace depthdecode

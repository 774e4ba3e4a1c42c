// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "depthdecode/tensor.hpp"

// Serialization for the on-disk formats:
//
//   .ddr  raster:  "DDR1" + u32 C,H,W (little-endian) + C*H*W float32 row-major
//   .ddf  fMRI:    "DDF1" + u32 V + V float32
//   .png  8-bit RGB via libpng, mapped to [0,1] floats
//   .ckpt weights: "DDW1" + named float32 tensors; a text key=value manifest
//         lives next to it at <path>.manifest
//
// All readers throw std::runtime_error naming the offending path.

namespace depthdecode::io {

void write_ddr(const std::string& path, const Tensor& chw);
Tensor read_ddr(const std::string& path);

void write_ddf(const std::string& path, const std::vector<float>& v);
std::vector<float> read_ddf(const std::string& path);

struct VoxelInfo {
    std::string voxel_id;
    std::string region;
};

void write_voxel_table(const std::string& path, const std::vector<VoxelInfo>& rows);
std::vector<VoxelInfo> read_voxel_table(const std::string& path);

// rgb is [3,H,W] with values clamped to [0,1] on write.
void write_png_rgb(const std::string& path, const Tensor& rgb);
Tensor read_png_rgb(const std::string& path);

struct Checkpoint {
    std::map<std::string, Tensor> tensors;
    std::map<std::string, std::string> meta;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

bool file_exists(const std::string& path);

// FNV-1a over a file's bytes, hex-encoded. Used for run-manifest checksums.
std::string file_checksum(const std::string& path);

}  // namespace depthdecode::io

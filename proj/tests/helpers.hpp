// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "depthdecode/io.hpp"
#include "depthdecode/rng.hpp"
#include "depthdecode/tensor.hpp"

namespace testutil {

// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("depthdecode_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }
    std::string file(const std::string& rel) const { return (path_ / rel).string(); }

private:
    std::filesystem::path path_;
};

inline depthdecode::Tensor uniform_raster(int C, int H, int W, uint64_t seed) {
    depthdecode::Tensor t({C, H, W});
    depthdecode::Rng r(seed);
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(r.uniform());
    return t;
}

struct DatasetSpec {
    int n_train = 8;
    int n_test = 2;
    int n_unpaired = 20;
    int voxels = 16;
    int height = 16;
    int width = 16;
    uint64_t seed = 1;
};

// Writes a minimal but fully valid dataset tree of 4-channel rasters with
// random voxel responses. Returns the ordered train item ids.
inline std::vector<std::string> write_dataset_tree(const std::filesystem::path& root,
                                                   const DatasetSpec& spec = {}) {
    namespace fs = std::filesystem;
    namespace io = depthdecode::io;
    fs::create_directories(root / "paired_train");
    fs::create_directories(root / "paired_test");
    fs::create_directories(root / "unpaired");
    fs::create_directories(root / "fmri");

    std::vector<io::VoxelInfo> voxels;
    const char* regions[] = {"V1", "V2", "V3", "LOC", "FFA", "PPA", "other"};
    for (int v = 0; v < spec.voxels; ++v)
        voxels.push_back({"v" + std::to_string(v), regions[v % 7]});
    io::write_voxel_table((root / "fmri" / "voxels.csv").string(), voxels);

    depthdecode::Rng rng(spec.seed);
    auto write_paired = [&](const std::string& split, const std::string& id) {
        io::write_ddr((root / split / (id + ".ddr")).string(),
                      uniform_raster(4, spec.height, spec.width, rng.next_u64()));
        std::vector<float> resp(static_cast<size_t>(spec.voxels));
        for (auto& x : resp) x = static_cast<float>(rng.normal());
        io::write_ddf((root / "fmri" / (id + ".ddf")).string(), resp);
    };

    std::vector<std::string> train_ids;
    for (int i = 0; i < spec.n_train; ++i) {
        const auto id = "train_" + std::to_string(i);
        write_paired("paired_train", id);
        train_ids.push_back(id);
    }
    for (int i = 0; i < spec.n_test; ++i) write_paired("paired_test", "test_" + std::to_string(i));
    for (int i = 0; i < spec.n_unpaired; ++i)
        io::write_ddr((root / "unpaired" / ("un_" + std::to_string(i) + ".ddr")).string(),
                      uniform_raster(4, spec.height, spec.width, rng.next_u64()));
    return train_ids;
}

}  // namespace testutil

// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include "depthdecode/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

#include "depthdecode/rng.hpp"
#include "depthdecode/scene.hpp"

namespace depthdecode::sim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// evenly spread k planted indices over [0, V), offset keeping groups disjoint
std::vector<int> spread_indices(int k, int V, int offset) {
    std::vector<int> out;
    out.reserve(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i)
        out.push_back((static_cast<int>(static_cast<int64_t>(i) * V / k) + offset) % V);
    return out;
}

}  // namespace

SimulatedBrain::SimulatedBrain(const BrainConfig& cfg) : cfg_(cfg) {
    if (cfg_.voxels < 1) throw std::invalid_argument("SimulatedBrain: voxels must be positive");
    if (cfg_.grid < 1 || cfg_.input_hw % cfg_.grid != 0)
        throw std::invalid_argument("SimulatedBrain: input " + std::to_string(cfg_.input_hw) +
                                    " not divisible by grid " + std::to_string(cfg_.grid));
    if (cfg_.sigma < 0.0) throw std::invalid_argument("SimulatedBrain: sigma must be >= 0");
    if (cfg_.depth_only_voxels < 0 || cfg_.color_only_voxels < 0 ||
        cfg_.depth_only_voxels + cfg_.color_only_voxels > cfg_.voxels)
        throw std::invalid_argument("SimulatedBrain: planted voxel counts exceed V");
    if (cfg_.lvc_fraction < 0.0 || cfg_.lvc_fraction > 1.0)
        throw std::invalid_argument("SimulatedBrain: lvc_fraction outside [0,1]");

    const int V = cfg_.voxels;
    const int g = cfg_.grid;

    std::vector<int> kind(static_cast<size_t>(V), 0);  // 0 mixed, 1 depth, 2 color
    if (cfg_.depth_only_voxels > 0) {
        depth_only_ = spread_indices(cfg_.depth_only_voxels, V, 0);
        for (int v : depth_only_) kind[static_cast<size_t>(v)] = 1;
    }
    if (cfg_.color_only_voxels > 0) {
        // probe forward past slots the depth group already took
        for (int v : spread_indices(cfg_.color_only_voxels, V, 1)) {
            while (kind[static_cast<size_t>(v)] != 0) v = (v + 1) % V;
            kind[static_cast<size_t>(v)] = 2;
            color_only_.push_back(v);
        }
    }

    // regions cycle with period 6; the first lvc_share slots are localized
    const int lvc_share =
        static_cast<int>(std::lround(6.0 * cfg_.lvc_fraction));
    static const char* kLvc[3] = {"V1", "V2", "V3"};
    static const char* kHvc[3] = {"LOC", "FFA", "PPA"};
    regions_.reserve(static_cast<size_t>(V));

    w_ = Tensor({V, feature_dim()});
    sigma_.assign(static_cast<size_t>(V), static_cast<float>(cfg_.sigma));

    for (int v = 0; v < V; ++v) {
        const int slot = v % 6;
        const bool localized = slot < lvc_share;
        regions_.push_back(localized ? kLvc[slot % 3] : kHvc[slot % 3]);

        int c0 = 0, c1 = 4;  // active channel range
        if (kind[static_cast<size_t>(v)] == 1) c0 = 3;
        if (kind[static_cast<size_t>(v)] == 2) c1 = 3;

        Rng rng(cfg_.seed, "brain-voxel", static_cast<uint64_t>(v));
        int y0 = 0, y1 = g, x0 = 0, x1 = g;
        if (localized && g >= 3) {
            const int cy = rng.uniform_int(1, g - 2);
            const int cx = rng.uniform_int(1, g - 2);
            y0 = cy - 1, y1 = cy + 2, x0 = cx - 1, x1 = cx + 2;
        }
        const double n_active = static_cast<double>(c1 - c0) * (y1 - y0) * (x1 - x0);
        const double scale = 1.0 / std::sqrt(n_active);
        float* row = w_.data() + static_cast<int64_t>(v) * feature_dim();
        for (int c = c0; c < c1; ++c)
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x)
                    row[(c * g + y) * g + x] = static_cast<float>(rng.normal() * scale);
    }
}

std::vector<io::VoxelInfo> SimulatedBrain::voxel_table() const {
    std::vector<io::VoxelInfo> rows;
    rows.reserve(regions_.size());
    char buf[16];
    for (int v = 0; v < cfg_.voxels; ++v) {
        std::snprintf(buf, sizeof buf, "v%04d", v);
        rows.push_back({buf, regions_[static_cast<size_t>(v)]});
    }
    return rows;
}

Tensor SimulatedBrain::downsample(const RgbdSample& s) const {
    if (s.mode != ChannelMode::Rgbd || s.channels() != 4)
        throw std::invalid_argument("SimulatedBrain: stimulus must be 4-channel RGBD");
    if (s.height() != cfg_.input_hw || s.width() != cfg_.input_hw)
        throw std::invalid_argument("SimulatedBrain: stimulus is " +
                                    std::to_string(s.height()) + "x" +
                                    std::to_string(s.width()) + ", expected " +
                                    std::to_string(cfg_.input_hw) + " square");
    const int g = cfg_.grid;
    const int block = cfg_.input_hw / g;
    Tensor out({4, g, g});
    for (int c = 0; c < 4; ++c)
        for (int oy = 0; oy < g; ++oy)
            for (int ox = 0; ox < g; ++ox) {
                double acc = 0.0;
                for (int y = oy * block; y < (oy + 1) * block; ++y)
                    for (int x = ox * block; x < (ox + 1) * block; ++x)
                        acc += s.raster.at(c, y, x);
                out.at(c, oy, ox) = static_cast<float>(acc / (block * block));
            }
    return out;
}

FmriVector SimulatedBrain::clean_response(const RgbdSample& s) const {
    const Tensor x = downsample(s);
    const int F = feature_dim();
    FmriVector r;
    r.values.resize(static_cast<size_t>(cfg_.voxels));
    for (int v = 0; v < cfg_.voxels; ++v) {
        const float* row = w_.data() + static_cast<int64_t>(v) * F;
        double acc = 0.0;
        for (int f = 0; f < F; ++f) acc += static_cast<double>(row[f]) * x[f];
        r.values[static_cast<size_t>(v)] = static_cast<float>(acc);
    }
    return r;
}

FmriVector SimulatedBrain::simulate_response(const RgbdSample& s,
                                             uint64_t noise_seed) const {
    FmriVector r = clean_response(s);
    Rng rng(noise_seed, "sim-noise");
    for (int v = 0; v < cfg_.voxels; ++v)
        r.values[static_cast<size_t>(v)] +=
            static_cast<float>(rng.normal() * sigma_[static_cast<size_t>(v)]);
    return r;
}

std::string SimulatedBrain::projection_checksum() const {
    std::ostringstream os;
    os << std::hex
       << fnv1a(w_.data(), sizeof(float) * static_cast<size_t>(w_.numel()));
    return os.str();
}

FmriVector simulate_response(const SimulatedBrain& brain, const RgbdSample& s,
                             uint64_t seed) {
    return brain.simulate_response(s, seed);
}

namespace {

RgbdSample render_item(uint64_t scene_seed, int height, int width) {
    const auto rendered = render_scene(sample_scene(scene_seed, height, width));
    RgbdSample s;
    s.mode = ChannelMode::Rgbd;
    s.raster = scene_rgbd(rendered);
    return s;
}

std::string item_name(const char* stem, int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%04d", stem, index);
    return buf;
}

}  // namespace

BenchmarkSummary build_benchmark(const BenchmarkConfig& cfg, const std::string& out_dir) {
    if (cfg.paired_train < 1 || cfg.paired_test < 0 || cfg.unpaired < 0)
        throw std::invalid_argument("build_benchmark: need at least one paired train item");
    if (cfg.height != cfg.width)
        throw std::invalid_argument("build_benchmark: only square rasters are supported");

    const fs::path root(out_dir);
    if (fs::exists(root) && !fs::is_empty(root)) {
        if (!cfg.force)
            throw std::runtime_error("build_benchmark: output directory " + out_dir +
                                     " is not empty (use force to overwrite)");
        fs::remove_all(root);
    }
    fs::create_directories(root / "paired_train");
    fs::create_directories(root / "paired_test");
    fs::create_directories(root / "unpaired");
    fs::create_directories(root / "fmri");

    BrainConfig bc = cfg.brain;
    bc.input_hw = cfg.height;
    bc.seed = derive_seed(cfg.seed, "brain");
    const SimulatedBrain brain(bc);
    io::write_voxel_table((root / "fmri" / "voxels.csv").string(), brain.voxel_table());

    // per-voxel running clean-signal moments from the train split
    std::vector<double> sum(static_cast<size_t>(bc.voxels), 0.0);
    std::vector<double> sum2(static_cast<size_t>(bc.voxels), 0.0);

    const auto write_paired = [&](const char* stem, const char* dir, int i,
                                  bool track_signal) {
        const auto id = item_name(stem, i);
        const RgbdSample s =
            render_item(derive_seed(cfg.seed, std::string("scene-") + stem,
                                    static_cast<uint64_t>(i)),
                        cfg.height, cfg.width);
        io::write_ddr((root / dir / (id + ".ddr")).string(), s.raster);

        const FmriVector clean = brain.clean_response(s);
        FmriVector noisy = clean;
        Rng rng(derive_seed(cfg.seed, std::string("noise-") + stem,
                            static_cast<uint64_t>(i)),
                "sim-noise");
        for (int v = 0; v < bc.voxels; ++v)
            noisy.values[static_cast<size_t>(v)] +=
                static_cast<float>(rng.normal() * brain.sigma()[static_cast<size_t>(v)]);
        io::write_ddf((root / "fmri" / (id + ".ddf")).string(), noisy.values);

        if (track_signal)
            for (int v = 0; v < bc.voxels; ++v) {
                sum[static_cast<size_t>(v)] += clean.values[static_cast<size_t>(v)];
                sum2[static_cast<size_t>(v)] +=
                    static_cast<double>(clean.values[static_cast<size_t>(v)]) *
                    clean.values[static_cast<size_t>(v)];
            }
        return clean;
    };

    for (int i = 0; i < cfg.paired_train; ++i) {
        write_paired("train", "paired_train", i, true);
        if (cfg.log && (i + 1) % 100 == 0)
            *cfg.log << "benchmark: " << (i + 1) << "/" << cfg.paired_train
                     << " train items\n";
    }

    // cosine ceiling: E[cos(clean, clean + noise)] ~ |r| / sqrt(|r|^2 + V sigma^2)
    double cos_ceiling = 0.0;
    for (int i = 0; i < cfg.paired_test; ++i) {
        const FmriVector clean = write_paired("test", "paired_test", i, false);
        double s2 = 0.0, n2 = 0.0;
        for (int v = 0; v < bc.voxels; ++v) {
            s2 += static_cast<double>(clean.values[static_cast<size_t>(v)]) *
                  clean.values[static_cast<size_t>(v)];
            n2 += static_cast<double>(brain.sigma()[static_cast<size_t>(v)]) *
                  brain.sigma()[static_cast<size_t>(v)];
        }
        cos_ceiling += s2 > 0.0 ? std::sqrt(s2 / (s2 + n2)) : 0.0;
    }
    if (cfg.paired_test > 0) cos_ceiling /= cfg.paired_test;

    for (int i = 0; i < cfg.unpaired; ++i) {
        const auto id = item_name("un", i);
        const RgbdSample s = render_item(
            derive_seed(cfg.seed, "scene-un", static_cast<uint64_t>(i)), cfg.height,
            cfg.width);
        io::write_ddr((root / "unpaired" / (id + ".ddr")).string(), s.raster);
        if (cfg.log && (i + 1) % 500 == 0)
            *cfg.log << "benchmark: " << (i + 1) << "/" << cfg.unpaired
                     << " unpaired items\n";
    }

    // noise ceiling per voxel: signal variance / (signal variance + sigma^2)
    std::vector<double> ceiling(static_cast<size_t>(bc.voxels), 0.0);
    double mean_ceiling = 0.0;
    for (int v = 0; v < bc.voxels; ++v) {
        const double m = sum[static_cast<size_t>(v)] / cfg.paired_train;
        const double var =
            sum2[static_cast<size_t>(v)] / cfg.paired_train - m * m;
        const double s2 = brain.sigma()[static_cast<size_t>(v)] *
                          static_cast<double>(brain.sigma()[static_cast<size_t>(v)]);
        ceiling[static_cast<size_t>(v)] =
            var + s2 > 0.0 ? var / (var + s2) : 1.0;
        mean_ceiling += ceiling[static_cast<size_t>(v)];
    }
    mean_ceiling /= bc.voxels;

    json manifest;
    manifest["format"] = "depthdecode-benchmark";
    manifest["version"] = 1;
    manifest["seed"] = cfg.seed;
    manifest["seeds"] = {{"brain", bc.seed},
                         {"scene_train", derive_seed(cfg.seed, "scene-train")},
                         {"scene_test", derive_seed(cfg.seed, "scene-test")},
                         {"scene_unpaired", derive_seed(cfg.seed, "scene-un")},
                         {"noise_train", derive_seed(cfg.seed, "noise-train")},
                         {"noise_test", derive_seed(cfg.seed, "noise-test")}};
    manifest["counts"] = {{"paired_train", cfg.paired_train},
                          {"paired_test", cfg.paired_test},
                          {"unpaired", cfg.unpaired}};
    manifest["raster"] = {{"height", cfg.height}, {"width", cfg.width}, {"channels", 4}};
    manifest["brain"] = {{"voxels", bc.voxels},
                         {"grid", bc.grid},
                         {"sigma", bc.sigma},
                         {"lvc_fraction", bc.lvc_fraction},
                         {"projection_checksum", brain.projection_checksum()}};
    manifest["planted"] = {{"depth_only", brain.depth_only()},
                           {"color_only", brain.color_only()}};
    manifest["noise_ceiling"] = {{"per_voxel", ceiling},
                                 {"mean", mean_ceiling},
                                 {"cosine_test", cos_ceiling}};

    const auto manifest_path = (root / "manifest.json").string();
    std::ofstream out(manifest_path);
    out << manifest.dump(2) << "\n";
    if (!out) throw std::runtime_error("build_benchmark: cannot write " + manifest_path);
    out.close();

    BenchmarkSummary summary;
    summary.paired_train = cfg.paired_train;
    summary.paired_test = cfg.paired_test;
    summary.unpaired = cfg.unpaired;
    summary.projection_checksum = brain.projection_checksum();
    summary.mean_noise_ceiling = mean_ceiling;
    summary.cosine_ceiling = cos_ceiling;
    summary.manifest_path = manifest_path;
    return summary;
}

}  // namespace depthdecode::sim

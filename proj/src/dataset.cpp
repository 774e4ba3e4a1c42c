// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include "depthdecode/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include "depthdecode/io.hpp"
#include "depthdecode/rng.hpp"

namespace fs = std::filesystem;

namespace depthdecode {

const char* channel_mode_name(ChannelMode m) {
    switch (m) {
        case ChannelMode::DepthOnly: return "d";
        case ChannelMode::Rgb: return "rgb";
        case ChannelMode::Rgbd: return "rgbd";
    }
    return "?";
}

ChannelMode channel_mode_from_name(const std::string& name) {
    if (name == "d" || name == "depth") return ChannelMode::DepthOnly;
    if (name == "rgb") return ChannelMode::Rgb;
    if (name == "rgbd") return ChannelMode::Rgbd;
    throw std::invalid_argument("unknown channel mode '" + name + "' (use d, rgb or rgbd)");
}

std::vector<int> VoxelTable::indices_in(const std::vector<std::string>& wanted) const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
        if (std::find(wanted.begin(), wanted.end(), regions[static_cast<size_t>(i)]) !=
            wanted.end())
            out.push_back(i);
    return out;
}

namespace {

// Extracts the channels the requested mode needs from a raster as stored on
// disk. The depth channel of an RGBD stack is the last one.
Tensor adapt_raster(Tensor chw, ChannelMode mode, const std::string& path) {
    const int C = chw.dim(0);
    const int want = channel_count(mode);
    if (C == want) return chw;
    if (C == 4) {
        const int H = chw.dim(1), W = chw.dim(2);
        const int64_t plane = static_cast<int64_t>(H) * W;
        if (mode == ChannelMode::DepthOnly) {
            Tensor d({1, H, W});
            std::copy(chw.data() + 3 * plane, chw.data() + 4 * plane, d.data());
            return d;
        }
        if (mode == ChannelMode::Rgb) {
            Tensor rgb({3, H, W});
            std::copy(chw.data(), chw.data() + 3 * plane, rgb.data());
            return rgb;
        }
    }
    throw std::runtime_error(path + ": cannot adapt a " + std::to_string(C) +
                             "-channel raster to mode '" + channel_mode_name(mode) + "'");
}

void check_raster(const Tensor& t, const std::string& path) {
    for (int64_t i = 0; i < t.numel(); ++i) {
        const float v = t[i];
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
            throw std::runtime_error(path + ": raster value " + std::to_string(v) +
                                     " outside [0,1]");
    }
}

struct Item {
    std::string id;
    std::string raster_path;
};

std::vector<Item> scan_split(const fs::path& dir, const std::string& split) {
    if (!fs::exists(dir))
        throw std::runtime_error(dir.string() + ": missing dataset split directory");
    std::vector<Item> items;
    std::set<std::string> seen;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext != ".png" && ext != ".ddr") continue;
        const auto stem = entry.path().stem().string();
        if (!seen.insert(stem).second)
            throw std::runtime_error(split + "/" + stem +
                                     ": item has both .png and .ddr rasters");
        items.push_back({stem, entry.path().string()});
    }
    std::sort(items.begin(), items.end(),
              [](const Item& a, const Item& b) { return a.id < b.id; });
    return items;
}

RgbdSample load_stimulus(const std::string& path, ChannelMode mode) {
    Tensor raw = path.size() >= 4 && path.substr(path.size() - 4) == ".png"
                     ? io::read_png_rgb(path)
                     : io::read_ddr(path);
    Tensor adapted = adapt_raster(std::move(raw), mode, path);
    check_raster(adapted, path);
    return RgbdSample{mode, std::move(adapted)};
}

}  // namespace

Dataset load_dataset(const std::string& root, ChannelMode mode) {
    Dataset ds;
    ds.mode = mode;

    const fs::path rootp(root);
    const auto train_items = scan_split(rootp / "paired_train", "paired_train");
    const auto test_items = scan_split(rootp / "paired_test", "paired_test");
    const auto unpaired_items = scan_split(rootp / "unpaired", "unpaired");

    // item ids must be unique across all three splits
    std::set<std::string> ids;
    auto claim = [&ids](const std::vector<Item>& items, const char* split) {
        for (const auto& it : items)
            if (!ids.insert(it.id).second)
                throw std::runtime_error("item id '" + it.id + "' in " + split +
                                         " duplicates another split");
    };
    claim(train_items, "paired_train");
    claim(test_items, "paired_test");
    claim(unpaired_items, "unpaired");

    const auto voxel_csv = (rootp / "fmri" / "voxels.csv").string();
    for (const auto& row : io::read_voxel_table(voxel_csv)) {
        ds.voxels.ids.push_back(row.voxel_id);
        ds.voxels.regions.push_back(row.region);
    }
    {
        std::set<std::string> uniq(ds.voxels.ids.begin(), ds.voxels.ids.end());
        if (uniq.size() != ds.voxels.ids.size())
            throw std::runtime_error(voxel_csv + ": duplicate voxel ids");
    }
    const int V = ds.voxels.size();

    auto load_paired = [&](const std::vector<Item>& items) {
        std::vector<PairedExample> out(items.size());
        std::vector<std::string> bad_voxel_items;
        for (size_t i = 0; i < items.size(); ++i) {
            out[i].item_id = items[i].id;
            out[i].stimulus = load_stimulus(items[i].raster_path, mode);
            const auto ddf = (rootp / "fmri" / (items[i].id + ".ddf")).string();
            out[i].response.values = io::read_ddf(ddf);
            if (out[i].response.size() != V) bad_voxel_items.push_back(items[i].id);
        }
        if (!bad_voxel_items.empty()) {
            std::ostringstream os;
            os << "fMRI length differs from the voxel table (" << V << " voxels) for:";
            for (const auto& id : bad_voxel_items) os << ' ' << id;
            throw std::runtime_error(os.str());
        }
        return out;
    };

    ds.paired_train = load_paired(train_items);
    ds.paired_test = load_paired(test_items);

    ds.unpaired.resize(unpaired_items.size());
    for (size_t i = 0; i < unpaired_items.size(); ++i) {
        ds.unpaired[i].item_id = unpaired_items[i].id;
        ds.unpaired[i].stimulus = load_stimulus(unpaired_items[i].raster_path, mode);
    }

    // one resolution across the whole dataset
    auto check_res = [&ds](const RgbdSample& s, const std::string& id) {
        if (ds.height == 0) {
            ds.height = s.height();
            ds.width = s.width();
        } else if (s.height() != ds.height || s.width() != ds.width) {
            throw std::runtime_error("item '" + id + "' has resolution " +
                                     std::to_string(s.height()) + "x" +
                                     std::to_string(s.width()) + ", dataset uses " +
                                     std::to_string(ds.height) + "x" +
                                     std::to_string(ds.width));
        }
    };
    for (const auto& e : ds.paired_train) check_res(e.stimulus, e.item_id);
    for (const auto& e : ds.paired_test) check_res(e.stimulus, e.item_id);
    for (const auto& e : ds.unpaired) check_res(e.stimulus, e.item_id);

    return ds;
}

FmriStats normalize_fmri(Dataset& ds) {
    if (ds.paired_train.empty())
        throw std::runtime_error("normalize_fmri: empty paired train split");

    const int V = ds.voxel_count();
    const double n = static_cast<double>(ds.paired_train.size());
    FmriStats stats;
    stats.mean.assign(static_cast<size_t>(V), 0.0f);
    stats.stdev.assign(static_cast<size_t>(V), 1.0f);

    std::vector<double> mean(static_cast<size_t>(V), 0.0);
    for (const auto& e : ds.paired_train)
        for (int v = 0; v < V; ++v) mean[static_cast<size_t>(v)] += e.response.values[static_cast<size_t>(v)];
    for (auto& m : mean) m /= n;

    std::vector<double> var(static_cast<size_t>(V), 0.0);
    for (const auto& e : ds.paired_train)
        for (int v = 0; v < V; ++v) {
            const double d = e.response.values[static_cast<size_t>(v)] - mean[static_cast<size_t>(v)];
            var[static_cast<size_t>(v)] += d * d;
        }

    for (int v = 0; v < V; ++v) {
        stats.mean[static_cast<size_t>(v)] = static_cast<float>(mean[static_cast<size_t>(v)]);
        const double sd = std::sqrt(var[static_cast<size_t>(v)] / n);
        if (sd < 1e-12) {
            stats.zero_variance_ids.push_back(ds.voxels.ids[static_cast<size_t>(v)]);
            stats.stdev[static_cast<size_t>(v)] = 1.0f;
        } else {
            stats.stdev[static_cast<size_t>(v)] = static_cast<float>(sd);
        }
    }

    for (auto& e : ds.paired_train) apply_fmri_stats(stats, e.response);
    for (auto& e : ds.paired_test) apply_fmri_stats(stats, e.response);
    return stats;
}

void apply_fmri_stats(const FmriStats& stats, FmriVector& v) {
    const size_t V = stats.mean.size();
    if (v.values.size() != V)
        throw std::runtime_error("apply_fmri_stats: vector length mismatch");
    for (size_t i = 0; i < V; ++i)
        v.values[i] = (v.values[i] - stats.mean[i]) / stats.stdev[i];
}

BatchSampler::BatchSampler(int pool_size, int batch_size, uint64_t seed)
    : pool_size_(pool_size), batch_size_(batch_size), seed_(seed) {
    if (pool_size <= 0) throw std::invalid_argument("BatchSampler: empty pool");
    if (batch_size <= 0) throw std::invalid_argument("BatchSampler: batch size must be positive");
    reshuffle();
}

void BatchSampler::reshuffle() {
    ++epoch_;
    cursor_ = 0;
    order_.resize(static_cast<size_t>(pool_size_));
    for (int i = 0; i < pool_size_; ++i) order_[static_cast<size_t>(i)] = i;
    Rng rng(seed_, "batch-epoch", static_cast<uint64_t>(epoch_));
    rng.shuffle(order_);
}

std::vector<int> BatchSampler::next() {
    const size_t take = std::min<size_t>(static_cast<size_t>(batch_size_),
                                         static_cast<size_t>(pool_size_));
    if (cursor_ + take > order_.size()) reshuffle();
    std::vector<int> batch(order_.begin() + static_cast<int64_t>(cursor_),
                           order_.begin() + static_cast<int64_t>(cursor_ + take));
    cursor_ += take;
    return batch;
}

}  // namespace depthdecode

// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "depthdecode/dataset.hpp"
#include "depthdecode/io.hpp"
#include "helpers.hpp"

using namespace depthdecode;
using testutil::DatasetSpec;
using testutil::TempDir;
using testutil::write_dataset_tree;

TEST_CASE("load_dataset preserves split sizes") {
    TempDir dir("ds_counts");
    write_dataset_tree(dir.path(), {8, 2, 20, 16, 16, 16, 1});
    Dataset ds = load_dataset(dir.str(), ChannelMode::Rgbd);
    REQUIRE(ds.paired_train.size() == 8);
    REQUIRE(ds.paired_test.size() == 2);
    REQUIRE(ds.unpaired.size() == 20);
    REQUIRE(ds.voxel_count() == 16);
    REQUIRE(ds.height == 16);
    REQUIRE(ds.width == 16);
}

TEST_CASE("channel modes adapt rasters on load") {
    TempDir dir("ds_modes");
    write_dataset_tree(dir.path(), {3, 1, 2, 8, 12, 12, 2});

    Dataset rgbd = load_dataset(dir.str(), ChannelMode::Rgbd);
    Dataset depth = load_dataset(dir.str(), ChannelMode::DepthOnly);
    Dataset rgb = load_dataset(dir.str(), ChannelMode::Rgb);

    for (const auto& e : depth.paired_train) REQUIRE(e.stimulus.channels() == 1);
    for (const auto& e : rgb.paired_train) REQUIRE(e.stimulus.channels() == 3);
    for (const auto& e : rgbd.paired_train) REQUIRE(e.stimulus.channels() == 4);

    // depth mode extracts the trailing channel, rgb mode the leading three
    const auto& full = rgbd.paired_train[0].stimulus.raster;
    const auto& d = depth.paired_train[0].stimulus.raster;
    const auto& c = rgb.paired_train[0].stimulus.raster;
    const int64_t plane = static_cast<int64_t>(full.dim(1)) * full.dim(2);
    for (int64_t i = 0; i < plane; ++i) {
        REQUIRE(d[i] == full[3 * plane + i]);
        REQUIRE(c[i] == full[i]);
    }
}

TEST_CASE("items are ordered deterministically by id") {
    TempDir dir("ds_order");
    write_dataset_tree(dir.path(), {5, 1, 3, 4, 8, 8, 3});
    Dataset a = load_dataset(dir.str(), ChannelMode::DepthOnly);
    Dataset b = load_dataset(dir.str(), ChannelMode::DepthOnly);
    REQUIRE(a.paired_train.size() == b.paired_train.size());
    for (size_t i = 0; i < a.paired_train.size(); ++i)
        REQUIRE(a.paired_train[i].item_id == b.paired_train[i].item_id);
    for (size_t i = 1; i < a.paired_train.size(); ++i)
        REQUIRE(a.paired_train[i - 1].item_id < a.paired_train[i].item_id);
}

TEST_CASE("wrong-length fmri vector is a consistency error naming the item") {
    TempDir dir("ds_badfmri");
    write_dataset_tree(dir.path(), {4, 1, 2, 8, 8, 8, 4});
    io::write_ddf(dir.file("fmri/train_2.ddf"), std::vector<float>(5, 0.0f));
    REQUIRE_THROWS_WITH(load_dataset(dir.str(), ChannelMode::Rgbd),
                        Catch::Contains("train_2"));
}

TEST_CASE("duplicate item ids across splits are rejected") {
    TempDir dir("ds_dup");
    write_dataset_tree(dir.path(), {3, 1, 2, 6, 8, 8, 5});
    // same stem in train and test
    io::write_ddr(dir.file("paired_test/train_0.ddr"), testutil::uniform_raster(4, 8, 8, 99));
    io::write_ddf(dir.file("fmri/train_0x.ddf"), std::vector<float>(6, 0.0f));
    REQUIRE_THROWS_WITH(load_dataset(dir.str(), ChannelMode::Rgbd),
                        Catch::Contains("train_0"));
}

TEST_CASE("resolution mismatches are rejected") {
    TempDir dir("ds_res");
    write_dataset_tree(dir.path(), {3, 1, 2, 6, 8, 8, 6});
    io::write_ddr(dir.file("unpaired/odd.ddr"), testutil::uniform_raster(4, 10, 8, 100));
    REQUIRE_THROWS_WITH(load_dataset(dir.str(), ChannelMode::Rgbd), Catch::Contains("odd"));
}

TEST_CASE("out-of-range raster values are rejected") {
    TempDir dir("ds_range");
    write_dataset_tree(dir.path(), {3, 1, 1, 6, 8, 8, 7});
    Tensor bad = testutil::uniform_raster(4, 8, 8, 101);
    bad[7] = 1.5f;
    io::write_ddr(dir.file("unpaired/bad.ddr"), bad);
    REQUIRE_THROWS_WITH(load_dataset(dir.str(), ChannelMode::Rgbd),
                        Catch::Contains("bad.ddr"));
}

TEST_CASE("depth mode refuses rasters without a depth channel") {
    TempDir dir("ds_nodepth");
    write_dataset_tree(dir.path(), {2, 1, 1, 6, 8, 8, 8});
    io::write_png_rgb(dir.file("unpaired/color.png"), testutil::uniform_raster(3, 8, 8, 55));
    REQUIRE_THROWS_WITH(load_dataset(dir.str(), ChannelMode::DepthOnly),
                        Catch::Contains("color.png"));
    // but rgb mode accepts the same tree
    Dataset rgb = load_dataset(dir.str(), ChannelMode::Rgb);
    REQUIRE(rgb.unpaired.size() == 2);
}

TEST_CASE("normalize_fmri matches the hand-computed z-score") {
    TempDir dir("ds_norm");
    namespace fs = std::filesystem;
    fs::create_directories(dir.path() / "paired_train");
    fs::create_directories(dir.path() / "paired_test");
    fs::create_directories(dir.path() / "unpaired");
    fs::create_directories(dir.path() / "fmri");
    io::write_voxel_table(dir.file("fmri/voxels.csv"), {{"v0", "V1"}, {"v1", "other"}});

    auto raster = [&](uint64_t s) { return testutil::uniform_raster(1, 4, 4, s); };
    io::write_ddr(dir.file("paired_train/a.ddr"), raster(1));
    io::write_ddf(dir.file("fmri/a.ddf"), {2.0f, 5.0f});
    io::write_ddr(dir.file("paired_train/b.ddr"), raster(2));
    io::write_ddf(dir.file("fmri/b.ddf"), {4.0f, 5.0f});
    io::write_ddr(dir.file("paired_test/t.ddr"), raster(3));
    io::write_ddf(dir.file("fmri/t.ddf"), {5.0f, 6.0f});

    Dataset ds = load_dataset(dir.str(), ChannelMode::DepthOnly);
    FmriStats stats = normalize_fmri(ds);

    // voxel 0: train values {2,4} give mean 3, population std 1
    REQUIRE(stats.mean[0] == Approx(3.0f));
    REQUIRE(stats.stdev[0] == Approx(1.0f));
    REQUIRE(ds.paired_train[0].response.values[0] == Approx(-1.0f));
    REQUIRE(ds.paired_train[1].response.values[0] == Approx(1.0f));

    // test vector 5 under train stats (3, 1) lands on 2
    REQUIRE(ds.paired_test[0].response.values[0] == Approx(2.0f));

    // voxel 1 is constant on train: std replaced by 1, values centred to 0
    REQUIRE(stats.zero_variance_ids == std::vector<std::string>{"v1"});
    REQUIRE(stats.stdev[1] == 1.0f);
    REQUIRE(ds.paired_train[0].response.values[1] == Approx(0.0f));
    REQUIRE(ds.paired_train[1].response.values[1] == Approx(0.0f));

    // train voxel 0 now has mean 0, std 1 within float tolerance
    double m = 0.0, s2 = 0.0;
    for (const auto& e : ds.paired_train) m += e.response.values[0];
    m /= 2.0;
    for (const auto& e : ds.paired_train) {
        const double d = e.response.values[0] - m;
        s2 += d * d;
    }
    REQUIRE(std::fabs(m) < 1e-6);
    REQUIRE(std::fabs(std::sqrt(s2 / 2.0) - 1.0) < 1e-6);
}

TEST_CASE("voxel table region masks separate LVC and HVC") {
    VoxelTable t;
    t.ids = {"a", "b", "c", "d", "e", "f", "g"};
    t.regions = {"V1", "V2", "V3", "LOC", "FFA", "PPA", "other"};
    const auto lvc = t.lvc_indices();
    const auto hvc = t.hvc_indices();
    REQUIRE(lvc == std::vector<int>{0, 1, 2});
    REQUIRE(hvc == std::vector<int>{3, 4, 5});
    std::set<int> inter;
    for (int i : lvc)
        if (std::find(hvc.begin(), hvc.end(), i) != hvc.end()) inter.insert(i);
    REQUIRE(inter.empty());
}

TEST_CASE("batch sampler is seeded and reproducible") {
    BatchSampler a(10, 3, 42), b(10, 3, 42), c(10, 3, 43);
    bool all_same = true;
    for (int i = 0; i < 20; ++i) {
        auto ba = a.next(), bb = b.next(), bc = c.next();
        REQUIRE(ba == bb);
        REQUIRE(ba.size() == 3);
        if (ba != bc) all_same = false;
    }
    REQUIRE_FALSE(all_same);
}

TEST_CASE("batch sampler visits each item once per epoch") {
    BatchSampler s(12, 4, 7);
    std::set<int> seen;
    REQUIRE(s.epoch() == 0);
    for (int i = 0; i < 3; ++i)
        for (int idx : s.next()) {
            REQUIRE(idx >= 0);
            REQUIRE(idx < 12);
            REQUIRE(seen.insert(idx).second);
        }
    REQUIRE(seen.size() == 12);
    REQUIRE(s.epoch() == 0);
    s.next();
    REQUIRE(s.epoch() == 1);
}

TEST_CASE("batch sampler handles pools smaller than the batch") {
    BatchSampler s(2, 8, 1);
    auto b = s.next();
    REQUIRE(b.size() == 2);
    std::set<int> uniq(b.begin(), b.end());
    REQUIRE(uniq.size() == 2);
}

// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include <cmath>
#include <cstring>

#include "depthdecode/scene.hpp"

using namespace depthdecode;

namespace {

SceneObject rect(float depth, float cx, float cy, float hw, float hh,
                 float r = 0.5f, float g = 0.5f, float b = 0.5f) {
    SceneObject o;
    o.shape = ShapeKind::Rectangle;
    o.depth_plane = depth;
    o.cx = cx;
    o.cy = cy;
    o.half_w = hw;
    o.half_h = hh;
    o.color[0] = r;
    o.color[1] = g;
    o.color[2] = b;
    return o;
}

}  // namespace

TEST_CASE("empty scene renders background only") {
    SceneSpec spec;
    spec.height = 16;
    spec.width = 16;
    spec.background[0] = 0.1f;
    spec.background[1] = 0.2f;
    spec.background[2] = 0.3f;
    auto scene = render_scene(spec);
    for (int64_t i = 0; i < scene.depth.numel(); ++i) REQUIRE(scene.depth[i] == 0.0f);
    REQUIRE(scene.rgb.at(0, 5, 5) == 0.1f);
    REQUIRE(scene.rgb.at(1, 5, 5) == 0.2f);
    REQUIRE(scene.rgb.at(2, 5, 5) == 0.3f);
}

TEST_CASE("full-frame rectangle fills the depth raster with its plane") {
    SceneSpec spec;
    spec.height = 20;
    spec.width = 24;
    spec.objects.push_back(rect(0.7f, 12.0f, 10.0f, 12.0f, 10.0f));
    auto scene = render_scene(spec);
    for (int64_t i = 0; i < scene.depth.numel(); ++i) REQUIRE(scene.depth[i] == 0.7f);
}

TEST_CASE("nearer object wins in the overlap region") {
    SceneSpec spec;
    spec.height = 32;
    spec.width = 32;
    // far object listed first, near object second; both cover the centre
    spec.objects.push_back(rect(0.3f, 12.0f, 16.0f, 8.0f, 8.0f, 1.0f, 0.0f, 0.0f));
    spec.objects.push_back(rect(0.8f, 20.0f, 16.0f, 8.0f, 8.0f, 0.0f, 1.0f, 0.0f));
    auto scene = render_scene(spec);

    // overlap pixel
    REQUIRE(scene.depth.at(0, 16, 15) == 0.8f);
    REQUIRE(scene.rgb.at(1, 16, 15) == 1.0f);
    // far-only pixel
    REQUIRE(scene.depth.at(0, 16, 5) == 0.3f);
    REQUIRE(scene.rgb.at(0, 16, 5) == 1.0f);
    // list order does not matter for strict depth ordering
    std::swap(spec.objects[0], spec.objects[1]);
    auto scene2 = render_scene(spec);
    REQUIRE(scene2.depth.at(0, 16, 15) == 0.8f);
    REQUIRE(scene2.rgb.at(1, 16, 15) == 1.0f);
}

TEST_CASE("rendering is deterministic") {
    SceneSpec spec = sample_scene(314159, 48, 48);
    auto a = render_scene(spec);
    auto b = render_scene(spec);
    REQUIRE(std::memcmp(a.rgb.data(), b.rgb.data(),
                        sizeof(float) * static_cast<size_t>(a.rgb.numel())) == 0);
    REQUIRE(std::memcmp(a.depth.data(), b.depth.data(),
                        sizeof(float) * static_cast<size_t>(a.depth.numel())) == 0);
}

TEST_CASE("fully occluded objects do not change the render") {
    SceneSpec with;
    with.height = 24;
    with.width = 24;
    with.objects.push_back(rect(0.9f, 12.0f, 12.0f, 8.0f, 8.0f, 0.2f, 0.4f, 0.6f));
    SceneSpec without = with;
    // a farther object strictly inside the near rectangle's footprint
    with.objects.push_back(rect(0.2f, 12.0f, 12.0f, 3.0f, 3.0f, 1.0f, 1.0f, 1.0f));

    auto a = render_scene(with);
    auto b = render_scene(without);
    REQUIRE(std::memcmp(a.depth.data(), b.depth.data(),
                        sizeof(float) * static_cast<size_t>(a.depth.numel())) == 0);
    REQUIRE(std::memcmp(a.rgb.data(), b.rgb.data(),
                        sizeof(float) * static_cast<size_t>(a.rgb.numel())) == 0);
}

TEST_CASE("ellipse coverage excludes bounding-box corners") {
    SceneSpec spec;
    spec.height = 32;
    spec.width = 32;
    SceneObject o;
    o.shape = ShapeKind::Ellipse;
    o.depth_plane = 0.6f;
    o.cx = 16.0f;
    o.cy = 16.0f;
    o.half_w = 10.0f;
    o.half_h = 6.0f;
    spec.objects.push_back(o);
    auto scene = render_scene(spec);
    REQUIRE(scene.depth.at(0, 16, 16) == 0.6f);       // centre covered
    REQUIRE(scene.depth.at(0, 11, 7) == 0.0f);        // bounding-box corner not covered
    REQUIRE(scene.depth.at(0, 16, 7) == 0.6f);        // horizontal extreme covered
}

TEST_CASE("scene_rgbd stacks color first, depth last") {
    SceneSpec spec;
    spec.height = 8;
    spec.width = 8;
    spec.background[0] = 0.25f;
    spec.objects.push_back(rect(0.5f, 4.0f, 4.0f, 2.0f, 2.0f, 0.9f, 0.8f, 0.7f));
    auto scene = render_scene(spec);
    Tensor stack = scene_rgbd(scene);
    REQUIRE(stack.dim(0) == 4);
    REQUIRE(stack.at(0, 4, 4) == 0.9f);
    REQUIRE(stack.at(3, 4, 4) == 0.5f);
    REQUIRE(stack.at(3, 0, 0) == 0.0f);
    REQUIRE(stack.at(0, 0, 0) == 0.25f);
}

TEST_CASE("sampled scenes are valid, seed-stable and carry depth cues") {
    auto a = sample_scene(7, 64, 64);
    auto b = sample_scene(7, 64, 64);
    REQUIRE(a.objects.size() == b.objects.size());
    for (size_t i = 0; i < a.objects.size(); ++i) {
        REQUIRE(a.objects[i].depth_plane == b.objects[i].depth_plane);
        REQUIRE(a.objects[i].cx == b.objects[i].cx);
    }

    double sum_d = 0.0, sum_s = 0.0, sum_dd = 0.0, sum_ss = 0.0, sum_ds = 0.0;
    int n = 0;
    for (uint64_t seed = 0; seed < 200; ++seed) {
        auto spec = sample_scene(seed, 64, 64);
        std::vector<float> planes;
        for (const auto& o : spec.objects) {
            planes.push_back(o.depth_plane);
            REQUIRE(o.depth_plane >= 0.0f);
            REQUIRE(o.depth_plane <= 1.0f);
            REQUIRE(o.cx >= 0.0f);
            REQUIRE(o.cx <= 64.0f);
            REQUIRE(o.cy >= 0.0f);
            REQUIRE(o.cy <= 64.0f);
            const double size = o.half_w;
            sum_d += o.depth_plane;
            sum_s += size;
            sum_dd += static_cast<double>(o.depth_plane) * o.depth_plane;
            sum_ss += size * size;
            sum_ds += o.depth_plane * size;
            ++n;
        }
        // strictly distinct depth planes
        std::sort(planes.begin(), planes.end());
        for (size_t i = 1; i < planes.size(); ++i) REQUIRE(planes[i] > planes[i - 1]);

        auto scene = render_scene(spec);
        for (int64_t i = 0; i < scene.rgb.numel(); ++i) {
            REQUIRE(scene.rgb[i] >= 0.0f);
            REQUIRE(scene.rgb[i] <= 1.0f);
        }
    }
    // correlation between depth plane and object size: the monocular cue
    const double cov = sum_ds / n - (sum_d / n) * (sum_s / n);
    const double sd_d = std::sqrt(sum_dd / n - (sum_d / n) * (sum_d / n));
    const double sd_s = std::sqrt(sum_ss / n - (sum_s / n) * (sum_s / n));
    REQUIRE(cov / (sd_d * sd_s) > 0.5);
}

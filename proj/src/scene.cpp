// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include "depthdecode/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "depthdecode/rng.hpp"

namespace depthdecode {

namespace {

void validate(const SceneSpec& spec) {
    if (spec.height <= 0 || spec.width <= 0)
        throw std::invalid_argument("scene: non-positive raster size");
    for (int c = 0; c < 3; ++c)
        if (spec.background[c] < 0.0f || spec.background[c] > 1.0f)
            throw std::invalid_argument("scene: background color outside [0,1]");
    for (const auto& o : spec.objects) {
        if (!(o.half_w > 0.0f) || !(o.half_h > 0.0f))
            throw std::invalid_argument("scene: object with non-positive extent");
        if (!(o.depth_plane >= 0.0f) || !(o.depth_plane <= 1.0f))
            throw std::invalid_argument("scene: depth_plane outside [0,1]");
        for (int c = 0; c < 3; ++c)
            if (o.color[c] < 0.0f || o.color[c] > 1.0f)
                throw std::invalid_argument("scene: object color outside [0,1]");
    }
}

bool covers(const SceneObject& o, float px, float py) {
    const float dx = px - o.cx;
    const float dy = py - o.cy;
    if (o.shape == ShapeKind::Rectangle)
        return std::fabs(dx) <= o.half_w && std::fabs(dy) <= o.half_h;
    const float nx = dx / o.half_w;
    const float ny = dy / o.half_h;
    return nx * nx + ny * ny <= 1.0f;
}

}  // namespace

RenderedScene render_scene(const SceneSpec& spec) {
    validate(spec);
    const int H = spec.height, W = spec.width;
    RenderedScene out{Tensor({3, H, W}), Tensor({1, H, W})};
    for (int y = 0; y < H; ++y) {
        const float py = static_cast<float>(y) + 0.5f;
        for (int x = 0; x < W; ++x) {
            const float px = static_cast<float>(x) + 0.5f;
            float best_depth = 0.0f;
            const SceneObject* hit = nullptr;
            // strictly-greater keeps the earlier object on a depth tie
            for (const auto& o : spec.objects)
                if (o.depth_plane > best_depth && covers(o, px, py)) {
                    best_depth = o.depth_plane;
                    hit = &o;
                }
            for (int c = 0; c < 3; ++c)
                out.rgb.at(c, y, x) = hit ? hit->color[c] : spec.background[c];
            out.depth.at(0, y, x) = hit ? best_depth : 0.0f;
        }
    }
    return out;
}

Tensor scene_rgbd(const RenderedScene& scene) {
    const int H = scene.rgb.dim(1), W = scene.rgb.dim(2);
    Tensor out({4, H, W});
    const int64_t plane = static_cast<int64_t>(H) * W;
    std::copy(scene.rgb.data(), scene.rgb.data() + 3 * plane, out.data());
    std::copy(scene.depth.data(), scene.depth.data() + plane, out.data() + 3 * plane);
    return out;
}

SceneSpec sample_scene(uint64_t seed, int height, int width, int min_objects,
                       int max_objects) {
    Rng rng(seed, "scene");
    SceneSpec spec;
    spec.seed = seed;
    spec.height = height;
    spec.width = width;
    // muted background so objects stand out
    for (int c = 0; c < 3; ++c) spec.background[c] = static_cast<float>(rng.uniform(0.0, 0.3));

    const int count = rng.uniform_int(min_objects, max_objects);
    // stratified depth planes: strictly distinct by construction
    std::vector<float> depths;
    for (int i = 0; i < count; ++i) {
        const double lo = 0.1 + 0.85 * (static_cast<double>(i) / count);
        const double hi = 0.1 + 0.85 * ((i + 0.9) / count);
        depths.push_back(static_cast<float>(rng.uniform(lo, hi)));
    }
    rng.shuffle(depths);

    const float mindim = static_cast<float>(std::min(height, width));
    for (int i = 0; i < count; ++i) {
        SceneObject o;
        o.shape = rng.uniform() < 0.5 ? ShapeKind::Rectangle : ShapeKind::Ellipse;
        o.depth_plane = depths[static_cast<size_t>(i)];
        // monocular cues: nearer objects are larger and sit lower in frame
        const float base = (0.10f + 0.28f * o.depth_plane) * mindim;
        o.half_w = base * static_cast<float>(rng.uniform(0.75, 1.25));
        o.half_h = base * static_cast<float>(rng.uniform(0.75, 1.25));
        o.cx = static_cast<float>(rng.uniform(0.15, 0.85)) * static_cast<float>(width);
        const double ybias = 0.25 + 0.5 * o.depth_plane;
        o.cy = static_cast<float>(std::clamp(ybias + rng.uniform(-0.12, 0.12), 0.05, 0.95)) *
               static_cast<float>(height);
        for (int c = 0; c < 3; ++c) o.color[c] = static_cast<float>(rng.uniform(0.25, 1.0));
        spec.objects.push_back(o);
    }
    return spec;
}

}  // namespace depthdecode

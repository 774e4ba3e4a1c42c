// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "depthdecode/tensor.hpp"

// Procedural scenes with exact ground-truth depth. The depth convention is
// relative inverse depth throughout: larger values are nearer, background is
// 0, and the nearest object wins at every pixel.

namespace depthdecode {

enum class ShapeKind { Rectangle, Ellipse };

struct SceneObject {
    ShapeKind shape = ShapeKind::Rectangle;
    float color[3] = {0.5f, 0.5f, 0.5f};
    float depth_plane = 0.5f;  // [0,1], larger = nearer
    float cx = 0.0f, cy = 0.0f;        // centre in pixels
    float half_w = 1.0f, half_h = 1.0f;
};

struct SceneSpec {
    uint64_t seed = 0;
    int height = 112;
    int width = 112;
    float background[3] = {0.0f, 0.0f, 0.0f};
    std::vector<SceneObject> objects;  // depth ties resolved by list order
};

struct RenderedScene {
    Tensor rgb;    // [3,H,W]
    Tensor depth;  // [1,H,W]
};

// Deterministic rasterization: coverage is tested at pixel centres.
RenderedScene render_scene(const SceneSpec& spec);

// Stacks color and depth into a 4-channel raster, depth last.
Tensor scene_rgbd(const RenderedScene& scene);

// Draws a random scene whose depth is recoverable from color alone: nearer
// objects are systematically larger and placed lower in the frame, the way
// monocular cues work in natural images. Depth planes are strictly distinct.
SceneSpec sample_scene(uint64_t seed, int height = 112, int width = 112,
                       int min_objects = 2, int max_objects = 5);

}  // namespace depthdecode

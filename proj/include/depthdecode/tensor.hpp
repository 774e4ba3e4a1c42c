// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cassert>
#include <cstdint>
#include <string>
#include <vector>

namespace depthdecode {

/// Dense row-major float tensor. Rank is dynamic; everything in this
/// project is rank 1 (vectors), 2 (matrices) or 4 (N,C,H,W rasters).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, float fill);

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    const std::vector<int>& shape() const { return shape_; }
    int64_t numel() const { return static_cast<int64_t>(v_.size()); }
    bool empty() const { return v_.empty(); }

    float* data() { return v_.data(); }
    const float* data() const { return v_.data(); }

    float& operator[](int64_t i) { return v_[static_cast<size_t>(i)]; }
    float operator[](int64_t i) const { return v_[static_cast<size_t>(i)]; }

    // N,C,H,W indexing for rank-4 tensors
    float& at(int n, int c, int y, int x) {
        return v_[static_cast<size_t>(offset4(n, c, y, x))];
    }
    float at(int n, int c, int y, int x) const {
        return v_[static_cast<size_t>(offset4(n, c, y, x))];
    }
    int64_t offset4(int n, int c, int y, int x) const {
        assert(ndim() == 4);
        return ((static_cast<int64_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
    }

    // C,H,W indexing for rank-3 tensors
    float& at(int c, int y, int x) { return v_[static_cast<size_t>(offset3(c, y, x))]; }
    float at(int c, int y, int x) const { return v_[static_cast<size_t>(offset3(c, y, x))]; }
    int64_t offset3(int c, int y, int x) const {
        assert(ndim() == 3);
        return (static_cast<int64_t>(c) * shape_[1] + y) * shape_[2] + x;
    }

    // row,col indexing for rank-2 tensors
    float& at(int r, int c) { return v_[static_cast<size_t>(offset2(r, c))]; }
    float at(int r, int c) const { return v_[static_cast<size_t>(offset2(r, c))]; }
    int64_t offset2(int r, int c) const {
        assert(ndim() == 2);
        return static_cast<int64_t>(r) * shape_[1] + c;
    }

    // Same data, new shape (element counts must agree).
    Tensor reshaped(std::vector<int> shape) const;

    void fill(float v) { std::fill(v_.begin(), v_.end(), v); }
    void zero() { fill(0.0f); }
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::vector<float> v_;
};

int64_t shape_numel(const std::vector<int>& shape);

}  // namespace depthdecode

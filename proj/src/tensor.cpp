// Copyright (c) 2026, the depthdecode authors
// SPDX-License-Identifier: Apache-2.0

#include "depthdecode/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace depthdecode {

int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("negative tensor dimension");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), v_(static_cast<size_t>(shape_numel(shape_)), 0.0f) {}

Tensor::Tensor(std::vector<int> shape, float fill)
    : shape_(std::move(shape)), v_(static_cast<size_t>(shape_numel(shape_)), fill) {}

Tensor Tensor::reshaped(std::vector<int> shape) const {
    if (shape_numel(shape) != numel())
        throw std::invalid_argument("reshape changes element count: " + shape_str());
    Tensor t;
    t.shape_ = std::move(shape);
    t.v_ = v_;
    return t;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << ")";
    return os.str();
}

}  // namespace depthdecode

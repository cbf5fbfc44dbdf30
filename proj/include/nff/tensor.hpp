// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "nff/common.hpp"

namespace nff {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) {
        NFF_ASSERT(d >= 0, "negative dimension in shape");
        n *= d;
    }
    return n;
}

// Dense row-major f64 tensor. Rank 0 is a scalar (numel 1).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}
    Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}
    Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
        NFF_ASSERT(static_cast<int64_t>(data_.size()) == shape_numel(shape_),
                   "value count does not match shape");
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor full(Shape shape, double v) { return Tensor(std::move(shape), v); }
    static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }

    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    int rank() const { return static_cast<int>(shape_.size()); }
    const Shape& shape() const { return shape_; }
    int64_t size(int i) const {
        NFF_ASSERT(i >= 0 && i < rank(), "shape axis out of range");
        return shape_[i];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    double& at(int64_t i) { return data_[check_flat(i)]; }
    double at(int64_t i) const { return data_[check_flat(i)]; }
    double& at(int64_t i, int64_t j) { return data_[flat2(i, j)]; }
    double at(int64_t i, int64_t j) const { return data_[flat2(i, j)]; }
    double& at(int64_t i, int64_t j, int64_t k) { return data_[flat3(i, j, k)]; }
    double at(int64_t i, int64_t j, int64_t k) const { return data_[flat3(i, j, k)]; }
    double& at(int64_t i, int64_t j, int64_t k, int64_t l) { return data_[flat4(i, j, k, l)]; }
    double at(int64_t i, int64_t j, int64_t k, int64_t l) const { return data_[flat4(i, j, k, l)]; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    // In-place shape change; numel must be preserved.
    void reshape_(Shape shape) {
        NFF_ASSERT(shape_numel(shape) == numel(), "reshape changes element count");
        shape_ = std::move(shape);
    }
    Tensor reshaped(Shape shape) const {
        Tensor t = *this;
        t.reshape_(std::move(shape));
        return t;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

private:
    size_t check_flat(int64_t i) const {
        NFF_ASSERT(i >= 0 && i < numel(), "flat index out of range");
        return static_cast<size_t>(i);
    }
    size_t flat2(int64_t i, int64_t j) const {
        NFF_ASSERT(rank() == 2 && i >= 0 && i < shape_[0] && j >= 0 && j < shape_[1],
                   "bad 2d index");
        return static_cast<size_t>(i * shape_[1] + j);
    }
    size_t flat3(int64_t i, int64_t j, int64_t k) const {
        NFF_ASSERT(rank() == 3 && i >= 0 && i < shape_[0] && j >= 0 && j < shape_[1] && k >= 0 &&
                       k < shape_[2],
                   "bad 3d index");
        return static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k);
    }
    size_t flat4(int64_t i, int64_t j, int64_t k, int64_t l) const {
        NFF_ASSERT(rank() == 4 && i >= 0 && i < shape_[0] && j >= 0 && j < shape_[1] && k >= 0 &&
                       k < shape_[2] && l >= 0 && l < shape_[3],
                   "bad 4d index");
        return static_cast<size_t>(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l);
    }

    Shape shape_;
    std::vector<double> data_;
};

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    NFF_ASSERT(a.numel() == b.numel(), "size mismatch");
    double m = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace nff

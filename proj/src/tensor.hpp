#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "common.hpp"

namespace stcae {

// Dense row-major float32 tensor (last axis fastest). Shape is fixed at
// construction; reshaped() returns a new tensor sharing nothing.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<std::size_t>(count(shape_)), 0.0f);
    }

    Tensor(std::vector<int> shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
        check_contract(count(shape_) == static_cast<std::int64_t>(data_.size()),
                       "tensor data length does not match shape");
    }

    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }

    int dim(int axis) const {
        check_contract(axis >= 0 && axis < rank(), "tensor axis out of range");
        return shape_[static_cast<std::size_t>(axis)];
    }

    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    // Copies data into the new shape; element count must match.
    Tensor reshaped(std::vector<int> shape) const {
        check_contract(count(shape) == size(), "reshape changes element count");
        return Tensor(std::move(shape), data_);
    }

    Tensor reshaped(std::vector<int> shape) && {
        check_contract(count(shape) == size(), "reshape changes element count");
        return Tensor(std::move(shape), std::move(data_));
    }

    void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

    static std::int64_t count(const std::vector<int>& shape) {
        std::int64_t n = 1;
        for (int d : shape) {
            check_contract(d > 0, "tensor extents must be positive");
            n *= d;
        }
        return n;
    }

    static std::string shape_str(const std::vector<int>& shape);

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

inline bool shapes_equal(const std::vector<int>& a, const std::vector<int>& b) { return a == b; }

}  // namespace stcae

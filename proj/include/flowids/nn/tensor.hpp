#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

namespace flowids::nn {

// Dense row-major tensor. Shapes are small (rank <= 3) and checked at layer
// boundaries, not per access.
template <typename T>
struct Tensor {
    std::vector<size_t> shape;
    std::vector<T> values;

    Tensor() = default;
    explicit Tensor(std::initializer_list<size_t> dims) : shape(dims) {
        values.assign(element_count(), T{});
    }
    explicit Tensor(std::vector<size_t> dims) : shape(std::move(dims)) {
        values.assign(element_count(), T{});
    }

    size_t element_count() const {
        size_t n = 1;
        for (size_t d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }
    size_t size() const { return values.size(); }
    size_t dim(size_t i) const { return shape[i]; }

    T* data() { return values.data(); }
    const T* data() const { return values.data(); }

    T& operator[](size_t i) { return values[i]; }
    const T& operator[](size_t i) const { return values[i]; }

    // 2-D / 3-D accessors; caller guarantees the rank.
    T& at(size_t i, size_t j) { return values[i * shape[1] + j]; }
    const T& at(size_t i, size_t j) const { return values[i * shape[1] + j]; }
    T& at(size_t i, size_t j, size_t k) {
        return values[(i * shape[1] + j) * shape[2] + k];
    }
    const T& at(size_t i, size_t j, size_t k) const {
        return values[(i * shape[1] + j) * shape[2] + k];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

}  // namespace flowids::nn

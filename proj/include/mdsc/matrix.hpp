#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mdsc {

/// Dense row-major matrix.
template <typename T>
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {}

    // Reshape, zero-filled; keeps capacity.
    void reset(int r, int c) {
        rows = r;
        cols = c;
        data.assign(static_cast<std::size_t>(r) * c, T{});
    }

    T* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
    const T* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }
    std::span<const T> row_span(int i) const { return {row(i), static_cast<std::size_t>(cols)}; }
    T& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    const T& operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
    std::size_t size() const { return data.size(); }
};

}  // namespace mdsc

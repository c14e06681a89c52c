#pragma once

// Helpers shared by the parallel kernels and their serial references.

#include <cmath>
#include <cstddef>
#include <span>
#include <algorithm>
#include <vector>

namespace mdsc::kernels::detail {

template <typename T>
constexpr T gelu_c() { return static_cast<T>(0.7978845608028654); }  // sqrt(2/pi)

template <typename T>
inline T gelu_scalar(T x) {
    const T inner = gelu_c<T>() * (x + T(0.044715) * x * x * x);
    return T(0.5) * x * (T(1) + std::tanh(inner));
}

template <typename T>
inline T gelu_grad_scalar(T x) {
    const T inner = gelu_c<T>() * (x + T(0.044715) * x * x * x);
    const T th = std::tanh(inner);
    const T dinner = gelu_c<T>() * (T(1) + T(3) * T(0.044715) * x * x);
    return T(0.5) * (T(1) + th) + T(0.5) * x * (T(1) - th * th) * dinner;
}

inline std::vector<std::size_t> probs_offsets(std::span<const int> offsets, int heads) {
    std::vector<std::size_t> out(offsets.size(), 0);
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
        const auto len = static_cast<std::size_t>(offsets[s + 1] - offsets[s]);
        out[s + 1] = out[s] + static_cast<std::size_t>(heads) * len * len;
    }
    return out;
}

template <typename T>
void zero_head_columns(int begin, int len, int h, int heads, int dim, T* dqkv) {
    const int dh = dim / heads;
    for (int i = 0; i < len; ++i) {
        T* row = dqkv + static_cast<std::size_t>(begin + i) * 3 * dim;
        for (int part = 0; part < 3; ++part) std::fill_n(row + part * dim + h * dh, dh, T{});
    }
}

}  // namespace mdsc::kernels::detail

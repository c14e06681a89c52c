#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kernels_common.hpp"
#include "mdsc/kernels.hpp"

namespace mdsc::kernels {

using detail::gelu_grad_scalar;
using detail::gelu_scalar;
using detail::probs_offsets;
using detail::zero_head_columns;

namespace reference {

template <typename T>
void gemm(int m, int k, int n, const T* a, const T* b, T* c, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            T s = accumulate ? c[static_cast<std::size_t>(i) * n + j] : T{};
            for (int p = 0; p < k; ++p) s += a[static_cast<std::size_t>(i) * k + p] * b[static_cast<std::size_t>(p) * n + j];
            c[static_cast<std::size_t>(i) * n + j] = s;
        }
    }
}

template <typename T>
void layernorm_forward(int n, int d, const T* x, const T* gain, const T* bias, T* y, T* mean, T* rstd) {
    for (int i = 0; i < n; ++i) {
        const T* xr = x + static_cast<std::size_t>(i) * d;
        T mu = 0;
        for (int j = 0; j < d; ++j) mu += xr[j];
        mu /= static_cast<T>(d);
        T var = 0;
        for (int j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<T>(d);
        const T rs = T(1) / std::sqrt(var + static_cast<T>(1e-5));
        for (int j = 0; j < d; ++j) y[static_cast<std::size_t>(i) * d + j] = (xr[j] - mu) * rs * gain[j] + bias[j];
        mean[i] = mu;
        rstd[i] = rs;
    }
}

template <typename T>
void layernorm_backward(int n, int d, const T* dy, const T* x, const T* mean, const T* rstd, const T* gain,
                        T* dx, T* dgain, T* dbias) {
    // Straight from the Jacobian: dx_j = sum_k dy_k g_k dxhat_k/dx_j.
    for (int i = 0; i < n; ++i) {
        const T* xr = x + static_cast<std::size_t>(i) * d;
        const T* dyr = dy + static_cast<std::size_t>(i) * d;
        const T rs = rstd[i];
        for (int j = 0; j < d; ++j) {
            const T xhat_j = (xr[j] - mean[i]) * rs;
            T s = 0;
            for (int k = 0; k < d; ++k) {
                const T xhat_k = (xr[k] - mean[i]) * rs;
                const T jac = rs * ((j == k ? T(1) : T(0)) - T(1) / d - xhat_k * xhat_j / d);
                s += dyr[k] * gain[k] * jac;
            }
            dx[static_cast<std::size_t>(i) * d + j] += s;
            dgain[j] += dyr[j] * xhat_j;
            dbias[j] += dyr[j];
        }
    }
}

template <typename T>
void gelu_forward(std::size_t n, const T* u, T* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = gelu_scalar(u[i]);
}

template <typename T>
void gelu_backward(std::size_t n, const T* u, const T* dout, T* du) {
    for (std::size_t i = 0; i < n; ++i) du[i] = dout[i] * gelu_grad_scalar(u[i]);
}

template <typename T>
void attention_forward(std::span<const int> offsets, int heads, int dim, const T* qkv, T* out, T* probs) {
    const auto poff = probs_offsets(offsets, heads);
    const int dh = dim / heads;
    const int stride = 3 * dim;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
        const int b = offsets[s];
        const int len = offsets[s + 1] - b;
        for (int h = 0; h < heads; ++h) {
            T* p = probs + poff[s] + static_cast<std::size_t>(h) * len * len;
            auto at = [&](int row, int part, int e) {
                return qkv[static_cast<std::size_t>(b + row) * stride + part * dim + h * dh + e];
            };
            for (int i = 0; i < len; ++i) {
                T mx = -std::numeric_limits<T>::infinity();
                for (int j = 0; j < len; ++j) {
                    T sc = 0;
                    for (int e = 0; e < dh; ++e) sc += at(i, 0, e) * at(j, 1, e);
                    p[static_cast<std::size_t>(i) * len + j] = sc * scale;
                    mx = std::max(mx, sc * scale);
                }
                T z = 0;
                for (int j = 0; j < len; ++j) z += std::exp(p[static_cast<std::size_t>(i) * len + j] - mx);
                for (int j = 0; j < len; ++j) {
                    auto& pij = p[static_cast<std::size_t>(i) * len + j];
                    pij = std::exp(pij - mx) / z;
                }
                for (int e = 0; e < dh; ++e) {
                    T o = 0;
                    for (int j = 0; j < len; ++j) o += p[static_cast<std::size_t>(i) * len + j] * at(j, 2, e);
                    out[static_cast<std::size_t>(b + i) * dim + h * dh + e] = o;
                }
            }
        }
    }
}

template <typename T>
void attention_backward(std::span<const int> offsets, int heads, int dim, const T* qkv, const T* probs,
                        const T* dout, T* dqkv) {
    // Materializes dP and dS explicitly instead of fusing them.
    const auto poff = probs_offsets(offsets, heads);
    const int dh = dim / heads;
    const int stride = 3 * dim;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
        const int b = offsets[s];
        const int len = offsets[s + 1] - b;
        for (int h = 0; h < heads; ++h) {
            zero_head_columns(b, len, h, heads, dim, dqkv);
            const T* p = probs + poff[s] + static_cast<std::size_t>(h) * len * len;
            auto at = [&](int row, int part, int e) -> std::size_t {
                return static_cast<std::size_t>(b + row) * stride + part * dim + h * dh + e;
            };
            std::vector<T> dp(static_cast<std::size_t>(len) * len), dsm(dp.size());
            for (int i = 0; i < len; ++i) {
                for (int j = 0; j < len; ++j) {
                    T v = 0;
                    for (int e = 0; e < dh; ++e) v += dout[static_cast<std::size_t>(b + i) * dim + h * dh + e] * qkv[at(j, 2, e)];
                    dp[static_cast<std::size_t>(i) * len + j] = v;
                }
            }
            for (int i = 0; i < len; ++i) {
                for (int j = 0; j < len; ++j) {
                    T v = 0;
                    for (int k = 0; k < len; ++k) {
                        const T pij = p[static_cast<std::size_t>(i) * len + j];
                        const T pik = p[static_cast<std::size_t>(i) * len + k];
                        v += dp[static_cast<std::size_t>(i) * len + k] * pik * ((j == k ? T(1) : T(0)) - pij);
                    }
                    dsm[static_cast<std::size_t>(i) * len + j] = v * scale;
                }
            }
            for (int i = 0; i < len; ++i) {
                for (int j = 0; j < len; ++j) {
                    const T w = dsm[static_cast<std::size_t>(i) * len + j];
                    const T pij = p[static_cast<std::size_t>(i) * len + j];
                    for (int e = 0; e < dh; ++e) {
                        dqkv[at(i, 0, e)] += w * qkv[at(j, 1, e)];
                        dqkv[at(j, 1, e)] += w * qkv[at(i, 0, e)];
                        dqkv[at(j, 2, e)] += pij * dout[static_cast<std::size_t>(b + i) * dim + h * dh + e];
                    }
                }
            }
        }
    }
}

}  // namespace reference

}  // namespace mdsc::kernels

#define MDSC_INSTANTIATE_KERNELS(NS, T)                                                                        \
    template void NS::gemm<T>(int, int, int, const T*, const T*, T*, bool);                                    \
    template void NS::layernorm_forward<T>(int, int, const T*, const T*, const T*, T*, T*, T*);                \
    template void NS::layernorm_backward<T>(int, int, const T*, const T*, const T*, const T*, const T*, T*, T*, \
                                            T*);                                                               \
    template void NS::gelu_forward<T>(std::size_t, const T*, T*);                                              \
    template void NS::gelu_backward<T>(std::size_t, const T*, const T*, T*);                                   \
    template void NS::attention_forward<T>(std::span<const int>, int, int, const T*, T*, T*);                  \
    template void NS::attention_backward<T>(std::span<const int>, int, int, const T*, const T*, const T*, T*);

MDSC_INSTANTIATE_KERNELS(mdsc::kernels::reference, float)
MDSC_INSTANTIATE_KERNELS(mdsc::kernels::reference, double)

#undef MDSC_INSTANTIATE_KERNELS


#include "mdsc/kernels.hpp"

#include "kernels_common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mdsc::kernels {

namespace {

using detail::gelu_grad_scalar;
using detail::gelu_scalar;
using detail::probs_offsets;

template <typename T, int MR, int NR>
inline void gemm_tile(int k, const T* __restrict a, int lda, const T* __restrict b, int ldb, T* __restrict c,
                      int ldc, bool accumulate) {
    T acc[MR][NR];
    for (int i = 0; i < MR; ++i) {
        for (int j = 0; j < NR; ++j) acc[i][j] = accumulate ? c[static_cast<std::size_t>(i) * ldc + j] : T{};
    }
    for (int p = 0; p < k; ++p) {
        const T* br = b + static_cast<std::size_t>(p) * ldb;
        for (int i = 0; i < MR; ++i) {
            const T av = a[static_cast<std::size_t>(i) * lda + p];
#pragma omp simd
            for (int j = 0; j < NR; ++j) acc[i][j] += av * br[j];
        }
    }
    for (int i = 0; i < MR; ++i) {
        for (int j = 0; j < NR; ++j) c[static_cast<std::size_t>(i) * ldc + j] = acc[i][j];
    }
}

template <typename T>
inline void gemm_edge(int mr, int nr, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc,
                      bool accumulate) {
    for (int i = 0; i < mr; ++i) {
        T* cr = c + static_cast<std::size_t>(i) * ldc;
        for (int j = 0; j < nr; ++j) {
            T s = accumulate ? cr[j] : T{};
            for (int p = 0; p < k; ++p) s += a[static_cast<std::size_t>(i) * lda + p] * b[static_cast<std::size_t>(p) * ldb + j];
            cr[j] = s;
        }
    }
}

// Per-(sequence, head) scratch: contiguous copies of the head's slices.
template <typename T>
struct HeadScratch {
    std::vector<T> q, k, kt, v, vt, d_out, dp, dq, dk, dv;
};

template <typename T>
void gather_head(int begin, int len, int h, int dh, int dim, int part, const T* qkv, std::vector<T>& dst) {
    dst.resize(static_cast<std::size_t>(len) * dh);
    for (int i = 0; i < len; ++i) {
        const T* src = qkv + static_cast<std::size_t>(begin + i) * 3 * dim + part * dim + h * dh;
        std::copy_n(src, dh, dst.data() + static_cast<std::size_t>(i) * dh);
    }
}

template <typename T>
void transpose_small(int rows, int cols, const std::vector<T>& a, std::vector<T>& at) {
    at.resize(a.size());
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) at[static_cast<std::size_t>(j) * rows + i] = a[static_cast<std::size_t>(i) * cols + j];
    }
}

template <typename T>
void attention_head_forward(int begin, int len, int h, int heads, int dim, const T* qkv, T* out, T* p,
                            HeadScratch<T>& sc) {
    const int dh = dim / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    gather_head(begin, len, h, dh, dim, 0, qkv, sc.q);
    gather_head(begin, len, h, dh, dim, 1, qkv, sc.k);
    gather_head(begin, len, h, dh, dim, 2, qkv, sc.v);
    transpose_small(len, dh, sc.k, sc.kt);
    for (int i = 0; i < len; ++i) {
        const T* q = sc.q.data() + static_cast<std::size_t>(i) * dh;
        T* __restrict prow = p + static_cast<std::size_t>(i) * len;
        std::fill_n(prow, len, T{});
        for (int e = 0; e < dh; ++e) {
            const T qe = q[e] * scale;
            const T* __restrict kr = sc.kt.data() + static_cast<std::size_t>(e) * len;
#pragma omp simd
            for (int j = 0; j < len; ++j) prow[j] += qe * kr[j];
        }
        T mx = prow[0];
        for (int j = 1; j < len; ++j) mx = std::max(mx, prow[j]);
        T z = 0;
        for (int j = 0; j < len; ++j) {
            prow[j] = std::exp(prow[j] - mx);
            z += prow[j];
        }
        const T inv = T(1) / z;
        for (int j = 0; j < len; ++j) prow[j] *= inv;
        T* __restrict o = out + static_cast<std::size_t>(begin + i) * dim + h * dh;
        std::fill_n(o, dh, T{});
        for (int j = 0; j < len; ++j) {
            const T w = prow[j];
            const T* __restrict v = sc.v.data() + static_cast<std::size_t>(j) * dh;
#pragma omp simd
            for (int e = 0; e < dh; ++e) o[e] += w * v[e];
        }
    }
}

template <typename T>
void attention_head_backward(int begin, int len, int h, int heads, int dim, const T* qkv, const T* p,
                             const T* dout, T* dqkv, HeadScratch<T>& sc) {
    const int dh = dim / heads;
    const int stride = 3 * dim;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    gather_head(begin, len, h, dh, dim, 0, qkv, sc.q);
    gather_head(begin, len, h, dh, dim, 1, qkv, sc.k);
    gather_head(begin, len, h, dh, dim, 2, qkv, sc.v);
    transpose_small(len, dh, sc.v, sc.vt);
    sc.d_out.resize(static_cast<std::size_t>(len) * dh);
    for (int i = 0; i < len; ++i) {
        std::copy_n(dout + static_cast<std::size_t>(begin + i) * dim + h * dh, dh,
                    sc.d_out.data() + static_cast<std::size_t>(i) * dh);
    }
    const std::size_t block = static_cast<std::size_t>(len) * dh;
    sc.dq.assign(block, T{});
    sc.dk.assign(block, T{});
    sc.dv.assign(block, T{});
    sc.dp.resize(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) {
        const T* prow = p + static_cast<std::size_t>(i) * len;
        const T* __restrict dor = sc.d_out.data() + static_cast<std::size_t>(i) * dh;
        T* __restrict ds = sc.dp.data();
        std::fill_n(ds, len, T{});
        for (int e = 0; e < dh; ++e) {
            const T de = dor[e];
            const T* __restrict vr = sc.vt.data() + static_cast<std::size_t>(e) * len;
#pragma omp simd
            for (int j = 0; j < len; ++j) ds[j] += de * vr[j];
        }
        T dot = 0;
        for (int j = 0; j < len; ++j) dot += ds[j] * prow[j];
        for (int j = 0; j < len; ++j) ds[j] = prow[j] * (ds[j] - dot) * scale;
        const T* __restrict q = sc.q.data() + static_cast<std::size_t>(i) * dh;
        T* __restrict dq = sc.dq.data() + static_cast<std::size_t>(i) * dh;
        for (int j = 0; j < len; ++j) {
            const T w = ds[j];
            const T pij = prow[j];
            const T* __restrict kr = sc.k.data() + static_cast<std::size_t>(j) * dh;
            T* __restrict dk = sc.dk.data() + static_cast<std::size_t>(j) * dh;
            T* __restrict dv = sc.dv.data() + static_cast<std::size_t>(j) * dh;
#pragma omp simd
            for (int e = 0; e < dh; ++e) {
                dq[e] += w * kr[e];
                dk[e] += w * q[e];
                dv[e] += pij * dor[e];
            }
        }
    }
    for (int i = 0; i < len; ++i) {
        T* row = dqkv + static_cast<std::size_t>(begin + i) * stride + h * dh;
        std::copy_n(sc.dq.data() + static_cast<std::size_t>(i) * dh, dh, row);
        std::copy_n(sc.dk.data() + static_cast<std::size_t>(i) * dh, dh, row + dim);
        std::copy_n(sc.dv.data() + static_cast<std::size_t>(i) * dh, dh, row + 2 * dim);
    }
}

}  // namespace

template <typename T>
void gemm(int m, int k, int n, const T* a, const T* b, T* c, bool accumulate) {
    constexpr int MR = 4;
    constexpr int NR = 128 / static_cast<int>(sizeof(T));
    const int mtiles = (m + MR - 1) / MR;
#pragma omp parallel for schedule(static)
    for (int it = 0; it < mtiles; ++it) {
        const int i = it * MR;
        const int mr = std::min(MR, m - i);
        const T* ai = a + static_cast<std::size_t>(i) * k;
        T* ci = c + static_cast<std::size_t>(i) * n;
        int j = 0;
        if (mr == MR) {
            for (; j + NR <= n; j += NR) gemm_tile<T, MR, NR>(k, ai, k, b + j, n, ci + j, n, accumulate);
        }
        if (j < n) gemm_edge(mr, n - j, k, ai, k, b + j, n, ci + j, n, accumulate);
    }
}

template <typename T>
void transpose(int rows, int cols, const T* a, T* at) {
    constexpr int B = 32;
#pragma omp parallel for schedule(static)
    for (int ib = 0; ib < (rows + B - 1) / B; ++ib) {
        const int i0 = ib * B;
        const int i1 = std::min(rows, i0 + B);
        for (int j0 = 0; j0 < cols; j0 += B) {
            const int j1 = std::min(cols, j0 + B);
            for (int i = i0; i < i1; ++i) {
                for (int j = j0; j < j1; ++j) {
                    at[static_cast<std::size_t>(j) * rows + i] = a[static_cast<std::size_t>(i) * cols + j];
                }
            }
        }
    }
}

template <typename T>
void layernorm_forward(int n, int d, const T* x, const T* gain, const T* bias, T* y, T* mean, T* rstd) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const T* xr = x + static_cast<std::size_t>(i) * d;
        T* yr = y + static_cast<std::size_t>(i) * d;
        T mu = 0;
        for (int j = 0; j < d; ++j) mu += xr[j];
        mu /= static_cast<T>(d);
        T var = 0;
        for (int j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<T>(d);
        const T rs = T(1) / std::sqrt(var + static_cast<T>(1e-5));
        for (int j = 0; j < d; ++j) yr[j] = (xr[j] - mu) * rs * gain[j] + bias[j];
        mean[i] = mu;
        rstd[i] = rs;
    }
}

template <typename T>
void layernorm_backward(int n, int d, const T* dy, const T* x, const T* mean, const T* rstd, const T* gain,
                        T* dx, T* dgain, T* dbias) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const T* xr = x + static_cast<std::size_t>(i) * d;
        const T* dyr = dy + static_cast<std::size_t>(i) * d;
        T* dxr = dx + static_cast<std::size_t>(i) * d;
        const T mu = mean[i];
        const T rs = rstd[i];
        T sum_g = 0;
        T sum_gx = 0;
        for (int j = 0; j < d; ++j) {
            const T g = dyr[j] * gain[j];
            sum_g += g;
            sum_gx += g * (xr[j] - mu) * rs;
        }
        sum_g /= static_cast<T>(d);
        sum_gx /= static_cast<T>(d);
        for (int j = 0; j < d; ++j) {
            const T xhat = (xr[j] - mu) * rs;
            dxr[j] += rs * (dyr[j] * gain[j] - sum_g - xhat * sum_gx);
        }
    }
    // Column reductions stay serial so their summation order is fixed.
    for (int i = 0; i < n; ++i) {
        const T* xr = x + static_cast<std::size_t>(i) * d;
        const T* dyr = dy + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) {
            dgain[j] += dyr[j] * (xr[j] - mean[i]) * rstd[i];
            dbias[j] += dyr[j];
        }
    }
}

template <typename T>
void gelu_forward(std::size_t n, const T* u, T* out) {
#pragma omp parallel for simd schedule(static)
    for (std::size_t i = 0; i < n; ++i) out[i] = gelu_scalar(u[i]);
}

template <typename T>
void gelu_backward(std::size_t n, const T* u, const T* dout, T* du) {
#pragma omp parallel for simd schedule(static)
    for (std::size_t i = 0; i < n; ++i) du[i] = dout[i] * gelu_grad_scalar(u[i]);
}

std::size_t attention_probs_size(std::span<const int> offsets, int heads) {
    return offsets.empty() ? 0 : probs_offsets(offsets, heads).back();
}

template <typename T>
void attention_forward(std::span<const int> offsets, int heads, int dim, const T* qkv, T* out, T* probs) {
    const auto poff = probs_offsets(offsets, heads);
    const int nseq = static_cast<int>(offsets.size()) - 1;
    const int blocks = std::max(0, nseq) * heads;
#pragma omp parallel
    {
        HeadScratch<T> sc;
#pragma omp for schedule(dynamic)
        for (int blk = 0; blk < blocks; ++blk) {
            const int s = blk / heads;
            const int h = blk % heads;
            const int len = offsets[s + 1] - offsets[s];
            T* p = probs + poff[s] + static_cast<std::size_t>(h) * len * len;
            attention_head_forward(offsets[s], len, h, heads, dim, qkv, out, p, sc);
        }
    }
}

template <typename T>
void attention_backward(std::span<const int> offsets, int heads, int dim, const T* qkv, const T* probs,
                        const T* dout, T* dqkv) {
    const auto poff = probs_offsets(offsets, heads);
    const int nseq = static_cast<int>(offsets.size()) - 1;
    const int blocks = std::max(0, nseq) * heads;
#pragma omp parallel
    {
        HeadScratch<T> sc;
#pragma omp for schedule(dynamic)
        for (int blk = 0; blk < blocks; ++blk) {
            const int s = blk / heads;
            const int h = blk % heads;
            const int len = offsets[s + 1] - offsets[s];
            const T* p = probs + poff[s] + static_cast<std::size_t>(h) * len * len;
            attention_head_backward(offsets[s], len, h, heads, dim, qkv, p, dout, dqkv, sc);
        }
    }
}



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

MDSC_INSTANTIATE_KERNELS(mdsc::kernels, float)
MDSC_INSTANTIATE_KERNELS(mdsc::kernels, double)
template void mdsc::kernels::transpose<float>(int, int, const float*, float*);
template void mdsc::kernels::transpose<double>(int, int, const double*, double*);

#undef MDSC_INSTANTIATE_KERNELS


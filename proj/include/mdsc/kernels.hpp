#pragma once

// Compute kernels for the denoiser. Functions in mdsc::kernels are
// OpenMP-parallel; mdsc::kernels::reference holds plain serial versions
// with the same signatures, used by the tests and the benchmark.
//
// Parallel kernels split work so that every output element is produced by
// exactly one thread with a fixed accumulation order. Results are therefore
// independent of the thread count.

#include <cstddef>
#include <span>

namespace mdsc::kernels {

/// C[M x N] (+)= A[M x K] * B[K x N], all row-major.
template <typename T>
void gemm(int m, int k, int n, const T* a, const T* b, T* c, bool accumulate);

/// at[cols x rows] = a[rows x cols]^T
template <typename T>
void transpose(int rows, int cols, const T* a, T* at);

/// y = (x - mean) * rstd * gain + bias per row; mean/rstd saved per row.
template <typename T>
void layernorm_forward(int n, int d, const T* x, const T* gain, const T* bias, T* y, T* mean, T* rstd);

/// dx += d/dx; dgain, dbias accumulate.
template <typename T>
void layernorm_backward(int n, int d, const T* dy, const T* x, const T* mean, const T* rstd, const T* gain,
                        T* dx, T* dgain, T* dbias);

/// tanh-approximated GELU.
template <typename T>
void gelu_forward(std::size_t n, const T* u, T* out);
template <typename T>
void gelu_backward(std::size_t n, const T* u, const T* dout, T* du);

/// Total number of probability entries attention keeps for a packed batch.
std::size_t attention_probs_size(std::span<const int> offsets, int heads);

/// Full bidirectional multi-head attention over a packed batch. Sequence s
/// occupies rows [offsets[s], offsets[s+1]). qkv rows are [q | k | v], each
/// `dim` wide; out is [rows x dim]; probs stores softmax weights per
/// (sequence, head).
template <typename T>
void attention_forward(std::span<const int> offsets, int heads, int dim, const T* qkv, T* out, T* probs);

/// dqkv is overwritten.
template <typename T>
void attention_backward(std::span<const int> offsets, int heads, int dim, const T* qkv, const T* probs,
                        const T* dout, T* dqkv);

namespace reference {

template <typename T>
void gemm(int m, int k, int n, const T* a, const T* b, T* c, bool accumulate);
template <typename T>
void layernorm_forward(int n, int d, const T* x, const T* gain, const T* bias, T* y, T* mean, T* rstd);
template <typename T>
void layernorm_backward(int n, int d, const T* dy, const T* x, const T* mean, const T* rstd, const T* gain,
                        T* dx, T* dgain, T* dbias);
template <typename T>
void gelu_forward(std::size_t n, const T* u, T* out);
template <typename T>
void gelu_backward(std::size_t n, const T* u, const T* dout, T* du);
template <typename T>
void attention_forward(std::span<const int> offsets, int heads, int dim, const T* qkv, T* out, T* probs);
template <typename T>
void attention_backward(std::span<const int> offsets, int heads, int dim, const T* qkv, const T* probs,
                        const T* dout, T* dqkv);

}  // namespace reference

}  // namespace mdsc::kernels

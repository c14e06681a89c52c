// OpenMP kernels vs their serial references at training-step shapes
// (16 sequences of 70 tokens, dim 128, 4 heads).

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mdsc/kernels.hpp"

namespace k = mdsc::kernels;
namespace ref = mdsc::kernels::reference;

namespace {

constexpr int kSeqs = 16;
constexpr int kLen = 70;
constexpr int kRows = kSeqs * kLen;
constexpr int kDim = 128;
constexpr int kHeads = 4;

std::vector<float> random_vec(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<float> nd(0.0f, 1.0f);
    std::vector<float> v(n);
    for (auto& x : v) x = nd(rng);
    return v;
}

std::vector<int> offsets() {
    std::vector<int> o(kSeqs + 1);
    for (int s = 0; s <= kSeqs; ++s) o[s] = s * kLen;
    return o;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
    const int m = kRows, kk = static_cast<int>(state.range(0)), n = static_cast<int>(state.range(1));
    const auto a = random_vec(static_cast<std::size_t>(m) * kk, 1);
    const auto b = random_vec(static_cast<std::size_t>(kk) * n, 2);
    std::vector<float> c(static_cast<std::size_t>(m) * n);
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::gemm(m, kk, n, a.data(), b.data(), c.data(), false);
        } else {
            ref::gemm(m, kk, n, a.data(), b.data(), c.data(), false);
        }
        benchmark::DoNotOptimize(c.data());
    }
    state.counters["GFLOPS"] = benchmark::Counter(2.0 * m * kk * n, benchmark::Counter::kIsIterationInvariantRate,
                                                  benchmark::Counter::kIs1000);
}
BENCHMARK_TEMPLATE(BM_Gemm, true)->Args({kDim, 3 * kDim})->Args({4 * kDim, kDim})->Args({kDim, 610})
    ->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_Gemm, false)->Args({kDim, 3 * kDim})->Args({4 * kDim, kDim})->Args({kDim, 610})
    ->Unit(benchmark::kMillisecond);

template <bool Parallel>
void BM_AttentionForward(benchmark::State& state) {
    const auto off = offsets();
    const auto qkv = random_vec(static_cast<std::size_t>(kRows) * 3 * kDim, 3);
    std::vector<float> out(static_cast<std::size_t>(kRows) * kDim), probs(k::attention_probs_size(off, kHeads));
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::attention_forward<float>(off, kHeads, kDim, qkv.data(), out.data(), probs.data());
        } else {
            ref::attention_forward<float>(off, kHeads, kDim, qkv.data(), out.data(), probs.data());
        }
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK_TEMPLATE(BM_AttentionForward, true)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_AttentionForward, false)->Unit(benchmark::kMillisecond);

template <bool Parallel>
void BM_AttentionBackward(benchmark::State& state) {
    const auto off = offsets();
    const auto qkv = random_vec(static_cast<std::size_t>(kRows) * 3 * kDim, 4);
    const auto dout = random_vec(static_cast<std::size_t>(kRows) * kDim, 5);
    std::vector<float> out(static_cast<std::size_t>(kRows) * kDim), probs(k::attention_probs_size(off, kHeads)),
        dqkv(qkv.size());
    k::attention_forward<float>(off, kHeads, kDim, qkv.data(), out.data(), probs.data());
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::attention_backward<float>(off, kHeads, kDim, qkv.data(), probs.data(), dout.data(), dqkv.data());
        } else {
            ref::attention_backward<float>(off, kHeads, kDim, qkv.data(), probs.data(), dout.data(), dqkv.data());
        }
        benchmark::DoNotOptimize(dqkv.data());
    }
}
BENCHMARK_TEMPLATE(BM_AttentionBackward, true)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_AttentionBackward, false)->Unit(benchmark::kMillisecond);

template <bool Parallel>
void BM_LayerNorm(benchmark::State& state) {
    const auto x = random_vec(static_cast<std::size_t>(kRows) * kDim, 6);
    const auto dy = random_vec(x.size(), 7);
    const std::vector<float> gain(kDim, 1.0f), bias(kDim, 0.0f);
    std::vector<float> y(x.size()), mean(kRows), rstd(kRows), dx(x.size()), dg(kDim), db(kDim);
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::layernorm_forward(kRows, kDim, x.data(), gain.data(), bias.data(), y.data(), mean.data(), rstd.data());
            k::layernorm_backward(kRows, kDim, dy.data(), x.data(), mean.data(), rstd.data(), gain.data(), dx.data(),
                                  dg.data(), db.data());
        } else {
            ref::layernorm_forward(kRows, kDim, x.data(), gain.data(), bias.data(), y.data(), mean.data(), rstd.data());
            ref::layernorm_backward(kRows, kDim, dy.data(), x.data(), mean.data(), rstd.data(), gain.data(),
                                    dx.data(), dg.data(), db.data());
        }
        benchmark::DoNotOptimize(dx.data());
    }
}
BENCHMARK_TEMPLATE(BM_LayerNorm, true)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_LayerNorm, false)->Unit(benchmark::kMillisecond);

template <bool Parallel>
void BM_Gelu(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(kRows) * 4 * kDim;
    const auto u = random_vec(n, 8);
    const auto dout = random_vec(n, 9);
    std::vector<float> y(n), du(n);
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::gelu_forward(n, u.data(), y.data());
            k::gelu_backward(n, u.data(), dout.data(), du.data());
        } else {
            ref::gelu_forward(n, u.data(), y.data());
            ref::gelu_backward(n, u.data(), dout.data(), du.data());
        }
        benchmark::DoNotOptimize(du.data());
    }
}
BENCHMARK_TEMPLATE(BM_Gelu, true)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_Gelu, false)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

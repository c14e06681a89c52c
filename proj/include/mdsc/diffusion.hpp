#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mdsc/matrix.hpp"
#include "mdsc/random.hpp"
#include "mdsc/sequence.hpp"

namespace mdsc {

/// Cosine masking schedule: probability that a target token is masked at
/// noise level t. Exactly 0 at t = 0 (clean) and 1 at t = 1 (fully masked).
double mask_probability(double t);

/// One corrupted sequence.
///   mask_flags[i]  => xt[i] == mask id and !condition_flags[i]
///   !mask_flags[i] => xt[i] == x0[i]
struct MaskedSequence {
    std::vector<TokenId> x0;
    std::vector<TokenId> xt;
    std::vector<std::uint8_t> mask_flags;
    std::vector<std::uint8_t> condition_flags;
    double t = 0.0;

    std::size_t masked_count() const;
};

struct MaskedBatch {
    std::vector<MaskedSequence> sequences;

    std::size_t masked_count() const;
    std::size_t token_count() const;
};

/// Selective forward process: condition positions are copied; each target
/// position is independently replaced by the mask id with probability
/// mask_probability(t).
MaskedSequence corrupt(const TaskSample& sample, double t, TokenId mask_id, Rng& rng);

struct LossValue {
    double loss = 0.0;
    std::size_t masked = 0;
    bool empty_mask = false;
};

/// Mean cross-entropy over masked target positions of the batch. logits[s]
/// holds one row per position of sequence s.
template <typename T>
LossValue masked_loss(std::span<const Matrix<T>> logits, const MaskedBatch& batch);

/// -log softmax(row)[target], computed stably in double.
template <typename T>
double cross_entropy(std::span<const T> row, TokenId target);

}  // namespace mdsc

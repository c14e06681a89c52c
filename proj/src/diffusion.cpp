#include "mdsc/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mdsc/error.hpp"

namespace mdsc {

double mask_probability(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw RangeError("diffusion: noise level t=" + std::to_string(t) + " outside [0,1]");
    if (t == 0.0) return 0.0;  // cos(pi/2) is not exactly 0 in floating point
    if (t == 1.0) return 1.0;
    return std::cos(std::numbers::pi / 2.0 * (1.0 - t));
}

std::size_t MaskedSequence::masked_count() const {
    return static_cast<std::size_t>(std::count(mask_flags.begin(), mask_flags.end(), std::uint8_t{1}));
}

std::size_t MaskedBatch::masked_count() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.masked_count();
    return n;
}

std::size_t MaskedBatch::token_count() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.x0.size();
    return n;
}

MaskedSequence corrupt(const TaskSample& sample, double t, TokenId mask_id, Rng& rng) {
    const double p = mask_probability(t);
    MaskedSequence out;
    out.t = t;
    out.x0 = sample.tokens;
    out.xt = sample.tokens;
    out.mask_flags.assign(sample.tokens.size(), 0);
    out.condition_flags.assign(sample.tokens.size(), 0);
    for (std::size_t i : sample.condition_positions) out.condition_flags[i] = 1;
    for (std::size_t i : sample.target_positions) {
        // One draw per target position keeps the stream layout independent of t.
        if (uniform01(rng) < p) {
            out.xt[i] = mask_id;
            out.mask_flags[i] = 1;
        }
    }
    return out;
}

template <typename T>
double cross_entropy(std::span<const T> row, TokenId target) {
    double mx = -std::numeric_limits<double>::infinity();
    for (T v : row) mx = std::max(mx, static_cast<double>(v));
    double z = 0.0;
    for (T v : row) z += std::exp(static_cast<double>(v) - mx);
    return std::log(z) + mx - static_cast<double>(row[static_cast<std::size_t>(target)]);
}

template <typename T>
LossValue masked_loss(std::span<const Matrix<T>> logits, const MaskedBatch& batch) {
    if (logits.size() != batch.sequences.size()) {
        throw DimensionError("masked_loss: " + std::to_string(logits.size()) + " logit blocks for " +
                             std::to_string(batch.sequences.size()) + " sequences");
    }
    LossValue out;
    double sum = 0.0;
    for (std::size_t s = 0; s < logits.size(); ++s) {
        const auto& seq = batch.sequences[s];
        const auto& lg = logits[s];
        if (static_cast<std::size_t>(lg.rows) != seq.x0.size()) {
            throw DimensionError("masked_loss: logits have " + std::to_string(lg.rows) + " rows for a sequence of " +
                                 std::to_string(seq.x0.size()));
        }
        for (std::size_t i = 0; i < seq.x0.size(); ++i) {
            if (!seq.mask_flags[i] || seq.condition_flags[i]) continue;
            if (seq.x0[i] < 0 || seq.x0[i] >= lg.cols) {
                throw DimensionError("masked_loss: target id exceeds logit width");
            }
            sum += cross_entropy<T>(lg.row_span(static_cast<int>(i)), seq.x0[i]);
            ++out.masked;
        }
    }
    if (out.masked == 0) {
        out.empty_mask = true;
        return out;
    }
    out.loss = sum / static_cast<double>(out.masked);
    return out;
}

template LossValue masked_loss<float>(std::span<const Matrix<float>>, const MaskedBatch&);
template LossValue masked_loss<double>(std::span<const Matrix<double>>, const MaskedBatch&);
template double cross_entropy<float>(std::span<const float>, TokenId);
template double cross_entropy<double>(std::span<const double>, TokenId);

}  // namespace mdsc

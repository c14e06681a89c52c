#include "doctest.h"

#include <cmath>
#include <numbers>

#include "mdsc/diffusion.hpp"
#include "mdsc/error.hpp"

using namespace mdsc;

namespace {

TokenSpace space() { return TokenSpace::make(TextTokenizer({"a", "b", "c"}), CodecSpec{}); }

// Sample whose target is `len` speech frames plus the closing delimiter.
TaskSample long_sample(const TokenSpace& s, std::size_t chars) {
    std::string text(chars, 'a');
    for (std::size_t i = 1; i < chars; i += 2) text[i] = 'b';
    Rng rng(1);
    return build(TaskKind::TTS, "a b", "", text, s, rng);
}

MaskedSequence all_masked(std::size_t len, TokenId target, TokenId mask) {
    MaskedSequence m;
    m.x0.assign(len, target);
    m.xt.assign(len, mask);
    m.mask_flags.assign(len, 1);
    m.condition_flags.assign(len, 0);
    m.t = 1.0;
    return m;
}

}  // namespace

TEST_CASE("cosine schedule values") {
    CHECK(mask_probability(0.0) == 0.0);
    CHECK(mask_probability(1.0) == 1.0);
    CHECK(std::abs(mask_probability(0.5) - std::numbers::sqrt2 / 2) <= 1e-12);
    double prev = 0.0;
    for (int k = 0; k <= 1000; ++k) {
        const double g = mask_probability(k / 1000.0);
        CHECK(g >= prev);
        prev = g;
    }
    CHECK_THROWS_AS(mask_probability(-0.01), RangeError);
    CHECK_THROWS_AS(mask_probability(1.01), RangeError);
    CHECK_THROWS_AS(mask_probability(std::nan("")), RangeError);
}

TEST_CASE("corrupt at the endpoints") {
    const auto s = space();
    const auto x = long_sample(s, 30);
    Rng rng(2);
    const auto full = corrupt(x, 1.0, s.vocab.mask_id(), rng);
    for (auto p : x.target_positions) CHECK(full.xt[p] == s.vocab.mask_id());
    for (auto p : x.condition_positions) CHECK(full.xt[p] == x.tokens[p]);
    CHECK(full.masked_count() == x.target_positions.size());
    const auto none = corrupt(x, 0.0, s.vocab.mask_id(), rng);
    CHECK(none.xt == x.tokens);
    CHECK(none.masked_count() == 0);
}

TEST_CASE("corrupt flag invariants and determinism") {
    const auto s = space();
    const auto x = long_sample(s, 20);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng a(seed), b(seed);
        const double t = 0.02 * static_cast<double>(seed);
        const auto m = corrupt(x, t, s.vocab.mask_id(), a);
        const auto m2 = corrupt(x, t, s.vocab.mask_id(), b);
        CHECK(m.xt == m2.xt);
        CHECK(m.x0 == x.tokens);
        for (std::size_t i = 0; i < m.xt.size(); ++i) {
            if (m.mask_flags[i]) {
                CHECK(m.xt[i] == s.vocab.mask_id());
                CHECK_FALSE(m.condition_flags[i]);
            } else {
                CHECK(m.xt[i] == m.x0[i]);
            }
        }
    }
}

TEST_CASE("masked fraction tracks gamma") {
    const auto s = space();
    const auto x = long_sample(s, 200);  // 401 target positions
    for (int k = 1; k <= 9; ++k) {
        const double t = k / 10.0;
        std::size_t masked = 0, total = 0;
        Rng rng(derive_seed(42, {static_cast<std::uint64_t>(k)}));
        while (total < 10000) {
            const auto m = corrupt(x, t, s.vocab.mask_id(), rng);
            masked += m.masked_count();
            total += x.target_positions.size();
        }
        CAPTURE(t);
        CHECK(std::abs(static_cast<double>(masked) / static_cast<double>(total) - mask_probability(t)) <= 0.02);
    }
}

TEST_CASE("uniform logits give ln|V|") {
    for (int v : {10, 524}) {
        MaskedBatch batch;
        batch.sequences.push_back(all_masked(7, 3, v - 1));
        std::vector<Matrix<double>> logits(1);
        logits[0].reset(7, v);
        const auto l = masked_loss<double>(logits, batch);
        CHECK(std::abs(l.loss - std::log(static_cast<double>(v))) <= 1e-9);
        CHECK(l.masked == 7);
        CHECK_FALSE(l.empty_mask);
    }
}

TEST_CASE("confident correct logits give near-zero loss") {
    MaskedBatch batch;
    batch.sequences.push_back(all_masked(4, 2, 9));
    std::vector<Matrix<float>> logits(1);
    logits[0].reset(4, 10);
    for (int r = 0; r < 4; ++r) logits[0](r, 2) = 200.0f;
    CHECK(masked_loss<float>(logits, batch).loss < 1e-12);
}

TEST_CASE("empty mask gives zero with a flag") {
    const auto s = space();
    const auto x = long_sample(s, 5);
    Rng rng(1);
    MaskedBatch batch;
    batch.sequences.push_back(corrupt(x, 0.0, s.vocab.mask_id(), rng));
    std::vector<Matrix<float>> logits(1);
    logits[0].reset(static_cast<int>(x.tokens.size()), s.vocab.total());
    const auto l = masked_loss<float>(logits, batch);
    CHECK(l.loss == 0.0);
    CHECK(l.empty_mask);
}

TEST_CASE("loss ignores unmasked and condition rows") {
    const auto s = space();
    const auto x = long_sample(s, 12);
    Rng rng(3);
    MaskedBatch batch;
    batch.sequences.push_back(corrupt(x, 0.6, s.vocab.mask_id(), rng));
    const auto& m = batch.sequences[0];
    std::vector<Matrix<double>> logits(1);
    logits[0].reset(static_cast<int>(x.tokens.size()), s.vocab.total());
    for (auto& v : logits[0].data) v = uniform01(rng);
    const double base = masked_loss<double>(logits, batch).loss;
    for (std::size_t i = 0; i < m.xt.size(); ++i) {
        if (m.mask_flags[i]) continue;
        for (int c = 0; c < s.vocab.total(); ++c) logits[0](static_cast<int>(i), c) += 5.0 * uniform01(rng);
    }
    CHECK(masked_loss<double>(logits, batch).loss == base);
}

TEST_CASE("shape mismatch") {
    MaskedBatch batch;
    batch.sequences.push_back(all_masked(4, 2, 9));
    std::vector<Matrix<float>> logits(1);
    logits[0].reset(3, 10);
    CHECK_THROWS_AS(masked_loss<float>(logits, batch), DimensionError);
    std::vector<Matrix<float>> two(2);
    CHECK_THROWS_AS(masked_loss<float>(two, batch), DimensionError);
}

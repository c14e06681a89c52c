#include "doctest.h"

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "mdsc/datagen.hpp"
#include "mdsc/error.hpp"
#include "mdsc/evalkit.hpp"
#include "oracle_model.hpp"

using namespace mdsc;

namespace {

using Words = std::vector<std::string>;

// Minimal edit cost by exhaustive recursion over every alignment.
std::size_t brute_edit(const Words& a, std::size_t i, const Words& b, std::size_t j) {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    const std::size_t match = brute_edit(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
    const std::size_t del = brute_edit(a, i + 1, b, j) + 1;
    const std::size_t ins = brute_edit(a, i, b, j + 1) + 1;
    return std::min({match, del, ins});
}

std::vector<Words> all_sequences(const Words& alphabet, std::size_t max_len) {
    std::vector<Words> out = {{}};
    std::vector<Words> frontier = {{}};
    for (std::size_t len = 1; len <= max_len; ++len) {
        std::vector<Words> next;
        for (const auto& w : frontier) {
            for (const auto& a : alphabet) {
                auto x = w;
                x.push_back(a);
                next.push_back(x);
            }
        }
        out.insert(out.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return out;
}

TokenSpace space() {
    return TokenSpace::make(TextTokenizer({"red", "fox", "runs", "far", "one", "two", "is"}), CodecSpec{});
}

}  // namespace

TEST_CASE("wer examples") {
    CHECK(wer("a b c", "a b c") == 0.0);
    CHECK(wer("a b c", "a x c") == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(wer("a b c", "") == 1.0);
    CHECK(wer("", "") == 0.0);
    CHECK_THROWS_AS(wer("", "a"), UndefinedRateError);
    CHECK(wer("a b", "a b c d") == 1.0);
}

TEST_CASE("dynamic programming matches brute force on all short pairs") {
    const auto seqs = all_sequences({"x", "y", "z"}, 4);
    REQUIRE(seqs.size() == 121);
    for (const auto& r : seqs) {
        for (const auto& h : seqs) {
            REQUIRE(edit_distance(r, h) == brute_edit(r, 0, h, 0));
            if (!r.empty()) {
                REQUIRE(wer(r, h) == static_cast<double>(brute_edit(r, 0, h, 0)) / static_cast<double>(r.size()));
            }
        }
    }
}

TEST_CASE("answer normalization") {
    CHECK(normalize_answer("Forty two") == "42");
    CHECK(normalize_answer("forty-two!") == "42");
    CHECK(normalize_answer("42") == "42");
    CHECK(normalize_answer("zero") == "0");
    CHECK(normalize_answer("one hundred") == "100");
    CHECK(normalize_answer("nine hundred ninety nine") == "999");
    CHECK(normalize_answer("three hundred and five") == "305");
    CHECK(normalize_answer("it is twelve.") == "it is 12");
    CHECK(normalize_answer("twenty one two") == "21 2");
    // Every number spelled by the data generator maps back to its digits.
    for (int n = 0; n <= 999; ++n) REQUIRE(normalize_answer(number_words(n)) == std::to_string(n));
}

TEST_CASE("qa accuracy") {
    const std::vector<QaItem> items = {{"q1", "42"}, {"q2", "7"}, {"q3", "seven"}};
    const std::vector<std::string> resp = {"forty two", "41", "7"};
    const auto s = qa_accuracy(items, resp);
    CHECK(s.correct == 2);
    CHECK(s.accuracy == doctest::Approx(2.0 / 3));
    CHECK_FALSE(s.empty);
    const auto e = qa_accuracy({}, {});
    CHECK(e.accuracy == 0.0);
    CHECK(e.empty);
    CHECK(e.count == 0);
    CHECK_THROWS_AS(qa_accuracy(items, std::vector<std::string>{"x"}), DimensionError);
}

TEST_CASE("masking probe") {
    const auto s = space();
    Rng rng(1);
    const auto sample = build(TaskKind::TTS, "red", "", "red fox runs far one two is red fox runs far", s, rng);
    const int trials = 10000 / static_cast<int>(sample.target_positions.size()) + 1;
    const auto one = masking_probe(1.0, sample, trials, 3, s.vocab.mask_id());
    CHECK(one.fraction == 1.0);
    const auto zero = masking_probe(0.0, sample, trials, 3, s.vocab.mask_id());
    CHECK(zero.fraction == 0.0);
    const auto half = masking_probe(0.5, sample, trials, 3, s.vocab.mask_id());
    CHECK(half.positions >= 10000);
    CHECK(half.lower <= std::numbers::sqrt2 / 2);
    CHECK(half.upper >= std::numbers::sqrt2 / 2);
    CHECK(half.upper - half.lower < 0.03);
}

TEST_CASE("speech evaluation with an oracle is exact") {
    const auto s = space();
    const std::vector<std::string> texts = {"red fox", "runs far one", "two is red fox runs"};
    testing::OracleModel oracle(s.vocab.total(), 256);
    for (std::size_t k = 0; k < texts.size(); ++k) {
        Rng rng(k);  // the evaluator seeds input encoding by item index
        oracle.add(build(TaskKind::TTS, texts[k], "", texts[k], s, rng));
        Rng rng2(k);
        oracle.add(build(TaskKind::ASR, texts[k], "", texts[k], s, rng2));
    }
    for (int div : {1, 2, 4}) {
        DecodePolicy p;
        p.steps_divisor = div;
        const auto tts = tts_eval(oracle, texts, s, p);
        CHECK(tts.corpus_wer == 0.0);
        CHECK(tts.malformed == 0);
        CHECK(tts.items == 3);
        CHECK(tts.reference_words == 10);
        const auto asr = asr_eval(oracle, texts, s, p);
        CHECK(asr.corpus_wer == 0.0);
    }
}

TEST_CASE("untrained model scores near 1") {
    const auto s = space();
    ModelConfig m;
    m.vocab_total = s.vocab.total();
    m.dim = 16;
    m.layers = 1;
    m.heads = 2;
    m.max_len = 128;
    const Denoiser model(init_params<float>(m));
    const std::vector<std::string> texts = {"red fox", "runs far one", "two is red fox runs", "one two"};
    const auto rep = tts_eval(model, texts, s, DecodePolicy{});
    CHECK(rep.corpus_wer >= 0.8);
    CHECK(rep.item_wer.size() == 4);
}

TEST_CASE("qa evaluation grades only the reply") {
    const auto s = space();
    testing::OracleModel oracle(s.vocab.total(), 256);
    const std::vector<DatasetRecord> recs = {{TaskKind::T2T, "one is", "two is one", "two"},
                                             {TaskKind::S2T, "red fox", "far", "one"}};
    for (std::size_t k = 0; k < recs.size(); ++k) {
        Rng rng(k);
        oracle.add(build(recs[k].task, recs[k].user_text, recs[k].think_text, recs[k].reply_text, s, rng));
    }
    const auto rep = qa_eval(oracle, recs, s, DecodePolicy{});
    CHECK(rep.score.accuracy == 1.0);
    CHECK(rep.responses == std::vector<std::string>{"two", "one"});
}

TEST_CASE("metrics report round trip") {
    const std::vector<MetricRow> rows = {{"tts.wer.T=n", 0.0125, 200}, {"qa.accuracy", 0.5, 0}};
    std::stringstream ss;
    write_report(ss, rows);
    CHECK(ss.str() == "tts.wer.T=n 0.0125 200\nqa.accuracy 0.5 0\n");
    const auto back = read_report(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].name == "tts.wer.T=n");
    CHECK(back[0].value == 0.0125);
    CHECK(back[1].count == 0);
}

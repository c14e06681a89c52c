#include "doctest.h"

#include <random>

#include "mdsc/error.hpp"
#include "mdsc/vocab.hpp"

using namespace mdsc;

namespace {
const VocabSpec kFull = build_vocab(126464, 500);
}

TEST_CASE("full-size layout boundaries") {
    CHECK(kFull.special_offset() == 126464);
    CHECK(kFull.speech_offset() == 126473);
    CHECK(kFull.mask_id() == 126973);
    CHECK(kFull.total() == 126974);
    CHECK(speech_code_to_id(kFull, 0) == 126473);
    CHECK(speech_code_to_id(kFull, 499) == 126972);
}

TEST_CASE("toy layout regions") {
    const auto v = build_vocab(10, 4);
    CHECK(v.total() == 24);
    for (TokenId id = 0; id < 10; ++id) CHECK(classify(v, id) == TokenClass::Text);
    for (TokenId id = 10; id < 19; ++id) CHECK(classify(v, id) == TokenClass::Special);
    for (TokenId id = 19; id < 23; ++id) CHECK(classify(v, id) == TokenClass::Speech);
    CHECK(classify(v, 23) == TokenClass::Mask);
    CHECK(special_id(v, "<|t2s|>") == 10);
}

TEST_CASE("classify examples and errors") {
    CHECK(classify(kFull, 0) == TokenClass::Text);
    CHECK(classify(kFull, 126472) == TokenClass::Special);
    CHECK(classify(kFull, 126973) == TokenClass::Mask);
    CHECK_THROWS_AS(classify(kFull, -1), RangeError);
    CHECK_THROWS_AS(classify(kFull, 126974), RangeError);
}

TEST_CASE("special names follow the fixed order") {
    CHECK(special_id(kFull, "<|t2s|>") == 126464);
    CHECK(special_id(kFull, "<|eos|>") == 126472);
    for (std::size_t i = 0; i < kSpecialNames.size(); ++i) {
        CHECK(special_id(kFull, kSpecialNames[i]) == 126464 + static_cast<int>(i));
        CHECK(special_id(kFull, static_cast<Special>(i)) == 126464 + static_cast<int>(i));
    }
    CHECK_THROWS_AS(special_id(kFull, "<|bos|>"), LookupError);
}

TEST_CASE("zero sizes are rejected") {
    CHECK_THROWS_AS(build_vocab(0, 4), ConfigError);
    CHECK_THROWS_AS(build_vocab(4, 0), ConfigError);
}

TEST_CASE("speech offset maps are inverse bijections") {
    for (int k = 0; k < 500; ++k) CHECK(id_to_speech_code(kFull, speech_code_to_id(kFull, k)) == k);
    CHECK_THROWS_AS(speech_code_to_id(kFull, 500), RangeError);
    CHECK_THROWS_AS(speech_code_to_id(kFull, -1), RangeError);
    CHECK_THROWS_AS(id_to_speech_code(kFull, 126472), RangeError);
    CHECK_THROWS_AS(id_to_speech_code(kFull, kFull.mask_id()), RangeError);
}

TEST_CASE("partition fuzz over random vocabularies") {
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> size(1, 60);
    for (int trial = 0; trial < 200; ++trial) {
        const int text = size(rng), speech = size(rng);
        const auto v = build_vocab(text, speech);
        REQUIRE(v.total() == text + 9 + speech + 1);
        int counts[4] = {0, 0, 0, 0};
        for (TokenId id = 0; id < v.total(); ++id) {
            const auto c = classify(v, id);
            ++counts[static_cast<int>(c)];
            CHECK((c == TokenClass::Text) == (id < text));
            CHECK(is_text(v, id) == (c == TokenClass::Text));
            CHECK(is_speech(v, id) == (c == TokenClass::Speech));
        }
        CHECK(counts[0] == text);
        CHECK(counts[1] == 9);
        CHECK(counts[2] == speech);
        CHECK(counts[3] == 1);
    }
}

#include "doctest.h"

#include <string>

#include "mdsc/codec.hpp"
#include "mdsc/error.hpp"

using namespace mdsc;

namespace {

CodecSpec letters(int r, int d) {
    CodecSpec s;
    s.charset = "abcdefghijklmnopqrstuvwxyz";
    s.variants = r;
    s.frames_per_char = d;
    return s;
}

std::string random_text(Rng& rng, const std::string& alphabet, std::size_t max_len) {
    const std::size_t len = uniform_index(rng, max_len + 1);
    std::string s;
    for (std::size_t i = 0; i < len; ++i) {
        // Mixed case and extra whitespace exercise normalization.
        char c = alphabet[uniform_index(rng, alphabet.size())];
        if (c >= 'a' && c <= 'z' && uniform01(rng) < 0.2) c = static_cast<char>(c - 'a' + 'A');
        if (c == ' ' && uniform01(rng) < 0.3) s += "\t ";
        s.push_back(c);
    }
    return s;
}

}  // namespace

TEST_CASE("normalize") {
    CHECK(normalize("  Hello \t  World\n") == "hello world");
    CHECK(normalize("") == "");
    CHECK(normalize("   ") == "");
    CHECK(normalize("a") == "a");
}

TEST_CASE("encode examples") {
    Rng rng(1);
    CHECK(encode(letters(1, 2), "ab", rng) == std::vector<int>{0, 0, 1, 1});
    for (int k = 0; k < 50; ++k) {
        const auto codes = encode(letters(3, 1), "a", rng);
        REQUIRE(codes.size() == 1);
        CHECK(codes[0] >= 0);
        CHECK(codes[0] <= 2);
    }
}

TEST_CASE("encode rejects characters outside the charset") {
    Rng rng(1);
    try {
        encode(CodecSpec{}, "hi there!?", rng);
        FAIL("expected an error");
    } catch (const UnencodableInputError& e) {
        CHECK(e.offending() == "!?");
    }
}

TEST_CASE("decode examples") {
    CHECK(decode(letters(1, 2), std::vector<int>{0, 0, 1, 1}).text == "ab");
    const auto empty = decode(letters(1, 2), std::vector<int>{});
    CHECK(empty.text.empty());
    CHECK_FALSE(empty.truncated_tail);
}

TEST_CASE("decode drops and flags a trailing partial run") {
    const auto r = decode(letters(1, 2), std::vector<int>{0, 0, 1, 1, 2});
    CHECK(r.text == "ab");
    CHECK(r.truncated_tail);
}

TEST_CASE("decode rejects unmappable codes") {
    const CodecSpec spec;  // 37 characters x 2 variants = 74 used codes
    CHECK_THROWS_AS(decode(spec, std::vector<int>{74, 74}), UnmappableCodeError);
    CHECK_THROWS_AS(decode(spec, std::vector<int>{-1, 0}), UnmappableCodeError);
    CHECK_NOTHROW(decode(spec, std::vector<int>{73, 72}));
}

TEST_CASE("decode vote ties go to the smaller character") {
    // d=2 run with one frame of 'c' and one of 'b' -> 'b'.
    CHECK(decode(letters(1, 2), std::vector<int>{2, 1}).text == "b");
    // Variants of the same character agree even when no code repeats.
    CHECK(decode(letters(3, 3), std::vector<int>{3, 4, 5}).text == "b");
}

TEST_CASE("round trip over fuzzed strings") {
    const CodecSpec spec;
    Rng rng(2024);
    for (int k = 0; k < 1000; ++k) {
        const std::string s = random_text(rng, spec.charset, 40);
        Rng enc(static_cast<std::uint64_t>(k));
        const auto codes = encode(spec, s, enc);
        CHECK(codes.size() == static_cast<std::size_t>(spec.frames_per_char) * normalize(s).size());
        CHECK(decode(spec, codes).text == normalize(s));
    }
}

TEST_CASE("single corrupted frame per run is recovered at d=3") {
    // Exhaustive over positions and replacement codes for a 5-char string.
    CodecSpec spec = letters(2, 3);
    spec.charset = "abcde";
    Rng rng(9);
    const std::string text = "badce";
    const auto clean = encode(spec, text, rng);
    int cases = 0;
    for (std::size_t pos = 0; pos < clean.size(); ++pos) {
        for (int code = 0; code < spec.used_codes(); ++code) {
            auto codes = clean;
            codes[pos] = code;
            CHECK(decode(spec, codes).text == text);
            ++cases;
        }
    }
    CHECK(cases == 15 * 10);
}

TEST_CASE("duration at 25 frames per second") {
    CHECK(duration_seconds(25) == 1.0);
    CHECK(duration_seconds(0) == 0.0);
    CHECK(duration_seconds(10) == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("words-per-second rule") {
    CHECK(wps_validate(10, 4.0) == WpsVerdict::Pass);
    CHECK(wps_validate(20, 2.0) == WpsVerdict::RejectTooFast);
    CHECK(wps_validate(3, 0.1) == WpsVerdict::Skipped);
    CHECK(wps_validate(15, 10.0) == WpsVerdict::Pass);      // 1.5
    CHECK(wps_validate(11, 2.0) == WpsVerdict::Pass);       // 5.5
    CHECK(wps_validate(149, 100.0) == WpsVerdict::RejectTooSlow);
    CHECK(wps_validate(551, 100.0) == WpsVerdict::RejectTooFast);
    CHECK_THROWS_AS(wps_validate(5, 0.0), InvalidMeasurementError);
    CHECK_THROWS_AS(wps_validate(5, -1.0), InvalidMeasurementError);
    CHECK(wps_validate(4, 0.0) == WpsVerdict::Skipped);
}

TEST_CASE("codec parameter validation") {
    CodecSpec s;
    s.speech_size = 73;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.speech_size = 74;
    CHECK_NOTHROW(s.validate());
    s.charset = "abca";
    CHECK_THROWS_AS(s.validate(), ConfigError);
    CHECK_THROWS_AS(letters(0, 1).validate(), ConfigError);
}

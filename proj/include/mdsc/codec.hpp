#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdsc/random.hpp"

namespace mdsc {

/// Deterministic stand-in for an acoustic tokenizer + vocoder pair. Each
/// character is rendered as `frames_per_char` codes, each code one of
/// `variants` interchangeable ids for that character.
struct CodecSpec {
    std::string charset = "abcdefghijklmnopqrstuvwxyz 0123456789";
    int variants = 2;
    int frames_per_char = 2;
    int speech_size = 500;

    static constexpr double kFrameRate = 25.0;  // frames per second

    void validate() const;
    int code_for(std::size_t char_index, int variant) const {
        return static_cast<int>(char_index) * variants + variant;
    }
    int used_codes() const { return static_cast<int>(charset.size()) * variants; }
};

/// Lowercase, collapse whitespace runs to one space, trim.
std::string normalize(std::string_view text);

std::vector<int> encode(const CodecSpec& spec, std::string_view text, Rng& rng);

struct DecodeResult {
    std::string text;
    bool truncated_tail = false;  // a trailing partial run was dropped
};

DecodeResult decode(const CodecSpec& spec, std::span<const int> codes);

double duration_seconds(std::size_t code_count);
inline double duration_seconds(std::span<const int> codes) { return duration_seconds(codes.size()); }

enum class WpsVerdict { Pass, RejectTooSlow, RejectTooFast, Skipped };

inline constexpr int kWpsMinWords = 5;
inline constexpr double kWpsLow = 1.5;
inline constexpr double kWpsHigh = 5.5;

WpsVerdict wps_validate(int word_count, double duration_seconds);

const char* to_string(WpsVerdict v);

}  // namespace mdsc

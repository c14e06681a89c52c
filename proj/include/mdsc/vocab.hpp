#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace mdsc {

using TokenId = std::int32_t;

enum class TokenClass { Text, Special, Speech, Mask };

// Task tokens first, then the four segment delimiters.
enum class Special : int { T2S = 0, ASR, S2S, S2T, T2T, SOT, EOT, SOS, EOS };

inline constexpr std::array<std::string_view, 9> kSpecialNames = {
    "<|t2s|>", "<|asr|>", "<|s2s|>", "<|s2t|>", "<|t2t|>",
    "<|sot|>", "<|eot|>", "<|sos|>", "<|eos|>",
};

/// Layout of the unified token space:
///   [0, text_size)                  text
///   [special_offset, speech_offset) the nine special tokens
///   [speech_offset, mask_id)        speech codes
///   {mask_id}                       the absorbing mask token
struct VocabSpec {
    int text_size = 0;
    int speech_size = 0;

    static constexpr int special_count() { return static_cast<int>(kSpecialNames.size()); }
    constexpr TokenId special_offset() const { return text_size; }
    constexpr TokenId speech_offset() const { return text_size + special_count(); }
    constexpr TokenId mask_id() const { return speech_offset() + speech_size; }
    constexpr int total() const { return mask_id() + 1; }

    friend bool operator==(const VocabSpec&, const VocabSpec&) = default;
};

VocabSpec build_vocab(int text_size, int speech_size);

TokenClass classify(const VocabSpec& spec, TokenId id);
bool is_speech(const VocabSpec& spec, TokenId id) noexcept;
bool is_text(const VocabSpec& spec, TokenId id) noexcept;

TokenId speech_code_to_id(const VocabSpec& spec, int code);
int id_to_speech_code(const VocabSpec& spec, TokenId id);

TokenId special_id(const VocabSpec& spec, std::string_view name);
constexpr TokenId special_id(const VocabSpec& spec, Special s) {
    return spec.special_offset() + static_cast<int>(s);
}

}  // namespace mdsc

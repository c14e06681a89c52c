#include "mdsc/vocab.hpp"

#include <string>

#include "mdsc/error.hpp"

namespace mdsc {

VocabSpec build_vocab(int text_size, int speech_size) {
    if (text_size < 1 || speech_size < 1) {
        throw ConfigError("vocab: text_size and speech_size must be >= 1 (got " +
                          std::to_string(text_size) + ", " + std::to_string(speech_size) + ")");
    }
    return VocabSpec{text_size, speech_size};
}

TokenClass classify(const VocabSpec& spec, TokenId id) {
    if (id < 0 || id >= spec.total()) {
        throw RangeError("vocab: token id " + std::to_string(id) + " outside [0," +
                         std::to_string(spec.total()) + ")");
    }
    if (id < spec.special_offset()) return TokenClass::Text;
    if (id < spec.speech_offset()) return TokenClass::Special;
    if (id < spec.mask_id()) return TokenClass::Speech;
    return TokenClass::Mask;
}

bool is_speech(const VocabSpec& spec, TokenId id) noexcept {
    return id >= spec.speech_offset() && id < spec.mask_id();
}

bool is_text(const VocabSpec& spec, TokenId id) noexcept {
    return id >= 0 && id < spec.special_offset();
}

TokenId speech_code_to_id(const VocabSpec& spec, int code) {
    if (code < 0 || code >= spec.speech_size) {
        throw RangeError("vocab: speech code " + std::to_string(code) + " outside [0," +
                         std::to_string(spec.speech_size) + ")");
    }
    return spec.speech_offset() + code;
}

int id_to_speech_code(const VocabSpec& spec, TokenId id) {
    if (!is_speech(spec, id)) {
        throw RangeError("vocab: token id " + std::to_string(id) + " is not a speech id");
    }
    return id - spec.speech_offset();
}

TokenId special_id(const VocabSpec& spec, std::string_view name) {
    for (std::size_t i = 0; i < kSpecialNames.size(); ++i) {
        if (kSpecialNames[i] == name) return spec.special_offset() + static_cast<TokenId>(i);
    }
    throw LookupError("vocab: unknown special token '" + std::string(name) + "'");
}

}  // namespace mdsc

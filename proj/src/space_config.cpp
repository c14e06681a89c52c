#include "mdsc/space_config.hpp"

#include "mdsc/error.hpp"

namespace mdsc {

void write_codec(Config& c, const CodecSpec& codec) {
    c.set("codec.charset", codec.charset);
    c.set("codec.variants", codec.variants);
    c.set("codec.frames_per_char", codec.frames_per_char);
    c.set("vocab.speech_size", codec.speech_size);
}

CodecSpec read_codec(const Config& c) {
    CodecSpec codec;
    codec.charset = c.get_or("codec.charset", codec.charset);
    codec.variants = static_cast<int>(c.get_int_or("codec.variants", codec.variants));
    codec.frames_per_char = static_cast<int>(c.get_int_or("codec.frames_per_char", codec.frames_per_char));
    codec.speech_size = static_cast<int>(c.get_int_or("vocab.speech_size", codec.speech_size));
    codec.validate();
    return codec;
}

void write_token_space(Config& c, const TokenSpace& space) {
    write_codec(c, space.codec);
    c.set("vocab.text_size", space.vocab.text_size);
    std::string names;
    for (std::size_t i = 0; i < kSpecialNames.size(); ++i) {
        if (i) names += ',';
        names += kSpecialNames[i];
    }
    c.set("vocab.special_names", names);
    std::string words;
    for (const auto& w : space.text.vocabulary()) {
        if (!words.empty()) words += ' ';
        words += w;
    }
    c.set("tokenizer.words", words);
}

TokenSpace read_token_space(const Config& c) {
    if (c.has("vocab.special_names")) {
        const auto names = c.get_list("vocab.special_names");
        if (names.size() != kSpecialNames.size() || !std::equal(names.begin(), names.end(), kSpecialNames.begin())) {
            throw ConfigError("config: vocab.special_names does not match the built-in special token table");
        }
    }
    auto space = TokenSpace::make(TextTokenizer(c.get_list("tokenizer.words", ' ')), read_codec(c));
    if (c.has("vocab.text_size") && c.get_int("vocab.text_size") != space.vocab.text_size) {
        throw ConfigError("config: vocab.text_size disagrees with tokenizer.words");
    }
    return space;
}

}  // namespace mdsc

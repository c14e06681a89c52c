#pragma once

#include "mdsc/config.hpp"
#include "mdsc/sequence.hpp"

namespace mdsc {

// vocab.*, codec.* and tokenizer.words keys.
void write_codec(Config& c, const CodecSpec& codec);
CodecSpec read_codec(const Config& c);
void write_token_space(Config& c, const TokenSpace& space);
TokenSpace read_token_space(const Config& c);

}  // namespace mdsc

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mdsc/vocab.hpp"

namespace mdsc {

/// Word-level text tokenizer with a vocabulary fixed at training time.
/// Id 0 is the unknown word; id 1 is the paragraph marker that separates a
/// thinking trace from a text reply.
class TextTokenizer {
public:
    static constexpr TokenId kUnknown = 0;
    static constexpr TokenId kParagraph = 1;
    static constexpr std::string_view kUnknownWord = "<unk>";
    static constexpr std::string_view kParagraphWord = "\n\n";

    TextTokenizer();
    // Words are deduplicated and sorted so the id assignment depends only on
    // the word set.
    explicit TextTokenizer(std::vector<std::string> words);

    static std::vector<std::string> split_words(std::string_view text);

    std::vector<TokenId> encode(std::string_view text) const;
    TokenId id_of(std::string_view word) const;
    // Joins words with single spaces; the paragraph marker renders as "\n\n".
    std::string decode(std::span<const TokenId> ids) const;
    const std::string& word(TokenId id) const;

    int size() const { return static_cast<int>(words_.size()); }
    // Ordinary words only (excludes the two reserved entries).
    std::vector<std::string> vocabulary() const;

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, TokenId> index_;
};

}  // namespace mdsc

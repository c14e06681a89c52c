#include "mdsc/tokenizer.hpp"

#include <algorithm>

#include "mdsc/codec.hpp"
#include "mdsc/error.hpp"

namespace mdsc {

TextTokenizer::TextTokenizer() : TextTokenizer(std::vector<std::string>{}) {}

TextTokenizer::TextTokenizer(std::vector<std::string> words) {
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    words_.reserve(words.size() + 2);
    words_.emplace_back(kUnknownWord);
    words_.emplace_back(kParagraphWord);
    for (auto& w : words) {
        if (w.empty() || w == kUnknownWord || w == kParagraphWord) continue;
        words_.push_back(std::move(w));
    }
    for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], static_cast<TokenId>(i));
}

std::vector<std::string> TextTokenizer::split_words(std::string_view text) {
    std::vector<std::string> out;
    const std::string norm = normalize(text);
    std::size_t start = 0;
    while (start < norm.size()) {
        std::size_t end = norm.find(' ', start);
        if (end == std::string::npos) end = norm.size();
        out.emplace_back(norm.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

std::vector<TokenId> TextTokenizer::encode(std::string_view text) const {
    std::vector<TokenId> ids;
    for (const auto& w : split_words(text)) ids.push_back(id_of(w));
    return ids;
}

TokenId TextTokenizer::id_of(std::string_view word) const {
    auto it = index_.find(std::string(word));
    return it == index_.end() ? kUnknown : it->second;
}

const std::string& TextTokenizer::word(TokenId id) const {
    if (id < 0 || id >= size()) throw RangeError("tokenizer: text id " + std::to_string(id) + " out of range");
    return words_[static_cast<std::size_t>(id)];
}

std::string TextTokenizer::decode(std::span<const TokenId> ids) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out += word(ids[i]);
    }
    return out;
}

std::vector<std::string> TextTokenizer::vocabulary() const {
    return {words_.begin() + 2, words_.end()};
}

}  // namespace mdsc

#include "mdsc/codec.hpp"

#include <cctype>

#include "mdsc/error.hpp"

namespace mdsc {

void CodecSpec::validate() const {
    if (charset.empty()) throw ConfigError("codec: empty charset");
    if (variants < 1 || frames_per_char < 1) {
        throw ConfigError("codec: variants and frames_per_char must be >= 1");
    }
    if (used_codes() > speech_size) {
        throw ConfigError("codec: variants * |charset| = " + std::to_string(used_codes()) +
                          " exceeds speech_size " + std::to_string(speech_size));
    }
    for (std::size_t i = 0; i < charset.size(); ++i) {
        if (charset.find(charset[i], i + 1) != std::string::npos) {
            throw ConfigError(std::string("codec: duplicate charset character '") + charset[i] + "'");
        }
    }
}

std::string normalize(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::vector<int> encode(const CodecSpec& spec, std::string_view text, Rng& rng) {
    const std::string norm = normalize(text);
    std::string offending;
    for (char c : norm) {
        if (spec.charset.find(c) == std::string::npos && offending.find(c) == std::string::npos) {
            offending.push_back(c);
        }
    }
    if (!offending.empty()) {
        throw UnencodableInputError("codec: characters outside charset: '" + offending + "'", offending);
    }
    std::vector<int> codes;
    codes.reserve(norm.size() * static_cast<std::size_t>(spec.frames_per_char));
    std::uniform_int_distribution<int> pick(0, spec.variants - 1);
    for (char c : norm) {
        const std::size_t idx = spec.charset.find(c);
        for (int f = 0; f < spec.frames_per_char; ++f) {
            const int variant = spec.variants == 1 ? 0 : pick(rng);
            codes.push_back(spec.code_for(idx, variant));
        }
    }
    return codes;
}

DecodeResult decode(const CodecSpec& spec, std::span<const int> codes) {
    const std::size_t d = static_cast<std::size_t>(spec.frames_per_char);
    const int used = spec.used_codes();
    for (int code : codes) {
        if (code < 0 || code >= used) {
            throw UnmappableCodeError("codec: code " + std::to_string(code) +
                                      " maps to no character (valid range [0," +
                                      std::to_string(used) + "))");
        }
    }
    DecodeResult result;
    const std::size_t runs = codes.size() / d;
    result.truncated_tail = codes.size() % d != 0;
    result.text.reserve(runs);
    std::vector<int> votes(spec.charset.size());
    for (std::size_t r = 0; r < runs; ++r) {
        std::fill(votes.begin(), votes.end(), 0);
        for (std::size_t f = 0; f < d; ++f) ++votes[static_cast<std::size_t>(codes[r * d + f] / spec.variants)];
        // Majority by character; ties resolve to the smallest index.
        std::size_t best = 0;
        for (std::size_t c = 1; c < votes.size(); ++c) {
            if (votes[c] > votes[best]) best = c;
        }
        result.text.push_back(spec.charset[best]);
    }
    return result;
}

double duration_seconds(std::size_t code_count) {
    return static_cast<double>(code_count) / CodecSpec::kFrameRate;
}

WpsVerdict wps_validate(int word_count, double duration_seconds) {
    if (word_count < kWpsMinWords) return WpsVerdict::Skipped;
    if (!(duration_seconds > 0.0)) {
        throw InvalidMeasurementError("wps: nonpositive duration for a " + std::to_string(word_count) +
                                      "-word utterance");
    }
    const double wps = word_count / duration_seconds;
    if (wps < kWpsLow) return WpsVerdict::RejectTooSlow;
    if (wps > kWpsHigh) return WpsVerdict::RejectTooFast;
    return WpsVerdict::Pass;
}

const char* to_string(WpsVerdict v) {
    switch (v) {
        case WpsVerdict::Pass: return "pass";
        case WpsVerdict::RejectTooSlow: return "reject-too-slow";
        case WpsVerdict::RejectTooFast: return "reject-too-fast";
        case WpsVerdict::Skipped: return "skipped";
    }
    return "?";
}

}  // namespace mdsc

#include "mdsc/datagen.hpp"

#include "mdsc/error.hpp"
#include "mdsc/random.hpp"

namespace mdsc {

const std::vector<std::string>& default_lexicon() {
    static const std::vector<std::string> words = {
        "able", "acid", "army", "baby", "back", "ball", "band", "bank", "bear", "bird",
        "blue", "boat", "body", "bone", "book", "cake", "calm", "camp", "card", "city",
        "coat", "cold", "dark", "deer", "desk", "door", "duck", "east", "farm", "fish",
        "frog", "gold", "hill", "home", "king", "lamp", "lion", "milk", "moon", "nest",
        "park", "rain", "road", "rose", "salt", "ship", "snow", "star", "tree", "wind"};
    return words;
}

std::vector<std::string> random_sentences(const SentenceOptions& opt) {
    if (opt.size < 1) throw ConfigError("gen-data: size must be >= 1");
    if (opt.min_words < 1 || opt.max_words < opt.min_words) throw ConfigError("gen-data: bad sentence length range");
    if (opt.lexicon.empty()) throw ConfigError("gen-data: empty lexicon");
    Rng rng(derive_seed(opt.seed, {0x5e47}));
    std::vector<std::string> out;
    out.reserve(opt.size);
    for (std::size_t k = 0; k < opt.size; ++k) {
        const int len = opt.min_words + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(opt.max_words - opt.min_words + 1)));
        std::string s;
        for (int w = 0; w < len; ++w) {
            if (w) s += ' ';
            s += opt.lexicon[uniform_index(rng, opt.lexicon.size())];
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<DatasetRecord> copy_asr_tts(const SentenceOptions& opt) {
    std::vector<DatasetRecord> out;
    for (const auto& s : random_sentences(opt)) {
        out.push_back({TaskKind::TTS, s, "", s});
        out.push_back({TaskKind::ASR, s, "", s});
    }
    return out;
}

std::vector<DatasetRecord> lm_corpus(const SentenceOptions& opt) {
    std::vector<DatasetRecord> out;
    for (const auto& s : random_sentences(opt)) {
        const auto words = TextTokenizer::split_words(s);
        const std::size_t cut = std::max<std::size_t>(1, words.size() / 2);
        std::string head, tail;
        for (std::size_t i = 0; i < words.size(); ++i) {
            std::string& dst = i < cut ? head : tail;
            if (!dst.empty()) dst += ' ';
            dst += words[i];
        }
        if (tail.empty()) continue;
        out.push_back({TaskKind::T2T, head, "", tail});
    }
    return out;
}

std::string number_words(int n) {
    static const char* ones[] = {"zero",    "one",     "two",     "three",     "four",     "five",    "six",
                                 "seven",   "eight",   "nine",    "ten",       "eleven",   "twelve",  "thirteen",
                                 "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};
    static const char* tens[] = {"", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};
    if (n < 0 || n > 999) throw RangeError("number_words: " + std::to_string(n) + " outside [0, 999]");
    std::string out;
    if (n >= 100) {
        out = std::string(ones[n / 100]) + " hundred";
        n %= 100;
        if (n == 0) return out;
        out += ' ';
    }
    if (n < 20) return out + ones[n];
    out += tens[n / 10];
    if (n % 10) out += std::string(" ") + ones[n % 10];
    return out;
}

std::string QaProblem::question() const {
    std::string q = "what is " + number_words(operands[0]);
    for (std::size_t k = 0; k < ops.size(); ++k) {
        q += ops[k] == '+' ? " plus " : " minus ";
        q += number_words(operands[k + 1]);
    }
    return q;
}

std::string QaProblem::reasoning() const {
    std::string r;
    int acc = operands[0];
    for (std::size_t k = 0; k < ops.size(); ++k) {
        const int next = ops[k] == '+' ? acc + operands[k + 1] : acc - operands[k + 1];
        if (k) r += " then ";
        r += number_words(acc) + (ops[k] == '+' ? " plus " : " minus ") + number_words(operands[k + 1]) + " is " +
             number_words(next);
        acc = next;
    }
    return r;
}

std::vector<QaProblem> random_problems(const QaOptions& opt) {
    if (opt.size < 1) throw ConfigError("gen-data: size must be >= 1");
    if (opt.operations < 1 || opt.max_operand < 1 || opt.max_value < opt.max_operand || opt.max_value > 999) {
        throw ConfigError("gen-data: need operations >= 1 and 1 <= max_operand <= max_value <= 999");
    }
    Rng rng(derive_seed(opt.seed, {0x9a}));
    const auto operand = [&] { return static_cast<int>(uniform_index(rng, static_cast<std::size_t>(opt.max_operand + 1))); };
    std::vector<QaProblem> out;
    out.reserve(opt.size);
    while (out.size() < opt.size) {
        QaProblem p;
        p.operands.push_back(operand());
        int acc = p.operands[0];
        for (int k = 0; k < opt.operations; ++k) {
            const int b = operand();
            const bool plus = uniform01(rng) < 0.5;
            // Keep partial results inside [0, max_value] by flipping the
            // operation when it would leave the range.
            const bool use_plus = plus ? acc + b <= opt.max_value : acc - b < 0;
            p.ops.push_back(use_plus ? '+' : '-');
            p.operands.push_back(b);
            acc = use_plus ? acc + b : acc - b;
        }
        p.answer = acc;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<DatasetRecord> thinking_qa(const QaOptions& opt) {
    if (opt.tasks.empty()) throw ConfigError("gen-data: no tasks for thinking-qa");
    for (TaskKind t : opt.tasks) {
        if (!has_thinking(t)) throw ConfigError("gen-data: thinking-qa needs s2s, s2t or t2t tasks");
    }
    std::vector<DatasetRecord> out;
    for (const auto& p : random_problems(opt)) {
        const std::string think = opt.with_thinking ? p.reasoning() : std::string();
        for (TaskKind t : opt.tasks) out.push_back({t, p.question(), think, number_words(p.answer)});
    }
    return out;
}

}  // namespace mdsc

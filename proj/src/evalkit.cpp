#include "mdsc/evalkit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "mdsc/config.hpp"
#include "mdsc/diffusion.hpp"
#include "mdsc/error.hpp"

namespace mdsc {

std::size_t edit_distance(std::span<const std::string> ref, std::span<const std::string> hyp) {
    std::vector<std::size_t> prev(hyp.size() + 1), cur(hyp.size() + 1);
    for (std::size_t j = 0; j <= hyp.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= ref.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= hyp.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[hyp.size()];
}

double wer(std::span<const std::string> ref, std::span<const std::string> hyp) {
    if (ref.empty()) {
        if (hyp.empty()) return 0.0;
        throw UndefinedRateError("wer: empty reference with a nonempty hypothesis");
    }
    return static_cast<double>(edit_distance(ref, hyp)) / static_cast<double>(ref.size());
}

double wer(std::string_view ref, std::string_view hyp) {
    const auto r = TextTokenizer::split_words(ref);
    const auto h = TextTokenizer::split_words(hyp);
    return wer(r, h);
}

int DecodePolicy::steps_for(int n) const {
    if (fixed_steps > 0) return fixed_steps;
    return std::max(1, n / std::max(1, steps_divisor));
}

namespace {

WerReport speech_eval(const LogitModel& model, std::span<const std::string> texts, const TokenSpace& space,
                      const DecodePolicy& policy, TaskKind task) {
    WerReport rep;
    for (std::size_t k = 0; k < texts.size(); ++k) {
        const std::string ref_text = normalize(texts[k]);
        const auto ref = TextTokenizer::split_words(ref_text);
        const int n = policy.fixed_n > 0 ? policy.fixed_n
                                         : reference_target_length(task, texts[k], "", texts[k], space);
        std::size_t errs = ref.size();
        try {
            const Response r = respond(model, task, texts[k], n, policy.steps_for(n), policy.temperature, space, k);
            errs = edit_distance(ref, TextTokenizer::split_words(r.reply_text));
        } catch (const MalformedGenerationError&) {
            ++rep.malformed;
        }
        rep.errors += errs;
        rep.reference_words += ref.size();
        rep.item_wer.push_back(ref.empty() ? 0.0 : static_cast<double>(errs) / static_cast<double>(ref.size()));
        ++rep.items;
    }
    rep.corpus_wer = rep.reference_words == 0 ? 0.0
                                              : static_cast<double>(rep.errors) / static_cast<double>(rep.reference_words);
    return rep;
}

constexpr std::array<std::string_view, 20> kOnes = {
    "zero",    "one",     "two",       "three",    "four",    "five",    "six",
    "seven",   "eight",   "nine",      "ten",      "eleven",  "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen"};
constexpr std::array<std::string_view, 10> kTens = {"",      "",      "twenty",  "thirty", "forty",
                                                    "fifty", "sixty", "seventy", "eighty", "ninety"};

std::optional<int> ones_value(std::string_view w) {
    for (std::size_t i = 0; i < kOnes.size(); ++i) {
        if (kOnes[i] == w) return static_cast<int>(i);
    }
    return std::nullopt;
}

std::optional<int> tens_value(std::string_view w) {
    for (std::size_t i = 2; i < kTens.size(); ++i) {
        if (kTens[i] == w) return static_cast<int>(i * 10);
    }
    return std::nullopt;
}

// Parses the longest number starting at words[i]; returns (value, words used).
std::optional<std::pair<int, std::size_t>> parse_number(const std::vector<std::string>& words, std::size_t i) {
    auto below_hundred = [&](std::size_t at) -> std::optional<std::pair<int, std::size_t>> {
        if (at >= words.size()) return std::nullopt;
        if (auto t = tens_value(words[at])) {
            if (at + 1 < words.size()) {
                if (auto o = ones_value(words[at + 1]); o && *o >= 1 && *o <= 9) return std::pair{*t + *o, 2};
            }
            return std::pair{*t, 1};
        }
        if (auto o = ones_value(words[at])) return std::pair{*o, 1};
        return std::nullopt;
    };
    auto first = below_hundred(i);
    if (!first) return std::nullopt;
    std::size_t at = i + first->second;
    if (first->first >= 1 && first->first <= 9 && first->second == 1 && at < words.size() &&
        words[at] == "hundred") {
        int value = first->first * 100;
        ++at;
        std::size_t rest_at = at;
        if (rest_at < words.size() && words[rest_at] == "and") ++rest_at;
        if (auto rest = below_hundred(rest_at); rest && rest->first >= 1) {
            return std::pair{value + rest->first, rest_at + rest->second - i};
        }
        return std::pair{value, at - i};
    }
    return first;
}

}  // namespace

WerReport tts_eval(const LogitModel& model, std::span<const std::string> texts, const TokenSpace& space,
                   const DecodePolicy& policy) {
    return speech_eval(model, texts, space, policy, TaskKind::TTS);
}

WerReport asr_eval(const LogitModel& model, std::span<const std::string> texts, const TokenSpace& space,
                   const DecodePolicy& policy) {
    return speech_eval(model, texts, space, policy, TaskKind::ASR);
}

std::string normalize_answer(std::string_view text) {
    std::string cleaned;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        cleaned.push_back(std::isalnum(c) ? static_cast<char>(std::tolower(c)) : ' ');
    }
    std::istringstream in(cleaned);
    std::vector<std::string> words;
    for (std::string w; in >> w;) words.push_back(std::move(w));

    std::vector<std::string> out;
    for (std::size_t i = 0; i < words.size();) {
        if (auto num = parse_number(words, i)) {
            out.push_back(std::to_string(num->first));
            i += num->second;
        } else {
            out.push_back(words[i]);
            ++i;
        }
    }
    std::string joined;
    for (const auto& w : out) {
        if (!joined.empty()) joined += ' ';
        joined += w;
    }
    return joined;
}

QaScore qa_accuracy(std::span<const QaItem> items, std::span<const std::string> responses) {
    if (items.size() != responses.size()) {
        throw DimensionError("qa: " + std::to_string(items.size()) + " items but " +
                             std::to_string(responses.size()) + " responses");
    }
    QaScore s;
    s.count = items.size();
    s.empty = items.empty();
    for (std::size_t k = 0; k < items.size(); ++k) {
        if (normalize_answer(items[k].gold) == normalize_answer(responses[k])) ++s.correct;
    }
    s.accuracy = s.count == 0 ? 0.0 : static_cast<double>(s.correct) / static_cast<double>(s.count);
    return s;
}

QaReport qa_eval(const LogitModel& model, std::span<const DatasetRecord> records, const TokenSpace& space,
                 const DecodePolicy& policy) {
    QaReport rep;
    std::vector<QaItem> items;
    for (std::size_t k = 0; k < records.size(); ++k) {
        const auto& r = records[k];
        items.push_back({r.user_text, r.reply_text});
        const int n = policy.fixed_n > 0
                          ? policy.fixed_n
                          : reference_target_length(r.task, r.user_text, r.think_text, r.reply_text, space);
        try {
            const Response resp =
                respond(model, r.task, r.user_text, n, policy.steps_for(n), policy.temperature, space, k);
            rep.responses.push_back(resp.reply_text);
        } catch (const MalformedGenerationError&) {
            ++rep.malformed;
            rep.responses.emplace_back();
        }
    }
    rep.score = qa_accuracy(items, rep.responses);
    return rep;
}

ProbeResult masking_probe(double t, const TaskSample& sample, int trials, std::uint64_t seed, TokenId mask_id) {
    if (trials < 1) throw RangeError("probe: trials must be positive");
    ProbeResult p;
    for (int k = 0; k < trials; ++k) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(k)}));
        const auto m = corrupt(sample, t, mask_id, rng);
        p.masked += m.masked_count();
        p.positions += sample.target_positions.size();
    }
    if (p.positions == 0) return p;
    const double nn = static_cast<double>(p.positions);
    p.fraction = static_cast<double>(p.masked) / nn;
    constexpr double z = 2.5758293035489004;  // two-sided 99%
    const double z2 = z * z;
    const double centre = (p.fraction + z2 / (2 * nn)) / (1 + z2 / nn);
    const double half = z / (1 + z2 / nn) * std::sqrt(p.fraction * (1 - p.fraction) / nn + z2 / (4 * nn * nn));
    p.lower = std::max(0.0, centre - half);
    p.upper = std::min(1.0, centre + half);
    return p;
}

void write_report(std::ostream& out, std::span<const MetricRow> rows) {
    for (const auto& r : rows) out << r.name << ' ' << format_double(r.value) << ' ' << r.count << '\n';
}

void save_report(const std::filesystem::path& path, std::span<const MetricRow> rows) {
    std::ofstream out(path);
    if (!out) throw PersistenceError("report: cannot write " + path.string());
    write_report(out, rows);
    if (!out) throw PersistenceError("report: write failed for " + path.string());
}

std::vector<MetricRow> read_report(std::istream& in) {
    std::vector<MetricRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        MetricRow r;
        std::string value;
        if (!(ls >> r.name >> value >> r.count)) throw FormatError("report: bad line '" + line + "'");
        Config c;
        c.set("v", value);
        r.value = c.get_double("v");
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace mdsc

#include "mdsc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mdsc/config.hpp"
#include "mdsc/error.hpp"

namespace mdsc {

int unmask_target(int i, int n, int T) {
    if (T < 1 || n < 0) throw RangeError("sampler: need T >= 1 and n >= 0");
    if (i < 1 || i > T) {
        throw RangeError("sampler: step " + std::to_string(i) + " outside [1, " + std::to_string(T) + "]");
    }
    const std::int64_t num = static_cast<std::int64_t>(n) * (T - i + 1);
    return static_cast<int>((num + T - 1) / T);
}

namespace {

struct RowScore {
    double rank;      // max softmax probability at temperature 1
    double recorded;  // max softmax probability of logits / temperature
    TokenId token;    // argmax
};

RowScore score_row(std::span<const float> row, double temperature) {
    std::size_t best = 0;
    for (std::size_t v = 1; v < row.size(); ++v) {
        if (row[v] > row[best]) best = v;
    }
    const double top = row[best];
    double sum = 0.0, scaled = 0.0;
    for (float x : row) {
        sum += std::exp(static_cast<double>(x) - top);
        scaled += std::exp((static_cast<double>(x) - top) / temperature);
    }
    return {1.0 / sum, 1.0 / scaled, static_cast<TokenId>(best)};
}

}  // namespace

Generation generate(const LogitModel& model, std::span<const TokenId> condition, int n, int T,
                    double temperature, const VocabSpec& vocab) {
    if (n < 1 || T < 1) throw RangeError("sampler: need n >= 1 and T >= 1");
    if (!(temperature > 0.0)) throw RangeError("sampler: temperature must be positive");
    if (condition.empty() || classify(vocab, condition[0]) != TokenClass::Special ||
        condition[0] - vocab.special_offset() > static_cast<int>(Special::T2T)) {
        throw FormatError("sampler: condition does not start with a task token");
    }
    const std::size_t c = condition.size();
    if (c + static_cast<std::size_t>(n) > static_cast<std::size_t>(model.max_len())) {
        throw LengthError("sampler: condition " + std::to_string(c) + " + n " + std::to_string(n) +
                          " exceeds max_len " + std::to_string(model.max_len()));
    }

    Generation g;
    g.tokens.assign(condition.begin(), condition.end());
    g.tokens.resize(c + static_cast<std::size_t>(n), vocab.mask_id());
    g.trace.n = n;
    g.trace.steps_total = T;
    g.trace.temperature = temperature;
    g.trace.condition_length = c;

    std::vector<bool> is_masked(static_cast<std::size_t>(n), true);
    int done = 0;
    for (int i = T; i >= 1; --i) {
        TraceStep st;
        st.step = i;
        st.cumulative = unmask_target(i, n, T);
        const int delta = st.cumulative - done;
        if (delta > 0) {
            const Matrix<float> logits = model.logits(g.tokens);
            std::vector<TokenId> argmax;
            std::vector<double> rank;
            for (std::size_t j = 0; j < is_masked.size(); ++j) {
                if (!is_masked[j]) continue;
                const RowScore r = score_row(logits.row_span(static_cast<int>(c + j)), temperature);
                st.masked.push_back(c + j);
                st.confidences.push_back(r.recorded);
                rank.push_back(r.rank);
                argmax.push_back(r.token);
            }
            std::vector<std::size_t> order(st.masked.size());
            std::iota(order.begin(), order.end(), 0);
            // Ranking uses the unscaled confidence so the temperature cannot
            // change which positions commit. Stable: ties keep position order.
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return rank[a] > rank[b]; });
            order.resize(static_cast<std::size_t>(delta));
            std::sort(order.begin(), order.end());
            for (std::size_t k : order) {
                const std::size_t pos = st.masked[k];
                g.tokens[pos] = argmax[k];
                is_masked[pos - c] = false;
                st.unmasked.push_back(pos);
                st.tokens.push_back(argmax[k]);
            }
            done = st.cumulative;
        }
        g.trace.steps.push_back(std::move(st));
    }
    g.trace.final_tokens = g.tokens;
    return g;
}

void write_trace(std::ostream& out, const GenerationTrace& trace) {
    out << "trace n=" << trace.n << " steps=" << trace.steps_total << " temperature=" << format_double(trace.temperature)
        << " condition=" << trace.condition_length << '\n';
    for (const auto& st : trace.steps) {
        double lo = 0.0, hi = 0.0, mean = 0.0;
        if (!st.confidences.empty()) {
            const auto [mn, mx] = std::minmax_element(st.confidences.begin(), st.confidences.end());
            lo = *mn;
            hi = *mx;
            mean = std::accumulate(st.confidences.begin(), st.confidences.end(), 0.0) /
                   static_cast<double>(st.confidences.size());
        }
        out << "step=" << st.step << " cumulative=" << st.cumulative << " unmasked=";
        for (std::size_t k = 0; k < st.unmasked.size(); ++k) out << (k ? "," : "") << st.unmasked[k];
        out << " conf_min=" << format_double(lo) << " conf_mean=" << format_double(mean)
            << " conf_max=" << format_double(hi) << '\n';
    }
}

namespace {

std::map<std::string, std::string> key_values(const std::string& line, std::string_view lead) {
    std::istringstream in(line);
    std::string word;
    in >> word;
    if (word.rfind(lead, 0) != 0) throw FormatError("trace: unexpected line '" + line + "'");
    std::map<std::string, std::string> kv;
    auto add = [&](const std::string& w) {
        const auto eq = w.find('=');
        if (eq == std::string::npos) throw FormatError("trace: expected key=value, got '" + w + "'");
        kv[w.substr(0, eq)] = w.substr(eq + 1);
    };
    if (word.find('=') != std::string::npos) add(word);
    while (in >> word) add(word);
    return kv;
}

const std::string& field(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("trace: missing field '" + key + "'");
    return it->second;
}

long long to_int(const std::string& s) {
    Config c;
    c.set("v", s);
    return c.get_int("v");
}

double to_double(const std::string& s) {
    Config c;
    c.set("v", s);
    return c.get_double("v");
}

}  // namespace

TraceSummary read_trace(std::istream& in) {
    TraceSummary t;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("trace: empty input");
    const auto head = key_values(line, "trace");
    t.n = static_cast<int>(to_int(field(head, "n")));
    t.steps_total = static_cast<int>(to_int(field(head, "steps")));
    t.temperature = to_double(field(head, "temperature"));
    t.condition_length = static_cast<std::size_t>(to_int(field(head, "condition")));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto kv = key_values(line, "step=");
        TraceLine tl;
        tl.step = static_cast<int>(to_int(field(kv, "step")));
        tl.cumulative = static_cast<int>(to_int(field(kv, "cumulative")));
        const std::string& idx = field(kv, "unmasked");
        std::size_t start = 0;
        while (start < idx.size()) {
            std::size_t end = idx.find(',', start);
            if (end == std::string::npos) end = idx.size();
            tl.unmasked.push_back(static_cast<std::size_t>(to_int(idx.substr(start, end - start))));
            start = end + 1;
        }
        tl.conf_min = to_double(field(kv, "conf_min"));
        tl.conf_mean = to_double(field(kv, "conf_mean"));
        tl.conf_max = to_double(field(kv, "conf_max"));
        t.lines.push_back(std::move(tl));
    }
    return t;
}

Response respond(const LogitModel& model, TaskKind task, std::string_view user_text, int n, int T,
                 double temperature, const TokenSpace& space, std::uint64_t seed) {
    Rng rng(seed);
    const auto condition = build_condition(task, user_text, space, rng);
    Generation g = generate(model, condition, n, T, temperature, space.vocab);

    ExtractedSegments seg;
    try {
        seg = extract_segments(g.tokens, space.vocab);
    } catch (const MalformedGenerationError& e) {
        throw MalformedResponseError(e.what(), e.partial(), std::move(g));
    }
    Response r;
    r.reply_modality = seg.reply_modality;
    r.think_text = space.text.decode(seg.think);
    if (seg.reply_modality == Modality::Speech) {
        std::vector<int> codes;
        codes.reserve(seg.reply.size());
        for (TokenId id : seg.reply) codes.push_back(id_to_speech_code(space.vocab, id));
        try {
            auto decoded = decode(space.codec, codes);
            r.reply_text = std::move(decoded.text);
            r.truncated_tail = decoded.truncated_tail;
        } catch (const UnmappableCodeError& e) {
            throw MalformedResponseError(std::string("malformed generation: ") + e.what(), seg, std::move(g));
        }
    } else {
        r.reply_text = space.text.decode(seg.reply);
    }
    r.generation = std::move(g);
    return r;
}

int reference_target_length(TaskKind task, std::string_view user_text, std::string_view think_text,
                            std::string_view reply_text, const TokenSpace& space) {
    Rng rng(0);
    const auto s = build(task, user_text, think_text, reply_text, space, rng);
    return static_cast<int>(s.target_positions.size());
}

}  // namespace mdsc

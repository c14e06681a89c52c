#include "mdsc/sequence.hpp"

#include <algorithm>

namespace mdsc {

namespace {

constexpr std::array<std::string_view, 5> kTaskNames = {"tts", "asr", "s2s", "s2t", "t2t"};

struct Builder {
    const TokenSpace& space;
    TaskSample sample;

    void push(Special s) { sample.tokens.push_back(special_id(space.vocab, s)); }

    void push_text(SegmentRole role, std::string_view text) {
        const std::size_t begin = sample.tokens.size();
        for (TokenId id : space.text.encode(text)) sample.tokens.push_back(id);
        sample.segments.push_back({role, Modality::Text, begin, sample.tokens.size()});
    }

    void push_speech(SegmentRole role, std::string_view text, Rng& rng) {
        const std::size_t begin = sample.tokens.size();
        for (int code : encode(space.codec, text, rng)) {
            sample.tokens.push_back(speech_code_to_id(space.vocab, code));
        }
        sample.segments.push_back({role, Modality::Speech, begin, sample.tokens.size()});
    }

    void open(Modality m) { push(m == Modality::Text ? Special::SOT : Special::SOS); }
    void close(Modality m) { push(m == Modality::Text ? Special::EOT : Special::EOS); }

    void push_segment(SegmentRole role, Modality m, std::string_view text, Rng& rng) {
        if (m == Modality::Text) {
            push_text(role, text);
        } else {
            push_speech(role, text, rng);
        }
    }
};

void require(bool ok, TaskKind task, const char* field) {
    if (!ok) {
        throw FormatError(std::string("sequence: task ") + std::string(task_name(task)) + " requires a nonempty " +
                          field);
    }
}

bool blank(std::string_view s) { return normalize(s).empty(); }

// Writes [task, open(in), user, close(in), open(target)] into b.
void build_prefix(Builder& b, TaskKind task, std::string_view user_text, Rng& rng) {
    b.sample.task = task;
    b.push(task_token(task));
    const Modality in = input_modality(task);
    b.open(in);
    b.push_segment(SegmentRole::User, in, user_text, rng);
    b.close(in);
    b.open(has_thinking(task) ? Modality::Text : reply_modality(task));
}

}  // namespace

std::string_view task_name(TaskKind task) { return kTaskNames[static_cast<std::size_t>(task)]; }

TaskKind parse_task(std::string_view name) {
    for (std::size_t i = 0; i < kTaskNames.size(); ++i) {
        if (kTaskNames[i] == name) return static_cast<TaskKind>(i);
    }
    throw LookupError("sequence: unknown task '" + std::string(name) + "'");
}

Special task_token(TaskKind task) {
    switch (task) {
        case TaskKind::TTS: return Special::T2S;
        case TaskKind::ASR: return Special::ASR;
        case TaskKind::S2S: return Special::S2S;
        case TaskKind::S2T: return Special::S2T;
        case TaskKind::T2T: return Special::T2T;
    }
    return Special::T2T;
}

Modality input_modality(TaskKind task) {
    return (task == TaskKind::TTS || task == TaskKind::T2T) ? Modality::Text : Modality::Speech;
}

Modality reply_modality(TaskKind task) {
    return (task == TaskKind::TTS || task == TaskKind::S2S) ? Modality::Speech : Modality::Text;
}

bool has_thinking(TaskKind task) {
    return task == TaskKind::S2S || task == TaskKind::S2T || task == TaskKind::T2T;
}

TokenSpace TokenSpace::make(TextTokenizer text, CodecSpec codec) {
    codec.validate();
    const VocabSpec vocab = build_vocab(text.size(), codec.speech_size);
    return TokenSpace{vocab, std::move(text), std::move(codec)};
}

TaskSample build(TaskKind task, std::string_view user_text, std::string_view think_text,
                 std::string_view reply_text, const TokenSpace& space, Rng& rng) {
    require(!blank(user_text), task, "user_text");
    require(!blank(reply_text), task, "reply_text");

    Builder b{space, {}};
    build_prefix(b, task, user_text, rng);
    const std::size_t target_begin = b.sample.tokens.size();

    switch (task) {
        case TaskKind::TTS:
            b.push_speech(SegmentRole::Reply, reply_text, rng);
            b.close(Modality::Speech);
            break;
        case TaskKind::ASR:
            b.push_text(SegmentRole::Reply, reply_text);
            b.close(Modality::Text);
            break;
        case TaskKind::S2S:
            b.push_text(SegmentRole::Think, think_text);
            b.close(Modality::Text);
            b.open(Modality::Speech);
            b.push_speech(SegmentRole::Reply, reply_text, rng);
            b.close(Modality::Speech);
            break;
        case TaskKind::S2T:
        case TaskKind::T2T:
            b.push_text(SegmentRole::Think, think_text);
            b.sample.tokens.push_back(TextTokenizer::kParagraph);
            b.push_text(SegmentRole::Reply, reply_text);
            b.close(Modality::Text);
            break;
    }

    auto& s = b.sample;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        (i < target_begin ? s.condition_positions : s.target_positions).push_back(i);
    }
    return std::move(s);
}

std::vector<TokenId> build_condition(TaskKind task, std::string_view user_text, const TokenSpace& space,
                                     Rng& rng) {
    require(!blank(user_text), task, "user_text");
    Builder b{space, {}};
    build_prefix(b, task, user_text, rng);
    return std::move(b.sample.tokens);
}

Partition partition(const TaskSample& sample) {
    return Partition{sample.condition_positions, sample.target_positions};
}

namespace {

class Parser {
public:
    Parser(std::span<const TokenId> tokens, const VocabSpec& vocab) : tokens_(tokens), vocab_(vocab) {}

    [[noreturn]] void fail(const std::string& why) const {
        throw MalformedGenerationError("malformed generation: " + why, out_);
    }

    bool at_end() const { return pos_ >= tokens_.size(); }
    TokenId peek() const { return tokens_[pos_]; }

    void expect(Special s, const char* where) {
        if (at_end() || peek() != special_id(vocab_, s)) {
            fail(std::string("expected ") + std::string(kSpecialNames[static_cast<std::size_t>(s)]) + " " + where +
                 " at position " + std::to_string(pos_));
        }
        ++pos_;
    }

    // Reads content of modality m into dst up to (and consuming) `closer`.
    // `stop_at_paragraph` splits a text span at the paragraph marker.
    enum class Stop { Closer, Paragraph };
    Stop read_span(Modality m, Special closer, std::vector<TokenId>& dst, bool stop_at_paragraph) {
        const TokenId close_id = special_id(vocab_, closer);
        while (!at_end()) {
            const TokenId id = peek();
            if (id == close_id) {
                ++pos_;
                return Stop::Closer;
            }
            if (stop_at_paragraph && id == TextTokenizer::kParagraph) {
                ++pos_;
                return Stop::Paragraph;
            }
            const bool ok = m == Modality::Text ? is_text(vocab_, id) : is_speech(vocab_, id);
            if (!ok) {
                fail("unexpected token " + std::to_string(id) + " inside " +
                     (m == Modality::Text ? "text" : "speech") + " span at position " + std::to_string(pos_));
            }
            dst.push_back(id);
            ++pos_;
        }
        fail(std::string("missing closing ") + std::string(kSpecialNames[static_cast<std::size_t>(closer)]));
    }

    void skip_input(Modality m) {
        const Special opener = m == Modality::Text ? Special::SOT : Special::SOS;
        const Special closer = m == Modality::Text ? Special::EOT : Special::EOS;
        expect(opener, "opening the input");
        std::vector<TokenId> ignored;
        read_span(m, closer, ignored, false);
    }

    ExtractedSegments& out() { return out_; }

private:
    std::span<const TokenId> tokens_;
    const VocabSpec& vocab_;
    std::size_t pos_ = 1;
    ExtractedSegments out_;
};

}  // namespace

ExtractedSegments extract_segments(std::span<const TokenId> tokens, const VocabSpec& vocab) {
    if (tokens.empty() || classify(vocab, tokens[0]) != TokenClass::Special ||
        tokens[0] - vocab.special_offset() > static_cast<int>(Special::T2T)) {
        throw FormatError("sequence: generation does not start with a task token");
    }
    const auto task = static_cast<TaskKind>(tokens[0] - vocab.special_offset());
    // Task tokens occupy the first five special slots in TaskKind order.
    Parser p(tokens, vocab);
    auto& out = p.out();
    out.reply_modality = reply_modality(task);
    p.skip_input(input_modality(task));

    switch (task) {
        case TaskKind::TTS:
            p.expect(Special::SOS, "opening the reply");
            p.read_span(Modality::Speech, Special::EOS, out.reply, false);
            break;
        case TaskKind::ASR:
            p.expect(Special::SOT, "opening the reply");
            p.read_span(Modality::Text, Special::EOT, out.reply, false);
            break;
        case TaskKind::S2S:
            p.expect(Special::SOT, "opening the thinking trace");
            p.read_span(Modality::Text, Special::EOT, out.think, false);
            p.expect(Special::SOS, "opening the spoken reply");
            p.read_span(Modality::Speech, Special::EOS, out.reply, false);
            break;
        case TaskKind::S2T:
        case TaskKind::T2T: {
            p.expect(Special::SOT, "opening the thinking trace");
            if (p.read_span(Modality::Text, Special::EOT, out.think, true) != Parser::Stop::Paragraph) {
                p.fail("missing paragraph marker between thinking and reply");
            }
            p.read_span(Modality::Text, Special::EOT, out.reply, false);
            break;
        }
    }
    return out;
}

}  // namespace mdsc

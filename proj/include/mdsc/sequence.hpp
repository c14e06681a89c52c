#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdsc/codec.hpp"
#include "mdsc/error.hpp"
#include "mdsc/random.hpp"
#include "mdsc/tokenizer.hpp"
#include "mdsc/vocab.hpp"

namespace mdsc {

enum class TaskKind { TTS, ASR, S2S, S2T, T2T };
inline constexpr std::array<TaskKind, 5> kAllTasks = {TaskKind::TTS, TaskKind::ASR, TaskKind::S2S,
                                                      TaskKind::S2T, TaskKind::T2T};

std::string_view task_name(TaskKind task);
TaskKind parse_task(std::string_view name);
Special task_token(TaskKind task);

enum class Modality { Text, Speech };
enum class SegmentRole { User, Think, Reply };

/// Content span [begin, end) inside TaskSample::tokens; delimiters excluded.
struct Segment {
    SegmentRole role;
    Modality modality;
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// One formatted sequence. The condition set is always a prefix (task token,
/// input segment, and every delimiter up to the one opening the target); the
/// target set is the remaining suffix including interior and closing
/// delimiters.
struct TaskSample {
    TaskKind task = TaskKind::TTS;
    std::vector<TokenId> tokens;
    std::vector<std::size_t> condition_positions;
    std::vector<std::size_t> target_positions;
    std::vector<Segment> segments;

    std::size_t target_begin() const { return condition_positions.size(); }
};

/// Everything needed to map text and speech into token ids.
struct TokenSpace {
    VocabSpec vocab;
    TextTokenizer text;
    CodecSpec codec;

    static TokenSpace make(TextTokenizer text, CodecSpec codec);
};

TaskSample build(TaskKind task, std::string_view user_text, std::string_view think_text,
                 std::string_view reply_text, const TokenSpace& space, Rng& rng);

/// The condition prefix alone, as handed to the sampler.
std::vector<TokenId> build_condition(TaskKind task, std::string_view user_text, const TokenSpace& space,
                                     Rng& rng);

struct Partition {
    std::vector<std::size_t> condition;
    std::vector<std::size_t> target;
};
Partition partition(const TaskSample& sample);

struct ExtractedSegments {
    std::vector<TokenId> think;
    std::vector<TokenId> reply;
    Modality reply_modality = Modality::Text;
};

class MalformedGenerationError : public Error {
public:
    MalformedGenerationError(const std::string& what, ExtractedSegments partial)
        : Error(what), partial_(std::move(partial)) {}
    const ExtractedSegments& partial() const noexcept { return partial_; }

private:
    ExtractedSegments partial_;
};

ExtractedSegments extract_segments(std::span<const TokenId> tokens, const VocabSpec& vocab);

/// Reply modality and whether a thinking span is part of the target.
Modality input_modality(TaskKind task);
Modality reply_modality(TaskKind task);
bool has_thinking(TaskKind task);

}  // namespace mdsc

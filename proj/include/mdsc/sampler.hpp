#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mdsc/denoiser.hpp"
#include "mdsc/sequence.hpp"

namespace mdsc {

/// Cumulative number of target positions that are unmasked once step i
/// (counting down from T to 1) has run: ceil(n * (T - i + 1) / T).
int unmask_target(int i, int n, int T);

struct TraceStep {
    int step = 0;                          // i, from T down to 1
    int cumulative = 0;                    // unmasked target positions after this step
    std::vector<std::size_t> masked;       // positions still masked before the step
    std::vector<double> confidences;       // one per entry of `masked`
    std::vector<std::size_t> unmasked;     // newly committed positions, ascending
    std::vector<TokenId> tokens;           // committed token per entry of `unmasked`
};

struct GenerationTrace {
    int n = 0;
    int steps_total = 0;
    double temperature = 1.0;
    std::size_t condition_length = 0;
    std::vector<TraceStep> steps;
    std::vector<TokenId> final_tokens;
};

struct Generation {
    std::vector<TokenId> tokens;  // condition followed by the n generated tokens
    GenerationTrace trace;
};

/// Confidence-ordered iterative unmasking. Token choice is the argmax of the
/// logits and positions are ranked by their max softmax probability; the
/// temperature only scales the confidences recorded in the trace. Ties in
/// confidence go to the lower position.
Generation generate(const LogitModel& model, std::span<const TokenId> condition, int n, int T,
                    double temperature, const VocabSpec& vocab);

/// Line-oriented trace export: a header line then one line per step.
void write_trace(std::ostream& out, const GenerationTrace& trace);

struct TraceLine {
    int step = 0;
    int cumulative = 0;
    std::vector<std::size_t> unmasked;
    double conf_min = 0.0;
    double conf_mean = 0.0;
    double conf_max = 0.0;
};

struct TraceSummary {
    int n = 0;
    int steps_total = 0;
    double temperature = 1.0;
    std::size_t condition_length = 0;
    std::vector<TraceLine> lines;
};

TraceSummary read_trace(std::istream& in);

struct Response {
    std::string think_text;
    std::string reply_text;  // decoded speech for speech replies
    Modality reply_modality = Modality::Text;
    bool truncated_tail = false;
    Generation generation;
};

/// Extraction failure for a finished generation; carries the trace.
class MalformedResponseError : public MalformedGenerationError {
public:
    MalformedResponseError(const std::string& what, ExtractedSegments partial, Generation generation)
        : MalformedGenerationError(what, std::move(partial)), generation_(std::move(generation)) {}
    const Generation& generation() const noexcept { return generation_; }

private:
    Generation generation_;
};

/// Formats the request, generates n target tokens in T steps and parses the
/// result. `seed` drives the codec variant draws for speech input.
Response respond(const LogitModel& model, TaskKind task, std::string_view user_text, int n, int T,
                 double temperature, const TokenSpace& space, std::uint64_t seed = 0);

/// Target length of the reference sequence for a record; used as n when the
/// reference is known.
int reference_target_length(TaskKind task, std::string_view user_text, std::string_view think_text,
                            std::string_view reply_text, const TokenSpace& space);

}  // namespace mdsc

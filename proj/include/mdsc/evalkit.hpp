#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdsc/dataset.hpp"
#include "mdsc/sampler.hpp"

namespace mdsc {

/// Word-level Levenshtein distance with unit costs.
std::size_t edit_distance(std::span<const std::string> ref, std::span<const std::string> hyp);

/// edit_distance / |ref|. Both empty gives 0; empty ref with a nonempty
/// hypothesis raises UndefinedRateError.
double wer(std::span<const std::string> ref, std::span<const std::string> hyp);
double wer(std::string_view ref, std::string_view hyp);

/// How n and T are chosen per item. n = reference target length unless
/// fixed_n > 0; T = fixed_steps if > 0, else max(1, n / steps_divisor).
struct DecodePolicy {
    int fixed_n = 0;
    int fixed_steps = 0;
    int steps_divisor = 1;
    double temperature = 1.0;

    int steps_for(int n) const;
};

struct WerReport {
    double corpus_wer = 0.0;  // total errors / total reference words
    std::size_t items = 0;
    std::size_t malformed = 0;
    std::size_t reference_words = 0;
    std::size_t errors = 0;
    std::vector<double> item_wer;
};

/// Synthesizes each text, decodes the speech with the codec and scores it
/// against the normalized text. A malformed generation scores 1.0.
WerReport tts_eval(const LogitModel& model, std::span<const std::string> texts, const TokenSpace& space,
                   const DecodePolicy& policy);

/// Encodes each text as speech input and scores the transcription.
WerReport asr_eval(const LogitModel& model, std::span<const std::string> texts, const TokenSpace& space,
                   const DecodePolicy& policy);

/// Lowercases, turns punctuation into spaces, and rewrites runs of number
/// words up to 999 as digits ("forty two" -> "42").
std::string normalize_answer(std::string_view text);

struct QaItem {
    std::string question;
    std::string gold;
};

struct QaScore {
    double accuracy = 0.0;
    std::size_t correct = 0;
    std::size_t count = 0;
    bool empty = false;  // no responses were scored
};

QaScore qa_accuracy(std::span<const QaItem> items, std::span<const std::string> responses);

struct QaReport {
    QaScore score;
    std::size_t malformed = 0;
    std::vector<std::string> responses;
};

/// Answers every record with its own task and grades the reply segment.
QaReport qa_eval(const LogitModel& model, std::span<const DatasetRecord> records, const TokenSpace& space,
                 const DecodePolicy& policy);

struct ProbeResult {
    double fraction = 0.0;
    double lower = 0.0;  // 99% Wilson interval
    double upper = 0.0;
    std::size_t positions = 0;
    std::size_t masked = 0;
};

/// Repeatedly corrupts `sample` at level t with fresh seeds and measures the
/// masked fraction over the target positions.
ProbeResult masking_probe(double t, const TaskSample& sample, int trials, std::uint64_t seed, TokenId mask_id);

struct MetricRow {
    std::string name;
    double value = 0.0;
    std::size_t count = 0;
};

/// "name value count" per line.
void write_report(std::ostream& out, std::span<const MetricRow> rows);
void save_report(const std::filesystem::path& path, std::span<const MetricRow> rows);
std::vector<MetricRow> read_report(std::istream& in);

}  // namespace mdsc

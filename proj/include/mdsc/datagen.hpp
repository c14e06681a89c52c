#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdsc/dataset.hpp"

namespace mdsc {

/// Fifty four-letter words.
const std::vector<std::string>& default_lexicon();

struct SentenceOptions {
    std::size_t size = 1000;
    std::uint64_t seed = 1;
    int min_words = 4;
    int max_words = 8;
    std::vector<std::string> lexicon = default_lexicon();
};

std::vector<std::string> random_sentences(const SentenceOptions& opt);

/// One TTS and one ASR record per sentence.
std::vector<DatasetRecord> copy_asr_tts(const SentenceOptions& opt);

/// Text continuation: the first half of each sentence is the prompt, the
/// rest is the reply.
std::vector<DatasetRecord> lm_corpus(const SentenceOptions& opt);

/// English words for 0..999, e.g. 305 -> "three hundred five".
std::string number_words(int n);

struct QaOptions {
    std::size_t size = 1000;
    std::uint64_t seed = 1;
    bool with_thinking = true;
    int operations = 2;     // binary operations per question
    int max_operand = 20;
    int max_value = 99;     // bound on every partial result
    std::vector<TaskKind> tasks = {TaskKind::S2S, TaskKind::S2T, TaskKind::T2T};
};

struct QaProblem {
    std::vector<int> operands;
    std::vector<char> ops;  // '+' or '-'
    int answer = 0;

    std::string question() const;
    std::string reasoning() const;
};

std::vector<QaProblem> random_problems(const QaOptions& opt);

/// One record per problem and task. Without thinking the think field is
/// empty; everything else, including the random draws, is unchanged.
std::vector<DatasetRecord> thinking_qa(const QaOptions& opt);

}  // namespace mdsc

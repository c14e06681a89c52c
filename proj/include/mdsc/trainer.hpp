#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mdsc/checkpoint.hpp"
#include "mdsc/config.hpp"
#include "mdsc/dataset.hpp"
#include "mdsc/denoiser.hpp"
#include "mdsc/sequence.hpp"

namespace mdsc {

/// Training tasks. LM is plain text continuation and is formatted with the
/// T2T layout (empty thinking trace).
enum class TrainTask { TTS, ASR, LM, S2S, S2T, T2T };

std::string_view train_task_name(TrainTask t);
TrainTask parse_train_task(std::string_view name);
TaskKind format_of(TrainTask t);

struct TaskEntry {
    TrainTask task = TrainTask::T2T;
    double probability = 0.0;  // p_k
    double lambda = 1.0;       // loss coefficient
    std::filesystem::path dataset;
};

struct StageConfig {
    std::vector<TaskEntry> tasks;
    int steps = 0;
    int batch_size = 16;
    int seq_len_cap = 512;
    double lr = 1e-3;
    int warmup_steps = 100;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Reads stage settings under `prefix` (e.g. "stage1."):
///   tasks = tts,asr,lm   p = 0.4,0.4,0.2   lambda = 1,1,1
///   data.<task> = path   steps, batch_size, seq_len_cap, lr, warmup_steps, seed
StageConfig read_stage_config(const Config& c, const std::string& prefix);
void write_stage_config(Config& c, const std::string& prefix, const StageConfig& s);

/// Draws a task index with probability p_k.
std::size_t sample_task(const StageConfig& stage, Rng& rng);

/// Linear warmup to the peak, then cosine decay to 10% of the peak.
double learning_rate(const StageConfig& stage, int step);

/// Records per task entry of a stage, already filtered by format and length.
struct StageData {
    std::vector<std::vector<DatasetRecord>> per_task;
    std::vector<std::size_t> dropped_too_long;
};

StageData load_stage_data(const StageConfig& stage, const TokenSpace& space);

struct StepMetrics {
    int stage = 1;
    int step = 0;
    TrainTask task = TrainTask::T2T;
    double lr = 0.0;
    double loss = 0.0;  // lambda-scaled mean masked cross-entropy
    std::size_t masked = 0;
    std::size_t tokens = 0;
    std::vector<double> t;

    /// One metrics-log line; losses print with round-trip precision.
    std::string to_line() const;
};

/// Mutable training state owned by a single writer.
struct TrainState {
    TokenSpace space;
    DenoiserParams<float> params;
    AdamState<float> adam;
    AdamConfig adam_config;
    DenoiserParams<float> grads;
    WorkspaceHandle<float> workspace;

    TrainState(TokenSpace s, DenoiserParams<float> p, AdamConfig a = {});
};

/// Builds one single-task batch, corrupts it with t ~ U(0,1) per sequence and
/// returns it with the chosen task index.
std::pair<std::size_t, MaskedBatch> draw_batch(const TokenSpace& space, const StageConfig& stage,
                                               const StageData& data, Rng& rng);

/// One optimizer step. The step's randomness comes entirely from rng.
StepMetrics train_step(TrainState& state, const StageConfig& stage, const StageData& data, Rng& rng, double lr);

/// Randomness stream of step `step` of stage `stage_index`.
Rng step_rng(const StageConfig& stage, int stage_index, int step);

struct CurriculumOptions {
    std::optional<StageConfig> stage1;
    std::optional<StageConfig> stage2;
    std::filesystem::path out_dir;
    int checkpoint_every = 0;        // 0 = only at stage ends
    int stop_after = -1;             // halt after this many steps in this invocation (-1 = run to completion)
    std::optional<std::filesystem::path> resume;
    Config run_config;               // snapshot stored in every checkpoint
    std::function<void(const StepMetrics&)> on_step;
};

struct CurriculumResult {
    DenoiserParams<float> params;
    std::vector<StepMetrics> metrics;  // metrics produced by this invocation
    std::filesystem::path checkpoint;  // latest checkpoint written
    bool finished = false;
};

/// Runs stage 1 then stage 2 (each optional). Stage 2 starts from the stage-1
/// parameters with a fresh optimizer. Metrics append to out_dir/metrics.log;
/// checkpoints go to out_dir/latest.mdsc and, at the end, out_dir/final.mdsc.
CurriculumResult run_curriculum(TrainState& state, const CurriculumOptions& opts);

/// Config block for a checkpoint taken at (stage, next_step).
Config checkpoint_config(const Config& run_config, const TokenSpace& space, int stage, int next_step);

}  // namespace mdsc

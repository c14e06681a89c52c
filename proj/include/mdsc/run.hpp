#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mdsc/config.hpp"
#include "mdsc/trainer.hpp"

namespace mdsc {

std::string_view version_string();

/// Resolved training run. Every seed is explicit in `config`.
struct RunPlan {
    Config config;
    std::optional<StageConfig> stage1;
    std::optional<StageConfig> stage2;
    TokenSpace space;
    ModelConfig model;
    AdamConfig adam;
    int checkpoint_every = 0;
};

/// Tokenizer over every word appearing in the given datasets.
TextTokenizer tokenizer_from_datasets(const std::vector<std::filesystem::path>& paths);

/// Resolves defaults and seeds, checks that every dataset exists (ValidationError
/// otherwise) and builds the token space. stage_filter: 0 = both stages,
/// 1 or 2 = only that stage.
RunPlan plan_run(Config config, int stage_filter = 0);

/// Config snapshot, seeds and version, enough to rerun the plan.
void write_manifest(const std::filesystem::path& path, const RunPlan& plan);

struct RunOptions {
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> resume;
    int stop_after = -1;
    std::function<void(const StepMetrics&)> on_step;
};

CurriculumResult execute_run(const RunPlan& plan, const RunOptions& opts);

}  // namespace mdsc

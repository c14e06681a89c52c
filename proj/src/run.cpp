#include "mdsc/run.hpp"

#include <fstream>
#include <set>

#include "mdsc/error.hpp"
#include "mdsc/random.hpp"
#include "mdsc/space_config.hpp"

#ifndef MDSC_VERSION
#define MDSC_VERSION "0.0.0"
#endif

namespace mdsc {

std::string_view version_string() { return "mdsc " MDSC_VERSION; }

TextTokenizer tokenizer_from_datasets(const std::vector<std::filesystem::path>& paths) {
    std::set<std::string> words;
    std::set<std::filesystem::path> seen;
    for (const auto& p : paths) {
        if (!seen.insert(p).second) continue;
        for (const auto& r : load_dataset(p)) {
            for (const auto* field : {&r.user_text, &r.think_text, &r.reply_text}) {
                for (auto& w : TextTokenizer::split_words(*field)) words.insert(std::move(w));
            }
        }
    }
    return TextTokenizer(std::vector<std::string>(words.begin(), words.end()));
}

RunPlan plan_run(Config config, int stage_filter) {
    if (stage_filter < 0 || stage_filter > 2) throw ConfigError("run: stage must be 1 or 2");
    const std::uint64_t seed = config.get_u64_or("seed", 1);
    config.set("seed", seed);
    if (!config.has("model.seed")) config.set("model.seed", derive_seed(seed, {0}));

    RunPlan plan;
    std::vector<std::filesystem::path> data_paths;
    for (int s = 1; s <= 2; ++s) {
        const std::string prefix = "stage" + std::to_string(s) + ".";
        if (!config.has(prefix + "tasks") || (stage_filter != 0 && stage_filter != s)) {
            for (const auto& k : config.keys_with_prefix(prefix)) config.erase(k);
            continue;
        }
        if (!config.has(prefix + "seed")) config.set(prefix + "seed", derive_seed(seed, {static_cast<std::uint64_t>(s)}));
        StageConfig stage = read_stage_config(config, prefix);
        for (const auto& t : stage.tasks) {
            if (!std::filesystem::is_regular_file(t.dataset)) {
                throw ValidationError("run: dataset for " + std::string(train_task_name(t.task)) + " not found: " +
                                      t.dataset.string());
            }
            data_paths.push_back(t.dataset);
        }
        (s == 1 ? plan.stage1 : plan.stage2) = std::move(stage);
    }
    if (!plan.stage1 && !plan.stage2) throw ConfigError("run: no stage configured");

    const CodecSpec codec = read_codec(config);
    TextTokenizer text = config.has("tokenizer.words") ? TextTokenizer(config.get_list("tokenizer.words", ' '))
                                                       : tokenizer_from_datasets(data_paths);
    plan.space = TokenSpace::make(std::move(text), codec);
    write_token_space(config, plan.space);

    plan.model.vocab_total = plan.space.vocab.total();
    plan.model.dim = static_cast<int>(config.get_int_or("model.dim", plan.model.dim));
    plan.model.layers = static_cast<int>(config.get_int_or("model.layers", plan.model.layers));
    plan.model.heads = static_cast<int>(config.get_int_or("model.heads", plan.model.heads));
    plan.model.max_len = static_cast<int>(config.get_int_or("model.max_len", plan.model.max_len));
    plan.model.mlp_ratio = static_cast<int>(config.get_int_or("model.mlp_ratio", plan.model.mlp_ratio));
    plan.model.seed = config.get_u64_or("model.seed", plan.model.seed);
    plan.model.validate();
    write_model_config(config, plan.model);

    plan.adam.beta1 = config.get_double_or("adam.beta1", plan.adam.beta1);
    plan.adam.beta2 = config.get_double_or("adam.beta2", plan.adam.beta2);
    plan.adam.eps = config.get_double_or("adam.eps", plan.adam.eps);
    plan.adam.weight_decay = config.get_double_or("adam.weight_decay", plan.adam.weight_decay);
    plan.checkpoint_every = static_cast<int>(config.get_int_or("train.checkpoint_every", 0));
    plan.config = std::move(config);
    return plan;
}

void write_manifest(const std::filesystem::path& path, const RunPlan& plan) {
    std::ofstream out(path);
    if (!out) throw PersistenceError("run: cannot write manifest " + path.string());
    out << "# " << version_string() << '\n' << plan.config.serialize();
    if (!out) throw PersistenceError("run: manifest write failed for " + path.string());
}

CurriculumResult execute_run(const RunPlan& plan, const RunOptions& opts) {
    std::filesystem::create_directories(opts.out_dir);
    write_manifest(opts.out_dir / "manifest.txt", plan);
    TrainState state(plan.space, init_params<float>(plan.model), plan.adam);
    CurriculumOptions co;
    co.stage1 = plan.stage1;
    co.stage2 = plan.stage2;
    co.out_dir = opts.out_dir;
    co.checkpoint_every = plan.checkpoint_every;
    co.stop_after = opts.stop_after;
    co.resume = opts.resume;
    co.run_config = plan.config;
    co.on_step = opts.on_step;
    return run_curriculum(state, co);
}

}  // namespace mdsc

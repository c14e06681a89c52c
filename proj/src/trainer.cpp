#include "mdsc/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>

#include "mdsc/error.hpp"
#include "mdsc/space_config.hpp"

namespace mdsc {

namespace {

constexpr std::array<std::string_view, 6> kTrainTaskNames = {"tts", "asr", "lm", "s2s", "s2t", "t2t"};

}  // namespace

std::string_view train_task_name(TrainTask t) { return kTrainTaskNames[static_cast<std::size_t>(t)]; }

TrainTask parse_train_task(std::string_view name) {
    for (std::size_t i = 0; i < kTrainTaskNames.size(); ++i) {
        if (kTrainTaskNames[i] == name) return static_cast<TrainTask>(i);
    }
    throw ConfigError("trainer: unknown task '" + std::string(name) + "'");
}

TaskKind format_of(TrainTask t) {
    switch (t) {
        case TrainTask::TTS: return TaskKind::TTS;
        case TrainTask::ASR: return TaskKind::ASR;
        case TrainTask::LM: return TaskKind::T2T;
        case TrainTask::S2S: return TaskKind::S2S;
        case TrainTask::S2T: return TaskKind::S2T;
        case TrainTask::T2T: return TaskKind::T2T;
    }
    return TaskKind::T2T;
}

void StageConfig::validate() const {
    if (tasks.empty()) throw ConfigError("stage: no tasks");
    double sum = 0.0;
    for (const auto& t : tasks) {
        if (!(t.probability >= 0.0)) throw ConfigError("stage: negative task probability");
        if (!(t.lambda >= 0.0)) throw ConfigError("stage: negative loss coefficient");
        sum += t.probability;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("stage: task probabilities sum to " + format_double(sum));
    if (steps < 0 || batch_size < 1 || seq_len_cap < 1 || warmup_steps < 0 || !(lr > 0.0)) {
        throw ConfigError("stage: steps >= 0, batch_size >= 1, seq_len_cap >= 1, warmup >= 0, lr > 0 required");
    }
}

StageConfig read_stage_config(const Config& c, const std::string& prefix) {
    StageConfig s;
    const auto names = c.get_list(prefix + "tasks");
    const auto ps = c.get_list(prefix + "p");
    std::vector<std::string> ls;
    if (c.has(prefix + "lambda")) {
        ls = c.get_list(prefix + "lambda");
    } else {
        ls.assign(names.size(), "1");
    }
    if (ps.size() != names.size() || ls.size() != names.size()) {
        throw ConfigError("stage: " + prefix + "tasks, p and lambda must have the same length");
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        TaskEntry e;
        e.task = parse_train_task(names[i]);
        Config tmp;
        tmp.set("p", ps[i]);
        tmp.set("l", ls[i]);
        e.probability = tmp.get_double("p");
        e.lambda = tmp.get_double("l");
        e.dataset = c.get(prefix + "data." + names[i]);
        s.tasks.push_back(std::move(e));
    }
    s.steps = static_cast<int>(c.get_int_or(prefix + "steps", s.steps));
    s.batch_size = static_cast<int>(c.get_int_or(prefix + "batch_size", s.batch_size));
    s.seq_len_cap = static_cast<int>(c.get_int_or(prefix + "seq_len_cap", s.seq_len_cap));
    s.lr = c.get_double_or(prefix + "lr", s.lr);
    s.warmup_steps = static_cast<int>(c.get_int_or(prefix + "warmup_steps", s.warmup_steps));
    s.seed = c.get_u64_or(prefix + "seed", s.seed);
    s.validate();
    return s;
}

void write_stage_config(Config& c, const std::string& prefix, const StageConfig& s) {
    std::string names, ps, ls;
    for (const auto& t : s.tasks) {
        const std::string sep = names.empty() ? "" : ",";
        names += sep + std::string(train_task_name(t.task));
        ps += sep + format_double(t.probability);
        ls += sep + format_double(t.lambda);
        c.set(prefix + "data." + std::string(train_task_name(t.task)), t.dataset.string());
    }
    c.set(prefix + "tasks", names);
    c.set(prefix + "p", ps);
    c.set(prefix + "lambda", ls);
    c.set(prefix + "steps", s.steps);
    c.set(prefix + "batch_size", s.batch_size);
    c.set(prefix + "seq_len_cap", s.seq_len_cap);
    c.set(prefix + "lr", s.lr);
    c.set(prefix + "warmup_steps", s.warmup_steps);
    c.set(prefix + "seed", s.seed);
}

std::size_t sample_task(const StageConfig& stage, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < stage.tasks.size(); ++i) {
        if (stage.tasks[i].probability <= 0.0) continue;
        acc += stage.tasks[i].probability;
        last_positive = i;
        if (u < acc) return i;
    }
    return last_positive;  // rounding slack when the sum is 1 - eps
}

double learning_rate(const StageConfig& stage, int step) {
    const double peak = stage.lr;
    if (step < stage.warmup_steps) return peak * static_cast<double>(step + 1) / stage.warmup_steps;
    const int decay_steps = std::max(1, stage.steps - stage.warmup_steps);
    const double progress = std::min(1.0, static_cast<double>(step - stage.warmup_steps) / decay_steps);
    const double floor = 0.1 * peak;
    return floor + (peak - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

StageData load_stage_data(const StageConfig& stage, const TokenSpace& space) {
    std::map<std::filesystem::path, std::vector<DatasetRecord>> files;
    StageData data;
    Rng scratch(0);
    for (const auto& entry : stage.tasks) {
        auto it = files.find(entry.dataset);
        if (it == files.end()) it = files.emplace(entry.dataset, load_dataset(entry.dataset)).first;
        const TaskKind kind = format_of(entry.task);
        std::vector<DatasetRecord> keep;
        std::size_t dropped = 0;
        for (const auto& r : it->second) {
            if (r.task != kind) continue;
            // Formatted length does not depend on the codec's variant draws.
            const auto s = build(kind, r.user_text, r.think_text, r.reply_text, space, scratch);
            if (static_cast<int>(s.tokens.size()) > stage.seq_len_cap) {
                ++dropped;
                continue;
            }
            keep.push_back(r);
        }
        data.per_task.push_back(std::move(keep));
        data.dropped_too_long.push_back(dropped);
    }
    return data;
}

std::string StepMetrics::to_line() const {
    std::string ts;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) ts += ',';
        ts += format_double(t[i]);
    }
    return "stage=" + std::to_string(stage) + " step=" + std::to_string(step) + " task=" +
           std::string(train_task_name(task)) + " lr=" + format_double(lr) + " loss=" + format_double(loss) +
           " masked=" + std::to_string(masked) + " tokens=" + std::to_string(tokens) + " t=" + ts;
}

TrainState::TrainState(TokenSpace s, DenoiserParams<float> p, AdamConfig a)
    : space(std::move(s)), params(std::move(p)), adam(AdamState<float>::zeros(params.config)), adam_config(a) {
    if (params.config.vocab_total != space.vocab.total()) {
        throw ConfigError("trainer: model vocab_total " + std::to_string(params.config.vocab_total) +
                          " does not match token space total " + std::to_string(space.vocab.total()));
    }
}

std::pair<std::size_t, MaskedBatch> draw_batch(const TokenSpace& space, const StageConfig& stage,
                                               const StageData& data, Rng& rng) {
    const std::size_t k = sample_task(stage, rng);
    const auto& records = data.per_task.at(k);
    const TrainTask task = stage.tasks[k].task;
    if (records.empty()) {
        throw DataExhaustedError("trainer: no usable records for task " + std::string(train_task_name(task)),
                                 std::string(train_task_name(task)));
    }
    MaskedBatch batch;
    const TaskKind kind = format_of(task);
    for (int b = 0; b < stage.batch_size; ++b) {
        const auto& r = records[uniform_index(rng, records.size())];
        const auto sample = build(kind, r.user_text, r.think_text, r.reply_text, space, rng);
        const double t = uniform01(rng);
        batch.sequences.push_back(corrupt(sample, t, space.vocab.mask_id(), rng));
    }
    return {k, std::move(batch)};
}

StepMetrics train_step(TrainState& state, const StageConfig& stage, const StageData& data, Rng& rng, double lr) {
    auto [k, batch] = draw_batch(state.space, stage, data, rng);
    const auto& entry = stage.tasks[k];
    const StepLoss r = loss_and_grad(state.params, batch, state.grads, static_cast<float>(entry.lambda),
                                     state.workspace.get());
    if (r.empty_mask) {
        // No masked targets anywhere in the batch: gradient is zero.
        state.grads = DenoiserParams<float>::zeros(state.params.config);
    }
    apply_update(state.params, state.grads, state.adam, lr, state.adam_config);

    StepMetrics m;
    m.task = entry.task;
    m.lr = lr;
    m.loss = r.loss;
    m.masked = r.masked;
    m.tokens = batch.token_count();
    for (const auto& s : batch.sequences) m.t.push_back(s.t);
    return m;
}

Rng step_rng(const StageConfig& stage, int stage_index, int step) {
    return Rng(derive_seed(stage.seed, {static_cast<std::uint64_t>(stage_index), static_cast<std::uint64_t>(step)}));
}

Config checkpoint_config(const Config& run_config, const TokenSpace& space, int stage, int next_step) {
    Config c = run_config;
    write_token_space(c, space);
    c.set("state.stage", stage);
    c.set("state.step", next_step);
    return c;
}

namespace {

// Drops log lines at or past (stage, step) so a resumed run does not repeat
// steps executed after the checkpoint was written.
void trim_log(const std::filesystem::path& path, int stage, int step) {
    std::ifstream in(path);
    if (!in) return;
    std::vector<std::string> kept;
    for (std::string line; std::getline(in, line);) {
        int s = 0, t = 0;
        if (std::sscanf(line.c_str(), "stage=%d step=%d", &s, &t) == 2 && (s > stage || (s == stage && t >= step))) {
            continue;
        }
        kept.push_back(std::move(line));
    }
    in.close();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw PersistenceError("trainer: cannot rewrite " + path.string());
    for (const auto& line : kept) out << line << '\n';
}

}  // namespace

CurriculumResult run_curriculum(TrainState& state, const CurriculumOptions& opts) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) throw PersistenceError("trainer: cannot create " + opts.out_dir.string() + ": " + ec.message());

    int start_stage = 1;
    int start_step = 0;
    if (opts.resume) {
        auto ck = load_checkpoint(*opts.resume);
        if (ck.params.config != state.params.config) {
            throw CheckpointFormatError("trainer: resume checkpoint has a different model config");
        }
        state.params = std::move(ck.params);
        state.adam = ck.optimizer ? std::move(*ck.optimizer) : AdamState<float>::zeros(state.params.config);
        start_stage = static_cast<int>(ck.config.get_int("state.stage"));
        start_step = static_cast<int>(ck.config.get_int("state.step"));
    }

    const fs::path log_path = opts.out_dir / "metrics.log";
    if (opts.resume) trim_log(log_path, start_stage, start_step);
    std::ofstream log(log_path, opts.resume ? std::ios::app : std::ios::trunc);
    if (!log) throw PersistenceError("trainer: cannot open " + log_path.string());

    CurriculumResult result;
    const fs::path latest = opts.out_dir / "latest.mdsc";
    auto save = [&](const fs::path& path, int stage, int next_step) {
        save_checkpoint(path, Checkpoint{checkpoint_config(opts.run_config, state.space, stage, next_step),
                                         state.params, state.adam});
        result.checkpoint = path;
    };

    int executed = 0;
    int last_stage = start_stage;
    const std::optional<StageConfig>* stages[2] = {&opts.stage1, &opts.stage2};
    for (int si = 1; si <= 2; ++si) {
        const auto& maybe = *stages[si - 1];
        if (!maybe || si < start_stage) continue;
        const StageConfig& stage = *maybe;
        stage.validate();
        const StageData data = load_stage_data(stage, state.space);
        const int first = si == start_stage ? start_step : 0;
        if (first == 0) state.adam = AdamState<float>::zeros(state.params.config);
        last_stage = si;
        for (int step = first; step < stage.steps; ++step) {
            if (opts.stop_after >= 0 && executed >= opts.stop_after) {
                save(latest, si, step);
                result.params = state.params;
                return result;
            }
            Rng rng = step_rng(stage, si, step);
            StepMetrics m = train_step(state, stage, data, rng, learning_rate(stage, step));
            m.stage = si;
            m.step = step;
            log << m.to_line() << '\n';
            log.flush();
            if (opts.on_step) opts.on_step(m);
            result.metrics.push_back(std::move(m));
            ++executed;
            if (opts.checkpoint_every > 0 && (step + 1) % opts.checkpoint_every == 0 && step + 1 < stage.steps) {
                save(latest, si, step + 1);
            }
        }
        save(latest, si, stage.steps);
    }
    save(opts.out_dir / "final.mdsc", last_stage,
         last_stage == 1 ? (opts.stage1 ? opts.stage1->steps : 0) : (opts.stage2 ? opts.stage2->steps : 0));
    result.params = state.params;
    result.finished = true;
    return result;
}

}  // namespace mdsc

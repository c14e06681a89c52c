// Command-line front end: gen-data, train, generate, eval, probe.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mdsc/checkpoint.hpp"
#include "mdsc/datagen.hpp"
#include "mdsc/evalkit.hpp"
#include "mdsc/run.hpp"
#include "mdsc/sampler.hpp"
#include "mdsc/space_config.hpp"

namespace fs = std::filesystem;
using namespace mdsc;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

Config load_config(const Common& c) {
    Config cfg = c.config.empty() ? Config() : Config::load(c.config);
    if (c.seed) cfg.set("seed", *c.seed);
    return cfg;
}

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "key = value config file");
    app->add_option("--seed", c.seed, "root seed (overrides the config)");
    app->add_option("--out", c.out, "output path");
}

std::vector<TaskKind> parse_tasks(const std::string& list) {
    std::vector<TaskKind> out;
    std::stringstream ss(list);
    for (std::string name; std::getline(ss, name, ',');) out.push_back(parse_task(name));
    return out;
}

// ---- gen-data ----

struct GenArgs {
    Common common;
    std::string kind;
    std::size_t size = 1000;
    bool no_thinking = false;
    int min_words = 4;
    int max_words = 8;
    int operations = 2;
    int max_operand = 20;
    int max_value = 99;
    std::string tasks = "s2s,s2t,t2t";
};

int run_gen(const GenArgs& a) {
    if (a.common.out.empty()) throw ConfigError("gen-data: --out is required");
    const Config cfg = load_config(a.common);
    const std::uint64_t seed = cfg.get_u64_or("seed", 1);
    std::vector<DatasetRecord> records;
    std::ostringstream header;
    header << version_string() << "\nkind=" << a.kind << " size=" << a.size << " seed=" << seed;
    if (a.kind == "copy-asr-tts" || a.kind == "lm") {
        SentenceOptions o;
        o.size = a.size;
        o.seed = seed;
        o.min_words = a.min_words;
        o.max_words = a.max_words;
        records = a.kind == "lm" ? lm_corpus(o) : copy_asr_tts(o);
        header << " min_words=" << a.min_words << " max_words=" << a.max_words;
    } else if (a.kind == "thinking-qa") {
        QaOptions o;
        o.size = a.size;
        o.seed = seed;
        o.with_thinking = !a.no_thinking;
        o.operations = a.operations;
        o.max_operand = a.max_operand;
        o.max_value = a.max_value;
        o.tasks = parse_tasks(a.tasks);
        records = thinking_qa(o);
        header << " operations=" << a.operations << " max_operand=" << a.max_operand << " max_value=" << a.max_value
               << " tasks=" << a.tasks;
    } else {
        throw ConfigError("gen-data: unknown kind '" + a.kind + "'");
    }
    save_dataset(a.common.out, records, header.str());
    std::cout << "wrote " << records.size() << " records to " << a.common.out << '\n';
    return 0;
}

// ---- train ----

struct TrainArgs {
    Common common;
    int stage = 0;
    std::string resume;
    int stop_after = -1;
    bool quiet = false;
};

int run_train(const TrainArgs& a) {
    if (a.common.config.empty()) throw ConfigError("train: --config is required");
    Config cfg = load_config(a.common);
    const fs::path out_dir = a.common.out.empty() ? fs::path(cfg.get_or("run.out", "run")) : fs::path(a.common.out);
    cfg.set("run.out", out_dir.string());
    const RunPlan plan = plan_run(cfg, a.stage);
    RunOptions opts;
    opts.out_dir = out_dir;
    if (!a.resume.empty()) opts.resume = fs::path(a.resume);
    opts.stop_after = a.stop_after;
    const auto start = std::chrono::steady_clock::now();
    if (!a.quiet) {
        opts.on_step = [start](const StepMetrics& m) {
            if (m.step % 50 != 0) return;
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            std::fprintf(stderr, "stage %d step %d %s loss %.4f lr %.2e (%.0fs)\n", m.stage, m.step,
                         std::string(train_task_name(m.task)).c_str(), m.loss, m.lr, secs);
        };
    }
    const auto result = execute_run(plan, opts);
    std::cout << (result.finished ? "finished" : "stopped") << "; checkpoint " << result.checkpoint.string() << '\n';
    return 0;
}

// ---- generate ----

struct LoadedModel {
    TokenSpace space;
    Denoiser model;
};

LoadedModel load_model(const std::string& path) {
    auto ck = load_checkpoint(path);
    TokenSpace space = read_token_space(ck.config);
    if (space.vocab.total() != ck.params.config.vocab_total) {
        throw CheckpointFormatError("checkpoint: token space does not match the model vocabulary");
    }
    return {std::move(space), Denoiser(std::move(ck.params))};
}

struct GenerateArgs {
    Common common;
    std::string checkpoint;
    std::string task;
    std::string input;
    int n = 0;
    int steps = 0;
    double temperature = 1.0;
    std::string trace;
};

int run_generate(const GenerateArgs& a) {
    const auto lm = load_model(a.checkpoint);
    const TaskKind task = parse_task(a.task);
    int n = a.n;
    if (n <= 0) {
        if (task != TaskKind::TTS && task != TaskKind::ASR) throw ConfigError("generate: --n is required for " + a.task);
        // Copy tasks: the reply has the same content as the input.
        n = reference_target_length(task, a.input, "", a.input, lm.space);
    }
    const int steps = a.steps > 0 ? a.steps : n;
    const Config cfg = load_config(a.common);
    auto write = [&](const Generation& g) {
        if (a.trace.empty()) return;
        std::ofstream out(a.trace);
        if (!out) throw PersistenceError("generate: cannot write " + a.trace);
        write_trace(out, g.trace);
    };
    try {
        const Response r = respond(lm.model, task, a.input, n, steps, a.temperature, lm.space, cfg.get_u64_or("seed", 0));
        write(r.generation);
        std::cout << "think: " << r.think_text << '\n' << "reply: " << r.reply_text << '\n';
        if (r.truncated_tail) std::cout << "note: trailing partial speech frame dropped\n";
    } catch (const MalformedResponseError& e) {
        write(e.generation());
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

// ---- eval ----

struct EvalArgs {
    Common common;
    std::string checkpoint;
    std::string suite;
    std::string dataset;
    int n = 0;
    int steps = 0;
    double temperature = 1.0;
    std::size_t limit = 0;
};

int run_eval(const EvalArgs& a) {
    const auto lm = load_model(a.checkpoint);
    std::vector<DatasetRecord> records;
    for (auto& r : load_dataset(a.dataset)) {
        const bool keep = a.suite == "tts"   ? r.task == TaskKind::TTS
                          : a.suite == "asr" ? r.task == TaskKind::ASR
                          : a.suite == "qa"  ? has_thinking(r.task)
                                             : throw ConfigError("eval: unknown suite '" + a.suite + "'");
        if (keep) records.push_back(std::move(r));
    }
    if (a.limit > 0 && records.size() > a.limit) records.resize(a.limit);
    if (records.empty()) std::cerr << "warning: no " << a.suite << " records in " << a.dataset << '\n';

    std::vector<MetricRow> rows;
    const std::vector<int> divisors = a.steps > 0 ? std::vector<int>{0} : std::vector<int>{1, 2, 4};
    for (int div : divisors) {
        DecodePolicy p;
        p.fixed_n = a.n;
        p.fixed_steps = div == 0 ? a.steps : 0;
        p.steps_divisor = std::max(div, 1);
        p.temperature = a.temperature;
        const std::string tag = div == 0 ? "T=" + std::to_string(a.steps) : (div == 1 ? "T=n" : "T=n/" + std::to_string(div));
        if (a.suite == "qa") {
            const auto rep = qa_eval(lm.model, records, lm.space, p);
            rows.push_back({"qa.accuracy." + tag, rep.score.accuracy, rep.score.count});
            rows.push_back({"qa.malformed." + tag, static_cast<double>(rep.malformed), rep.score.count});
        } else {
            std::vector<std::string> texts;
            for (const auto& r : records) texts.push_back(r.user_text);
            const auto rep = a.suite == "tts" ? tts_eval(lm.model, texts, lm.space, p) : asr_eval(lm.model, texts, lm.space, p);
            rows.push_back({a.suite + ".wer." + tag, rep.corpus_wer, rep.items});
            rows.push_back({a.suite + ".malformed." + tag, static_cast<double>(rep.malformed), rep.items});
        }
    }
    write_report(std::cout, rows);
    if (!a.common.out.empty()) save_report(a.common.out, rows);
    return 0;
}

// ---- probe ----

struct ProbeArgs {
    Common common;
    std::vector<std::string> grid;  // "n:T"
    std::string trace;
    std::vector<double> t_values;
    int trials = 1000;
    std::string sentence = "the quick brown fox jumps over the lazy dog";
};

int run_probe(const ProbeArgs& a) {
    std::ostringstream out;
    for (const auto& g : a.grid) {
        const auto colon = g.find(':');
        if (colon == std::string::npos) throw ConfigError("probe: grid entries look like n:T, got '" + g + "'");
        const int n = std::stoi(g.substr(0, colon));
        const int T = std::stoi(g.substr(colon + 1));
        out << "schedule n=" << n << " T=" << T << '\n' << "step cumulative new\n";
        int prev = 0;
        for (int i = T; i >= 1; --i) {
            const int k = unmask_target(i, n, T);
            out << i << ' ' << k << ' ' << k - prev << '\n';
            prev = k;
        }
    }
    if (!a.trace.empty()) {
        std::ifstream in(a.trace);
        if (!in) throw ValidationError("probe: cannot open " + a.trace);
        const auto t = read_trace(in);
        out << "trace n=" << t.n << " T=" << t.steps_total << " temperature=" << format_double(t.temperature)
            << " steps=" << t.lines.size() << '\n' << "step cumulative new conf_min conf_mean conf_max\n";
        for (const auto& l : t.lines) {
            out << l.step << ' ' << l.cumulative << ' ' << l.unmasked.size() << ' ' << format_double(l.conf_min) << ' '
                << format_double(l.conf_mean) << ' ' << format_double(l.conf_max) << '\n';
        }
    }
    if (!a.t_values.empty()) {
        const Config cfg = load_config(a.common);
        const std::uint64_t seed = cfg.get_u64_or("seed", 1);
        const auto space = TokenSpace::make(TextTokenizer(TextTokenizer::split_words(a.sentence)), read_codec(cfg));
        Rng rng(seed);
        const auto sample = build(TaskKind::TTS, a.sentence, "", a.sentence, space, rng);
        out << "masking_probe positions_per_trial=" << sample.target_positions.size() << " trials=" << a.trials << '\n'
            << "t gamma fraction lower99 upper99\n";
        for (double t : a.t_values) {
            const auto p = masking_probe(t, sample, a.trials, seed, space.vocab.mask_id());
            out << format_double(t) << ' ' << format_double(mask_probability(t)) << ' ' << format_double(p.fraction) << ' '
                << format_double(p.lower) << ' ' << format_double(p.upper) << '\n';
        }
    }
    std::cout << out.str();
    if (!a.common.out.empty()) {
        std::ofstream f(a.common.out);
        if (!f) throw PersistenceError("probe: cannot write " + a.common.out);
        f << out.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Masked-diffusion speech/text toolkit"};
    app.set_version_flag("--version", std::string(version_string()));
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen-data", "write a synthetic dataset");
    add_common(g, gen.common);
    g->add_option("--kind", gen.kind, "copy-asr-tts | lm | thinking-qa")->required()
        ->check(CLI::IsMember({"copy-asr-tts", "lm", "thinking-qa"}));
    g->add_option("--size", gen.size, "number of sentences or questions")->check(CLI::PositiveNumber);
    g->add_flag("--no-thinking", gen.no_thinking, "thinking-qa: leave think_text empty");
    g->add_option("--min-words", gen.min_words);
    g->add_option("--max-words", gen.max_words);
    g->add_option("--operations", gen.operations, "thinking-qa: operations per question");
    g->add_option("--max-operand", gen.max_operand);
    g->add_option("--max-value", gen.max_value, "thinking-qa: bound on partial results");
    g->add_option("--tasks", gen.tasks, "thinking-qa: comma list of s2s,s2t,t2t");

    TrainArgs train;
    auto* t = app.add_subcommand("train", "run the training curriculum");
    add_common(t, train.common);
    t->add_option("--stage", train.stage, "run only this stage (1 or 2)")->check(CLI::Range(1, 2));
    t->add_option("--resume", train.resume, "checkpoint to resume from");
    t->add_option("--stop-after", train.stop_after, "halt after this many steps");
    t->add_flag("--quiet", train.quiet);

    GenerateArgs gn;
    auto* ge = app.add_subcommand("generate", "answer one request");
    add_common(ge, gn.common);
    ge->add_option("--checkpoint", gn.checkpoint)->required();
    ge->add_option("--task", gn.task, "tts | asr | s2s | s2t | t2t")->required();
    ge->add_option("--input", gn.input)->required();
    ge->add_option("--n", gn.n, "target length (default: input-derived for tts/asr)");
    ge->add_option("--steps", gn.steps, "denoising steps (default n)");
    ge->add_option("--temperature", gn.temperature)->check(CLI::PositiveNumber);
    ge->add_option("--trace", gn.trace, "write the generation trace here");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "score a checkpoint on a dataset");
    add_common(e, ev.common);
    e->add_option("--checkpoint", ev.checkpoint)->required();
    e->add_option("--suite", ev.suite, "tts | asr | qa")->required()->check(CLI::IsMember({"tts", "asr", "qa"}));
    e->add_option("--dataset", ev.dataset)->required();
    e->add_option("--n", ev.n, "fixed target length (default: reference length)");
    e->add_option("--steps", ev.steps, "fixed step count (default: sweep n, n/2, n/4)");
    e->add_option("--temperature", ev.temperature)->check(CLI::PositiveNumber);
    e->add_option("--limit", ev.limit, "score at most this many items");

    ProbeArgs pr;
    auto* p = app.add_subcommand("probe", "schedule tables, trace summaries and masking statistics");
    add_common(p, pr.common);
    p->add_option("--grid", pr.grid, "n:T pairs for unmask schedule tables");
    p->add_option("--trace", pr.trace, "trace file written by generate");
    p->add_option("--t", pr.t_values, "noise levels for the masking probe");
    p->add_option("--trials", pr.trials)->check(CLI::Range(100, 100000000));
    p->add_option("--sentence", pr.sentence, "sample text for the masking probe");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*g) return run_gen(gen);
        if (*t) return run_train(train);
        if (*ge) return run_generate(gn);
        if (*e) return run_eval(ev);
        if (*p) return run_probe(pr);
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}

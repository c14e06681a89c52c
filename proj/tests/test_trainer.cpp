#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "mdsc/datagen.hpp"
#include "mdsc/error.hpp"
#include "mdsc/trainer.hpp"

using namespace mdsc;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    fs::path dir;
    fs::path copy, lm, empty;
    TokenSpace space;
    ModelConfig model;

    explicit Fixture(const std::string& name) {
        dir = fs::temp_directory_path() / ("mdsc_trainer_" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
        SentenceOptions o;
        o.size = 40;
        o.seed = 3;
        o.min_words = 2;
        o.max_words = 4;
        copy = dir / "copy.tsv";
        lm = dir / "lm.tsv";
        empty = dir / "empty.tsv";
        save_dataset(copy, copy_asr_tts(o));
        save_dataset(lm, lm_corpus(o));
        save_dataset(empty, {});
        space = TokenSpace::make(TextTokenizer(default_lexicon()), CodecSpec{});
        model.vocab_total = space.vocab.total();
        model.dim = 16;
        model.layers = 1;
        model.heads = 2;
        model.max_len = 96;
        model.mlp_ratio = 2;
        model.seed = 9;
    }

    StageConfig stage1(int steps) const {
        StageConfig s;
        s.tasks = {{TrainTask::TTS, 0.4, 1.0, copy}, {TrainTask::ASR, 0.4, 1.0, copy}, {TrainTask::LM, 0.2, 1.0, lm}};
        s.steps = steps;
        s.batch_size = 4;
        s.seq_len_cap = 96;
        s.lr = 3e-3;
        s.warmup_steps = 2;
        s.seed = 21;
        return s;
    }

    TrainState state() const { return TrainState(space, init_params<float>(model)); }
};

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    return lines;
}

}  // namespace

TEST_CASE("task sampling frequencies") {
    StageConfig s;
    s.tasks = {{TrainTask::TTS, 0.4, 1, {}}, {TrainTask::ASR, 0.4, 1, {}}, {TrainTask::LM, 0.2, 1, {}}};
    Rng rng(1);
    std::vector<int> counts(3);
    for (int k = 0; k < 100000; ++k) ++counts[sample_task(s, rng)];
    CHECK(std::abs(counts[0] / 1e5 - 0.4) <= 0.01);
    CHECK(std::abs(counts[1] / 1e5 - 0.4) <= 0.01);
    CHECK(std::abs(counts[2] / 1e5 - 0.2) <= 0.01);
}

TEST_CASE("stage isolation") {
    StageConfig s;
    s.tasks = {{TrainTask::S2S, 0.3, 1, {}}, {TrainTask::S2T, 0.3, 1, {}}, {TrainTask::T2T, 0.2, 1, {}},
               {TrainTask::ASR, 0.1, 1, {}}, {TrainTask::TTS, 0.1, 1, {}}, {TrainTask::LM, 0.0, 1, {}}};
    s.validate();
    Rng rng(2);
    for (int k = 0; k < 10000; ++k) CHECK(s.tasks[sample_task(s, rng)].task != TrainTask::LM);
}

TEST_CASE("stage validation and config round trip") {
    Fixture f("config");
    auto s = f.stage1(10);
    Config c;
    write_stage_config(c, "stage1.", s);
    const auto back = read_stage_config(Config::parse(c.serialize()), "stage1.");
    REQUIRE(back.tasks.size() == 3);
    CHECK(back.tasks[2].task == TrainTask::LM);
    CHECK(back.tasks[2].probability == 0.2);
    CHECK(back.tasks[0].dataset == f.copy);
    CHECK(back.lr == s.lr);
    CHECK(back.seed == s.seed);

    auto bad = s;
    bad.tasks[0].probability = 0.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = s;
    bad.tasks[1].lambda = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    c.set("stage1.p", "0.5,0.5");
    CHECK_THROWS_AS(read_stage_config(c, "stage1."), ConfigError);
}

TEST_CASE("learning rate schedule") {
    StageConfig s;
    s.lr = 1e-3;
    s.steps = 110;
    s.warmup_steps = 10;
    CHECK(learning_rate(s, 0) == doctest::Approx(1e-4));
    CHECK(learning_rate(s, 9) == doctest::Approx(1e-3));
    CHECK(learning_rate(s, 10) == doctest::Approx(1e-3));
    CHECK(learning_rate(s, 60) == doctest::Approx(0.55e-3));
    CHECK(learning_rate(s, 110) == doctest::Approx(1e-4));
    for (int k = 10; k < 110; ++k) CHECK(learning_rate(s, k + 1) <= learning_rate(s, k));
}

TEST_CASE("zero loss coefficient leaves only weight decay") {
    Fixture f("lambda0");
    auto stage = f.stage1(1);
    for (auto& t : stage.tasks) t.lambda = 0.0;
    const auto data = load_stage_data(stage, f.space);
    auto st = f.state();
    const auto before = st.params;
    Rng rng(5);
    const double lr = 0.01;
    train_step(st, stage, data, rng, lr);
    const auto pb = before.tensors();
    const auto pa = st.params.tensors();
    const float decay = static_cast<float>(lr * st.adam_config.weight_decay);
    for (std::size_t i = 0; i < pa.size(); ++i) {
        for (std::size_t k = 0; k < pa[i]->size(); ++k) {
            const float w = pb[i]->data[k];
            if (pb[i]->decay) {
                REQUIRE(std::abs(pa[i]->data[k] - (w - decay * w)) <= 1e-7f * std::abs(w));
            } else {
                REQUIRE(pa[i]->data[k] == w);
            }
        }
    }
}

TEST_CASE("loss coefficient scales the gradient linearly") {
    Fixture f("linear");
    const auto stage = f.stage1(1);
    const auto data = load_stage_data(stage, f.space);
    Rng rng(6);
    const auto [k, batch] = draw_batch(f.space, stage, data, rng);
    const auto params = init_params<float>(f.model).cast<double>();
    auto g1 = DenoiserParams<double>::zeros(f.model);
    auto g3 = DenoiserParams<double>::zeros(f.model);
    const auto l1 = loss_and_grad(params, batch, g1, 1.0);
    const auto l3 = loss_and_grad(params, batch, g3, 2.5);
    CHECK(l3.loss == doctest::Approx(2.5 * l1.loss).epsilon(1e-12));
    const auto a = g1.tensors();
    const auto b = g3.tensors();
    for (std::size_t i = 0; i < a.size(); ++i) {
        double scale = 0.0, worst = 0.0;
        for (std::size_t j = 0; j < a[i]->size(); ++j) {
            scale = std::max(scale, std::abs(2.5 * a[i]->data[j]));
            worst = std::max(worst, std::abs(2.5 * a[i]->data[j] - b[i]->data[j]));
        }
        CHECK(worst <= 1e-12 * std::max(scale, 1e-30));
    }
}

TEST_CASE("fresh model loss is close to ln|V| on text batches") {
    Fixture f("baseline");
    StageConfig s = f.stage1(1);
    s.tasks = {{TrainTask::LM, 1.0, 1.0, f.lm}};
    s.batch_size = 16;
    const auto data = load_stage_data(s, f.space);
    auto st = f.state();
    Rng rng(7);
    const auto m = train_step(st, s, data, rng, 0.0);
    const double ln_v = std::log(static_cast<double>(f.space.vocab.total()));
    CHECK(std::abs(m.loss - ln_v) <= 0.15 * ln_v);
    CHECK(m.task == TrainTask::LM);
    CHECK(m.t.size() == 16);
}

TEST_CASE("empty task data raises a data-exhausted error naming the task") {
    Fixture f("empty");
    StageConfig s = f.stage1(1);
    s.tasks = {{TrainTask::ASR, 1.0, 1.0, f.empty}};
    const auto data = load_stage_data(s, f.space);
    auto st = f.state();
    Rng rng(1);
    try {
        train_step(st, s, data, rng, 1e-3);
        FAIL("expected an error");
    } catch (const DataExhaustedError& e) {
        CHECK(e.task() == "asr");
    }
}

TEST_CASE("length cap drops long records") {
    Fixture f("cap");
    StageConfig s = f.stage1(1);
    s.seq_len_cap = 40;
    const auto data = load_stage_data(s, f.space);
    CHECK(data.dropped_too_long[0] > 0);
    CHECK(data.per_task[0].size() + data.dropped_too_long[0] == 40);
}

TEST_CASE("identical seeds give identical metrics") {
    Fixture f("determinism");
    const auto run = [&](const std::string& sub) {
        auto st = f.state();
        CurriculumOptions o;
        o.stage1 = f.stage1(6);
        o.out_dir = f.dir / sub;
        return run_curriculum(st, o);
    };
    const auto a = run("a");
    const auto b = run("b");
    CHECK(read_lines(f.dir / "a" / "metrics.log") == read_lines(f.dir / "b" / "metrics.log"));
    CHECK(read_lines(f.dir / "a" / "metrics.log").size() == 6);
    CHECK(read_file_bytes(f.dir / "a" / "final.mdsc") == read_file_bytes(f.dir / "b" / "final.mdsc"));
    CHECK(a.finished);
}

TEST_CASE("zero steps returns the initialization") {
    Fixture f("zero");
    auto st = f.state();
    CurriculumOptions o;
    o.stage1 = f.stage1(0);
    o.out_dir = f.dir / "run";
    const auto r = run_curriculum(st, o);
    const auto init = init_params<float>(f.model);
    const auto ck = load_checkpoint(f.dir / "run" / "final.mdsc");
    const auto a = ck.params.tensors();
    const auto b = init.tensors();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->data == b[i]->data);
    CHECK(r.metrics.empty());
}

TEST_CASE("resume reproduces the uninterrupted run") {
    Fixture f("resume");
    StageConfig s2 = f.stage1(4);
    s2.tasks = {{TrainTask::T2T, 0.5, 1.0, f.lm}, {TrainTask::TTS, 0.5, 0.5, f.copy}};
    s2.seed = 99;
    auto options = [&](const std::string& sub) {
        CurriculumOptions o;
        o.stage1 = f.stage1(5);
        o.stage2 = s2;
        o.out_dir = f.dir / sub;
        o.checkpoint_every = 2;
        return o;
    };
    {
        auto st = f.state();
        run_curriculum(st, options("full"));
    }
    for (int cut : {3, 5, 7}) {
        const std::string sub = "cut" + std::to_string(cut);
        {
            auto st = f.state();
            auto o = options(sub);
            o.stop_after = cut;
            const auto r = run_curriculum(st, o);
            CHECK_FALSE(r.finished);
        }
        auto st = f.state();
        auto o = options(sub);
        o.resume = f.dir / sub / "latest.mdsc";
        const auto r = run_curriculum(st, o);
        CHECK(r.finished);
        CHECK(read_lines(f.dir / sub / "metrics.log") == read_lines(f.dir / "full" / "metrics.log"));
        CHECK(read_file_bytes(f.dir / sub / "final.mdsc") == read_file_bytes(f.dir / "full" / "final.mdsc"));
    }
    CHECK(read_lines(f.dir / "full" / "metrics.log").size() == 9);

    // A crash after the checkpoint leaves extra log lines; resume drops them.
    {
        auto st = f.state();
        auto o = options("crash");
        o.stop_after = 3;
        run_curriculum(st, o);
        const auto full = read_lines(f.dir / "full" / "metrics.log");
        std::ofstream log(f.dir / "crash" / "metrics.log", std::ios::trunc);
        for (int i = 0; i < 6; ++i) log << full[i] << '\n';
    }
    auto st = f.state();
    auto o = options("crash");
    o.resume = f.dir / "crash" / "latest.mdsc";
    run_curriculum(st, o);
    CHECK(read_lines(f.dir / "crash" / "metrics.log") == read_lines(f.dir / "full" / "metrics.log"));
}

TEST_CASE("checkpoint write failure halts at a step boundary") {
    Fixture f("persist");
    auto st = f.state();
    CurriculumOptions o;
    o.stage1 = f.stage1(6);
    o.out_dir = f.dir / "run";
    o.checkpoint_every = 3;
    fs::create_directories(o.out_dir / "latest.mdsc.tmp");  // blocks the temporary file
    CHECK_THROWS_AS(run_curriculum(st, o), PersistenceError);
    CHECK(read_lines(o.out_dir / "metrics.log").size() == 3);
    CHECK_FALSE(fs::exists(o.out_dir / "final.mdsc"));
}

TEST_CASE("task names") {
    for (auto t : {TrainTask::TTS, TrainTask::ASR, TrainTask::LM, TrainTask::S2S, TrainTask::S2T, TrainTask::T2T}) {
        CHECK(parse_train_task(train_task_name(t)) == t);
    }
    CHECK(format_of(TrainTask::LM) == TaskKind::T2T);
    CHECK_THROWS_AS(parse_train_task("mmlu"), ConfigError);
}

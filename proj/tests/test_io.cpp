#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mdsc/checkpoint.hpp"
#include "mdsc/config.hpp"
#include "mdsc/dataset.hpp"
#include "mdsc/error.hpp"
#include "mdsc/random.hpp"
#include "mdsc/space_config.hpp"

using namespace mdsc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("mdsc_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string random_field(Rng& rng) {
    static const std::string alphabet = "ab \t\n\r\\#xyz=";
    std::string s;
    const std::size_t n = uniform_index(rng, 12);
    for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[uniform_index(rng, alphabet.size())]);
    return s;
}

Checkpoint small_checkpoint(bool with_optimizer) {
    ModelConfig m;
    m.vocab_total = 23;
    m.dim = 8;
    m.layers = 2;
    m.heads = 2;
    m.max_len = 16;
    m.mlp_ratio = 2;
    m.seed = 3;
    Checkpoint ck;
    write_model_config(ck.config, m);
    ck.config.set("note", "checkpoint test");
    ck.params = init_params<float>(m);
    if (with_optimizer) {
        ck.optimizer = AdamState<float>::zeros(m);
        ck.optimizer->step = 5;
        ck.optimizer->m.tensors()[0]->data[0] = 0.25f;
    }
    return ck;
}

}  // namespace

TEST_CASE("dataset records round trip through the text format") {
    Rng rng(1);
    std::vector<DatasetRecord> records;
    for (int k = 0; k < 500; ++k) {
        // user and reply must contain a word; think may be anything
        records.push_back({kAllTasks[uniform_index(rng, 5)], "u" + random_field(rng), random_field(rng),
                           random_field(rng) + "r"});
    }
    std::stringstream ss;
    write_dataset(ss, records, "header line\nsecond");
    CHECK(read_dataset(ss) == records);
    for (const auto& r : records) CHECK(parse_record(serialize_record(r)) == r);
}

TEST_CASE("dataset comments and errors") {
    std::stringstream ok("# comment\ntts\ta\t\tb\n\n");
    const auto r = read_dataset(ok);
    REQUIRE(r.size() == 1);
    CHECK(r[0].task == TaskKind::TTS);
    CHECK_THROWS_AS(parse_record("tts\ta\tb"), FormatError);
    CHECK_THROWS_AS(parse_record("tts\ta\tb\tc\td"), FormatError);
    CHECK_THROWS_AS(parse_record("xyz\ta\tb\tc"), Error);
    CHECK_THROWS_AS(unescape_field("a\\q"), FormatError);
    CHECK_THROWS_AS(unescape_field("a\\"), FormatError);
    CHECK_THROWS_AS(load_dataset("/nonexistent/data.tsv"), ValidationError);
}

TEST_CASE("dataset files") {
    const auto dir = temp_dir("dataset");
    const std::vector<DatasetRecord> records = {{TaskKind::S2S, "q", "t", "a"}, {TaskKind::ASR, "x y", "", "x y"}};
    save_dataset(dir / "d.tsv", records, "made by a test");
    CHECK(load_dataset(dir / "d.tsv") == records);
}

TEST_CASE("config parsing and typed access") {
    const auto c = Config::parse("# top\nmodel.dim = 64\n  name =  spaced value\nlist = a,b , c\nx=1.5\n");
    CHECK(c.get_int("model.dim") == 64);
    CHECK(c.get("name") == " spaced value");
    CHECK(c.get_list("list") == std::vector<std::string>{"a", "b", "c"});
    CHECK(c.get_double("x") == 1.5);
    CHECK(c.get_int_or("missing", 7) == 7);
    CHECK_THROWS_AS(c.get("missing"), ConfigError);
    CHECK_THROWS_AS(c.get_int("x"), ConfigError);
    CHECK_THROWS_AS(Config::parse("no equals sign"), ConfigError);
    CHECK(c.keys_with_prefix("model.") == std::vector<std::string>{"model.dim"});
}

TEST_CASE("config serialization is sorted and round trips") {
    Config c;
    c.set("b", 0.1);
    c.set("a", 3);
    c.set("c.d", std::string("x y"));
    CHECK(c.serialize() == "a = 3\nb = 0.1\nc.d = x y\n");
    CHECK(Config::parse(c.serialize()) == c);
    Rng rng(4);
    for (int k = 0; k < 200; ++k) {
        const double v = (uniform01(rng) - 0.5) * std::pow(10.0, static_cast<double>(uniform_index(rng, 20)) - 10);
        Config d;
        d.set("v", v);
        CHECK(Config::parse(d.serialize()).get_double("v") == v);
    }
}

TEST_CASE("token space survives a config round trip") {
    const auto space = TokenSpace::make(TextTokenizer({"one", "two", "three"}), CodecSpec{});
    Config c;
    write_token_space(c, space);
    const auto back = read_token_space(Config::parse(c.serialize()));
    CHECK(back.vocab == space.vocab);
    CHECK(back.text.vocabulary() == space.text.vocabulary());
    CHECK(back.codec.charset == space.codec.charset);
    c.set("vocab.special_names", "a,b");
    CHECK_THROWS_AS(read_token_space(c), ConfigError);
}

TEST_CASE("checkpoint save, load, save is byte identical") {
    const auto dir = temp_dir("ckpt");
    for (bool opt : {false, true}) {
        const auto ck = small_checkpoint(opt);
        save_checkpoint(dir / "a.mdsc", ck);
        const auto loaded = load_checkpoint(dir / "a.mdsc");
        save_checkpoint(dir / "b.mdsc", loaded);
        CHECK(read_file_bytes(dir / "a.mdsc") == read_file_bytes(dir / "b.mdsc"));
        CHECK(loaded.params.config == ck.params.config);
        CHECK(loaded.optimizer.has_value() == opt);
        const auto pa = ck.params.tensors();
        const auto pb = loaded.params.tensors();
        for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->data == pb[i]->data);
        if (opt) {
            CHECK(loaded.optimizer->step == 5);
            CHECK(loaded.optimizer->m.tensors()[0]->data[0] == 0.25f);
        }
    }
}

TEST_CASE("checkpoint header layout") {
    const auto bytes = serialize_checkpoint(small_checkpoint(false));
    REQUIRE(bytes.size() > 16);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "MDSC");
    CHECK(bytes[4] == 1);
    CHECK(bytes[5] == 0);
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i + 8 < bytes.size(); ++i) sum += bytes[i];
    std::uint64_t stored = 0;
    for (int i = 7; i >= 0; --i) stored = (stored << 8) | bytes[bytes.size() - 8 + static_cast<std::size_t>(i)];
    CHECK(stored == sum);
}

TEST_CASE("corrupt checkpoints are rejected") {
    const auto good = serialize_checkpoint(small_checkpoint(true));
    SUBCASE("magic") {
        auto b = good;
        b[0] = 'X';
        CHECK_THROWS_AS(deserialize_checkpoint(b), CheckpointFormatError);
    }
    SUBCASE("version") {
        auto b = good;
        b[4] = 2;
        CHECK_THROWS_AS(deserialize_checkpoint(b), CheckpointFormatError);
    }
    SUBCASE("payload flip breaks the checksum") {
        auto b = good;
        b[b.size() / 2] ^= 0x10;
        CHECK_THROWS_AS(deserialize_checkpoint(b), CheckpointFormatError);
    }
    SUBCASE("truncated") {
        for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{12}, good.size() / 2, good.size() - 1}) {
            std::vector<std::uint8_t> b(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
            CHECK_THROWS_AS(deserialize_checkpoint(b), CheckpointFormatError);
        }
    }
}

TEST_CASE("checkpoint write failure raises a persistence error") {
    CHECK_THROWS_AS(save_checkpoint("/nonexistent_dir/x/a.mdsc", small_checkpoint(false)), PersistenceError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent_dir/a.mdsc"), Error);
}

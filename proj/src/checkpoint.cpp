#include "mdsc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "mdsc/error.hpp"

namespace mdsc {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void floats(const std::vector<float>& v) {
        u64(v.size());
        bytes(v.data(), v.size() * sizeof(float));
    }
    std::vector<std::uint8_t> out;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b, std::size_t limit) : buf(b), end(limit) {}
    void bytes(void* p, std::size_t n) {
        if (n > end - pos) throw CheckpointFormatError("checkpoint: truncated file");
        std::memcpy(p, buf.data() + pos, n);
        pos += n;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, 8);
        return v;
    }
    void floats(std::vector<float>& dst, const std::string& name) {
        const std::uint64_t n = u64();
        if (n != dst.size()) {
            throw CheckpointFormatError("checkpoint: array " + name + " has " + std::to_string(n) + " elements, expected " +
                                        std::to_string(dst.size()));
        }
        bytes(dst.data(), n * sizeof(float));
    }
    const std::vector<std::uint8_t>& buf;
    std::size_t end;
    std::size_t pos = 0;
};

std::uint64_t byte_sum(const std::uint8_t* p, std::size_t n) {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < n; ++i) s += p[i];
    return s;
}

}  // namespace

void write_model_config(Config& c, const ModelConfig& m) {
    c.set("model.vocab_total", m.vocab_total);
    c.set("model.dim", m.dim);
    c.set("model.layers", m.layers);
    c.set("model.heads", m.heads);
    c.set("model.max_len", m.max_len);
    c.set("model.mlp_ratio", m.mlp_ratio);
    c.set("model.seed", m.seed);
}

ModelConfig read_model_config(const Config& c) {
    ModelConfig m;
    m.vocab_total = static_cast<int>(c.get_int("model.vocab_total"));
    m.dim = static_cast<int>(c.get_int_or("model.dim", m.dim));
    m.layers = static_cast<int>(c.get_int_or("model.layers", m.layers));
    m.heads = static_cast<int>(c.get_int_or("model.heads", m.heads));
    m.max_len = static_cast<int>(c.get_int_or("model.max_len", m.max_len));
    m.mlp_ratio = static_cast<int>(c.get_int_or("model.mlp_ratio", m.mlp_ratio));
    m.seed = c.get_u64_or("model.seed", m.seed);
    m.validate();
    return m;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    Config cfg = ckpt.config;
    write_model_config(cfg, ckpt.params.config);
    cfg.set("state.has_optimizer", ckpt.optimizer ? 1 : 0);
    if (ckpt.optimizer) cfg.set("state.adam_step", static_cast<long long>(ckpt.optimizer->step));
    const std::string text = cfg.serialize();

    Writer w;
    w.bytes(kCheckpointMagic, 4);
    w.u32(kCheckpointVersion);
    w.u64(text.size());
    w.bytes(text.data(), text.size());
    for (const auto* t : ckpt.params.tensors()) w.floats(t->data);
    if (ckpt.optimizer) {
        for (const auto* t : ckpt.optimizer->m.tensors()) w.floats(t->data);
        for (const auto* t : ckpt.optimizer->v.tensors()) w.floats(t->data);
    }
    w.u64(byte_sum(w.out.data(), w.out.size()));
    return std::move(w.out);
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 + 4 + 8 + 8 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
        throw CheckpointFormatError("checkpoint: bad magic (not an MDSC checkpoint)");
    }
    const std::size_t body = bytes.size() - 8;
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + body, 8);
    if (stored != byte_sum(bytes.data(), body)) throw CheckpointFormatError("checkpoint: checksum mismatch");

    Reader r(bytes, body);
    r.pos = 4;
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw CheckpointFormatError("checkpoint: unsupported format version " + std::to_string(version));
    }
    const std::uint64_t len = r.u64();
    if (len > body - r.pos) throw CheckpointFormatError("checkpoint: config block overruns file");
    std::string text(len, '\0');
    r.bytes(text.data(), len);

    Checkpoint ck;
    try {
        ck.config = Config::parse(text);
        ck.params = DenoiserParams<float>::zeros(read_model_config(ck.config));
    } catch (const ConfigError& e) {
        throw CheckpointFormatError(std::string("checkpoint: bad config block: ") + e.what());
    }
    const auto names = ck.params.tensor_names();
    auto tensors = ck.params.tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i) r.floats(tensors[i]->data, names[i]);
    if (ck.config.get_int_or("state.has_optimizer", 0) != 0) {
        auto st = AdamState<float>::zeros(ck.params.config);
        st.step = ck.config.get_int_or("state.adam_step", 0);
        auto ms = st.m.tensors();
        for (std::size_t i = 0; i < ms.size(); ++i) r.floats(ms[i]->data, "adam.m." + names[i]);
        auto vs = st.v.tensors();
        for (std::size_t i = 0; i < vs.size(); ++i) r.floats(vs[i]->data, "adam.v." + names[i]);
        ck.optimizer = std::move(st);
    }
    if (r.pos != body) throw CheckpointFormatError("checkpoint: trailing bytes before checksum");
    return ck;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const auto bytes = serialize_checkpoint(ckpt);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw PersistenceError("checkpoint: cannot open " + tmp.string() + " for writing");
        os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!os.flush()) throw PersistenceError("checkpoint: write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw PersistenceError("checkpoint: cannot move " + tmp.string() + " into place: " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return deserialize_checkpoint(read_file_bytes(path));
}

}  // namespace mdsc

#include "mdsc/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mdsc/error.hpp"
#include "mdsc/kernels.hpp"

namespace mdsc {

void ModelConfig::validate() const {
    if (vocab_total < 2) throw ConfigError("model: vocab_total must be >= 2");
    if (dim < 1 || heads < 1 || layers < 0 || max_len < 1 || mlp_ratio < 1) {
        throw ConfigError("model: dim, heads, max_len, mlp_ratio must be positive and layers >= 0");
    }
    if (dim % heads != 0) {
        throw ConfigError("model: dim " + std::to_string(dim) + " is not divisible by heads " + std::to_string(heads));
    }
}

template <typename T>
DenoiserParams<T> DenoiserParams<T>::zeros(const ModelConfig& c) {
    c.validate();
    DenoiserParams p;
    p.config = c;
    p.token_embedding = Tensor<T>(c.vocab_total, c.dim, true);
    p.position_embedding = Tensor<T>(c.max_len, c.dim, true);
    p.layers.resize(static_cast<std::size_t>(c.layers));
    for (auto& l : p.layers) {
        l.ln1_gain = Tensor<T>(1, c.dim, false);
        l.ln1_bias = Tensor<T>(1, c.dim, false);
        l.qkv_weight = Tensor<T>(c.dim, 3 * c.dim, true);
        l.qkv_bias = Tensor<T>(1, 3 * c.dim, false);
        l.proj_weight = Tensor<T>(c.dim, c.dim, true);
        l.proj_bias = Tensor<T>(1, c.dim, false);
        l.ln2_gain = Tensor<T>(1, c.dim, false);
        l.ln2_bias = Tensor<T>(1, c.dim, false);
        l.fc1_weight = Tensor<T>(c.dim, c.hidden(), true);
        l.fc1_bias = Tensor<T>(1, c.hidden(), false);
        l.fc2_weight = Tensor<T>(c.hidden(), c.dim, true);
        l.fc2_bias = Tensor<T>(1, c.dim, false);
    }
    p.final_gain = Tensor<T>(1, c.dim, false);
    p.final_bias = Tensor<T>(1, c.dim, false);
    p.out_weight = Tensor<T>(c.dim, c.vocab_total, true);
    p.out_bias = Tensor<T>(1, c.vocab_total, false);
    return p;
}

template <typename T>
std::vector<Tensor<T>*> DenoiserParams<T>::tensors() {
    std::vector<Tensor<T>*> out{&token_embedding, &position_embedding};
    for (auto& l : layers) {
        for (auto* t : {&l.ln1_gain, &l.ln1_bias, &l.qkv_weight, &l.qkv_bias, &l.proj_weight, &l.proj_bias,
                        &l.ln2_gain, &l.ln2_bias, &l.fc1_weight, &l.fc1_bias, &l.fc2_weight, &l.fc2_bias}) {
            out.push_back(t);
        }
    }
    for (auto* t : {&final_gain, &final_bias, &out_weight, &out_bias}) out.push_back(t);
    return out;
}

template <typename T>
std::vector<const Tensor<T>*> DenoiserParams<T>::tensors() const {
    auto mut = const_cast<DenoiserParams*>(this)->tensors();
    return {mut.begin(), mut.end()};
}

template <typename T>
std::vector<std::string> DenoiserParams<T>::tensor_names() const {
    std::vector<std::string> out{"token_embedding", "position_embedding"};
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string p = "layer" + std::to_string(i) + ".";
        for (const char* n : {"ln1_gain", "ln1_bias", "qkv_weight", "qkv_bias", "proj_weight", "proj_bias", "ln2_gain",
                              "ln2_bias", "fc1_weight", "fc1_bias", "fc2_weight", "fc2_bias"}) {
            out.push_back(p + n);
        }
    }
    for (const char* n : {"final_gain", "final_bias", "out_weight", "out_bias"}) out.emplace_back(n);
    return out;
}

template <typename T>
std::size_t DenoiserParams<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto* t : tensors()) n += t->size();
    return n;
}

template <typename T>
DenoiserParams<T> init_params(const ModelConfig& config) {
    auto p = DenoiserParams<T>::zeros(config);
    Rng rng(config.seed);
    std::normal_distribution<double> normal(0.0, 0.02);
    for (auto* t : p.tensors()) {
        if (t->decay) {
            for (auto& v : t->data) v = static_cast<T>(normal(rng));
        }
    }
    for (auto& l : p.layers) {
        std::fill(l.ln1_gain.data.begin(), l.ln1_gain.data.end(), T(1));
        std::fill(l.ln2_gain.data.begin(), l.ln2_gain.data.end(), T(1));
    }
    std::fill(p.final_gain.data.begin(), p.final_gain.data.end(), T(1));
    return p;
}

template <typename T>
struct LayerCache {
    Matrix<T> x_in, ln1, qkv, att, x_mid, ln2, fc1, act;
    std::vector<T> ln1_mean, ln1_rstd, ln2_mean, ln2_rstd, probs;
};

template <typename T>
struct Workspace {
    std::vector<int> offsets;
    std::vector<TokenId> ids;
    std::vector<int> positions;
    std::vector<LayerCache<T>> layers;
    Matrix<T> x, lnf;
    std::vector<T> lnf_mean, lnf_rstd;
    // backward scratch
    Matrix<T> dx, dtmp, dbig, dqkv, datt, dln, xt, wt;
};

template <typename T>
WorkspaceHandle<T>::WorkspaceHandle() : ws_(std::make_unique<Workspace<T>>()) {}
template <typename T>
WorkspaceHandle<T>::~WorkspaceHandle() = default;
template <typename T>
WorkspaceHandle<T>::WorkspaceHandle(WorkspaceHandle&&) noexcept = default;
template <typename T>
WorkspaceHandle<T>& WorkspaceHandle<T>::operator=(WorkspaceHandle&&) noexcept = default;

namespace {

template <typename T>
void check_tokens(const ModelConfig& c, std::span<const TokenId> tokens) {
    if (static_cast<int>(tokens.size()) > c.max_len) {
        throw LengthError("denoiser: sequence of " + std::to_string(tokens.size()) + " exceeds max_len " +
                          std::to_string(c.max_len));
    }
    for (TokenId id : tokens) {
        if (id < 0 || id >= c.vocab_total) {
            throw RangeError("denoiser: token id " + std::to_string(id) + " outside [0," +
                             std::to_string(c.vocab_total) + ")");
        }
    }
}

// y = x * w + b (rows of x), y reshaped.
template <typename T>
void linear(const Matrix<T>& x, const Tensor<T>& w, const Tensor<T>& b, Matrix<T>& y) {
    y.reset(x.rows, w.cols);
    for (int i = 0; i < x.rows; ++i) std::copy(b.data.begin(), b.data.end(), y.row(i));
    kernels::gemm(x.rows, w.rows, w.cols, x.data.data(), w.ptr(), y.data.data(), true);
}

// Given dy for y = x*w + b: dw += x^T dy, db += colsum(dy), dx (+)= dy w^T.
template <typename T>
void linear_backward(const Matrix<T>& x, const Tensor<T>& w, const Matrix<T>& dy, Tensor<T>& dw, Tensor<T>& db,
                     Matrix<T>& dx, bool accumulate_dx, Workspace<T>& ws) {
    ws.xt.reset(x.cols, x.rows);
    kernels::transpose(x.rows, x.cols, x.data.data(), ws.xt.data.data());
    kernels::gemm(x.cols, x.rows, dy.cols, ws.xt.data.data(), dy.data.data(), dw.ptr(), true);
    for (int i = 0; i < dy.rows; ++i) {
        const T* r = dy.row(i);
        for (int j = 0; j < dy.cols; ++j) db.data[static_cast<std::size_t>(j)] += r[j];
    }
    ws.wt.reset(w.cols, w.rows);
    kernels::transpose(w.rows, w.cols, w.ptr(), ws.wt.data.data());
    if (!accumulate_dx) dx.reset(dy.rows, w.rows);
    kernels::gemm(dy.rows, w.cols, w.rows, dy.data.data(), ws.wt.data.data(), dx.data.data(), accumulate_dx);
}

// Runs the trunk over a packed batch, leaving the final normalized hidden
// states in ws.lnf and every intermediate in ws.layers.
template <typename T>
void trunk_forward(const DenoiserParams<T>& p, Workspace<T>& ws) {
    const auto& c = p.config;
    const int n = static_cast<int>(ws.ids.size());
    ws.x.reset(n, c.dim);
    for (int i = 0; i < n; ++i) {
        const T* te = p.token_embedding.ptr() + static_cast<std::size_t>(ws.ids[static_cast<std::size_t>(i)]) * c.dim;
        const T* pe = p.position_embedding.ptr() + static_cast<std::size_t>(ws.positions[static_cast<std::size_t>(i)]) * c.dim;
        T* xr = ws.x.row(i);
        for (int j = 0; j < c.dim; ++j) xr[j] = te[j] + pe[j];
    }
    ws.layers.resize(p.layers.size());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const auto& lp = p.layers[l];
        auto& lc = ws.layers[l];
        lc.x_in = ws.x;
        lc.ln1.reset(n, c.dim);
        lc.ln1_mean.resize(static_cast<std::size_t>(n));
        lc.ln1_rstd.resize(static_cast<std::size_t>(n));
        kernels::layernorm_forward(n, c.dim, lc.x_in.data.data(), lp.ln1_gain.ptr(), lp.ln1_bias.ptr(),
                                   lc.ln1.data.data(), lc.ln1_mean.data(), lc.ln1_rstd.data());
        linear(lc.ln1, lp.qkv_weight, lp.qkv_bias, lc.qkv);
        lc.att.reset(n, c.dim);
        lc.probs.resize(kernels::attention_probs_size(ws.offsets, c.heads));
        kernels::attention_forward<T>(ws.offsets, c.heads, c.dim, lc.qkv.data.data(), lc.att.data.data(),
                                      lc.probs.data());
        linear(lc.att, lp.proj_weight, lp.proj_bias, lc.x_mid);
        for (std::size_t k = 0; k < lc.x_mid.size(); ++k) lc.x_mid.data[k] += lc.x_in.data[k];

        lc.ln2.reset(n, c.dim);
        lc.ln2_mean.resize(static_cast<std::size_t>(n));
        lc.ln2_rstd.resize(static_cast<std::size_t>(n));
        kernels::layernorm_forward(n, c.dim, lc.x_mid.data.data(), lp.ln2_gain.ptr(), lp.ln2_bias.ptr(),
                                   lc.ln2.data.data(), lc.ln2_mean.data(), lc.ln2_rstd.data());
        linear(lc.ln2, lp.fc1_weight, lp.fc1_bias, lc.fc1);
        lc.act.reset(n, c.hidden());
        kernels::gelu_forward(lc.fc1.size(), lc.fc1.data.data(), lc.act.data.data());
        linear(lc.act, lp.fc2_weight, lp.fc2_bias, ws.x);
        for (std::size_t k = 0; k < ws.x.size(); ++k) ws.x.data[k] += lc.x_mid.data[k];
    }
    ws.lnf.reset(n, c.dim);
    ws.lnf_mean.resize(static_cast<std::size_t>(n));
    ws.lnf_rstd.resize(static_cast<std::size_t>(n));
    kernels::layernorm_forward(n, c.dim, ws.x.data.data(), p.final_gain.ptr(), p.final_bias.ptr(), ws.lnf.data.data(),
                               ws.lnf_mean.data(), ws.lnf_rstd.data());
}

template <typename T>
void pack(const ModelConfig& c, std::span<const std::vector<TokenId>* const> seqs, Workspace<T>& ws) {
    ws.offsets.assign(1, 0);
    ws.ids.clear();
    ws.positions.clear();
    for (const auto* s : seqs) {
        check_tokens<T>(c, *s);
        for (std::size_t i = 0; i < s->size(); ++i) {
            ws.ids.push_back((*s)[i]);
            ws.positions.push_back(static_cast<int>(i));
        }
        ws.offsets.push_back(static_cast<int>(ws.ids.size()));
    }
}

}  // namespace

template <typename T>
Matrix<T> forward(const DenoiserParams<T>& params, std::span<const TokenId> tokens) {
    Workspace<T> ws;
    const std::vector<TokenId> seq(tokens.begin(), tokens.end());
    const std::vector<TokenId>* one[] = {&seq};
    pack<T>(params.config, one, ws);
    trunk_forward(params, ws);
    Matrix<T> logits;
    linear(ws.lnf, params.out_weight, params.out_bias, logits);
    return logits;
}

template <typename T>
StepLoss loss_and_grad(const DenoiserParams<T>& p, const MaskedBatch& batch, DenoiserParams<T>& grads, T scale,
                       Workspace<T>* ws_in) {
    const auto& c = p.config;
    Workspace<T> local;
    Workspace<T>& ws = ws_in ? *ws_in : local;

    if (grads.config != c || grads.tensors().size() != p.tensors().size()) grads = DenoiserParams<T>::zeros(c);
    for (auto* t : grads.tensors()) std::fill(t->data.begin(), t->data.end(), T{});

    std::vector<const std::vector<TokenId>*> seqs;
    std::vector<int> selected;  // packed rows that carry loss
    std::vector<TokenId> targets;
    int base = 0;
    for (const auto& s : batch.sequences) {
        seqs.push_back(&s.xt);
        for (std::size_t i = 0; i < s.x0.size(); ++i) {
            if (s.mask_flags[i] && !s.condition_flags[i]) {
                selected.push_back(base + static_cast<int>(i));
                targets.push_back(s.x0[i]);
            }
        }
        base += static_cast<int>(s.xt.size());
    }
    StepLoss out;
    out.masked = selected.size();
    if (selected.empty()) {
        out.empty_mask = true;
        return out;
    }
    pack<T>(c, seqs, ws);
    trunk_forward(p, ws);

    const int n = static_cast<int>(ws.ids.size());
    const int m = static_cast<int>(selected.size());
    const int v = c.vocab_total;

    // Output head on the loss-bearing rows only.
    Matrix<T> hsel(m, c.dim);
    for (int r = 0; r < m; ++r) std::copy_n(ws.lnf.row(selected[static_cast<std::size_t>(r)]), c.dim, hsel.row(r));
    Matrix<T> logits;
    linear(hsel, p.out_weight, p.out_bias, logits);

    double total = 0.0;
    Matrix<T> dlogits(m, v);
    const T inv = scale / static_cast<T>(m);
    for (int r = 0; r < m; ++r) {
        const T* lr = logits.row(r);
        T* dr = dlogits.row(r);
        const TokenId tgt = targets[static_cast<std::size_t>(r)];
        total += cross_entropy<T>(logits.row_span(r), tgt);
        T mx = lr[0];
        for (int j = 1; j < v; ++j) mx = std::max(mx, lr[j]);
        T z = 0;
        for (int j = 0; j < v; ++j) {
            dr[j] = std::exp(lr[j] - mx);
            z += dr[j];
        }
        for (int j = 0; j < v; ++j) dr[j] = dr[j] / z * inv;
        dr[tgt] -= inv;
    }
    out.loss = static_cast<double>(scale) * total / static_cast<double>(m);

    Matrix<T> dhsel;
    linear_backward(hsel, p.out_weight, dlogits, grads.out_weight, grads.out_bias, dhsel, false, ws);
    ws.dln.reset(n, c.dim);
    for (int r = 0; r < m; ++r) std::copy_n(dhsel.row(r), c.dim, ws.dln.row(selected[static_cast<std::size_t>(r)]));

    ws.dx.reset(n, c.dim);
    kernels::layernorm_backward(n, c.dim, ws.dln.data.data(), ws.x.data.data(), ws.lnf_mean.data(),
                                ws.lnf_rstd.data(), p.final_gain.ptr(), ws.dx.data.data(), grads.final_gain.ptr(),
                                grads.final_bias.ptr());

    for (std::size_t li = p.layers.size(); li-- > 0;) {
        const auto& lp = p.layers[li];
        auto& lg = grads.layers[li];
        auto& lc = ws.layers[li];
        // x_out = x_mid + gelu(ln2(x_mid) W1 + b1) W2 + b2
        linear_backward(lc.act, lp.fc2_weight, ws.dx, lg.fc2_weight, lg.fc2_bias, ws.dbig, false, ws);
        kernels::gelu_backward(ws.dbig.size(), lc.fc1.data.data(), ws.dbig.data.data(), ws.dbig.data.data());
        linear_backward(lc.ln2, lp.fc1_weight, ws.dbig, lg.fc1_weight, lg.fc1_bias, ws.dln, false, ws);
        kernels::layernorm_backward(n, c.dim, ws.dln.data.data(), lc.x_mid.data.data(), lc.ln2_mean.data(),
                                    lc.ln2_rstd.data(), lp.ln2_gain.ptr(), ws.dx.data.data(), lg.ln2_gain.ptr(),
                                    lg.ln2_bias.ptr());
        // x_mid = x_in + attn(ln1(x_in)) Wo + bo
        linear_backward(lc.att, lp.proj_weight, ws.dx, lg.proj_weight, lg.proj_bias, ws.datt, false, ws);
        ws.dqkv.reset(n, 3 * c.dim);
        kernels::attention_backward<T>(ws.offsets, c.heads, c.dim, lc.qkv.data.data(), lc.probs.data(),
                                       ws.datt.data.data(), ws.dqkv.data.data());
        linear_backward(lc.ln1, lp.qkv_weight, ws.dqkv, lg.qkv_weight, lg.qkv_bias, ws.dln, false, ws);
        kernels::layernorm_backward(n, c.dim, ws.dln.data.data(), lc.x_in.data.data(), lc.ln1_mean.data(),
                                    lc.ln1_rstd.data(), lp.ln1_gain.ptr(), ws.dx.data.data(), lg.ln1_gain.ptr(),
                                    lg.ln1_bias.ptr());
    }
    for (int i = 0; i < n; ++i) {
        const T* dr = ws.dx.row(i);
        T* te = grads.token_embedding.ptr() + static_cast<std::size_t>(ws.ids[static_cast<std::size_t>(i)]) * c.dim;
        T* pe = grads.position_embedding.ptr() + static_cast<std::size_t>(ws.positions[static_cast<std::size_t>(i)]) * c.dim;
        for (int j = 0; j < c.dim; ++j) {
            te[j] += dr[j];
            pe[j] += dr[j];
        }
    }
    return out;
}

template <typename T>
void apply_update(DenoiserParams<T>& params, const DenoiserParams<T>& grads, AdamState<T>& state, double lr,
                  const AdamConfig& adam) {
    auto ps = params.tensors();
    auto gs = grads.tensors();
    auto ms = state.m.tensors();
    auto vs = state.v.tensors();
    if (gs.size() != ps.size() || ms.size() != ps.size() || vs.size() != ps.size()) {
        throw DimensionError("adam: tensor count mismatch");
    }
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (gs[i]->size() != ps[i]->size() || ms[i]->size() != ps[i]->size() || vs[i]->size() != ps[i]->size()) {
            throw DimensionError("adam: shape mismatch in tensor " + std::to_string(i));
        }
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(state.step));
    const T b1 = static_cast<T>(adam.beta1);
    const T b2 = static_cast<T>(adam.beta2);
    const T step_size = static_cast<T>(lr / bc1);
    const T inv_bc2 = static_cast<T>(1.0 / bc2);
    const T eps = static_cast<T>(adam.eps);
    const T decay = static_cast<T>(lr * adam.weight_decay);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        T* w = ps[i]->ptr();
        const T* g = gs[i]->ptr();
        T* m = ms[i]->ptr();
        T* v = vs[i]->ptr();
        const bool decays = ps[i]->decay && adam.weight_decay != 0.0;
        const std::size_t size = ps[i]->size();
#pragma omp parallel for schedule(static)
        for (std::size_t k = 0; k < size; ++k) {
            m[k] = b1 * m[k] + (T(1) - b1) * g[k];
            v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
            if (decays) w[k] -= decay * w[k];
            w[k] -= step_size * m[k] / (std::sqrt(v[k] * inv_bc2) + eps);
        }
    }
}

template struct DenoiserParams<float>;
template struct DenoiserParams<double>;
template class WorkspaceHandle<float>;
template class WorkspaceHandle<double>;
template DenoiserParams<float> init_params<float>(const ModelConfig&);
template DenoiserParams<double> init_params<double>(const ModelConfig&);
template Matrix<float> forward<float>(const DenoiserParams<float>&, std::span<const TokenId>);
template Matrix<double> forward<double>(const DenoiserParams<double>&, std::span<const TokenId>);
template StepLoss loss_and_grad<float>(const DenoiserParams<float>&, const MaskedBatch&, DenoiserParams<float>&, float,
                                       Workspace<float>*);
template StepLoss loss_and_grad<double>(const DenoiserParams<double>&, const MaskedBatch&, DenoiserParams<double>&,
                                        double, Workspace<double>*);
template void apply_update<float>(DenoiserParams<float>&, const DenoiserParams<float>&, AdamState<float>&, double,
                                  const AdamConfig&);
template void apply_update<double>(DenoiserParams<double>&, const DenoiserParams<double>&, AdamState<double>&, double,
                                   const AdamConfig&);

}  // namespace mdsc

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mdsc/diffusion.hpp"
#include "mdsc/matrix.hpp"
#include "mdsc/vocab.hpp"

namespace mdsc {

struct ModelConfig {
    int vocab_total = 0;
    int dim = 128;
    int layers = 4;
    int heads = 4;
    int max_len = 512;
    int mlp_ratio = 4;
    std::uint64_t seed = 1;

    void validate() const;
    int hidden() const { return dim * mlp_ratio; }
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <typename T>
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;
    bool decay = false;  // receives decoupled weight decay

    Tensor() = default;
    Tensor(int r, int c, bool decays) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c), decay(decays) {}
    std::size_t size() const { return data.size(); }
    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }
};

template <typename T>
struct LayerParams {
    Tensor<T> ln1_gain, ln1_bias;
    Tensor<T> qkv_weight, qkv_bias;
    Tensor<T> proj_weight, proj_bias;
    Tensor<T> ln2_gain, ln2_bias;
    Tensor<T> fc1_weight, fc1_bias;
    Tensor<T> fc2_weight, fc2_bias;
};

/// All learnable tensors of the bidirectional transformer. Weight matrices
/// are stored [in x out]. tensors() fixes the declared order used by the
/// optimizer and the checkpoint format.
template <typename T>
struct DenoiserParams {
    ModelConfig config;
    Tensor<T> token_embedding;
    Tensor<T> position_embedding;
    std::vector<LayerParams<T>> layers;
    Tensor<T> final_gain, final_bias;
    Tensor<T> out_weight, out_bias;

    /// Correctly shaped, all-zero tensors.
    static DenoiserParams zeros(const ModelConfig& config);

    std::vector<Tensor<T>*> tensors();
    std::vector<const Tensor<T>*> tensors() const;
    std::vector<std::string> tensor_names() const;
    std::size_t parameter_count() const;

    template <typename U>
    DenoiserParams<U> cast() const {
        auto out = DenoiserParams<U>::zeros(config);
        auto dst = out.tensors();
        auto src = tensors();
        for (std::size_t i = 0; i < src.size(); ++i) {
            for (std::size_t j = 0; j < src[i]->size(); ++j) dst[i]->data[j] = static_cast<U>(src[i]->data[j]);
        }
        return out;
    }
};

/// Scaled-normal init (std 0.02), norm gains 1, biases 0; bit-reproducible
/// per config.seed.
template <typename T>
DenoiserParams<T> init_params(const ModelConfig& config);

template <typename T>
struct Workspace;

/// Logits over the whole vocabulary for every position of one sequence.
template <typename T>
Matrix<T> forward(const DenoiserParams<T>& params, std::span<const TokenId> tokens);

struct StepLoss {
    double loss = 0.0;  // scale * mean masked cross-entropy
    std::size_t masked = 0;
    bool empty_mask = false;
};

/// Masked-position loss of the batch and its gradient, multiplied by
/// `scale`. grads is overwritten. ws may be null.
template <typename T>
StepLoss loss_and_grad(const DenoiserParams<T>& params, const MaskedBatch& batch, DenoiserParams<T>& grads,
                       T scale = T(1), Workspace<T>* ws = nullptr);

/// Reusable activation storage for loss_and_grad.
template <typename T>
class WorkspaceHandle {
public:
    WorkspaceHandle();
    ~WorkspaceHandle();
    WorkspaceHandle(WorkspaceHandle&&) noexcept;
    WorkspaceHandle& operator=(WorkspaceHandle&&) noexcept;
    Workspace<T>* get() { return ws_.get(); }

private:
    std::unique_ptr<Workspace<T>> ws_;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

template <typename T>
struct AdamState {
    DenoiserParams<T> m;
    DenoiserParams<T> v;
    std::int64_t step = 0;

    static AdamState zeros(const ModelConfig& config) {
        return AdamState{DenoiserParams<T>::zeros(config), DenoiserParams<T>::zeros(config), 0};
    }
};

/// One AdamW step with decoupled weight decay on tensors flagged `decay`.
template <typename T>
void apply_update(DenoiserParams<T>& params, const DenoiserParams<T>& grads, AdamState<T>& state, double lr,
                  const AdamConfig& adam = {});

/// Anything that maps a token sequence to per-position logits.
class LogitModel {
public:
    virtual ~LogitModel() = default;
    virtual int vocab_total() const = 0;
    virtual int max_len() const = 0;
    virtual Matrix<float> logits(std::span<const TokenId> tokens) const = 0;
};

/// Read-only inference wrapper; safe to share across threads.
class Denoiser final : public LogitModel {
public:
    explicit Denoiser(DenoiserParams<float> params) : params_(std::move(params)) {}
    int vocab_total() const override { return params_.config.vocab_total; }
    int max_len() const override { return params_.config.max_len; }
    Matrix<float> logits(std::span<const TokenId> tokens) const override { return forward(params_, tokens); }
    const DenoiserParams<float>& params() const { return params_; }

private:
    DenoiserParams<float> params_;
};

}  // namespace mdsc

#pragma once

#include <cstddef>
#include <vector>

#include "leosplit/rng.hpp"
#include "leosplit/tensor.hpp"

namespace leosplit::nn {

enum class LayerKind { DenseRelu, DenseLinear };

// One dense layer: weights [out, in], bias [out].
struct LayerParams {
    Tensor weights;
    Tensor bias;
    LayerKind kind = LayerKind::DenseLinear;

    std::size_t in_dim() const { return weights.shape[1]; }
    std::size_t out_dim() const { return weights.shape[0]; }
};

enum class CutRole { Client, AuxiliaryHead, Server };

// Ordered layer stack. Consecutive layer dimensions must chain.
struct SubModel {
    std::vector<LayerParams> layers;
    CutRole cut_role = CutRole::Client;

    std::size_t input_dim() const { return layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.back().out_dim(); }
};

// Throws std::invalid_argument if consecutive layers do not chain.
void validate_chain(const SubModel& model);

// Per-layer activation cache written by forward(), consumed by backward().
struct ForwardCache {
    std::vector<Tensor> inputs;           // input to each layer
    std::vector<Tensor> pre_activations;  // W x + b per layer
    bool valid = false;
};

struct LayerGrads {
    Tensor weights;
    Tensor bias;
};
using ModelGrads = std::vector<LayerGrads>;

struct BackwardResult {
    ModelGrads params;
    Tensor input_grad;
};

// Single-example forward pass over a 1-D input. Pass a cache to enable
// backward(); without one only the output is produced.
Tensor forward(const SubModel& model, const Tensor& input, ForwardCache* cache = nullptr);

// Backpropagation through the cached forward pass. The cache must come
// from a forward() over this model; a mismatched or unset cache is a
// usage error (std::logic_error).
BackwardResult backward(const SubModel& model, const ForwardCache& cache,
                        const Tensor& output_grad);

// In-place parameter update: p <- p - lr * g.
void sgd_step(SubModel& model, const ModelGrads& grads, double learning_rate);

ModelGrads zero_grads(const SubModel& model);

// into += scale * g
void accumulate_grads(ModelGrads& into, const ModelGrads& g, double scale);
void scale_grads(ModelGrads& grads, double scale);

Tensor softmax(const Tensor& logits);

struct CrossEntropyResult {
    double loss;
    Tensor grad;  // d loss / d logits = softmax(logits) - target
};

// Cross-entropy of softmax(logits) against a class distribution (one-hot
// for hard labels). The target must sum to 1.
CrossEntropyResult softmax_cross_entropy(const Tensor& logits, const Tensor& target);

// Dense stack with ReLU on every layer except the last (linear output).
// Weights drawn uniformly in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
SubModel make_dense_model(const std::vector<std::size_t>& dims, CutRole role, Rng& rng);

std::size_t parameter_count(const SubModel& model);

Tensor one_hot(std::size_t cls, std::size_t num_classes);

}  // namespace leosplit::nn

#include "leosplit/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace leosplit::nn {

void validate_chain(const SubModel& model) {
    if (model.layers.empty())
        throw std::invalid_argument("SubModel: no layers");
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& layer = model.layers[i];
        if (layer.weights.shape.size() != 2)
            throw std::invalid_argument("layer " + std::to_string(i) + ": weights must be 2-D");
        if (layer.bias.shape.size() != 1 || layer.bias.shape[0] != layer.out_dim())
            throw std::invalid_argument("layer " + std::to_string(i) + ": bias/weights mismatch");
        if (i > 0 && model.layers[i - 1].out_dim() != layer.in_dim())
            throw std::invalid_argument("layer " + std::to_string(i) + ": dimension chain broken");
    }
}

Tensor forward(const SubModel& model, const Tensor& input, ForwardCache* cache) {
    if (model.layers.empty())
        throw std::invalid_argument("forward: empty model");
    if (input.shape.size() != 1 || input.shape[0] != model.input_dim())
        throw std::invalid_argument("forward: input dimension mismatch");

    if (cache) {
        cache->inputs.clear();
        cache->pre_activations.clear();
        cache->inputs.reserve(model.layers.size());
        cache->pre_activations.reserve(model.layers.size());
    }

    Tensor x = input;
    for (const auto& layer : model.layers) {
        const std::size_t out = layer.out_dim();
        const std::size_t in = layer.in_dim();
        Tensor z = Tensor::zeros({out});
        for (std::size_t r = 0; r < out; ++r) {
            double s = layer.bias[r];
            const double* w = &layer.weights.data[r * in];
            for (std::size_t c = 0; c < in; ++c) s += w[c] * x[c];
            z[r] = s;
        }
        if (cache) {
            cache->inputs.push_back(std::move(x));
            cache->pre_activations.push_back(z);
        }
        if (layer.kind == LayerKind::DenseRelu) {
            for (double& v : z.data) v = v > 0.0 ? v : 0.0;
        }
        x = std::move(z);
    }
    if (cache) cache->valid = true;
    return x;
}

BackwardResult backward(const SubModel& model, const ForwardCache& cache,
                        const Tensor& output_grad) {
    if (!cache.valid || cache.inputs.size() != model.layers.size())
        throw std::logic_error("backward: cache does not match a forward pass of this model");
    if (output_grad.shape.size() != 1 || output_grad.shape[0] != model.output_dim())
        throw std::invalid_argument("backward: output_grad dimension mismatch");

    BackwardResult result;
    result.params = zero_grads(model);

    Tensor delta = output_grad;
    for (std::size_t li = model.layers.size(); li-- > 0;) {
        const auto& layer = model.layers[li];
        const auto& x = cache.inputs[li];
        const auto& z = cache.pre_activations[li];
        if (x.shape[0] != layer.in_dim() || z.shape[0] != layer.out_dim())
            throw std::logic_error("backward: stale cache for layer " + std::to_string(li));

        // Through the activation.
        if (layer.kind == LayerKind::DenseRelu) {
            for (std::size_t r = 0; r < delta.numel(); ++r)
                if (z[r] <= 0.0) delta[r] = 0.0;
        }

        const std::size_t out = layer.out_dim();
        const std::size_t in = layer.in_dim();
        auto& g = result.params[li];
        Tensor prev = Tensor::zeros({in});
        for (std::size_t r = 0; r < out; ++r) {
            const double d = delta[r];
            g.bias[r] += d;
            double* gw = &g.weights.data[r * in];
            const double* w = &layer.weights.data[r * in];
            for (std::size_t c = 0; c < in; ++c) {
                gw[c] += d * x[c];
                prev[c] += d * w[c];
            }
        }
        delta = std::move(prev);
    }
    result.input_grad = std::move(delta);
    return result;
}

void sgd_step(SubModel& model, const ModelGrads& grads, double learning_rate) {
    if (grads.size() != model.layers.size())
        throw std::invalid_argument("sgd_step: gradient layer count mismatch");
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        auto& layer = model.layers[li];
        const auto& g = grads[li];
        if (!same_shape(layer.weights, g.weights) || !same_shape(layer.bias, g.bias))
            throw std::invalid_argument("sgd_step: gradient shape mismatch");
        for (std::size_t i = 0; i < layer.weights.numel(); ++i)
            layer.weights[i] -= learning_rate * g.weights[i];
        for (std::size_t i = 0; i < layer.bias.numel(); ++i)
            layer.bias[i] -= learning_rate * g.bias[i];
    }
}

ModelGrads zero_grads(const SubModel& model) {
    ModelGrads grads;
    grads.reserve(model.layers.size());
    for (const auto& layer : model.layers)
        grads.push_back({Tensor::zeros(layer.weights.shape), Tensor::zeros(layer.bias.shape)});
    return grads;
}

void accumulate_grads(ModelGrads& into, const ModelGrads& g, double scale) {
    if (into.size() != g.size())
        throw std::invalid_argument("accumulate_grads: layer count mismatch");
    for (std::size_t li = 0; li < into.size(); ++li) {
        for (std::size_t i = 0; i < into[li].weights.numel(); ++i)
            into[li].weights[i] += scale * g[li].weights[i];
        for (std::size_t i = 0; i < into[li].bias.numel(); ++i)
            into[li].bias[i] += scale * g[li].bias[i];
    }
}

void scale_grads(ModelGrads& grads, double scale) {
    for (auto& g : grads) {
        for (double& v : g.weights.data) v *= scale;
        for (double& v : g.bias.data) v *= scale;
    }
}

Tensor softmax(const Tensor& logits) {
    Tensor p = logits;
    const double m = *std::max_element(p.data.begin(), p.data.end());
    double sum = 0.0;
    for (double& v : p.data) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : p.data) v /= sum;
    return p;
}

CrossEntropyResult softmax_cross_entropy(const Tensor& logits, const Tensor& target) {
    if (logits.shape.size() != 1 || !same_shape(logits, target))
        throw std::invalid_argument("softmax_cross_entropy: shape mismatch");
    double mass = 0.0;
    for (double t : target.data) {
        if (t < 0.0) throw std::invalid_argument("softmax_cross_entropy: negative target mass");
        mass += t;
    }
    if (std::abs(mass - 1.0) > 1e-9)
        throw std::invalid_argument("softmax_cross_entropy: target does not sum to 1");

    // log-sum-exp form keeps the loss finite for any logit scale
    const double m = *std::max_element(logits.data.begin(), logits.data.end());
    double lse = 0.0;
    for (double v : logits.data) lse += std::exp(v - m);
    lse = std::log(lse) + m;

    double loss = 0.0;
    for (std::size_t i = 0; i < logits.numel(); ++i)
        loss += target[i] * (lse - logits[i]);

    CrossEntropyResult out;
    out.loss = loss;
    out.grad = softmax(logits);
    for (std::size_t i = 0; i < out.grad.numel(); ++i) out.grad[i] -= target[i];
    return out;
}

SubModel make_dense_model(const std::vector<std::size_t>& dims, CutRole role, Rng& rng) {
    if (dims.size() < 2)
        throw std::invalid_argument("make_dense_model: need at least input and output dims");
    SubModel model;
    model.cut_role = role;
    for (std::size_t li = 0; li + 1 < dims.size(); ++li) {
        const std::size_t in = dims[li];
        const std::size_t out = dims[li + 1];
        LayerParams layer;
        layer.kind = (li + 2 == dims.size()) ? LayerKind::DenseLinear : LayerKind::DenseRelu;
        layer.weights = Tensor::zeros({out, in});
        layer.bias = Tensor::zeros({out});
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (double& w : layer.weights.data) w = rng.uniform(-bound, bound);
        for (double& b : layer.bias.data) b = rng.uniform(-bound, bound);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

std::size_t parameter_count(const SubModel& model) {
    std::size_t n = 0;
    for (const auto& layer : model.layers) n += layer.weights.numel() + layer.bias.numel();
    return n;
}

Tensor one_hot(std::size_t cls, std::size_t num_classes) {
    if (cls >= num_classes)
        throw std::invalid_argument("one_hot: class index out of range");
    Tensor t = Tensor::zeros({num_classes});
    t[cls] = 1.0;
    return t;
}

}  // namespace leosplit::nn

#include "leosplit/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace leosplit::ssl {

nn::Tensor weak_augment(const nn::Tensor& x, Rng& rng, const AugmentConfig& cfg) {
    if (cfg.noise_span <= 0.0) return x;
    nn::Tensor out = x;
    const std::size_t n = out.numel();
    if (n > 1 && rng.bernoulli(cfg.shift_prob)) {
        for (std::size_t i = 0; i < n; ++i) out[i] = x[(i + 1) % n];
    }
    for (std::size_t i = 0; i < n; ++i)
        out[i] += rng.uniform(-cfg.noise_span, cfg.noise_span);
    return out;
}

static void check_same_architecture(const nn::SubModel& a, const nn::SubModel& b) {
    if (a.layers.size() != b.layers.size())
        throw std::invalid_argument("ema_update: layer count mismatch");
    for (std::size_t li = 0; li < a.layers.size(); ++li) {
        if (!nn::same_shape(a.layers[li].weights, b.layers[li].weights) ||
            !nn::same_shape(a.layers[li].bias, b.layers[li].bias) ||
            a.layers[li].kind != b.layers[li].kind)
            throw std::invalid_argument("ema_update: architecture mismatch at layer " +
                                        std::to_string(li));
    }
}

void ema_update(nn::SubModel& teacher, const nn::SubModel& student, double decay) {
    check_same_architecture(teacher, student);
    for (std::size_t li = 0; li < teacher.layers.size(); ++li) {
        auto& t = teacher.layers[li];
        const auto& s = student.layers[li];
        for (std::size_t i = 0; i < t.weights.numel(); ++i)
            t.weights[i] = decay * t.weights[i] + (1.0 - decay) * s.weights[i];
        for (std::size_t i = 0; i < t.bias.numel(); ++i)
            t.bias[i] = decay * t.bias[i] + (1.0 - decay) * s.bias[i];
    }
}

void ema_update(ClientStack& teacher, const ClientStack& student, double decay) {
    ema_update(teacher.body, student.body, decay);
    ema_update(teacher.head, student.head, decay);
}

nn::Tensor stack_logits(const ClientStack& stack, const nn::Tensor& x) {
    return nn::forward(stack.head, nn::forward(stack.body, x));
}

// Shared core of the auxiliary and unsupervised losses: mean CE over
// (input, target distribution) pairs with weak augmentation on the input.
static StackLoss supervised_stack_loss(const ClientStack& student,
                                       const std::vector<const nn::Tensor*>& inputs,
                                       const std::vector<nn::Tensor>& targets, Rng& rng,
                                       const AugmentConfig& aug) {
    StackLoss out;
    out.grads.body = nn::zero_grads(student.body);
    out.grads.head = nn::zero_grads(student.head);

    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const nn::Tensor augmented = weak_augment(*inputs[k], rng, aug);
        nn::ForwardCache body_cache, head_cache;
        const nn::Tensor feats = nn::forward(student.body, augmented, &body_cache);
        const nn::Tensor logits = nn::forward(student.head, feats, &head_cache);
        const auto ce = nn::softmax_cross_entropy(logits, targets[k]);
        out.loss += ce.loss;
        const auto head_back = nn::backward(student.head, head_cache, ce.grad);
        const auto body_back = nn::backward(student.body, body_cache, head_back.input_grad);
        nn::accumulate_grads(out.grads.head, head_back.params, 1.0);
        nn::accumulate_grads(out.grads.body, body_back.params, 1.0);
    }

    const double inv = 1.0 / static_cast<double>(inputs.size());
    out.loss *= inv;
    nn::scale_grads(out.grads.head, inv);
    nn::scale_grads(out.grads.body, inv);
    return out;
}

StackLoss auxiliary_loss(const ClientStack& student, const std::vector<LabeledExample>& batch,
                         Rng& rng, const AugmentConfig& aug) {
    if (batch.empty()) throw std::invalid_argument("auxiliary_loss: empty batch");
    const std::size_t num_classes = student.head.output_dim();
    std::vector<const nn::Tensor*> inputs;
    std::vector<nn::Tensor> targets;
    inputs.reserve(batch.size());
    targets.reserve(batch.size());
    for (const auto& ex : batch) {
        inputs.push_back(&ex.features);
        targets.push_back(nn::one_hot(static_cast<std::size_t>(ex.label), num_classes));
    }
    return supervised_stack_loss(student, inputs, targets, rng, aug);
}

StackLoss unsupervised_loss(const ClientStack& student, const std::vector<PseudoLabeled>& batch,
                            Rng& rng, const AugmentConfig& aug) {
    if (batch.empty()) throw std::invalid_argument("unsupervised_loss: empty batch");
    const std::size_t num_classes = student.head.output_dim();
    std::vector<const nn::Tensor*> inputs;
    std::vector<nn::Tensor> targets;
    inputs.reserve(batch.size());
    targets.reserve(batch.size());
    for (const auto& ex : batch) {
        inputs.push_back(&ex.features);
        targets.push_back(nn::one_hot(static_cast<std::size_t>(ex.pseudo_label), num_classes));
    }
    return supervised_stack_loss(student, inputs, targets, rng, aug);
}

ThresholdResult compute_thresholds(const std::vector<ClassCounts>& per_satellite,
                                   double base_tau, double cap, ThresholdRule rule) {
    if (per_satellite.empty())
        throw std::invalid_argument("compute_thresholds: no satellites");
    const std::size_t num_sats = per_satellite.size();
    const std::size_t num_classes = per_satellite[0].labeled.size();
    if (num_classes == 0)
        throw std::invalid_argument("compute_thresholds: no classes");

    std::vector<double> class_total(num_classes, 0.0);
    std::vector<double> sat_total(num_sats, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < num_sats; ++i) {
        const auto& c = per_satellite[i];
        if (c.labeled.size() != num_classes || c.pseudo.size() != num_classes)
            throw std::invalid_argument("compute_thresholds: ragged class counts");
        for (std::size_t m = 0; m < num_classes; ++m) {
            if (c.labeled[m] < 0 || c.pseudo[m] < 0)
                throw std::invalid_argument("compute_thresholds: negative count");
            const double combined = static_cast<double>(c.labeled[m] + c.pseudo[m]);
            class_total[m] += combined;
            sat_total[i] += combined;
            total += combined;
        }
    }
    if (total <= 0.0)
        throw std::invalid_argument("compute_thresholds: all counts are zero");

    ThresholdResult result;
    result.class_dist.resize(num_classes);
    for (std::size_t m = 0; m < num_classes; ++m) result.class_dist[m] = class_total[m] / total;
    result.size_ratio.resize(num_sats);
    for (std::size_t i = 0; i < num_sats; ++i) result.size_ratio[i] = sat_total[i] / total;

    // Population std over the M per-class shares (0 for M = 1).
    double mean = 0.0;
    for (double q : result.class_dist) mean += q;
    mean /= static_cast<double>(num_classes);
    double var = 0.0;
    for (double q : result.class_dist) var += (q - mean) * (q - mean);
    result.dist_std = std::sqrt(var / static_cast<double>(num_classes));

    result.table.base = base_tau;
    result.table.cap = cap;
    result.table.tau.assign(num_sats, std::vector<double>(num_classes, 0.0));
    for (std::size_t i = 0; i < num_sats; ++i) {
        for (std::size_t m = 0; m < num_classes; ++m) {
            double raw = 0.0;
            switch (rule) {
                case ThresholdRule::Adaptive:
                    raw = result.size_ratio[i] *
                          (result.class_dist[m] + base_tau - result.dist_std);
                    break;
                case ThresholdRule::FixedBase:
                    raw = base_tau;
                    break;
                case ThresholdRule::NoClassTerm:
                    raw = result.size_ratio[i] * base_tau;
                    break;
                case ThresholdRule::NoQuantityTerm:
                    raw = result.class_dist[m] + base_tau - result.dist_std;
                    break;
            }
            result.table.tau[i][m] = std::clamp(raw, kThresholdFloor, cap);
        }
    }
    return result;
}

std::optional<PseudoLabeled> pseudo_label(const ClientStack& teacher, const nn::Tensor& x,
                                          std::span<const double> thresholds) {
    const nn::Tensor p = nn::softmax(stack_logits(teacher, x));
    if (thresholds.size() != p.numel())
        throw std::invalid_argument("pseudo_label: threshold count mismatch");
    const std::size_t best =
        static_cast<std::size_t>(std::max_element(p.data.begin(), p.data.end()) - p.data.begin());
    if (p[best] >= thresholds[best])
        return PseudoLabeled{x, static_cast<int>(best), p[best]};
    return std::nullopt;
}

ContrastiveResult contrastive_loss(const std::vector<nn::Tensor>& student_feats,
                                   const std::vector<nn::Tensor>& teacher_feats, double phi) {
    if (student_feats.size() != teacher_feats.size())
        throw std::invalid_argument("contrastive_loss: mismatched list lengths");
    if (student_feats.empty())
        throw std::invalid_argument("contrastive_loss: empty feature lists");
    if (!(phi > 0.0))
        throw std::invalid_argument("contrastive_loss: temperature must be positive");

    const std::size_t n = student_feats.size();
    ContrastiveResult out;
    out.feature_grads.reserve(n);
    for (const auto& z : student_feats) out.feature_grads.push_back(nn::Tensor::zeros(z.shape));

    // Per anchor k: positive score s_k = Z_k.Zt_k/phi, negatives
    // n_kj = Z_k.Z_j/phi. Shift by the row max before exponentiating.
    for (std::size_t k = 0; k < n; ++k) {
        const double pos = nn::dot(student_feats[k], teacher_feats[k]) / phi;
        std::vector<double> neg(n, 0.0);
        double row_max = pos;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == k) continue;
            neg[j] = nn::dot(student_feats[k], student_feats[j]) / phi;
            row_max = std::max(row_max, neg[j]);
        }
        const double wpos = std::exp(pos - row_max);
        double denom = wpos;
        for (std::size_t j = 0; j < n; ++j)
            if (j != k) denom += std::exp(neg[j] - row_max);

        out.loss += std::log(denom) + row_max - pos;

        const double dpos = wpos / denom - 1.0;  // d term / d s_k
        auto& gk = out.feature_grads[k];
        for (std::size_t i = 0; i < gk.numel(); ++i)
            gk[i] += dpos * teacher_feats[k][i] / phi;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == k) continue;
            const double dneg = std::exp(neg[j] - row_max) / denom;  // d term / d n_kj
            for (std::size_t i = 0; i < gk.numel(); ++i)
                gk[i] += dneg * student_feats[j][i] / phi;
            auto& gj = out.feature_grads[j];
            for (std::size_t i = 0; i < gj.numel(); ++i)
                gj[i] += dneg * student_feats[k][i] / phi;
        }
    }
    return out;
}

std::vector<long long> class_histogram(const std::vector<LabeledExample>& examples,
                                       std::size_t num_classes) {
    std::vector<long long> hist(num_classes, 0);
    for (const auto& ex : examples) {
        if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= num_classes)
            throw std::invalid_argument("class_histogram: label out of range");
        ++hist[static_cast<std::size_t>(ex.label)];
    }
    return hist;
}

}  // namespace leosplit::ssl

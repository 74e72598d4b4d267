#pragma once

#include <optional>
#include <span>
#include <vector>

#include "leosplit/nn.hpp"
#include "leosplit/rng.hpp"

namespace leosplit::ssl {

struct LabeledExample {
    nn::Tensor features;
    int label = 0;
};

struct UnlabeledExample {
    nn::Tensor features;
};

struct PseudoLabeled {
    nn::Tensor features;
    int pseudo_label = 0;
    double confidence = 0.0;  // >= the threshold that admitted it
};

// Per-class tallies of labeled and pseudo-labeled data on one satellite.
struct ClassCounts {
    std::vector<long long> labeled;
    std::vector<long long> pseudo;
};

// Per-satellite, per-class confidence cutoffs.
struct ThresholdTable {
    std::vector<std::vector<double>> tau;  // [satellite][class]
    double base = 0.0;
    double cap = 0.0;
};

struct SslHyper {
    double lambda_u = 1.0;   // weight of the pseudo-label loss
    double lambda_v = 0.1;   // weight of the contrastive loss
    double phi = 0.5;        // InfoNCE temperature
    double ema_decay = 0.99;
};

// Weak augmentation for vector data: optional circular shift by one
// position, then additive uniform noise in [-noise_span, +noise_span].
// noise_span == 0 disables augmentation entirely (identity, no rng draws).
struct AugmentConfig {
    double noise_span = 0.05;
    double shift_prob = 0.5;
};

nn::Tensor weak_augment(const nn::Tensor& x, Rng& rng, const AugmentConfig& cfg);

// teacher <- decay * teacher + (1 - decay) * student, per parameter.
void ema_update(nn::SubModel& teacher, const nn::SubModel& student, double decay);

// Client-side pairing of the sub-model and its auxiliary head. The head's
// input dimension matches the body's cut-layer output; its output
// dimension matches the class count.
struct ClientStack {
    nn::SubModel body;
    nn::SubModel head;
};

struct StackGrads {
    nn::ModelGrads body;
    nn::ModelGrads head;
};

nn::Tensor stack_logits(const ClientStack& stack, const nn::Tensor& x);

void ema_update(ClientStack& teacher, const ClientStack& student, double decay);

struct StackLoss {
    double loss = 0.0;
    StackGrads grads;
};

// Mean cross-entropy of weakly augmented inputs through body + head
// against the true labels. Gradients flow to both parts.
StackLoss auxiliary_loss(const ClientStack& student, const std::vector<LabeledExample>& batch,
                         Rng& rng, const AugmentConfig& aug);

// Same contract with pseudo-labels as targets.
StackLoss unsupervised_loss(const ClientStack& student, const std::vector<PseudoLabeled>& batch,
                            Rng& rng, const AugmentConfig& aug);

enum class ThresholdRule {
    Adaptive,        // size_ratio * (class_dist + base - std(class_dist))
    FixedBase,       // base everywhere
    NoClassTerm,     // size_ratio * base
    NoQuantityTerm,  // class_dist + base - std(class_dist)
};

struct ThresholdResult {
    ThresholdTable table;
    std::vector<double> class_dist;  // empirical class distribution across satellites
    std::vector<double> size_ratio;  // per-satellite share of the total count
    double dist_std = 0.0;           // population std of class_dist
};

// Raw thresholds are clipped to the cap from above and to this floor from
// below so every class keeps some rejection power.
inline constexpr double kThresholdFloor = 0.01;

// Adaptive per-satellite per-class thresholds from the pooled counts.
// Throws std::invalid_argument when every count is zero.
ThresholdResult compute_thresholds(const std::vector<ClassCounts>& per_satellite,
                                   double base_tau, double cap,
                                   ThresholdRule rule = ThresholdRule::Adaptive);

// Teacher inference (teacher body + teacher head, both satellite-resident).
// Admits the argmax class iff its softmax score meets that class's
// threshold; otherwise the item stays low-confidence (nullopt).
std::optional<PseudoLabeled> pseudo_label(const ClientStack& teacher, const nn::Tensor& x,
                                          std::span<const double> thresholds);

struct ContrastiveResult {
    double loss = 0.0;
    std::vector<nn::Tensor> feature_grads;  // d loss / d student_feats[k]
};

// InfoNCE over matched student/teacher cut-layer activations: positives are
// same-item pairs, negatives are student-student cross pairs. Gradients are
// taken with respect to the student features only.
ContrastiveResult contrastive_loss(const std::vector<nn::Tensor>& student_feats,
                                   const std::vector<nn::Tensor>& teacher_feats, double phi);

inline double client_loss(double loss_x, double loss_u, double loss_v, const SslHyper& h) {
    return loss_x + h.lambda_u * loss_u + h.lambda_v * loss_v;
}

std::vector<long long> class_histogram(const std::vector<LabeledExample>& examples,
                                       std::size_t num_classes);

}  // namespace leosplit::ssl

#pragma once

#include "rco/types.hpp"

#include <span>

namespace rco {

/// Rows sum to 1 (within float roundoff); entries clamped to the smallest
/// positive normal so logs stay finite.
struct ProbBatch {
  Mat probs;  // (batch, classes)
};

struct DistillConfig {
  float temperature = 5.0f;
  float balance = 1.0f;        // weight on the distillation term
  bool kl_grad_scale = true;   // multiply the KL term by temperature^2
};

/// Row-wise softmax(logits / tau), stabilized by max subtraction.
ProbBatch softened_softmax(const Eigen::Ref<const Mat>& logits, float tau);

/// Mean over the batch of -log p[label].
float cross_entropy(const ProbBatch& probs, std::span<const int> labels);

/// Mean over the batch of sum_c p (log p - log q). Zero exactly when p and q
/// are bitwise identical.
float kl_divergence(const ProbBatch& p, const ProbBatch& q);

struct LossGrad {
  float loss = 0.0f;
  Mat logit_grad;  // d loss / d student logits
};

/// Plain cross-entropy of softmax(logits) against hard labels, with gradient.
LossGrad ce_loss(const Eigen::Ref<const Mat>& logits, std::span<const int> labels);

/// CE(softmax(z_s), y) + balance * scale * KL(soft teacher || soft student),
/// scale = tau^2 when kl_grad_scale is set. balance == 0 short-circuits to the
/// ce_loss result unchanged.
LossGrad kd_loss(const Eigen::Ref<const Mat>& student_logits,
                 const Eigen::Ref<const Mat>& teacher_logits, std::span<const int> labels,
                 const DistillConfig& cfg);

/// Per-anchor step objective; same contract as kd_loss with the teacher logits
/// taken from the supervising anchor.
LossGrad rco_step_loss(const Eigen::Ref<const Mat>& student_logits,
                       const Eigen::Ref<const Mat>& anchor_logits, std::span<const int> labels,
                       const DistillConfig& cfg);

struct FeatureLossGrad {
  float loss = 0.0f;
  Mat feature_grad;  // d loss / d student features
};

/// Mean over the batch of the squared Euclidean distance between feature rows;
/// gradient 2 (f_s - f_t) / batch.
FeatureLossGrad mimic_loss(const Eigen::Ref<const Mat>& student_features,
                           const Eigen::Ref<const Mat>& teacher_features);

}  // namespace rco

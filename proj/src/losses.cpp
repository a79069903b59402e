#include "rco/losses.hpp"

#include "rco/errors.hpp"

#include <cfloat>
#include <cmath>
#include <string>

namespace rco {

ProbBatch softened_softmax(const Eigen::Ref<const Mat>& logits, float tau) {
  if (!(tau > 0.0f)) fail(errc::invalid_argument, "temperature must be > 0");
  ProbBatch out;
  out.probs.resize(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::ArrayXf a = logits.row(r).transpose().array() / tau;
    a -= a.maxCoeff();
    Eigen::ArrayXf e = a.exp();
    // Entries clamped to the smallest positive normal so logs stay finite.
    out.probs.row(r) = (e / e.sum()).max(FLT_MIN).matrix().transpose();
  }
  return out;
}

float cross_entropy(const ProbBatch& probs, std::span<const int> labels) {
  const Eigen::Index B = probs.probs.rows();
  if (static_cast<Eigen::Index>(labels.size()) != B) {
    fail(errc::shape_mismatch, "batch of " + std::to_string(B) + " rows given " +
                                   std::to_string(labels.size()) + " labels");
  }
  if (B == 0) fail(errc::invalid_argument, "cross_entropy over an empty batch");
  double total = 0.0;
  for (Eigen::Index r = 0; r < B; ++r) {
    int y = labels[static_cast<size_t>(r)];
    if (y < 0 || y >= probs.probs.cols()) {
      fail(errc::invalid_argument, "label " + std::to_string(y) + " outside [0, " +
                                       std::to_string(probs.probs.cols()) + ")");
    }
    total += -std::log(static_cast<double>(probs.probs(r, y)));
  }
  return static_cast<float>(total / static_cast<double>(B));
}

float kl_divergence(const ProbBatch& p, const ProbBatch& q) {
  if (p.probs.rows() != q.probs.rows() || p.probs.cols() != q.probs.cols()) {
    fail(errc::shape_mismatch, "kl_divergence shapes disagree");
  }
  if (p.probs.rows() == 0) fail(errc::invalid_argument, "kl_divergence over an empty batch");
  // Per-entry p * (log p - log q): exactly zero whenever the bits match, so
  // KL(p, p) == 0 without roundoff.
  double total = 0.0;
  for (Eigen::Index r = 0; r < p.probs.rows(); ++r) {
    float row = 0.0f;
    for (Eigen::Index c = 0; c < p.probs.cols(); ++c) {
      float pv = p.probs(r, c);
      float qv = q.probs(r, c);
      row += pv * (std::log(pv) - std::log(qv));
    }
    total += row;
  }
  return static_cast<float>(total / static_cast<double>(p.probs.rows()));
}

LossGrad ce_loss(const Eigen::Ref<const Mat>& logits, std::span<const int> labels) {
  ProbBatch p = softened_softmax(logits, 1.0f);
  LossGrad r;
  r.loss = cross_entropy(p, labels);
  const float inv_b = 1.0f / static_cast<float>(logits.rows());
  r.logit_grad = p.probs * inv_b;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    r.logit_grad(i, labels[static_cast<size_t>(i)]) -= inv_b;
  }
  return r;
}

LossGrad kd_loss(const Eigen::Ref<const Mat>& student_logits,
                 const Eigen::Ref<const Mat>& teacher_logits, std::span<const int> labels,
                 const DistillConfig& cfg) {
  if (!(cfg.balance >= 0.0f)) fail(errc::invalid_argument, "balance must be >= 0");
  if (cfg.balance == 0.0f) return ce_loss(student_logits, labels);
  if (student_logits.rows() != teacher_logits.rows() ||
      student_logits.cols() != teacher_logits.cols()) {
    fail(errc::shape_mismatch, "student and teacher logit shapes disagree");
  }
  LossGrad r = ce_loss(student_logits, labels);
  ProbBatch ps = softened_softmax(student_logits, cfg.temperature);
  ProbBatch pt = softened_softmax(teacher_logits, cfg.temperature);
  float scale = cfg.kl_grad_scale ? cfg.temperature * cfg.temperature : 1.0f;
  r.loss += cfg.balance * scale * kl_divergence(pt, ps);
  const float g = cfg.balance * scale /
                  (cfg.temperature * static_cast<float>(student_logits.rows()));
  r.logit_grad += g * (ps.probs - pt.probs);
  return r;
}

LossGrad rco_step_loss(const Eigen::Ref<const Mat>& student_logits,
                       const Eigen::Ref<const Mat>& anchor_logits, std::span<const int> labels,
                       const DistillConfig& cfg) {
  // The per-anchor objective is the KD objective with the anchor supplying
  // the soft targets; with the final anchor it reduces to kd_loss exactly.
  return kd_loss(student_logits, anchor_logits, labels, cfg);
}

FeatureLossGrad mimic_loss(const Eigen::Ref<const Mat>& student_features,
                           const Eigen::Ref<const Mat>& teacher_features) {
  if (student_features.rows() != teacher_features.rows() ||
      student_features.cols() != teacher_features.cols()) {
    fail(errc::shape_mismatch, "feature shapes disagree: student " +
                                   std::to_string(student_features.rows()) + "x" +
                                   std::to_string(student_features.cols()) + ", teacher " +
                                   std::to_string(teacher_features.rows()) + "x" +
                                   std::to_string(teacher_features.cols()));
  }
  if (student_features.rows() == 0) fail(errc::invalid_argument, "mimic_loss over empty batch");
  FeatureLossGrad r;
  Mat diff = student_features - teacher_features;
  const float inv_b = 1.0f / static_cast<float>(student_features.rows());
  r.loss = diff.squaredNorm() * inv_b;
  r.feature_grad = diff * (2.0f * inv_b);
  return r;
}

}  // namespace rco

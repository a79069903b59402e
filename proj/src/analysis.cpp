#include "rco/analysis.hpp"

#include "rco/csv.hpp"
#include "rco/errors.hpp"
#include "rco/losses.hpp"
#include "rco/rng.hpp"
#include "rco/strategy.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace rco {

namespace {

constexpr int kEvalChunk = 256;

Batch take_chunk(const Dataset& d, int start, int take) {
  std::vector<int> idx(static_cast<size_t>(take));
  for (int i = 0; i < take; ++i) idx[static_cast<size_t>(i)] = start + i;
  return gather(d, idx);
}

}  // namespace

float top1_accuracy(const NetworkSpec& spec, const Params& params, const Dataset& data) {
  if (data.n() == 0) fail(errc::invalid_argument, "top-1 over an empty dataset");
  int64_t correct = 0;
  for (int start = 0; start < data.n(); start += kEvalChunk) {
    const int take = std::min(kEvalChunk, data.n() - start);
    Batch chunk = take_chunk(data, start, take);
    const ForwardResult r = forward(spec, params, chunk.images);
    ConstMatMap logits = r.logits.mat2d();
    for (int i = 0; i < take; ++i) {
      int best = 0;
      for (Eigen::Index c = 1; c < logits.cols(); ++c) {
        // Strict comparison keeps the lowest index on ties.
        if (logits(i, c) > logits(i, best)) best = static_cast<int>(c);
      }
      if (best == chunk.labels[static_cast<size_t>(i)]) ++correct;
    }
  }
  return static_cast<float>(static_cast<double>(correct) / static_cast<double>(data.n()));
}

void KlCurve::write_csv(const std::string& path) const {
  CsvWriter csv({"teacher_epoch", "kl"});
  for (size_t i = 0; i < epochs.size(); ++i) {
    csv.add_row({std::to_string(epochs[i]), format_float(kl[i])});
  }
  csv.write(path);
}

KlCurve kl_curve(const NetworkSpec& ref_spec, const Params& ref_params,
                 const Trajectory& trajectory, const Dataset& data, float tau) {
  if (trajectory.checkpoints.empty()) fail(errc::missing_input, "trajectory has no checkpoints");
  KlCurve curve;
  for (const Checkpoint& c : trajectory.checkpoints) {
    curve.epochs.push_back(c.epoch);
    curve.kl.push_back(hardness(ref_spec, ref_params, trajectory.spec, c, data, tau));
  }
  return curve;
}

void TrajectoryProjection::write_csv(const std::string& path) const {
  CsvWriter csv({"epoch", "x", "y"});
  for (size_t i = 0; i < epochs.size(); ++i) {
    csv.add_row({std::to_string(epochs[i]), format_float(x[i]), format_float(y[i])});
  }
  csv.write(path);
}

TrajectoryProjection pca_trajectory(const std::vector<Params>& points,
                                    const std::vector<int>& epochs) {
  const size_t k = points.size();
  if (k < 3) fail(errc::invalid_argument, "trajectory projection needs at least 3 checkpoints");
  if (epochs.size() != k) fail(errc::invalid_argument, "one epoch tag per checkpoint required");
  const int64_t p = points[0].count();
  for (const Params& pt : points) {
    if (pt.weights.size() != points[0].weights.size() || pt.count() != p) {
      fail(errc::shape_mismatch, "checkpoints have mismatched parameter shapes");
    }
    for (size_t i = 0; i < pt.weights.size(); ++i) {
      if (!same_shape(pt.weights[i], points[0].weights[i]) ||
          !same_shape(pt.biases[i], points[0].biases[i])) {
        fail(errc::shape_mismatch, "checkpoints have mismatched parameter shapes");
      }
    }
  }

  // Rows are flattened differences from the final point; the final row is
  // omitted (it is identically zero) but still projected below.
  std::vector<float> flat(static_cast<size_t>(p));
  std::vector<float> flat_last(static_cast<size_t>(p));
  points[k - 1].flatten_into(flat_last.data());
  Eigen::MatrixXd d(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(p));
  for (size_t i = 0; i + 1 < k; ++i) {
    points[i].flatten_into(flat.data());
    for (int64_t j = 0; j < p; ++j) {
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<double>(flat[static_cast<size_t>(j)]) -
          static_cast<double>(flat_last[static_cast<size_t>(j)]);
    }
  }

  // Top principal directions via the small (k-1)x(k-1) Gram matrix: if
  // G u = s^2 u then v = D^T u / s is a unit right-singular vector of D.
  Eigen::MatrixXd gram = d * d.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) fail(errc::invalid_argument, "eigendecomposition failed");
  const Eigen::VectorXd evals = eig.eigenvalues();  // ascending
  const Eigen::Index last = evals.size() - 1;

  double total = 0.0;
  for (Eigen::Index i = 0; i < evals.size(); ++i) total += std::max(evals(i), 0.0);

  TrajectoryProjection proj;
  proj.epochs = epochs;
  proj.x.assign(k, 0.0f);
  proj.y.assign(k, 0.0f);

  auto direction = [&](Eigen::Index which) -> Eigen::VectorXd {
    const double lambda = std::max(evals(which), 0.0);
    if (lambda <= 1e-30 * std::max(total, 1.0)) return Eigen::VectorXd::Zero(p);
    return d.transpose() * eig.eigenvectors().col(which) / std::sqrt(lambda);
  };
  Eigen::VectorXd v1 = direction(last);
  Eigen::VectorXd v2 = evals.size() >= 2 ? direction(last - 1) : Eigen::VectorXd::Zero(p);

  for (size_t i = 0; i + 1 < k; ++i) {
    proj.x[i] = static_cast<float>(d.row(static_cast<Eigen::Index>(i)).dot(v1));
    proj.y[i] = static_cast<float>(d.row(static_cast<Eigen::Index>(i)).dot(v2));
  }
  // The final checkpoint differs from itself by the zero vector, so it sits
  // at the origin exactly.
  proj.x[k - 1] = 0.0f;
  proj.y[k - 1] = 0.0f;

  if (total > 0.0) {
    proj.explained_x = static_cast<float>(std::max(evals(last), 0.0) / total);
    proj.explained_y = static_cast<float>(
        evals.size() >= 2 ? std::max(evals(last - 1), 0.0) / total : 0.0);
  }
  return proj;
}

void NoiseSweep::write_csv(const std::string& path) const {
  CsvWriter csv({"delta", "loss_a", "loss_b", "loss_gap"});
  for (size_t i = 0; i < deltas.size(); ++i) {
    csv.add_row({format_float(deltas[i]), format_float(loss_a[i]), format_float(loss_b[i]),
                 format_float(loss_gap[i])});
  }
  csv.write(path);
}

NoiseSweep noise_sweep(const NetworkSpec& spec_a, const Params& params_a,
                       const NetworkSpec& spec_b, const Params& params_b, const Dataset& data,
                       const std::vector<float>& deltas, uint64_t seed) {
  if (data.n() == 0) fail(errc::invalid_argument, "noise sweep over an empty dataset");
  if (deltas.empty()) fail(errc::invalid_argument, "noise sweep needs at least one delta");
  float prev = -1.0f;
  for (float delta : deltas) {
    if (!(delta >= 0.0f && delta <= 1.0f)) {
      fail(errc::invalid_argument, "noise deltas must lie in [0, 1]");
    }
    if (delta <= prev) fail(errc::invalid_argument, "noise deltas must be strictly increasing");
    prev = delta;
  }

  const int64_t sz = data.sample_size();
  // Per-image input spread, measured on the data exactly as the models see it.
  std::vector<float> sigma_in(static_cast<size_t>(data.n()));
  for (int i = 0; i < data.n(); ++i) {
    const float* px = data.images.data.data() + i * sz;
    double sum = 0.0, sq = 0.0;
    for (int64_t j = 0; j < sz; ++j) {
      sum += px[j];
      sq += static_cast<double>(px[j]) * px[j];
    }
    const double mean = sum / static_cast<double>(sz);
    sigma_in[static_cast<size_t>(i)] =
        static_cast<float>(std::sqrt(std::max(0.0, sq / static_cast<double>(sz) - mean * mean)));
  }

  NoiseSweep sweep;
  sweep.deltas = deltas;
  Tensor noisy = data.images;
  for (float delta : deltas) {
    if (delta == 0.0f) {
      // Zero noise is the clean input by definition; reuse the original bits.
      noisy.data = data.images.data;
    } else {
      for (int i = 0; i < data.n(); ++i) {
        // One realization per image, replayed identically at every delta and
        // shared by both models, so the comparison is paired throughout.
        Rng rng(derive_seed(seed, seed_stream::noise, static_cast<uint64_t>(i)));
        const float scale = sigma_in[static_cast<size_t>(i)] * delta;
        const float* src = data.images.data.data() + i * sz;
        float* dst = noisy.data.data() + i * sz;
        for (int64_t j = 0; j < sz; ++j) dst[j] = src[j] + scale * rng.normal();
      }
    }

    auto mean_ce = [&](const NetworkSpec& spec, const Params& params) {
      double total = 0.0;
      for (int start = 0; start < data.n(); start += kEvalChunk) {
        const int take = std::min(kEvalChunk, data.n() - start);
        std::vector<int> shape = data.images.shape;
        shape[0] = take;
        Tensor chunk = Tensor::zeros(shape);
        std::copy_n(noisy.data.data() + start * sz, static_cast<size_t>(take) * sz,
                    chunk.data.data());
        ForwardResult r = forward(spec, params, chunk);
        ProbBatch probs = softened_softmax(r.logits.mat2d(), 1.0f);
        std::span<const int> labels(data.labels.data() + start, static_cast<size_t>(take));
        total += static_cast<double>(cross_entropy(probs, labels)) * take;
      }
      return static_cast<float>(total / static_cast<double>(data.n()));
    };

    const float la = mean_ce(spec_a, params_a);
    const float lb = mean_ce(spec_b, params_b);
    sweep.loss_a.push_back(la);
    sweep.loss_b.push_back(lb);
    sweep.loss_gap.push_back(la - lb);
  }
  return sweep;
}

}  // namespace rco

#pragma once

#include "rco/data.hpp"
#include "rco/net.hpp"
#include "rco/trajectory.hpp"

#include <string>
#include <vector>

namespace rco {

/// Fraction of examples whose strict argmax logit (lowest index wins ties)
/// matches the label.
float top1_accuracy(const NetworkSpec& spec, const Params& params, const Dataset& data);

/// Mean softened KL between a fixed reference model and each checkpoint of a
/// trajectory, in checkpoint order.
struct KlCurve {
  std::vector<int> epochs;
  std::vector<float> kl;

  void write_csv(const std::string& path) const;
};

KlCurve kl_curve(const NetworkSpec& ref_spec, const Params& ref_params,
                 const Trajectory& trajectory, const Dataset& data, float tau);

/// 2-D projection of a weight trajectory onto its top principal directions.
/// Rows are flattened differences from the final point, so the final point
/// projects to the origin exactly.
struct TrajectoryProjection {
  std::vector<int> epochs;
  std::vector<float> x;
  std::vector<float> y;
  float explained_x = 0.0f;  // eigenvalue fraction of component 1
  float explained_y = 0.0f;

  void write_csv(const std::string& path) const;
};

TrajectoryProjection pca_trajectory(const std::vector<Params>& points,
                                    const std::vector<int>& epochs);

/// Loss under shared input perturbations: per image, noise = (sigma_in * delta) * e
/// with e drawn once per (image, delta) from a seed so both models see the
/// same corrupted pixels.
struct NoiseSweep {
  std::vector<float> deltas;
  std::vector<float> loss_a;
  std::vector<float> loss_b;
  std::vector<float> loss_gap;  // loss_a - loss_b

  void write_csv(const std::string& path) const;
};

NoiseSweep noise_sweep(const NetworkSpec& spec_a, const Params& params_a,
                       const NetworkSpec& spec_b, const Params& params_b, const Dataset& data,
                       const std::vector<float>& deltas, uint64_t seed);

}  // namespace rco

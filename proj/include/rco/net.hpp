#pragma once

#include "rco/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rco {

enum class LayerKind { dense, conv3x3, relu, flatten, avgpool2x2 };

const char* layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);

/// fan_in / fan_out are meaningful for dense (input/output width) and conv3x3
/// (input/output channels) only.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int fan_in = 0;
  int fan_out = 0;
};

std::string describe_layer(const LayerSpec& layer);

struct NetworkSpec {
  std::vector<int> input_shape;  // per-sample, e.g. {1, 28, 28}
  std::vector<LayerSpec> layers;
  int num_classes = 0;
  int feature_tap = 0;  // index of the layer whose output is the feature f
};

/// Walks per-sample shapes through the network. Returns the output shape of
/// every layer; throws errc::invalid_spec naming the offending layer pair.
std::vector<std::vector<int>> validate_network(const NetworkSpec& spec);

int64_t param_count(const NetworkSpec& spec);

uint64_t spec_digest(const NetworkSpec& spec);

/// Per-layer weight and bias tensors; empty tensors for parameterless layers.
struct Params {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  int64_t count() const;
  void flatten_into(float* out) const;  // layer order, weights then bias per layer
};

bool bitwise_equal(const Params& a, const Params& b);
Params zeros_like(const Params& p);

/// Fan-in-scaled uniform init (He bounds, U(-sqrt(6/fan_in), +sqrt(6/fan_in)),
/// giving weight variance 2/fan_in); biases zero. Deterministic per (spec, seed).
Params init_params(const NetworkSpec& spec, uint64_t seed);

struct ForwardResult {
  Tensor logits;    // (batch, num_classes)
  Tensor features;  // output of the feature_tap layer
};

/// acts[0] is the input batch, acts[i + 1] the output of layer i.
struct Activations {
  std::vector<Tensor> acts;
  const Tensor& logits() const { return acts.back(); }
};

Activations forward_cached(const NetworkSpec& spec, const Params& params, const Tensor& batch);
ForwardResult forward(const NetworkSpec& spec, const Params& params, const Tensor& batch);

/// Gradient of (logit_grad . logits) [+ (feature_grad . features)] w.r.t. all
/// parameters, i.e. standard backprop with an optional gradient injected at
/// the feature tap.
Params backward(const NetworkSpec& spec, const Params& params, const Tensor& batch,
                const Tensor& logit_grad);
Params backward(const NetworkSpec& spec, const Params& params, const Tensor& batch,
                const Tensor& logit_grad, const Tensor& feature_grad);

/// Backprop reusing activations from forward_cached (training-loop fast path;
/// same math as backward()). feature_grad may be empty.
Params backward_from(const NetworkSpec& spec, const Params& params, const Activations& acts,
                     const Tensor& logit_grad, const Tensor& feature_grad);

}  // namespace rco

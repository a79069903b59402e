#include "rco/net.hpp"

#include "rco/errors.hpp"
#include "rco/rng.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <utility>

namespace rco {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv3x3: return "conv3x3";
    case LayerKind::relu: return "relu";
    case LayerKind::flatten: return "flatten";
    case LayerKind::avgpool2x2: return "avgpool2x2";
  }
  return "unknown";
}

LayerKind layer_kind_from_name(const std::string& name) {
  if (name == "dense") return LayerKind::dense;
  if (name == "conv3x3") return LayerKind::conv3x3;
  if (name == "relu") return LayerKind::relu;
  if (name == "flatten") return LayerKind::flatten;
  if (name == "avgpool2x2") return LayerKind::avgpool2x2;
  fail(errc::config_invalid, "unknown layer kind \"" + name + "\"");
}

std::string describe_layer(const LayerSpec& layer) {
  std::ostringstream out;
  out << layer_kind_name(layer.kind);
  if (layer.kind == LayerKind::dense || layer.kind == LayerKind::conv3x3) {
    out << ' ' << layer.fan_in << "->" << layer.fan_out;
  }
  return out.str();
}

namespace {

bool has_params(LayerKind kind) {
  return kind == LayerKind::dense || kind == LayerKind::conv3x3;
}

[[noreturn]] void spec_error(const NetworkSpec& spec, size_t i, const std::vector<int>& got,
                             const std::string& expected) {
  std::string prev = i == 0 ? "network input" : "layer " + std::to_string(i - 1) + " (" +
                                                    describe_layer(spec.layers[i - 1]) + ")";
  fail(errc::invalid_spec, "layer " + std::to_string(i) + " (" + describe_layer(spec.layers[i]) +
                               ") expects " + expected + " but " + prev + " produces " +
                               shape_str(got));
}

}  // namespace

std::vector<std::vector<int>> validate_network(const NetworkSpec& spec) {
  if (spec.input_shape.empty()) fail(errc::invalid_spec, "network input shape is empty");
  for (int d : spec.input_shape) {
    if (d < 1) fail(errc::invalid_spec, "network input shape " + shape_str(spec.input_shape) +
                                            " has a nonpositive dimension");
  }
  if (spec.layers.empty()) fail(errc::invalid_spec, "network has no layers");
  if (spec.num_classes < 1) fail(errc::invalid_spec, "num_classes must be >= 1");
  if (spec.feature_tap < 0 || spec.feature_tap >= static_cast<int>(spec.layers.size())) {
    fail(errc::invalid_spec, "feature_tap " + std::to_string(spec.feature_tap) +
                                 " outside layer range [0, " +
                                 std::to_string(spec.layers.size()) + ")");
  }

  std::vector<std::vector<int>> shapes;
  std::vector<int> cur = spec.input_shape;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    switch (layer.kind) {
      case LayerKind::dense: {
        if (layer.fan_in < 1 || layer.fan_out < 1) {
          fail(errc::invalid_spec,
               "layer " + std::to_string(i) + " (" + describe_layer(layer) + ") needs fans >= 1");
        }
        if (cur.size() != 1 || cur[0] != layer.fan_in) {
          spec_error(spec, i, cur, "a flat vector of " + std::to_string(layer.fan_in));
        }
        cur = {layer.fan_out};
        break;
      }
      case LayerKind::conv3x3: {
        if (layer.fan_in < 1 || layer.fan_out < 1) {
          fail(errc::invalid_spec,
               "layer " + std::to_string(i) + " (" + describe_layer(layer) + ") needs fans >= 1");
        }
        if (cur.size() != 3 || cur[0] != layer.fan_in) {
          spec_error(spec, i, cur,
                     "(channels=" + std::to_string(layer.fan_in) + ", height, width)");
        }
        cur = {layer.fan_out, cur[1], cur[2]};
        break;
      }
      case LayerKind::relu:
        break;
      case LayerKind::flatten:
        cur = {static_cast<int>(shape_size(cur))};
        break;
      case LayerKind::avgpool2x2: {
        if (cur.size() != 3 || cur[1] % 2 != 0 || cur[2] % 2 != 0) {
          spec_error(spec, i, cur, "(channels, even height, even width)");
        }
        cur = {cur[0], cur[1] / 2, cur[2] / 2};
        break;
      }
    }
    shapes.push_back(cur);
  }
  const std::vector<int>& out = shapes.back();
  if (out.size() != 1 || out[0] != spec.num_classes) {
    fail(errc::invalid_spec, "final layer produces " + shape_str(out) + ", expected (" +
                                 std::to_string(spec.num_classes) + ") logits");
  }
  return shapes;
}

int64_t param_count(const NetworkSpec& spec) {
  int64_t n = 0;
  for (const LayerSpec& layer : spec.layers) {
    if (layer.kind == LayerKind::dense) {
      n += static_cast<int64_t>(layer.fan_in) * layer.fan_out + layer.fan_out;
    } else if (layer.kind == LayerKind::conv3x3) {
      n += static_cast<int64_t>(layer.fan_out) * layer.fan_in * 9 + layer.fan_out;
    }
  }
  return n;
}

uint64_t spec_digest(const NetworkSpec& spec) {
  // FNV-1a over a canonical rendering; stable across platforms.
  uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](int64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= static_cast<uint64_t>(v >> (8 * b)) & 0xFFu;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<int64_t>(spec.input_shape.size()));
  for (int d : spec.input_shape) mix(d);
  mix(static_cast<int64_t>(spec.layers.size()));
  for (const LayerSpec& layer : spec.layers) {
    mix(static_cast<int64_t>(layer.kind));
    mix(layer.fan_in);
    mix(layer.fan_out);
  }
  mix(spec.num_classes);
  mix(spec.feature_tap);
  return h;
}

int64_t Params::count() const {
  int64_t n = 0;
  for (const Tensor& t : weights) n += t.size();
  for (const Tensor& t : biases) n += t.size();
  return n;
}

void Params::flatten_into(float* out) const {
  for (size_t i = 0; i < weights.size(); ++i) {
    if (!weights[i].empty()) {
      std::memcpy(out, weights[i].data.data(), weights[i].data.size() * sizeof(float));
      out += weights[i].data.size();
    }
    if (!biases[i].empty()) {
      std::memcpy(out, biases[i].data.data(), biases[i].data.size() * sizeof(float));
      out += biases[i].data.size();
    }
  }
}

bool bitwise_equal(const Params& a, const Params& b) {
  if (a.weights.size() != b.weights.size() || a.biases.size() != b.biases.size()) return false;
  for (size_t i = 0; i < a.weights.size(); ++i) {
    if (!bitwise_equal(a.weights[i], b.weights[i])) return false;
  }
  for (size_t i = 0; i < a.biases.size(); ++i) {
    if (!bitwise_equal(a.biases[i], b.biases[i])) return false;
  }
  return true;
}

Params zeros_like(const Params& p) {
  Params z;
  z.weights.reserve(p.weights.size());
  z.biases.reserve(p.biases.size());
  for (const Tensor& t : p.weights) {
    z.weights.push_back(t.empty() ? Tensor{} : Tensor::zeros(t.shape));
  }
  for (const Tensor& t : p.biases) {
    z.biases.push_back(t.empty() ? Tensor{} : Tensor::zeros(t.shape));
  }
  return z;
}

Params init_params(const NetworkSpec& spec, uint64_t seed) {
  validate_network(spec);
  Params p;
  Rng rng(derive_seed(seed, seed_stream::init));
  for (const LayerSpec& layer : spec.layers) {
    if (layer.kind == LayerKind::dense) {
      Tensor w = Tensor::zeros({layer.fan_in, layer.fan_out});
      float a = std::sqrt(6.0f / static_cast<float>(layer.fan_in));
      for (float& v : w.data) v = rng.uniform(-a, a);
      p.weights.push_back(std::move(w));
      p.biases.push_back(Tensor::zeros({layer.fan_out}));
    } else if (layer.kind == LayerKind::conv3x3) {
      Tensor w = Tensor::zeros({layer.fan_out, layer.fan_in, 3, 3});
      float a = std::sqrt(6.0f / static_cast<float>(layer.fan_in * 9));
      for (float& v : w.data) v = rng.uniform(-a, a);
      p.weights.push_back(std::move(w));
      p.biases.push_back(Tensor::zeros({layer.fan_out}));
    } else {
      p.weights.push_back(Tensor{});
      p.biases.push_back(Tensor{});
    }
  }
  return p;
}

namespace {

void check_params_match(const NetworkSpec& spec, const Params& params) {
  if (params.weights.size() != spec.layers.size() || params.biases.size() != spec.layers.size()) {
    fail(errc::shape_mismatch,
         "params hold " + std::to_string(params.weights.size()) + " layers, spec has " +
             std::to_string(spec.layers.size()));
  }
}

std::vector<int> batch_shape(const std::vector<int>& sample, int batch) {
  std::vector<int> s;
  s.reserve(sample.size() + 1);
  s.push_back(batch);
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

// Gathers 3x3 neighborhoods (pad 1) of one (C, H, W) sample into a
// (C*9, H*W) matrix so convolution becomes one GEMM.
void im2col(const float* in, int C, int H, int W, Mat& cols) {
  cols.setZero(C * 9, H * W);
  for (int c = 0; c < C; ++c) {
    const float* plane = in + static_cast<int64_t>(c) * H * W;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        float* row = cols.data() + static_cast<int64_t>(c * 9 + ky * 3 + kx) * (H * W);
        for (int y = 0; y < H; ++y) {
          int sy = y + ky - 1;
          if (sy < 0 || sy >= H) continue;
          for (int x = 0; x < W; ++x) {
            int sx = x + kx - 1;
            if (sx < 0 || sx >= W) continue;
            row[y * W + x] = plane[sy * W + sx];
          }
        }
      }
    }
  }
}

// Scatters a (C*9, H*W) gradient back onto the (C, H, W) input layout.
void col2im_add(const Mat& gcols, int C, int H, int W, float* gin) {
  for (int c = 0; c < C; ++c) {
    float* plane = gin + static_cast<int64_t>(c) * H * W;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const float* row = gcols.data() + static_cast<int64_t>(c * 9 + ky * 3 + kx) * (H * W);
        for (int y = 0; y < H; ++y) {
          int sy = y + ky - 1;
          if (sy < 0 || sy >= H) continue;
          for (int x = 0; x < W; ++x) {
            int sx = x + kx - 1;
            if (sx < 0 || sx >= W) continue;
            plane[sy * W + sx] += row[y * W + x];
          }
        }
      }
    }
  }
}

}  // namespace

Activations forward_cached(const NetworkSpec& spec, const Params& params, const Tensor& batch) {
  std::vector<std::vector<int>> shapes = validate_network(spec);
  check_params_match(spec, params);
  if (batch.ndim() != static_cast<int>(spec.input_shape.size()) + 1) {
    fail(errc::shape_mismatch, "batch " + shape_str(batch.shape) + " does not extend input " +
                                   shape_str(spec.input_shape) + " with a leading batch axis");
  }
  for (size_t i = 0; i < spec.input_shape.size(); ++i) {
    if (batch.shape[i + 1] != spec.input_shape[i]) {
      fail(errc::shape_mismatch, "batch " + shape_str(batch.shape) + " does not match input " +
                                     shape_str(spec.input_shape));
    }
  }
  const int B = batch.dim(0);

  Activations result;
  result.acts.reserve(spec.layers.size() + 1);
  result.acts.push_back(batch);

  Mat cols;  // conv scratch, reused across samples
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    const Tensor& in = result.acts.back();
    Tensor out = Tensor::zeros(batch_shape(shapes[i], B));
    switch (layer.kind) {
      case LayerKind::dense: {
        ConstMatMap w = params.weights[i].mat(layer.fan_in, layer.fan_out);
        ConstVecMap b = params.biases[i].vec();
        MatMap o = out.mat2d();
        o.noalias() = in.mat2d() * w;
        o.rowwise() += b.transpose();
        break;
      }
      case LayerKind::conv3x3: {
        const int C = layer.fan_in, H = in.dim(2), W = in.dim(3);
        ConstMatMap w = params.weights[i].mat(layer.fan_out, C * 9);
        ConstVecMap b = params.biases[i].vec();
        const int64_t in_stride = static_cast<int64_t>(C) * H * W;
        const int64_t out_stride = static_cast<int64_t>(layer.fan_out) * H * W;
        for (int s = 0; s < B; ++s) {
          im2col(in.data.data() + s * in_stride, C, H, W, cols);
          MatMap o(out.data.data() + s * out_stride, layer.fan_out, H * W);
          o.noalias() = w * cols;
          o.colwise() += b;
        }
        break;
      }
      case LayerKind::relu:
        out.mat2d() = in.mat2d().cwiseMax(0.0f);
        break;
      case LayerKind::flatten:
        out.data = in.data;
        break;
      case LayerKind::avgpool2x2: {
        const int C = shapes[i][0], OH = shapes[i][1], OW = shapes[i][2];
        const int H = OH * 2, W = OW * 2;
        for (int s = 0; s < B; ++s) {
          for (int c = 0; c < C; ++c) {
            const float* ip = in.data.data() + (static_cast<int64_t>(s) * C + c) * H * W;
            float* op = out.data.data() + (static_cast<int64_t>(s) * C + c) * OH * OW;
            for (int y = 0; y < OH; ++y) {
              for (int x = 0; x < OW; ++x) {
                const float* p = ip + (2 * y) * W + 2 * x;
                op[y * OW + x] = 0.25f * (p[0] + p[1] + p[W] + p[W + 1]);
              }
            }
          }
        }
        break;
      }
    }
    result.acts.push_back(std::move(out));
  }
  return result;
}

ForwardResult forward(const NetworkSpec& spec, const Params& params, const Tensor& batch) {
  Activations acts = forward_cached(spec, params, batch);
  ForwardResult r;
  r.features = acts.acts[static_cast<size_t>(spec.feature_tap) + 1];
  r.logits = std::move(acts.acts.back());
  return r;
}

Params backward_from(const NetworkSpec& spec, const Params& params, const Activations& acts,
                     const Tensor& logit_grad, const Tensor& feature_grad) {
  check_params_match(spec, params);
  const Tensor& logits = acts.acts.back();
  if (!same_shape(logit_grad, logits)) {
    fail(errc::shape_mismatch, "logit grad " + shape_str(logit_grad.shape) +
                                   " does not match logits " + shape_str(logits.shape));
  }
  if (!feature_grad.empty()) {
    const Tensor& feat = acts.acts[static_cast<size_t>(spec.feature_tap) + 1];
    if (!same_shape(feature_grad, feat)) {
      fail(errc::shape_mismatch, "feature grad " + shape_str(feature_grad.shape) +
                                     " does not match features " + shape_str(feat.shape));
    }
  }

  const int B = acts.acts[0].dim(0);
  Params grads = zeros_like(params);
  Tensor gout = logit_grad;
  Mat cols, gcols;
  for (int i = static_cast<int>(spec.layers.size()) - 1; i >= 0; --i) {
    const LayerSpec& layer = spec.layers[static_cast<size_t>(i)];
    const Tensor& in = acts.acts[static_cast<size_t>(i)];
    const Tensor& out = acts.acts[static_cast<size_t>(i) + 1];
    if (!feature_grad.empty() && i == spec.feature_tap) {
      gout.mat2d() += feature_grad.mat2d();
    }
    Tensor gin = Tensor::zeros(in.shape);
    switch (layer.kind) {
      case LayerKind::dense: {
        ConstMatMap w = params.weights[static_cast<size_t>(i)].mat(layer.fan_in, layer.fan_out);
        MatMap gw = grads.weights[static_cast<size_t>(i)].mat(layer.fan_in, layer.fan_out);
        VecMap gb = grads.biases[static_cast<size_t>(i)].vec();
        ConstMatMap go = std::as_const(gout).mat2d();
        gw.noalias() = in.mat2d().transpose() * go;
        gb = go.colwise().sum().transpose();
        gin.mat2d().noalias() = go * w.transpose();
        break;
      }
      case LayerKind::conv3x3: {
        const int C = layer.fan_in, H = in.dim(2), W = in.dim(3);
        ConstMatMap w = params.weights[static_cast<size_t>(i)].mat(layer.fan_out, C * 9);
        MatMap gw = grads.weights[static_cast<size_t>(i)].mat(layer.fan_out, C * 9);
        VecMap gb = grads.biases[static_cast<size_t>(i)].vec();
        const int64_t in_stride = static_cast<int64_t>(C) * H * W;
        const int64_t out_stride = static_cast<int64_t>(layer.fan_out) * H * W;
        for (int s = 0; s < B; ++s) {
          im2col(in.data.data() + s * in_stride, C, H, W, cols);
          ConstMatMap go(gout.data.data() + s * out_stride, layer.fan_out, H * W);
          gw.noalias() += go * cols.transpose();
          gb += go.rowwise().sum();
          gcols.noalias() = w.transpose() * go;
          col2im_add(gcols, C, H, W, gin.data.data() + s * in_stride);
        }
        break;
      }
      case LayerKind::relu:
        for (size_t k = 0; k < gin.data.size(); ++k) {
          gin.data[k] = out.data[k] > 0.0f ? gout.data[k] : 0.0f;
        }
        break;
      case LayerKind::flatten:
        gin.data = gout.data;
        break;
      case LayerKind::avgpool2x2: {
        const int C = out.dim(1), OH = out.dim(2), OW = out.dim(3);
        const int H = OH * 2, W = OW * 2;
        for (int s = 0; s < B; ++s) {
          for (int c = 0; c < C; ++c) {
            float* ip = gin.data.data() + (static_cast<int64_t>(s) * C + c) * H * W;
            const float* op = gout.data.data() + (static_cast<int64_t>(s) * C + c) * OH * OW;
            for (int y = 0; y < OH; ++y) {
              for (int x = 0; x < OW; ++x) {
                float g = 0.25f * op[y * OW + x];
                float* p = ip + (2 * y) * W + 2 * x;
                p[0] += g;
                p[1] += g;
                p[W] += g;
                p[W + 1] += g;
              }
            }
          }
        }
        break;
      }
    }
    gout = std::move(gin);
  }
  return grads;
}

Params backward(const NetworkSpec& spec, const Params& params, const Tensor& batch,
                const Tensor& logit_grad) {
  return backward_from(spec, params, forward_cached(spec, params, batch), logit_grad, Tensor{});
}

Params backward(const NetworkSpec& spec, const Params& params, const Tensor& batch,
                const Tensor& logit_grad, const Tensor& feature_grad) {
  return backward_from(spec, params, forward_cached(spec, params, batch), logit_grad,
                       feature_grad);
}

}  // namespace rco

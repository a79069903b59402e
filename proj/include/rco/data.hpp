#pragma once

#include "rco/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rco {

struct Dataset {
  Tensor images;  // (N, C, H, W), values in [0,1] at load time
  std::vector<int> labels;
  int class_count = 0;

  int n() const { return images.empty() ? 0 : images.dim(0); }
  std::vector<int> sample_shape() const;  // (C, H, W)
  int64_t sample_size() const;
};

/// IDX pair loader (images magic 0x00000803, labels 0x00000801, big-endian
/// headers). Pixels scaled to [0,1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// CIFAR-10 binary batches: 3073-byte records, label byte then 3x1024
/// channel-planar pixels.
Dataset load_cifar10_bin(const std::vector<std::string>& paths);

struct ChannelStats {
  std::vector<float> mean;
  std::vector<float> stddev;
};

/// Per-channel mean/std over every pixel of the dataset.
ChannelStats channel_stats(const Dataset& d);
void normalize_inplace(Dataset& d, const ChannelStats& stats);

struct ValidationSplit {
  Dataset train;
  Dataset val;
  uint64_t seed = 0;
};

/// Deterministic disjoint, exhaustive partition; val gets exactly n examples.
ValidationSplit split_validation(const Dataset& d, int n, uint64_t seed);

struct Batch {
  Tensor images;
  std::vector<int> labels;
  std::vector<int> indices;  // source rows in the dataset the batch was gathered from
};

Batch gather(const Dataset& d, std::span<const int> indices);

std::vector<int> shuffled_indices(int n, uint64_t seed);

/// Seeded permutation of the dataset, chunked; the last chunk may be short.
class BatchIter {
 public:
  BatchIter(const Dataset& d, int batch_size, uint64_t epoch_seed);
  bool next(Batch& out);
  int num_batches() const;

 private:
  const Dataset* data_;
  std::vector<int> order_;
  int batch_size_;
  size_t pos_ = 0;
};

// --- synthetic dataset -----------------------------------------------------
//
// Class-prototype images (sums of random Gaussian bumps) with per-example
// amplitude jitter, translation, and pixel noise, quantized to bytes so the
// on-disk IDX pipeline is exercised end to end.

struct SynthConfig {
  int classes = 10;
  int image_size = 28;
  int count = 1000;
  float noise = 0.25f;
  int max_shift = 3;
  float amplitude_jitter = 0.25f;
  uint64_t seed = 0;
};

struct RawImageSet {
  int image_size = 0;
  int classes = 0;
  std::vector<uint8_t> pixels;  // count * size * size
  std::vector<uint8_t> labels;
  int count() const { return static_cast<int>(labels.size()); }
};

RawImageSet synth_digits(const SynthConfig& cfg);
Dataset to_dataset(const RawImageSet& set);

void write_idx(const RawImageSet& set, const std::string& images_path,
               const std::string& labels_path);

}  // namespace rco

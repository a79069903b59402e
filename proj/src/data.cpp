#include "rco/data.hpp"

#include "rco/errors.hpp"
#include "rco/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

namespace rco {

std::vector<int> Dataset::sample_shape() const {
  if (images.ndim() < 2) return {};
  return std::vector<int>(images.shape.begin() + 1, images.shape.end());
}

int64_t Dataset::sample_size() const { return shape_size(sample_shape()); }

namespace {

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_failure, "cannot open " + path);
  in.seekg(0, std::ios::end);
  std::streamoff len = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<uint8_t> bytes(static_cast<size_t>(len));
  if (len > 0) in.read(reinterpret_cast<char*>(bytes.data()), len);
  if (!in) fail(errc::io_failure, "read failed for " + path);
  return bytes;
}

uint32_t read_u32be(const std::vector<uint8_t>& b, size_t off) {
  return (static_cast<uint32_t>(b[off]) << 24) | (static_cast<uint32_t>(b[off + 1]) << 16) |
         (static_cast<uint32_t>(b[off + 2]) << 8) | static_cast<uint32_t>(b[off + 3]);
}

void append_u32be(std::vector<uint8_t>& b, uint32_t v) {
  b.push_back(static_cast<uint8_t>(v >> 24));
  b.push_back(static_cast<uint8_t>(v >> 16));
  b.push_back(static_cast<uint8_t>(v >> 8));
  b.push_back(static_cast<uint8_t>(v));
}

constexpr uint32_t kIdxImagesMagic = 0x00000803;
constexpr uint32_t kIdxLabelsMagic = 0x00000801;

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::vector<uint8_t> ib = read_file(images_path);
  if (ib.size() < 16) fail(errc::truncated, images_path + ": header needs 16 bytes");
  if (read_u32be(ib, 0) != kIdxImagesMagic) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%08X", read_u32be(ib, 0));
    fail(errc::bad_magic, images_path + ": magic " + buf + ", expected 0x00000803");
  }
  const uint32_t n = read_u32be(ib, 4);
  const uint32_t h = read_u32be(ib, 8);
  const uint32_t w = read_u32be(ib, 12);
  const size_t need = 16 + static_cast<size_t>(n) * h * w;
  if (ib.size() < need) {
    fail(errc::truncated, images_path + ": " + std::to_string(ib.size()) + " bytes, need " +
                              std::to_string(need));
  }
  if (ib.size() > need) fail(errc::bad_format, images_path + ": trailing bytes after pixel data");

  std::vector<uint8_t> lb = read_file(labels_path);
  if (lb.size() < 8) fail(errc::truncated, labels_path + ": header needs 8 bytes");
  if (read_u32be(lb, 0) != kIdxLabelsMagic) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%08X", read_u32be(lb, 0));
    fail(errc::bad_magic, labels_path + ": magic " + buf + ", expected 0x00000801");
  }
  const uint32_t ln = read_u32be(lb, 4);
  if (ln != n) {
    fail(errc::count_mismatch, std::to_string(n) + " images but " + std::to_string(ln) +
                                   " labels");
  }
  if (lb.size() < 8 + ln) fail(errc::truncated, labels_path + ": label bytes missing");
  if (lb.size() > 8 + ln) fail(errc::bad_format, labels_path + ": trailing bytes after labels");

  Dataset d;
  d.images = Tensor::zeros({static_cast<int>(n), 1, static_cast<int>(h), static_cast<int>(w)});
  for (size_t i = 0; i < static_cast<size_t>(n) * h * w; ++i) {
    d.images.data[i] = static_cast<float>(ib[16 + i]) * (1.0f / 255.0f);
  }
  d.labels.resize(n);
  int max_label = -1;
  for (uint32_t i = 0; i < n; ++i) {
    d.labels[i] = lb[8 + i];
    max_label = std::max(max_label, d.labels[i]);
  }
  d.class_count = max_label + 1;
  return d;
}

Dataset load_cifar10_bin(const std::vector<std::string>& paths) {
  constexpr size_t kRecord = 3073;  // label byte + 3 * 1024 channel-planar pixels
  std::vector<uint8_t> all;
  for (const std::string& path : paths) {
    std::vector<uint8_t> b = read_file(path);
    if (b.size() % kRecord != 0) {
      fail(errc::bad_format, path + ": " + std::to_string(b.size()) +
                                 " bytes is not a multiple of 3073");
    }
    all.insert(all.end(), b.begin(), b.end());
  }
  const size_t n = all.size() / kRecord;
  Dataset d;
  d.class_count = 10;
  d.images = Tensor::zeros({static_cast<int>(n), 3, 32, 32});
  d.labels.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const uint8_t* rec = all.data() + i * kRecord;
    if (rec[0] > 9) {
      fail(errc::bad_label, "record " + std::to_string(i) + " has label " +
                                std::to_string(rec[0]));
    }
    d.labels[i] = rec[0];
    float* out = d.images.data.data() + i * 3072;
    for (size_t k = 0; k < 3072; ++k) out[k] = static_cast<float>(rec[1 + k]) * (1.0f / 255.0f);
  }
  return d;
}

ChannelStats channel_stats(const Dataset& d) {
  if (d.n() == 0) fail(errc::invalid_argument, "channel_stats over an empty dataset");
  const int C = d.images.dim(1);
  const int64_t plane = d.sample_size() / C;
  ChannelStats s;
  s.mean.assign(static_cast<size_t>(C), 0.0f);
  s.stddev.assign(static_cast<size_t>(C), 0.0f);
  for (int c = 0; c < C; ++c) {
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < d.n(); ++i) {
      const float* p = d.images.data.data() + (static_cast<int64_t>(i) * C + c) * plane;
      for (int64_t k = 0; k < plane; ++k) {
        sum += p[k];
        sq += static_cast<double>(p[k]) * p[k];
      }
    }
    const double count = static_cast<double>(d.n()) * static_cast<double>(plane);
    double mean = sum / count;
    double var = std::max(0.0, sq / count - mean * mean);
    s.mean[static_cast<size_t>(c)] = static_cast<float>(mean);
    // Degenerate constant channels get unit scale instead of a zero divide.
    s.stddev[static_cast<size_t>(c)] = static_cast<float>(std::max(std::sqrt(var), 1e-8));
  }
  return s;
}

void normalize_inplace(Dataset& d, const ChannelStats& stats) {
  const int C = d.images.dim(1);
  if (static_cast<size_t>(C) != stats.mean.size() ||
      static_cast<size_t>(C) != stats.stddev.size()) {
    fail(errc::shape_mismatch, "stats cover " + std::to_string(stats.mean.size()) +
                                   " channels, dataset has " + std::to_string(C));
  }
  const int64_t plane = d.sample_size() / C;
  for (int i = 0; i < d.n(); ++i) {
    for (int c = 0; c < C; ++c) {
      float* p = d.images.data.data() + (static_cast<int64_t>(i) * C + c) * plane;
      const float m = stats.mean[static_cast<size_t>(c)];
      const float inv = 1.0f / stats.stddev[static_cast<size_t>(c)];
      for (int64_t k = 0; k < plane; ++k) p[k] = (p[k] - m) * inv;
    }
  }
}

Batch gather(const Dataset& d, std::span<const int> indices) {
  Batch b;
  std::vector<int> shape = d.images.shape;
  shape[0] = static_cast<int>(indices.size());
  b.images = Tensor::zeros(shape);
  b.labels.resize(indices.size());
  b.indices.assign(indices.begin(), indices.end());
  const int64_t sz = d.sample_size();
  for (size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || idx >= d.n()) {
      fail(errc::invalid_argument, "gather index " + std::to_string(idx) + " outside [0, " +
                                       std::to_string(d.n()) + ")");
    }
    std::copy_n(d.images.data.data() + idx * sz, sz, b.images.data.data() + i * sz);
    b.labels[i] = d.labels[static_cast<size_t>(idx)];
  }
  return b;
}

ValidationSplit split_validation(const Dataset& d, int n, uint64_t seed) {
  if (n <= 0 || n >= d.n()) {
    fail(errc::invalid_argument, "validation size " + std::to_string(n) +
                                     " outside (0, " + std::to_string(d.n()) + ")");
  }
  Rng rng(derive_seed(seed, seed_stream::split));
  std::vector<int> perm = rng.permutation(d.n());
  std::span<const int> val_idx(perm.data(), static_cast<size_t>(n));
  std::span<const int> train_idx(perm.data() + n, static_cast<size_t>(d.n() - n));

  ValidationSplit split;
  split.seed = seed;
  Batch vb = gather(d, val_idx);
  Batch tb = gather(d, train_idx);
  split.val.images = std::move(vb.images);
  split.val.labels = std::move(vb.labels);
  split.val.class_count = d.class_count;
  split.train.images = std::move(tb.images);
  split.train.labels = std::move(tb.labels);
  split.train.class_count = d.class_count;
  return split;
}

std::vector<int> shuffled_indices(int n, uint64_t seed) {
  Rng rng(seed);
  return rng.permutation(n);
}

BatchIter::BatchIter(const Dataset& d, int batch_size, uint64_t epoch_seed)
    : data_(&d), batch_size_(batch_size) {
  if (batch_size < 1) fail(errc::invalid_argument, "batch_size must be >= 1");
  order_ = shuffled_indices(d.n(), epoch_seed);
}

bool BatchIter::next(Batch& out) {
  if (pos_ >= order_.size()) return false;
  const size_t take = std::min(static_cast<size_t>(batch_size_), order_.size() - pos_);
  out = gather(*data_, std::span<const int>(order_.data() + pos_, take));
  pos_ += take;
  return true;
}

int BatchIter::num_batches() const {
  if (order_.empty()) return 0;
  return static_cast<int>((order_.size() + static_cast<size_t>(batch_size_) - 1) /
                          static_cast<size_t>(batch_size_));
}

RawImageSet synth_digits(const SynthConfig& cfg) {
  if (cfg.classes < 2) fail(errc::invalid_argument, "synth classes must be >= 2");
  if (cfg.image_size < 8) fail(errc::invalid_argument, "synth image_size must be >= 8");
  if (cfg.count < 1) fail(errc::invalid_argument, "synth count must be >= 1");
  if (cfg.max_shift < 0 || cfg.max_shift > cfg.image_size / 4) {
    fail(errc::invalid_argument, "synth max_shift outside [0, image_size/4]");
  }
  const int S = cfg.image_size;

  // Class prototypes: three Gaussian bumps each, peak-normalized to 1.
  Rng proto_rng(derive_seed(cfg.seed, seed_stream::synth, 0));
  std::vector<std::vector<float>> protos(static_cast<size_t>(cfg.classes));
  for (int c = 0; c < cfg.classes; ++c) {
    std::vector<float>& img = protos[static_cast<size_t>(c)];
    img.assign(static_cast<size_t>(S) * S, 0.0f);
    for (int b = 0; b < 3; ++b) {
      float cy = proto_rng.uniform(6.0f, static_cast<float>(S - 6));
      float cx = proto_rng.uniform(6.0f, static_cast<float>(S - 6));
      float sigma = proto_rng.uniform(2.5f, 4.5f);
      float amp = proto_rng.uniform(0.6f, 1.0f);
      const float inv = 1.0f / (2.0f * sigma * sigma);
      for (int y = 0; y < S; ++y) {
        for (int x = 0; x < S; ++x) {
          float dy = static_cast<float>(y) - cy;
          float dx = static_cast<float>(x) - cx;
          img[static_cast<size_t>(y) * S + x] += amp * std::exp(-(dy * dy + dx * dx) * inv);
        }
      }
    }
    float peak = *std::max_element(img.begin(), img.end());
    for (float& v : img) v /= peak;
  }

  RawImageSet set;
  set.image_size = S;
  set.classes = cfg.classes;
  set.pixels.resize(static_cast<size_t>(cfg.count) * S * S);
  set.labels.resize(static_cast<size_t>(cfg.count));

  Rng rng(derive_seed(cfg.seed, seed_stream::synth, 1));
  for (int i = 0; i < cfg.count; ++i) {
    const int c = i % cfg.classes;
    set.labels[static_cast<size_t>(i)] = static_cast<uint8_t>(c);
    const std::vector<float>& proto = protos[static_cast<size_t>(c)];
    const int dy = cfg.max_shift == 0 ? 0 : rng.below(2 * cfg.max_shift + 1) - cfg.max_shift;
    const int dx = cfg.max_shift == 0 ? 0 : rng.below(2 * cfg.max_shift + 1) - cfg.max_shift;
    const float amp = 1.0f + cfg.amplitude_jitter * (2.0f * rng.uniform() - 1.0f);
    uint8_t* out = set.pixels.data() + static_cast<size_t>(i) * S * S;
    for (int y = 0; y < S; ++y) {
      for (int x = 0; x < S; ++x) {
        const int sy = y - dy;
        const int sx = x - dx;
        float v = 0.0f;
        if (sy >= 0 && sy < S && sx >= 0 && sx < S) {
          v = proto[static_cast<size_t>(sy) * S + sx] * amp;
        }
        v += cfg.noise * rng.normal();
        v = std::clamp(v, 0.0f, 1.0f);
        out[y * S + x] = static_cast<uint8_t>(std::lround(v * 255.0f));
      }
    }
  }
  return set;
}

Dataset to_dataset(const RawImageSet& set) {
  Dataset d;
  d.class_count = set.classes;
  const int S = set.image_size;
  d.images = Tensor::zeros({set.count(), 1, S, S});
  for (size_t i = 0; i < set.pixels.size(); ++i) {
    d.images.data[i] = static_cast<float>(set.pixels[i]) * (1.0f / 255.0f);
  }
  d.labels.assign(set.labels.begin(), set.labels.end());
  return d;
}

void write_idx(const RawImageSet& set, const std::string& images_path,
               const std::string& labels_path) {
  std::vector<uint8_t> ib;
  ib.reserve(16 + set.pixels.size());
  append_u32be(ib, kIdxImagesMagic);
  append_u32be(ib, static_cast<uint32_t>(set.count()));
  append_u32be(ib, static_cast<uint32_t>(set.image_size));
  append_u32be(ib, static_cast<uint32_t>(set.image_size));
  ib.insert(ib.end(), set.pixels.begin(), set.pixels.end());

  std::vector<uint8_t> lb;
  lb.reserve(8 + set.labels.size());
  append_u32be(lb, kIdxLabelsMagic);
  append_u32be(lb, static_cast<uint32_t>(set.count()));
  lb.insert(lb.end(), set.labels.begin(), set.labels.end());

  auto dump = [](const std::vector<uint8_t>& bytes, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(errc::io_failure, "cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(errc::io_failure, "write failed for " + path);
  };
  dump(ib, images_path);
  dump(lb, labels_path);
}

}  // namespace rco

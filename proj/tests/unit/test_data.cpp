#include "rco/data.hpp"

#include "rco/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "../support/test_util.hpp"

using namespace rco;

namespace {

void push_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

// Two 2x3 images with bytes 10..15 and 100..105; labels 1 and 0.
std::vector<uint8_t> idx_images() {
  std::vector<uint8_t> b;
  push_u32_be(b, 0x00000803u);
  push_u32_be(b, 2);
  push_u32_be(b, 2);
  push_u32_be(b, 3);
  for (int i = 0; i < 6; ++i) b.push_back(static_cast<uint8_t>(10 + i));
  for (int i = 0; i < 6; ++i) b.push_back(static_cast<uint8_t>(100 + i));
  return b;
}

std::vector<uint8_t> idx_labels() {
  std::vector<uint8_t> b;
  push_u32_be(b, 0x00000801u);
  push_u32_be(b, 2);
  b.push_back(1);
  b.push_back(0);
  return b;
}

errc load_idx_errc(const std::string& images, const std::string& labels) {
  try {
    load_idx(images, labels);
  } catch (const error& e) {
    return e.code();
  }
  return errc::invalid_argument;  // sentinel: no error raised
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("idx fixture loads with scaled pixels") {
  testu::TempDir tmp("idx");
  write_bytes(tmp.str("imgs"), idx_images());
  write_bytes(tmp.str("labs"), idx_labels());
  const Dataset d = load_idx(tmp.str("imgs"), tmp.str("labs"));
  CHECK(d.n() == 2);
  CHECK(d.sample_shape() == std::vector<int>{1, 2, 3});
  CHECK(d.labels == std::vector<int>{1, 0});
  CHECK(d.class_count == 2);
  CHECK(d.images.data[0] == doctest::Approx(10.0f / 255.0f));
  CHECK(d.images.data[6] == doctest::Approx(100.0f / 255.0f));
  CHECK(d.images.data[11] == doctest::Approx(105.0f / 255.0f));
}

TEST_CASE("idx corruption is diagnosed precisely") {
  testu::TempDir tmp("idxerr");
  write_bytes(tmp.str("imgs"), idx_images());
  write_bytes(tmp.str("labs"), idx_labels());

  auto imgs = idx_images();
  imgs[3] = 0x05;  // wrong magic
  write_bytes(tmp.str("bad_magic"), imgs);
  CHECK(load_idx_errc(tmp.str("bad_magic"), tmp.str("labs")) == errc::bad_magic);

  imgs = idx_images();
  imgs.pop_back();  // short read
  write_bytes(tmp.str("short"), imgs);
  CHECK(load_idx_errc(tmp.str("short"), tmp.str("labs")) == errc::truncated);

  imgs = idx_images();
  imgs.push_back(0);  // trailing byte
  write_bytes(tmp.str("trailing"), imgs);
  CHECK(load_idx_errc(tmp.str("trailing"), tmp.str("labs")) == errc::bad_format);

  auto labs = idx_labels();
  labs[7] = 3;  // claims 3 labels for 2 images
  labs.push_back(1);
  write_bytes(tmp.str("labs3"), labs);
  CHECK(load_idx_errc(tmp.str("imgs"), tmp.str("labs3")) == errc::count_mismatch);

  CHECK(load_idx_errc(tmp.str("missing"), tmp.str("labs")) == errc::io_failure);
}

TEST_CASE("cifar batches load channel-planar records") {
  testu::TempDir tmp("cifar");
  std::vector<uint8_t> rec(2 * 3073, 0);
  rec[0] = 7;  // first label
  rec[1] = 200;  // R plane of image 0, pixel 0
  rec[1 + 1024] = 100;  // G plane
  rec[1 + 2048] = 50;   // B plane
  rec[3073] = 2;  // second label
  rec[3073 + 3072] = 255;  // last B pixel of image 1
  write_bytes(tmp.str("batch.bin"), rec);
  const Dataset d = load_cifar10_bin({tmp.str("batch.bin")});
  CHECK(d.n() == 2);
  CHECK(d.sample_shape() == std::vector<int>{3, 32, 32});
  CHECK(d.class_count == 10);
  CHECK(d.labels == std::vector<int>{7, 2});
  CHECK(d.images.data[0] == doctest::Approx(200.0f / 255.0f));
  CHECK(d.images.data[1024] == doctest::Approx(100.0f / 255.0f));
  CHECK(d.images.data[2048] == doctest::Approx(50.0f / 255.0f));
  CHECK(d.images.data[2 * 3072 - 1] == doctest::Approx(1.0f));

  rec.push_back(0);
  write_bytes(tmp.str("ragged.bin"), rec);
  CHECK_THROWS_AS(load_cifar10_bin({tmp.str("ragged.bin")}), error);

  rec.pop_back();
  rec[0] = 10;  // label out of range
  write_bytes(tmp.str("badlabel.bin"), rec);
  try {
    load_cifar10_bin({tmp.str("badlabel.bin")});
    FAIL("unreachable");
  } catch (const error& e) {
    CHECK(e.code() == errc::bad_label);
  }
}

TEST_CASE("channel stats and normalization") {
  Dataset d;
  d.images = Tensor::zeros({2, 1, 2, 2});
  d.images.data = {1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.0f, 7.0f, 8.0f};
  d.labels = {0, 1};
  d.class_count = 2;
  const ChannelStats stats = channel_stats(d);
  REQUIRE(stats.mean.size() == 1);
  CHECK(stats.mean[0] == doctest::Approx(4.5f));
  // population std of 1..8
  CHECK(stats.stddev[0] == doctest::Approx(std::sqrt(5.25f)));
  normalize_inplace(d, stats);
  float sum = 0.0f, sq = 0.0f;
  for (float v : d.images.data) {
    sum += v;
    sq += v * v;
  }
  CHECK(sum == doctest::Approx(0.0f).epsilon(1e-5));
  CHECK(sq / 8.0f == doctest::Approx(1.0f).epsilon(1e-4));
}

TEST_CASE("validation split is disjoint, exhaustive and seeded") {
  const Dataset d = testu::tiny_dataset(50, 8, 3);
  const ValidationSplit split = split_validation(d, 12, 99);
  CHECK(split.val.n() == 12);
  CHECK(split.train.n() == 38);
  CHECK(split.val.class_count == d.class_count);

  // Exhaustive partition: per-image pixel sums must match as multisets.
  auto fingerprint = [](const Dataset& ds) {
    std::multiset<float> sums;
    const int64_t sz = ds.sample_size();
    for (int i = 0; i < ds.n(); ++i) {
      float s = 0.0f;
      for (int64_t k = 0; k < sz; ++k) s += ds.images.data[static_cast<size_t>(i * sz + k)];
      sums.insert(s);
    }
    return sums;
  };
  std::multiset<float> whole = fingerprint(d);
  std::multiset<float> parts = fingerprint(split.train);
  for (float s : fingerprint(split.val)) parts.insert(s);
  CHECK(whole == parts);

  const ValidationSplit again = split_validation(d, 12, 99);
  CHECK(bitwise_equal(again.val.images, split.val.images));
  const ValidationSplit other = split_validation(d, 12, 100);
  CHECK_FALSE(bitwise_equal(other.val.images, split.val.images));

  CHECK_THROWS_AS(split_validation(d, 50, 1), error);
  CHECK_THROWS_AS(split_validation(d, 0, 1), error);
}

TEST_CASE("gather keeps rows and records indices") {
  const Dataset d = testu::tiny_dataset(10, 8, 4);
  const std::vector<int> idx{7, 0, 3};
  const Batch b = gather(d, idx);
  CHECK(b.indices == idx);
  CHECK(b.images.dim(0) == 3);
  CHECK(b.labels[0] == d.labels[7]);
  CHECK(b.labels[2] == d.labels[3]);
  const int64_t sz = d.sample_size();
  for (int64_t k = 0; k < sz; ++k) {
    CHECK(b.images.data[static_cast<size_t>(k)] == d.images.data[static_cast<size_t>(7 * sz + k)]);
  }
}

TEST_CASE("batch iterator covers each epoch exactly once") {
  const Dataset d = testu::tiny_dataset(23, 8, 5);
  BatchIter iter(d, 5, 77);
  CHECK(iter.num_batches() == 5);
  Batch b;
  std::set<int> seen;
  std::vector<size_t> sizes;
  while (iter.next(b)) {
    sizes.push_back(b.labels.size());
    for (int i : b.indices) seen.insert(i);
  }
  CHECK(sizes == std::vector<size_t>{5, 5, 5, 5, 3});
  CHECK(seen.size() == 23);

  // Same seed, same order; different seed, different order.
  BatchIter x(d, 5, 77), y(d, 5, 77), z(d, 5, 78);
  Batch bx, by, bz;
  x.next(bx);
  y.next(by);
  z.next(bz);
  CHECK(bx.indices == by.indices);
  CHECK(bx.indices != bz.indices);
}

TEST_CASE("synthetic digits are deterministic and idx round-trips them") {
  SynthConfig cfg;
  cfg.classes = 4;
  cfg.image_size = 10;
  cfg.count = 30;
  cfg.max_shift = 2;
  cfg.seed = 5;
  const RawImageSet a = synth_digits(cfg);
  const RawImageSet b = synth_digits(cfg);
  CHECK(a.pixels == b.pixels);
  CHECK(a.labels == b.labels);
  CHECK(a.count() == 30);
  for (int i = 0; i < 30; ++i) CHECK(a.labels[static_cast<size_t>(i)] == i % 4);

  cfg.seed = 6;
  CHECK(synth_digits(cfg).pixels != a.pixels);

  const Dataset direct = to_dataset(a);
  CHECK(direct.n() == 30);
  CHECK(direct.class_count == 4);
  testu::TempDir tmp("synthidx");
  write_idx(a, tmp.str("imgs"), tmp.str("labs"));
  const Dataset reloaded = load_idx(tmp.str("imgs"), tmp.str("labs"));
  CHECK(bitwise_equal(direct.images, reloaded.images));
  CHECK(direct.labels == reloaded.labels);
}

TEST_CASE("distinct classes have distinct prototypes") {
  SynthConfig cfg;
  cfg.classes = 3;
  cfg.image_size = 12;
  cfg.count = 3;
  cfg.noise = 0.0f;
  cfg.max_shift = 0;
  cfg.amplitude_jitter = 0.0f;
  const RawImageSet set = synth_digits(cfg);
  const size_t pix = 12 * 12;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      bool differ = false;
      for (size_t k = 0; k < pix; ++k) {
        if (set.pixels[static_cast<size_t>(i) * pix + k] !=
            set.pixels[static_cast<size_t>(j) * pix + k]) {
          differ = true;
          break;
        }
      }
      CHECK(differ);
    }
  }
}

}  // TEST_SUITE data

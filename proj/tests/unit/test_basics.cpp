#include "rco/csv.hpp"
#include "rco/errors.hpp"
#include "rco/rng.hpp"
#include "rco/types.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "../support/test_util.hpp"

using namespace rco;

TEST_SUITE("types") {

TEST_CASE("tensor shape bookkeeping") {
  Tensor t = Tensor::zeros({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.ndim() == 3);
  CHECK(t.dim(1) == 3);
  CHECK(shape_str(t.shape) == "(2, 3, 4)");
  CHECK_FALSE(t.empty());
  Tensor e;
  CHECK(e.empty());
  CHECK(shape_size(std::vector<int>{5, 6}) == 30);
}

TEST_CASE("bitwise equality is exact, not tolerant") {
  Tensor a = Tensor::zeros({2, 2});
  Tensor b = Tensor::zeros({2, 2});
  CHECK(bitwise_equal(a, b));
  b.data[3] = 1e-30f;
  CHECK_FALSE(bitwise_equal(a, b));
  Tensor c = Tensor::zeros({4});
  CHECK_FALSE(bitwise_equal(a, c));  // same size, different shape
}

TEST_CASE("matrix views share storage") {
  Tensor t = Tensor::zeros({2, 3});
  t.mat2d()(1, 2) = 7.0f;
  CHECK(t.data[5] == 7.0f);
  const Tensor& ct = t;
  CHECK(ct.mat2d()(1, 2) == 7.0f);
}

TEST_CASE("all_finite flags NaN and infinity") {
  Tensor t = Tensor::zeros({3});
  CHECK(all_finite(t));
  t.data[1] = std::nanf("");
  CHECK_FALSE(all_finite(t));
  t.data[1] = INFINITY;
  CHECK_FALSE(all_finite(t));
}

TEST_CASE("error carries code and category") {
  try {
    fail(errc::bad_magic, "boom");
    FAIL("unreachable");
  } catch (const error& e) {
    CHECK(e.code() == errc::bad_magic);
    CHECK(e.category() == error_category::data);
    CHECK(std::string(e.what()).find("boom") != std::string::npos);
  }
  CHECK(error(errc::config_invalid, "x").category() == error_category::config);
  CHECK(error(errc::shape_mismatch, "x").category() == error_category::compute);
}

}  // TEST_SUITE types

TEST_SUITE("csv") {

TEST_CASE("format_float round-trips binary floats") {
  for (float v : {0.1f, 1.0f / 3.0f, 1e-8f, 123456.78f, -0.0f, 5.0f}) {
    CHECK(std::stof(format_float(v)) == v);
  }
  CHECK(format_float(1.0f) == "1");
}

TEST_CASE("writer emits header plus rows with newline endings") {
  testu::TempDir tmp("csv");
  CsvWriter csv({"a", "b"});
  csv.add_row({"1", "x"});
  csv.add_row({"2", "y"});
  CHECK(csv.to_string() == "a,b\n1,x\n2,y\n");
  const std::string path = tmp.str("t.csv");
  csv.write(path);
  std::ifstream in(path, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text == csv.to_string());
}

TEST_CASE("row width mismatches are rejected") {
  CsvWriter csv({"a", "b"});
  CHECK_THROWS_AS(csv.add_row({"1"}), error);
}

}  // TEST_SUITE csv

TEST_SUITE("rng") {

TEST_CASE("derive_seed separates streams and indices") {
  std::set<uint64_t> seen;
  for (uint64_t stream = 0; stream < 8; ++stream) {
    for (uint64_t index = 0; index < 8; ++index) {
      seen.insert(derive_seed(42, stream, index));
    }
  }
  CHECK(seen.size() == 64);
  CHECK(derive_seed(42, 1, 0) == derive_seed(42, 1, 0));
  CHECK(derive_seed(42, 1, 0) != derive_seed(43, 1, 0));
}

TEST_CASE("uniform stays in [0,1) and is deterministic") {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) {
    const float u = a.uniform();
    CHECK(u >= 0.0f);
    CHECK(u < 1.0f);
    CHECK(u == b.uniform());
  }
}

TEST_CASE("uniform(lo,hi) respects bounds") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const float u = rng.uniform(-2.0f, 5.0f);
    CHECK(u >= -2.0f);
    CHECK(u < 5.0f);
  }
}

TEST_CASE("below covers the range") {
  Rng rng(11);
  std::set<uint64_t> seen;
  for (int i = 0; i < 200; ++i) seen.insert(rng.below(5));
  CHECK(seen == std::set<uint64_t>{0, 1, 2, 3, 4});
}

TEST_CASE("normal has roughly standard moments") {
  Rng rng(17);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.03);
  CHECK(std::fabs(var - 1.0) < 0.05);
}

TEST_CASE("permutation is a bijection") {
  Rng rng(23);
  std::vector<int> p = rng.permutation(257);
  std::set<int> seen(p.begin(), p.end());
  CHECK(p.size() == 257);
  CHECK(seen.size() == 257);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 256);
  std::vector<int> identity(257);
  for (int i = 0; i < 257; ++i) identity[static_cast<size_t>(i)] = i;
  // not the identity (overwhelmingly likely for any healthy shuffle)
  CHECK(p != identity);
}

}  // TEST_SUITE rng

#include "rco/trajectory.hpp"

#include "rco/errors.hpp"
#include "rco/json_io.hpp"
#include "rco/optim.hpp"
#include "rco/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "../support/test_util.hpp"

using namespace rco;

namespace {

bool params_bitwise(const Params& a, const Params& b) {
  if (a.weights.size() != b.weights.size()) return false;
  for (size_t i = 0; i < a.weights.size(); ++i) {
    if (!bitwise_equal(a.weights[i], b.weights[i])) return false;
    if (!bitwise_equal(a.biases[i], b.biases[i])) return false;
  }
  return true;
}

std::vector<uint8_t> file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const error& e) {
    return e.code();
  }
  FAIL("expected an rco::error");
  return errc::invalid_argument;
}

TeacherTrainConfig small_cfg(int epochs, uint64_t seed) {
  TeacherTrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 16;
  cfg.seed = seed;
  cfg.sgd.schedule.initial_lr = 0.1f;
  cfg.sgd.schedule.total_epochs = epochs;
  return cfg;
}

std::vector<int> epochs_of(const Trajectory& t) {
  std::vector<int> out;
  for (const Checkpoint& c : t.checkpoints) out.push_back(c.epoch);
  return out;
}

Checkpoint sample_checkpoint(uint64_t rng_seed) {
  const NetworkSpec spec = testu::mlp({1, 8, 8}, {5}, 3);
  Rng rng(rng_seed);
  Checkpoint c;
  c.epoch = 7;
  c.params = testu::random_params(spec, rng);
  c.lr_at_capture = 0.025f;
  c.train_loss = 1.75f;
  c.spec_hash = spec_digest(spec);
  c.seed = 42;
  return c;
}

}  // namespace

TEST_SUITE("trajectory") {

TEST_CASE("capture keeps every k-th epoch plus the final one") {
  const NetworkSpec spec = testu::mlp({1, 8, 8}, {6}, 4);
  const Dataset train = testu::tiny_dataset(48, 8, 11, 0.25f, 4);

  const Trajectory every2 = train_teacher(spec, small_cfg(4, 5), train, 2);
  CHECK(epochs_of(every2) == std::vector<int>{2, 4});
  const Trajectory every3 = train_teacher(spec, small_cfg(4, 5), train, 3);
  CHECK(epochs_of(every3) == std::vector<int>{3, 4});
  const Trajectory every1 = train_teacher(spec, small_cfg(4, 5), train, 1);
  CHECK(epochs_of(every1) == std::vector<int>{1, 2, 3, 4});
  const Trajectory sparse = train_teacher(spec, small_cfg(4, 5), train, 9);
  CHECK(epochs_of(sparse) == std::vector<int>{4});

  for (const Checkpoint& c : every2.checkpoints) {
    CHECK(c.spec_hash == spec_digest(spec));
    CHECK(c.seed == 5);
    CHECK(c.lr_at_capture == lr_at(every2.config.sgd.schedule, c.epoch - 1));
    CHECK(std::isfinite(c.train_loss));
  }
  // The shared epochs saw identical updates regardless of the capture cadence.
  CHECK(params_bitwise(every2.final_checkpoint().params, every1.final_checkpoint().params));
}

TEST_CASE("training is deterministic per seed") {
  const NetworkSpec spec = testu::mlp({1, 8, 8}, {6}, 4);
  const Dataset train = testu::tiny_dataset(48, 8, 11, 0.25f, 4);
  const Trajectory a = train_teacher(spec, small_cfg(3, 5), train, 1);
  const Trajectory b = train_teacher(spec, small_cfg(3, 5), train, 1);
  const Trajectory c = train_teacher(spec, small_cfg(3, 6), train, 1);
  CHECK(params_bitwise(a.final_checkpoint().params, b.final_checkpoint().params));
  CHECK(a.final_checkpoint().train_loss == b.final_checkpoint().train_loss);
  CHECK_FALSE(params_bitwise(a.final_checkpoint().params, c.final_checkpoint().params));
}

TEST_CASE("training rejects inconsistent setups") {
  const NetworkSpec spec = testu::mlp({1, 8, 8}, {6}, 4);
  const Dataset train = testu::tiny_dataset(32, 8, 11, 0.25f, 4);
  TeacherTrainConfig bad = small_cfg(4, 5);
  bad.sgd.schedule.total_epochs = 3;
  CHECK(code_of([&] { train_teacher(spec, bad, train, 1); }) == errc::config_invalid);
  CHECK(code_of([&] { train_teacher(spec, small_cfg(4, 5), train, 0); }) ==
        errc::config_invalid);
  CHECK(code_of([&] { train_teacher(spec, small_cfg(4, 5), Dataset{}, 1); }) ==
        errc::invalid_argument);
}

TEST_CASE("iteration mode captures by optimizer step") {
  const NetworkSpec spec = testu::mlp({1, 8, 8}, {5}, 4);
  const Dataset train = testu::tiny_dataset(10, 8, 12, 0.25f, 4);
  TeacherTrainConfig cfg = small_cfg(2, 7);
  cfg.batch_size = 4;  // 3 steps per epoch, sizes 4,4,2
  cfg.capture_per_iteration = true;
  const Trajectory t = train_teacher(spec, cfg, train, 4);
  CHECK(t.iteration_mode);
  CHECK(epochs_of(t) == std::vector<int>{4, 6});  // step 4, then the final step
}

TEST_CASE("epoch lookup") {
  const NetworkSpec spec = testu::mlp({1, 8, 8}, {5}, 4);
  const Dataset train = testu::tiny_dataset(32, 8, 13, 0.25f, 4);
  const Trajectory t = train_teacher(spec, small_cfg(4, 5), train, 2);
  CHECK(t.has_epoch(2));
  CHECK(t.has_epoch(4));
  CHECK_FALSE(t.has_epoch(3));
  CHECK(t.at_epoch(2).epoch == 2);
  CHECK(code_of([&] { t.at_epoch(3); }) == errc::missing_input);
}

TEST_CASE("checkpoint files round trip byte for byte") {
  testu::TempDir dir("ckpt");
  const Checkpoint c = sample_checkpoint(31);
  const std::string first = dir.str("a.bin");
  const std::string second = dir.str("b.bin");
  save_checkpoint(c, first);

  const Checkpoint back = load_checkpoint(first);
  CHECK(back.epoch == c.epoch);
  CHECK(back.lr_at_capture == c.lr_at_capture);
  CHECK(back.train_loss == c.train_loss);
  CHECK(back.spec_hash == c.spec_hash);
  CHECK(back.seed == c.seed);
  CHECK(params_bitwise(back.params, c.params));

  save_checkpoint(back, second);
  CHECK(file_bytes(first) == file_bytes(second));

  CHECK(load_checkpoint(first, c.spec_hash).epoch == c.epoch);
  CHECK(code_of([&] { load_checkpoint(first, c.spec_hash ^ 7); }) == errc::digest_mismatch);
}

TEST_CASE("corrupted checkpoint files are rejected with precise codes") {
  testu::TempDir dir("ckpt_bad");
  const Checkpoint c = sample_checkpoint(32);
  const std::string good = dir.str("good.bin");
  save_checkpoint(c, good);
  const std::vector<uint8_t> clean = file_bytes(good);

  auto with_bytes = [&](std::vector<uint8_t> bytes) {
    const std::string path = dir.str("mutant.bin");
    write_bytes(path, bytes);
    return code_of([&] { load_checkpoint(path); });
  };

  std::vector<uint8_t> magic = clean;
  magic[0] ^= 0xFF;
  CHECK(with_bytes(magic) == errc::bad_format);

  std::vector<uint8_t> version = clean;
  version[8] += 1;
  CHECK(with_bytes(version) == errc::version_mismatch);

  std::vector<uint8_t> short_file = clean;
  short_file.pop_back();
  CHECK(with_bytes(short_file) == errc::truncated);

  std::vector<uint8_t> long_file = clean;
  long_file.push_back(0);
  CHECK(with_bytes(long_file) == errc::bad_format);

  CHECK(code_of([&] { load_checkpoint(dir.str("absent.bin")); }) == errc::io_failure);
}

TEST_CASE("trajectory directories reload to an identical object") {
  const NetworkSpec spec = testu::mlp({1, 8, 8}, {6}, 4);
  const Dataset train = testu::tiny_dataset(48, 8, 14, 0.25f, 4);
  const Trajectory t = train_teacher(spec, small_cfg(4, 9), train, 2);

  testu::TempDir dir("traj");
  save_trajectory(t, dir.str());
  CHECK(std::filesystem::exists(dir.path / "manifest.json"));
  CHECK(std::filesystem::exists(dir.path / "ckpt_2.bin"));
  CHECK(std::filesystem::exists(dir.path / "ckpt_4.bin"));

  const Trajectory back = load_trajectory(dir.str());
  CHECK(spec_digest(back.spec) == spec_digest(spec));
  CHECK(back.capture_every == 2);
  CHECK(back.iteration_mode == t.iteration_mode);
  CHECK(back.config.epochs == t.config.epochs);
  CHECK(back.config.batch_size == t.config.batch_size);
  CHECK(back.config.seed == t.config.seed);
  CHECK(back.config.sgd.momentum == t.config.sgd.momentum);
  CHECK(back.config.sgd.schedule.initial_lr == t.config.sgd.schedule.initial_lr);
  REQUIRE(back.checkpoints.size() == t.checkpoints.size());
  for (size_t i = 0; i < t.checkpoints.size(); ++i) {
    CHECK(back.checkpoints[i].epoch == t.checkpoints[i].epoch);
    CHECK(params_bitwise(back.checkpoints[i].params, t.checkpoints[i].params));
  }
}

TEST_CASE("tampered manifests are rejected") {
  const NetworkSpec spec = testu::mlp({1, 8, 8}, {5}, 4);
  const Dataset train = testu::tiny_dataset(32, 8, 15, 0.25f, 4);
  const Trajectory t = train_teacher(spec, small_cfg(2, 9), train, 1);

  testu::TempDir dir("traj_bad");
  const std::string mpath = dir.str("manifest.json");
  save_trajectory(t, dir.str());
  const nlohmann::json clean = read_json_file(mpath);

  nlohmann::json wrong_digest = clean;
  wrong_digest["spec_digest"] = clean["spec_digest"].get<uint64_t>() ^ 1;
  write_json_file(wrong_digest, mpath);
  CHECK(code_of([&] { load_trajectory(dir.str()); }) == errc::digest_mismatch);

  nlohmann::json wrong_epoch = clean;
  wrong_epoch["checkpoints"][0]["epoch"] = 17;
  write_json_file(wrong_epoch, mpath);
  CHECK(code_of([&] { load_trajectory(dir.str()); }) == errc::bad_format);

  nlohmann::json repeated = clean;
  repeated["checkpoints"] = {clean["checkpoints"][0], clean["checkpoints"][0]};
  write_json_file(repeated, mpath);
  CHECK(code_of([&] { load_trajectory(dir.str()); }) == errc::bad_format);

  nlohmann::json empty = clean;
  empty["checkpoints"] = nlohmann::json::array();
  write_json_file(empty, mpath);
  CHECK(code_of([&] { load_trajectory(dir.str()); }) == errc::missing_input);

  nlohmann::json missing_field = clean;
  missing_field.erase("capture_every");
  write_json_file(missing_field, mpath);
  CHECK(code_of([&] { load_trajectory(dir.str()); }) == errc::bad_format);
}

}  // TEST_SUITE trajectory

#include "rco/config.hpp"

#include "rco/errors.hpp"
#include "rco/json_io.hpp"

#include <doctest.h>

#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "../support/test_util.hpp"

using namespace rco;

namespace {

std::string message_of(const std::function<void()>& fn, errc expected) {
  try {
    fn();
  } catch (const error& e) {
    CHECK(e.code() == expected);
    return e.what();
  }
  FAIL("expected an rco::error");
  return "";
}

bool mentions(const std::string& msg, const std::string& needle) {
  return msg.find(needle) != std::string::npos;
}

// Synth setup small enough for quick loads. The short epoch counts need the
// default lr drops cleared, and 8px images cap max_shift at 2.
nlohmann::json small_synth_json() {
  return {
      {"data",
       {{"kind", "synth"},
        {"synth",
         {{"classes", 4}, {"image_size", 8}, {"count", 60}, {"max_shift", 2}, {"seed", 7}}},
        {"synth_test_count", 20},
        {"val_count", 12}}},
      {"teacher",
       {{"epochs", 4}, {"sgd", {{"lr", {{"drop_epochs", nlohmann::json::array()}}}}}}},
      {"student",
       {{"epochs", 3}, {"sgd", {{"lr", {{"drop_epochs", nlohmann::json::array()}}}}}}},
  };
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("an empty document yields the full default experiment") {
  const ExperimentConfig cfg = parse_experiment_config(nlohmann::json::object());

  CHECK(cfg.data.kind == DataKind::synth);
  CHECK(cfg.data.synth.classes == 10);
  CHECK(cfg.data.synth.image_size == 28);
  CHECK(cfg.data.val_count == 1000);
  CHECK(cfg.data.normalize);

  CHECK(cfg.teacher.epochs == 15);
  CHECK(cfg.teacher.batch_size == 64);
  CHECK(cfg.teacher.capture_every == 1);
  CHECK(cfg.teacher.sgd.momentum == doctest::Approx(0.9f));
  CHECK(cfg.teacher.sgd.weight_decay == doctest::Approx(5e-4f));
  CHECK(cfg.teacher.sgd.schedule.initial_lr == doctest::Approx(0.05f));
  CHECK(cfg.teacher.sgd.schedule.drop_epochs == std::vector<int>{8, 12});
  CHECK(cfg.teacher.sgd.schedule.total_epochs == 15);
  CHECK(cfg.teacher.net.layers.size() == 4);
  CHECK(cfg.teacher.net.layers[1].fan_out == 256);

  CHECK(cfg.student.epochs == 15);
  CHECK(cfg.student.sgd.schedule.initial_lr == doctest::Approx(0.01f));
  CHECK(cfg.student.net.layers[1].fan_out == 32);
  CHECK(cfg.student.distill.temperature == doctest::Approx(5.0f));
  CHECK(cfg.student.distill.balance == doctest::Approx(1.0f));
  CHECK(cfg.student.distill.kl_grad_scale);
  CHECK(cfg.student.loss == LossKind::kd);

  CHECK(cfg.strategy.mode == StrategyMode::kd);
  CHECK(cfg.seeds == std::vector<uint64_t>{1});
  REQUIRE(cfg.analysis.noise_deltas.size() == 11);
  for (int k = 0; k <= 10; ++k) {
    CHECK(cfg.analysis.noise_deltas[static_cast<size_t>(k)] ==
          static_cast<float>(k) / 10.0f);
  }
  CHECK(cfg.analysis.tau == 0.0f);
}

TEST_CASE("the effective config echo reparses to itself") {
  nlohmann::json doc = small_synth_json();
  doc["strategy"] = {{"mode", "eei"}, {"eei", {{"gap", 2}}}};
  doc["seeds"] = {3, 5, 9};
  const ExperimentConfig cfg = parse_experiment_config(doc);
  CHECK(cfg.strategy.eei_gap == 2);
  CHECK(cfg.seeds == std::vector<uint64_t>{3, 5, 9});

  const nlohmann::json echo = effective_config_json(cfg);
  const ExperimentConfig back = parse_experiment_config(echo);
  CHECK(effective_config_json(back) == echo);
  CHECK(back.teacher.epochs == 4);
  CHECK(back.data.synth.image_size == 8);
}

TEST_CASE("field errors carry the dotted path") {
  auto parse_err = [&](nlohmann::json doc) {
    return message_of([&] { parse_experiment_config(doc); }, errc::config_invalid);
  };

  CHECK(mentions(parse_err({{"teacher", {{"epochs", "abc"}}}}),
                 "teacher.epochs has the wrong type"));
  CHECK(mentions(
      parse_err({{"student", {{"sgd", {{"lr", {{"initial", nlohmann::json::array()}}}}}}}}),
      "student.sgd.lr.initial has the wrong type"));
  CHECK(mentions(parse_err({{"seeds", "everywhere"}}), "seeds has the wrong type"));
  CHECK(mentions(parse_err({{"frobnicate", 1}}), "unknown top-level field"));
  CHECK(mentions(parse_err({{"strategy", {{"mode", "bogus"}}}}), "strategy.mode"));
  CHECK(mentions(parse_err({{"data", {{"kind", "bogus"}}}}), "data.kind"));
  CHECK(mentions(parse_err({{"student", {{"loss", "bogus"}}}}), "student.loss"));
  CHECK(mentions(parse_err(nlohmann::json::array()), "config root"));
}

TEST_CASE("strategy blocks are mutually exclusive") {
  auto parse_err = [&](nlohmann::json strategy) {
    nlohmann::json doc = small_synth_json();
    doc["strategy"] = std::move(strategy);
    return message_of([&] { parse_experiment_config(doc); }, errc::config_invalid);
  };

  CHECK(mentions(parse_err({{"mode", "kd"}, {"eei", {{"gap", 2}}}}),
                 "strategy.eei given but strategy.mode is \"kd\""));
  CHECK(mentions(parse_err({{"mode", "eei"}}), "strategy.eei.gap is required"));
  CHECK(mentions(parse_err({{"mode", "eei"}, {"eei", {{"gap", 100}}}}),
                 "gap must lie in [1, teacher.epochs]"));
  CHECK(mentions(parse_err({{"mode", "gs"}, {"gs", {{"delta", 0.0}}}}),
                 "strategy.gs.delta must be > 0"));
  CHECK(mentions(parse_err({{"mode", "kd"}, {"bogus", nlohmann::json::object()}}),
                 "not a recognized block"));
  CHECK(mentions(parse_err({{"mode", "eei"}, {"gs", {{"delta", 1.0}}}}),
                 "strategy.gs given"));
  // Teacher trains 4 epochs; gap 1 yields 4 anchors but the student only has
  // 3 epochs to divide among them.
  CHECK(mentions(parse_err({{"mode", "eei_one_stage"}, {"eei_one_stage", {{"gap", 1}}}}),
                 "at least one epoch per anchor"));

  nlohmann::json ok = small_synth_json();
  ok["strategy"] = {{"mode", "eei_one_stage"}, {"eei_one_stage", {{"gap", 2}}}};
  CHECK(parse_experiment_config(ok).strategy.eei_gap == 2);
}

TEST_CASE("seeds and analysis validation") {
  auto parse_err = [&](nlohmann::json doc) {
    return message_of([&] { parse_experiment_config(doc); }, errc::config_invalid);
  };
  CHECK(mentions(parse_err({{"seeds", nlohmann::json::array()}}), "seeds must be nonempty"));
  CHECK(mentions(parse_err({{"analysis", {{"noise_deltas", {0.5, 0.5}}}}}),
                 "strictly increasing"));
  CHECK(mentions(parse_err({{"analysis", {{"noise_deltas", {0.5, 1.5}}}}}), "[0, 1]"));
  CHECK(mentions(parse_err({{"analysis", {{"tau", -1.0}}}}), "analysis.tau"));
  CHECK(mentions(parse_err({{"teacher", {{"epochs", 0}}}}), "teacher.epochs"));
  CHECK(mentions(parse_err({{"data", {{"kind", "idx"}}}}), "data.train_images is required"));
  CHECK(mentions(parse_err({{"data",
                             {{"kind", "idx"},
                              {"train_images", "/nonexistent/a"},
                              {"train_labels", "/nonexistent/b"},
                              {"test_images", "/nonexistent/c"},
                              {"test_labels", "/nonexistent/d"}}}}),
                 "no such file"));
  CHECK(mentions(parse_err({{"data", {{"kind", "cifar10"}}}}), "data.train_batches"));
}

TEST_CASE("anchor schedules derive from the strategy block") {
  StrategyConfig s;
  s.mode = StrategyMode::kd;
  AnchorSchedule kd = build_schedule(s, 15, 9);
  CHECK(kd.mode == ScheduleMode::kd);
  CHECK(kd.anchor_epochs == std::vector<int>{15});
  CHECK(kd.switch_epochs.empty());

  s.mode = StrategyMode::eei;
  s.eei_gap = 5;
  AnchorSchedule eei = build_schedule(s, 15, 9);
  CHECK(eei.mode == ScheduleMode::eei);
  CHECK(eei.anchor_epochs == std::vector<int>{5, 10, 15});

  s.mode = StrategyMode::eei_one_stage;
  AnchorSchedule one = build_schedule(s, 15, 9);
  CHECK(one.mode == ScheduleMode::one_stage_eei);
  CHECK(one.anchor_epochs == std::vector<int>{5, 10, 15});
  CHECK(one.switch_epochs == std::vector<int>{3, 6, 9});

  s.mode = StrategyMode::gs;
  AnchorSchedule gs = build_schedule(s, 15, 9);
  CHECK(gs.mode == ScheduleMode::gs);
  CHECK(gs.anchor_epochs.empty());

  s.mode = StrategyMode::softmax;
  CHECK_THROWS_AS(build_schedule(s, 15, 9), error);
}

TEST_CASE("per-seed run configs copy the student block") {
  nlohmann::json doc = small_synth_json();
  doc["student"]["batch_size"] = 16;
  doc["student"]["distill"] = {{"temperature", 3.0}, {"balance", 0.5}};
  doc["student"]["loss"] = "hint_kd";
  doc["strategy"] = {{"mode", "gs"}, {"gs", {{"delta", 0.6}, {"stage_epochs", 2}}}};
  const ExperimentConfig cfg = parse_experiment_config(doc);

  const RcoRunConfig run = student_run_config(cfg, 123);
  CHECK(run.seed == 123);
  CHECK(run.batch_size == 16);
  CHECK(run.distill.temperature == doctest::Approx(3.0f));
  CHECK(run.distill.balance == doctest::Approx(0.5f));
  CHECK(run.loss == LossKind::hint_kd);
  CHECK(run.gs.delta == doctest::Approx(0.6f));
  CHECK(run.gs.stage_epochs == 2);
  CHECK(run.sgd.schedule.total_epochs == 3);
  CHECK(spec_digest(run.student_spec) == spec_digest(cfg.student.net));
}

TEST_CASE("synthetic loads split and normalize deterministically") {
  const ExperimentConfig cfg = parse_experiment_config(small_synth_json());
  const LoadedData data = load_data(cfg.data);
  CHECK(data.train.n() == 48);
  CHECK(data.val.n() == 12);
  CHECK(data.test.n() == 20);
  CHECK(data.train.sample_shape() == std::vector<int>{1, 8, 8});
  CHECK(data.train.class_count == 4);

  // Stats come from the training portion, so only it is exactly standardized.
  const ChannelStats stats = channel_stats(data.train);
  CHECK(stats.mean[0] == doctest::Approx(0.0f).epsilon(1e-4));
  CHECK(stats.stddev[0] == doctest::Approx(1.0f).epsilon(1e-3));

  const LoadedData again = load_data(cfg.data);
  CHECK(bitwise_equal(again.train.images, data.train.images));
  CHECK(bitwise_equal(again.val.images, data.val.images));
  CHECK(bitwise_equal(again.test.images, data.test.images));

  DataConfig too_big = cfg.data;
  too_big.val_count = 60;
  CHECK(message_of([&] { load_data(too_big); }, errc::config_invalid).find("val_count") !=
        std::string::npos);

  DataConfig raw = cfg.data;
  raw.normalize = false;
  const LoadedData unscaled = load_data(raw);
  for (float v : unscaled.train.images.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("exported idx files load back to the synthetic datasets") {
  ExperimentConfig cfg = parse_experiment_config(small_synth_json());
  const LoadedData direct = load_data(cfg.data);

  testu::TempDir dir("idx_export");
  const auto [head, tail] = synth_train_test(cfg.data);
  write_idx(head, dir.str("train-images"), dir.str("train-labels"));
  write_idx(tail, dir.str("test-images"), dir.str("test-labels"));

  DataConfig from_files = cfg.data;
  from_files.kind = DataKind::idx;
  from_files.train_images = dir.str("train-images");
  from_files.train_labels = dir.str("train-labels");
  from_files.test_images = dir.str("test-images");
  from_files.test_labels = dir.str("test-labels");
  const LoadedData via_idx = load_data(from_files);

  CHECK(bitwise_equal(via_idx.train.images, direct.train.images));
  CHECK(bitwise_equal(via_idx.val.images, direct.val.images));
  CHECK(bitwise_equal(via_idx.test.images, direct.test.images));
  CHECK(via_idx.train.labels == direct.train.labels);
  CHECK(via_idx.val.labels == direct.val.labels);
  CHECK(via_idx.test.labels == direct.test.labels);
}

TEST_CASE("config files load through the same parser") {
  testu::TempDir dir("cfgfile");
  const std::string path = dir.str("config.json");
  write_json_file(small_synth_json(), path);
  const ExperimentConfig cfg = load_experiment_config(path);
  CHECK(cfg.teacher.epochs == 4);

  CHECK(message_of([&] { load_experiment_config(dir.str("absent.json")); },
                   errc::io_failure) != "");
  std::ofstream bad(dir.str("broken.json"));
  bad << "{ not json";
  bad.close();
  CHECK(message_of([&] { load_experiment_config(dir.str("broken.json")); },
                   errc::bad_format) != "");
}

}  // TEST_SUITE config

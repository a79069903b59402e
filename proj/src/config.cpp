#include "rco/config.hpp"

#include "rco/errors.hpp"
#include "rco/json_io.hpp"
#include "rco/rng.hpp"
#include "rco/strategy.hpp"

#include <filesystem>
#include <string>

namespace rco {

AnalysisConfig::AnalysisConfig() {
  for (int k = 0; k <= 10; ++k) noise_deltas.push_back(static_cast<float>(k) / 10.0f);
}

const char* strategy_mode_name(StrategyMode mode) {
  switch (mode) {
    case StrategyMode::softmax: return "softmax";
    case StrategyMode::kd: return "kd";
    case StrategyMode::eei: return "eei";
    case StrategyMode::eei_one_stage: return "eei_one_stage";
    case StrategyMode::gs: return "gs";
  }
  return "unknown";
}

namespace {

StrategyMode strategy_mode_from_name(const std::string& name) {
  if (name == "softmax") return StrategyMode::softmax;
  if (name == "kd") return StrategyMode::kd;
  if (name == "eei") return StrategyMode::eei;
  if (name == "eei_one_stage") return StrategyMode::eei_one_stage;
  if (name == "gs") return StrategyMode::gs;
  fail(errc::config_invalid, "strategy.mode \"" + name + "\" is not one of "
                             "softmax/kd/eei/eei_one_stage/gs");
}

DataKind data_kind_from_name(const std::string& name) {
  if (name == "idx") return DataKind::idx;
  if (name == "cifar10") return DataKind::cifar10;
  if (name == "synth") return DataKind::synth;
  fail(errc::config_invalid, "data.kind \"" + name + "\" is not one of idx/cifar10/synth");
}

const char* data_kind_name(DataKind kind) {
  switch (kind) {
    case DataKind::idx: return "idx";
    case DataKind::cifar10: return "cifar10";
    case DataKind::synth: return "synth";
  }
  return "unknown";
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "kd") return LossKind::kd;
  if (name == "hint") return LossKind::hint;
  if (name == "hint_kd") return LossKind::hint_kd;
  fail(errc::config_invalid, "student.loss \"" + name + "\" is not one of kd/hint/hint_kd");
}

// Field access with dotted-path error messages.
template <typename T>
void read(const nlohmann::json& j, const std::string& path, const char* key, T& out) {
  if (!j.contains(key)) return;  // keep default
  const std::string where = path.empty() ? std::string(key) : path + "." + key;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(errc::config_invalid, where + " has the wrong type");
  } catch (const error& e) {
    fail(errc::config_invalid, where + ": " + e.what());
  }
}

// Learning-rate blocks inside an experiment config omit total_epochs; the
// surrounding "epochs" field supplies it.
void read_sgd(const nlohmann::json& j, const std::string& path, SgdConfig& out) {
  if (!j.contains("sgd")) return;
  const nlohmann::json& s = j.at("sgd");
  read(s, path + ".sgd", "momentum", out.momentum);
  read(s, path + ".sgd", "weight_decay", out.weight_decay);
  if (s.contains("lr")) {
    const nlohmann::json& lr = s.at("lr");
    read(lr, path + ".sgd.lr", "initial", out.schedule.initial_lr);
    read(lr, path + ".sgd.lr", "drop_epochs", out.schedule.drop_epochs);
    read(lr, path + ".sgd.lr", "drop_factor", out.schedule.drop_factor);
  }
}

nlohmann::json sgd_to_json(const SgdConfig& sgd) {
  return {{"momentum", sgd.momentum},
          {"weight_decay", sgd.weight_decay},
          {"lr",
           {{"initial", sgd.schedule.initial_lr},
            {"drop_epochs", sgd.schedule.drop_epochs},
            {"drop_factor", sgd.schedule.drop_factor}}}};
}

NetworkSpec default_teacher_net() {
  NetworkSpec spec;
  spec.input_shape = {1, 28, 28};
  spec.layers = {{LayerKind::flatten, 0, 0},
                 {LayerKind::dense, 784, 256},
                 {LayerKind::relu, 0, 0},
                 {LayerKind::dense, 256, 10}};
  spec.num_classes = 10;
  spec.feature_tap = 2;
  return spec;
}

NetworkSpec default_student_net() {
  NetworkSpec spec;
  spec.input_shape = {1, 28, 28};
  spec.layers = {{LayerKind::flatten, 0, 0},
                 {LayerKind::dense, 784, 32},
                 {LayerKind::relu, 0, 0},
                 {LayerKind::dense, 32, 10}};
  spec.num_classes = 10;
  spec.feature_tap = 2;
  return spec;
}

}  // namespace

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.teacher.net = default_teacher_net();
  cfg.teacher.sgd.weight_decay = 5e-4f;
  cfg.teacher.sgd.schedule.initial_lr = 0.05f;
  cfg.teacher.sgd.schedule.drop_epochs = {8, 12};
  cfg.student.net = default_student_net();
  cfg.student.sgd.weight_decay = 5e-4f;
  cfg.student.sgd.schedule.initial_lr = 0.01f;
  cfg.student.sgd.schedule.drop_epochs = {8, 12};

  if (!j.is_object()) fail(errc::config_invalid, "config root must be a JSON object");
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    if (key != "data" && key != "teacher" && key != "student" && key != "strategy" &&
        key != "seeds" && key != "analysis") {
      fail(errc::config_invalid, "unknown top-level field \"" + key + "\"");
    }
  }

  if (j.contains("data")) {
    const nlohmann::json& d = j.at("data");
    std::string kind = data_kind_name(cfg.data.kind);
    read(d, "data", "kind", kind);
    cfg.data.kind = data_kind_from_name(kind);
    read(d, "data", "train_images", cfg.data.train_images);
    read(d, "data", "train_labels", cfg.data.train_labels);
    read(d, "data", "test_images", cfg.data.test_images);
    read(d, "data", "test_labels", cfg.data.test_labels);
    read(d, "data", "train_batches", cfg.data.train_batches);
    read(d, "data", "test_batches", cfg.data.test_batches);
    read(d, "data", "synth", cfg.data.synth);
    read(d, "data", "synth_test_count", cfg.data.synth_test_count);
    read(d, "data", "val_count", cfg.data.val_count);
    read(d, "data", "split_seed", cfg.data.split_seed);
    read(d, "data", "normalize", cfg.data.normalize);
  }

  if (j.contains("teacher")) {
    const nlohmann::json& t = j.at("teacher");
    read(t, "teacher", "net", cfg.teacher.net);
    read(t, "teacher", "epochs", cfg.teacher.epochs);
    read(t, "teacher", "batch_size", cfg.teacher.batch_size);
    read(t, "teacher", "seed", cfg.teacher.seed);
    read(t, "teacher", "capture_every", cfg.teacher.capture_every);
    read_sgd(t, "teacher", cfg.teacher.sgd);
  }
  cfg.teacher.sgd.schedule.total_epochs = cfg.teacher.epochs;

  if (j.contains("student")) {
    const nlohmann::json& s = j.at("student");
    read(s, "student", "net", cfg.student.net);
    read(s, "student", "epochs", cfg.student.epochs);
    read(s, "student", "batch_size", cfg.student.batch_size);
    read(s, "student", "capture_every", cfg.student.capture_every);
    read(s, "student", "distill", cfg.student.distill);
    read(s, "student", "hint_weight", cfg.student.hint_weight);
    std::string loss = loss_kind_name(cfg.student.loss);
    read(s, "student", "loss", loss);
    cfg.student.loss = loss_kind_from_name(loss);
    read_sgd(s, "student", cfg.student.sgd);
  }
  cfg.student.sgd.schedule.total_epochs = cfg.student.epochs;

  if (j.contains("strategy")) {
    const nlohmann::json& s = j.at("strategy");
    std::string mode = strategy_mode_name(cfg.strategy.mode);
    read(s, "strategy", "mode", mode);
    cfg.strategy.mode = strategy_mode_from_name(mode);
    for (const auto& item : s.items()) {
      const std::string& key = item.key();
      if (key == "mode") continue;
      if (key != "eei" && key != "eei_one_stage" && key != "gs") {
        fail(errc::config_invalid, "strategy." + key + " is not a recognized block");
      }
      if (key != mode) {
        fail(errc::config_invalid,
             "strategy." + key + " given but strategy.mode is \"" + mode + "\"");
      }
    }
    if (cfg.strategy.mode == StrategyMode::eei || cfg.strategy.mode == StrategyMode::eei_one_stage) {
      const char* block = cfg.strategy.mode == StrategyMode::eei ? "eei" : "eei_one_stage";
      if (!s.contains(block)) {
        fail(errc::config_invalid, std::string("strategy.") + block + ".gap is required");
      }
      read(s.at(block), std::string("strategy.") + block, "gap", cfg.strategy.eei_gap);
    } else if (cfg.strategy.mode == StrategyMode::gs) {
      if (s.contains("gs")) {
        read(s.at("gs"), "strategy.gs", "delta", cfg.strategy.gs_delta);
        read(s.at("gs"), "strategy.gs", "stage_epochs", cfg.strategy.gs_stage_epochs);
      }
    }
  }

  read(j, "", "seeds", cfg.seeds);

  if (j.contains("analysis")) {
    const nlohmann::json& a = j.at("analysis");
    read(a, "analysis", "noise_deltas", cfg.analysis.noise_deltas);
    read(a, "analysis", "tau", cfg.analysis.tau);
  }

  validate_experiment_config(cfg);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_json_file(path));
}

nlohmann::json effective_config_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["data"] = {{"kind", data_kind_name(cfg.data.kind)},
               {"train_images", cfg.data.train_images},
               {"train_labels", cfg.data.train_labels},
               {"test_images", cfg.data.test_images},
               {"test_labels", cfg.data.test_labels},
               {"train_batches", cfg.data.train_batches},
               {"test_batches", cfg.data.test_batches},
               {"synth", cfg.data.synth},
               {"synth_test_count", cfg.data.synth_test_count},
               {"val_count", cfg.data.val_count},
               {"split_seed", cfg.data.split_seed},
               {"normalize", cfg.data.normalize}};
  j["teacher"] = {{"net", cfg.teacher.net},
                  {"epochs", cfg.teacher.epochs},
                  {"batch_size", cfg.teacher.batch_size},
                  {"seed", cfg.teacher.seed},
                  {"capture_every", cfg.teacher.capture_every},
                  {"sgd", sgd_to_json(cfg.teacher.sgd)}};
  j["student"] = {{"net", cfg.student.net},
                  {"epochs", cfg.student.epochs},
                  {"batch_size", cfg.student.batch_size},
                  {"capture_every", cfg.student.capture_every},
                  {"distill", cfg.student.distill},
                  {"loss", loss_kind_name(cfg.student.loss)},
                  {"hint_weight", cfg.student.hint_weight},
                  {"sgd", sgd_to_json(cfg.student.sgd)}};
  nlohmann::json strategy = {{"mode", strategy_mode_name(cfg.strategy.mode)}};
  if (cfg.strategy.mode == StrategyMode::eei) {
    strategy["eei"] = {{"gap", cfg.strategy.eei_gap}};
  } else if (cfg.strategy.mode == StrategyMode::eei_one_stage) {
    strategy["eei_one_stage"] = {{"gap", cfg.strategy.eei_gap}};
  } else if (cfg.strategy.mode == StrategyMode::gs) {
    strategy["gs"] = {{"delta", cfg.strategy.gs_delta},
                      {"stage_epochs", cfg.strategy.gs_stage_epochs}};
  }
  j["strategy"] = strategy;
  j["seeds"] = cfg.seeds;
  j["analysis"] = {{"noise_deltas", cfg.analysis.noise_deltas}, {"tau", cfg.analysis.tau}};
  return j;
}

void validate_experiment_config(const ExperimentConfig& cfg) {
  try {
    validate_network(cfg.teacher.net);
  } catch (const error& e) {
    fail(errc::config_invalid, std::string("teacher.net: ") + e.what());
  }
  try {
    validate_network(cfg.student.net);
  } catch (const error& e) {
    fail(errc::config_invalid, std::string("student.net: ") + e.what());
  }
  if (cfg.teacher.epochs < 1) fail(errc::config_invalid, "teacher.epochs must be >= 1");
  if (cfg.student.epochs < 1) fail(errc::config_invalid, "student.epochs must be >= 1");
  if (cfg.teacher.batch_size < 1) fail(errc::config_invalid, "teacher.batch_size must be >= 1");
  if (cfg.student.batch_size < 1) fail(errc::config_invalid, "student.batch_size must be >= 1");
  if (cfg.teacher.capture_every < 1) {
    fail(errc::config_invalid, "teacher.capture_every must be >= 1");
  }
  if (cfg.student.capture_every < 0) {
    fail(errc::config_invalid, "student.capture_every must be >= 0");
  }
  try {
    validate(cfg.teacher.sgd);
  } catch (const error& e) {
    fail(errc::config_invalid, std::string("teacher.sgd: ") + e.what());
  }
  try {
    validate(cfg.student.sgd);
  } catch (const error& e) {
    fail(errc::config_invalid, std::string("student.sgd: ") + e.what());
  }
  if (!(cfg.student.distill.temperature > 0.0f)) {
    fail(errc::config_invalid, "student.distill.temperature must be > 0");
  }
  if (!(cfg.student.distill.balance >= 0.0f)) {
    fail(errc::config_invalid, "student.distill.balance must be >= 0");
  }

  switch (cfg.data.kind) {
    case DataKind::idx: {
      const std::pair<const char*, const std::string*> paths[] = {
          {"data.train_images", &cfg.data.train_images},
          {"data.train_labels", &cfg.data.train_labels},
          {"data.test_images", &cfg.data.test_images},
          {"data.test_labels", &cfg.data.test_labels}};
      for (const auto& [field, path] : paths) {
        if (path->empty()) fail(errc::config_invalid, std::string(field) + " is required");
        if (!std::filesystem::exists(*path)) {
          fail(errc::config_invalid, std::string(field) + ": no such file: " + *path);
        }
      }
      break;
    }
    case DataKind::cifar10: {
      if (cfg.data.train_batches.empty()) {
        fail(errc::config_invalid, "data.train_batches is required");
      }
      if (cfg.data.test_batches.empty()) fail(errc::config_invalid, "data.test_batches is required");
      for (const std::string& path : cfg.data.train_batches) {
        if (!std::filesystem::exists(path)) {
          fail(errc::config_invalid, "data.train_batches: no such file: " + path);
        }
      }
      for (const std::string& path : cfg.data.test_batches) {
        if (!std::filesystem::exists(path)) {
          fail(errc::config_invalid, "data.test_batches: no such file: " + path);
        }
      }
      break;
    }
    case DataKind::synth:
      if (cfg.data.synth.count < 2) fail(errc::config_invalid, "data.synth.count must be >= 2");
      if (cfg.data.synth_test_count < 1) {
        fail(errc::config_invalid, "data.synth_test_count must be >= 1");
      }
      break;
  }
  if (cfg.data.val_count < 1) fail(errc::config_invalid, "data.val_count must be >= 1");

  if (cfg.seeds.empty()) fail(errc::config_invalid, "seeds must be nonempty");

  switch (cfg.strategy.mode) {
    case StrategyMode::softmax:
    case StrategyMode::kd:
      break;
    case StrategyMode::eei:
    case StrategyMode::eei_one_stage:
      if (cfg.strategy.eei_gap < 1 || cfg.strategy.eei_gap > cfg.teacher.epochs) {
        fail(errc::config_invalid, "strategy gap must lie in [1, teacher.epochs]");
      }
      if (cfg.strategy.mode == StrategyMode::eei_one_stage) {
        const int anchors =
            static_cast<int>(eei_select(cfg.teacher.epochs, cfg.strategy.eei_gap).size());
        if (anchors > cfg.student.epochs) {
          fail(errc::config_invalid, "one-stage runs need at least one epoch per anchor");
        }
      }
      break;
    case StrategyMode::gs:
      if (!(cfg.strategy.gs_delta > 0.0f)) {
        fail(errc::config_invalid, "strategy.gs.delta must be > 0");
      }
      if (cfg.strategy.gs_stage_epochs < 0 ||
          cfg.strategy.gs_stage_epochs > cfg.student.epochs) {
        fail(errc::config_invalid, "strategy.gs.stage_epochs must lie in [0, student.epochs]");
      }
      break;
  }

  float prev = -1.0f;
  for (float d : cfg.analysis.noise_deltas) {
    if (!(d >= 0.0f && d <= 1.0f)) {
      fail(errc::config_invalid, "analysis.noise_deltas must lie in [0, 1]");
    }
    if (d <= prev) {
      fail(errc::config_invalid, "analysis.noise_deltas must be strictly increasing");
    }
    prev = d;
  }
  if (cfg.analysis.tau < 0.0f) fail(errc::config_invalid, "analysis.tau must be >= 0");
}

AnchorSchedule build_schedule(const StrategyConfig& strategy, int teacher_epochs,
                              int student_epochs) {
  AnchorSchedule schedule;
  switch (strategy.mode) {
    case StrategyMode::softmax:
      fail(errc::invalid_argument, "softmax runs have no anchor schedule");
    case StrategyMode::kd:
      schedule.mode = ScheduleMode::kd;
      schedule.anchor_epochs = {teacher_epochs};
      break;
    case StrategyMode::eei:
      schedule.mode = ScheduleMode::eei;
      schedule.anchor_epochs = eei_select(teacher_epochs, strategy.eei_gap);
      break;
    case StrategyMode::eei_one_stage:
      schedule.mode = ScheduleMode::one_stage_eei;
      schedule.anchor_epochs = eei_select(teacher_epochs, strategy.eei_gap);
      schedule.switch_epochs =
          one_stage_switches(student_epochs, static_cast<int>(schedule.anchor_epochs.size()));
      break;
    case StrategyMode::gs:
      schedule.mode = ScheduleMode::gs;
      break;
  }
  return schedule;
}

RcoRunConfig student_run_config(const ExperimentConfig& cfg, uint64_t seed) {
  RcoRunConfig run;
  run.student_spec = cfg.student.net;
  run.sgd = cfg.student.sgd;
  run.batch_size = cfg.student.batch_size;
  run.seed = seed;
  run.distill = cfg.student.distill;
  run.loss = cfg.student.loss;
  run.hint_weight = cfg.student.hint_weight;
  run.capture_student_every = cfg.student.capture_every;
  run.gs.delta = cfg.strategy.gs_delta;
  run.gs.stage_epochs = cfg.strategy.gs_stage_epochs;
  return run;
}

std::pair<RawImageSet, RawImageSet> synth_train_test(const DataConfig& cfg) {
  // One generation pass so train and test share class prototypes, then a
  // head/tail split keeps them disjoint.
  SynthConfig both = cfg.synth;
  both.count = cfg.synth.count + cfg.synth_test_count;
  RawImageSet all = synth_digits(both);
  const size_t pix = static_cast<size_t>(all.image_size) * all.image_size;
  RawImageSet head, tail;
  head.image_size = tail.image_size = all.image_size;
  head.classes = tail.classes = all.classes;
  const size_t head_pix = static_cast<size_t>(cfg.synth.count) * pix;
  head.pixels.assign(all.pixels.begin(), all.pixels.begin() + static_cast<int64_t>(head_pix));
  head.labels.assign(all.labels.begin(), all.labels.begin() + cfg.synth.count);
  tail.pixels.assign(all.pixels.begin() + static_cast<int64_t>(head_pix), all.pixels.end());
  tail.labels.assign(all.labels.begin() + cfg.synth.count, all.labels.end());
  return {std::move(head), std::move(tail)};
}

LoadedData load_data(const DataConfig& cfg) {
  Dataset train, test;
  switch (cfg.kind) {
    case DataKind::idx:
      train = load_idx(cfg.train_images, cfg.train_labels);
      test = load_idx(cfg.test_images, cfg.test_labels);
      break;
    case DataKind::cifar10:
      train = load_cifar10_bin(cfg.train_batches);
      test = load_cifar10_bin(cfg.test_batches);
      break;
    case DataKind::synth: {
      auto [head, tail] = synth_train_test(cfg);
      train = to_dataset(head);
      test = to_dataset(tail);
      break;
    }
  }
  if (cfg.val_count >= train.n()) {
    fail(errc::config_invalid, "data.val_count " + std::to_string(cfg.val_count) +
                                   " must be below the training count " +
                                   std::to_string(train.n()));
  }
  ValidationSplit split = split_validation(train, cfg.val_count, cfg.split_seed);
  LoadedData out;
  out.train = std::move(split.train);
  out.val = std::move(split.val);
  out.test = std::move(test);
  if (cfg.normalize) {
    ChannelStats stats = channel_stats(out.train);
    normalize_inplace(out.train, stats);
    normalize_inplace(out.val, stats);
    normalize_inplace(out.test, stats);
  }
  return out;
}

}  // namespace rco

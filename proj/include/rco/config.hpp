#pragma once

#include "rco/data.hpp"
#include "rco/distill.hpp"
#include "rco/net.hpp"
#include "rco/optim.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace rco {

enum class DataKind { idx, cifar10, synth };

struct DataConfig {
  DataKind kind = DataKind::synth;
  // idx
  std::string train_images, train_labels, test_images, test_labels;
  // cifar10
  std::vector<std::string> train_batches;
  std::vector<std::string> test_batches;
  // synth: count+test_count images drawn in one pass (shared prototypes),
  // head goes to train, tail to test
  SynthConfig synth;
  int synth_test_count = 1000;
  int val_count = 1000;  // carved off the end of the shuffled train set
  uint64_t split_seed = 1;
  bool normalize = true;
};

struct TeacherConfig {
  NetworkSpec net;
  int epochs = 15;
  int batch_size = 64;
  uint64_t seed = 1;
  SgdConfig sgd;        // sgd.schedule.total_epochs is derived from epochs
  int capture_every = 1;
};

struct StudentConfig {
  NetworkSpec net;
  int epochs = 15;      // per stage (multi-stage) or total (one-stage)
  int batch_size = 64;
  SgdConfig sgd;
  DistillConfig distill;
  LossKind loss = LossKind::kd;
  float hint_weight = 1.0f;
  int capture_every = 0;
};

enum class StrategyMode { softmax, kd, eei, eei_one_stage, gs };

const char* strategy_mode_name(StrategyMode mode);

struct StrategyConfig {
  StrategyMode mode = StrategyMode::kd;
  int eei_gap = 0;        // eei / eei_one_stage
  float gs_delta = 0.8f;  // gs
  int gs_stage_epochs = 0;
};

struct AnalysisConfig {
  std::vector<float> noise_deltas;  // default 0.0..1.0 step 0.1
  float tau = 0.0f;                 // 0 = use student distill temperature
  AnalysisConfig();
};

struct ExperimentConfig {
  DataConfig data;
  TeacherConfig teacher;
  StudentConfig student;
  StrategyConfig strategy;
  std::vector<uint64_t> seeds{1};
  AnalysisConfig analysis;
};

/// Parse + validate; errors carry the JSON field path (e.g. "student.epochs").
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

/// Every field present with its effective value; reparsing reproduces cfg.
nlohmann::json effective_config_json(const ExperimentConfig& cfg);

/// Consistency checks beyond field parsing: path existence, strategy block
/// exclusivity, schedule arithmetic. Called by parse_experiment_config.
void validate_experiment_config(const ExperimentConfig& cfg);

/// Anchor curriculum implied by the strategy block. GS schedules carry no
/// anchors upfront; they are discovered during training.
AnchorSchedule build_schedule(const StrategyConfig& strategy, int teacher_epochs,
                              int student_epochs);

/// Per-seed trainer configuration assembled from the student block.
RcoRunConfig student_run_config(const ExperimentConfig& cfg, uint64_t seed);

struct LoadedData {
  Dataset train;
  Dataset val;
  Dataset test;

  DataBundle bundle() const { return DataBundle{&train, &val, &test}; }
};

/// Raw synthetic train/test sets exactly as load_data consumes them; exposed
/// so exported IDX files reload to the same datasets.
std::pair<RawImageSet, RawImageSet> synth_train_test(const DataConfig& cfg);

/// Load + split + normalize per cfg.data. Normalization stats come from the
/// training portion and are applied to all three splits.
LoadedData load_data(const DataConfig& cfg);

}  // namespace rco

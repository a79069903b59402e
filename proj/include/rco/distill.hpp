#pragma once

#include "rco/losses.hpp"
#include "rco/strategy.hpp"
#include "rco/trajectory.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rco {

enum class LossKind { kd, hint, hint_kd };

const char* loss_kind_name(LossKind kind);

struct DataBundle {
  const Dataset* train = nullptr;
  const Dataset* val = nullptr;
  const Dataset* test = nullptr;
};

struct RcoRunConfig {
  NetworkSpec student_spec;
  SgdConfig sgd;                 // schedule applies per stage (multi-stage) or once (one-stage)
  int batch_size = 64;
  uint64_t seed = 1;
  DistillConfig distill;
  LossKind loss = LossKind::kd;
  float hint_weight = 1.0f;      // scales the feature term when loss != kd
  int capture_student_every = 0; // 0 = final only; k captures every k epochs plus epoch 0
  int epochs_override = -1;      // single-stage budget override; -1 = schedule total, 0 legal
  std::optional<Params> init_override;  // bypasses seeded init when set
  GsConfig gs;                   // only read when schedule.mode == gs
  // Observers see (stage_index, anchor_epoch, params) at stage entry and exit;
  // params at exit of stage k and entry of stage k+1 must be bit-identical.
  std::function<void(int, int, const Params&)> on_stage_start;
  std::function<void(int, int, const Params&)> on_stage_end;
};

struct EpochRow {
  int epoch = 0;        // student epochs completed, 1-based
  float lr = 0.0f;      // rate used during this epoch
  float train_loss = 0.0f;
  int anchor_epoch = 0; // teacher checkpoint mimicked this epoch; 0 = none
  float val_kl = 0.0f;  // softened KL vs this epoch's supervisor (final teacher when none)
  float test_top1 = 0.0f;
};

struct StudentSnapshot {
  int epoch = 0;  // 0 = initialization
  Params params;
};

struct RunReport {
  std::string mode;
  uint64_t seed = 0;
  std::vector<int> anchor_epochs;
  std::vector<int> switch_epochs;
  float init_val_kl = 0.0f;
  float init_test_top1 = 0.0f;
  std::vector<EpochRow> rows;
  long total_steps = 0;
  Params final_params;
  std::vector<StudentSnapshot> student_snapshots;
  std::vector<HardnessTable> gs_tables;
  double wall_clock_sec = 0.0;  // reporting only; never serialized

  void write_epochs_csv(const std::string& path) const;
};

/// Sequential distillation along a checkpoint curriculum. Each stage starts
/// from the previous stage's weights, resets optimizer velocity, and restarts
/// the LR schedule. A one-element schedule is the plain-KD degenerate case.
RunReport train_rco(const RcoRunConfig& cfg, const Trajectory& teacher,
                    const AnchorSchedule& schedule, const DataBundle& data);

/// Single continuous run where only the anchor switches at the given student
/// epochs; velocity and LR schedule carry across switches.
RunReport train_one_stage(const RcoRunConfig& cfg, const Trajectory& teacher,
                          const std::vector<int>& anchor_epochs,
                          const std::vector<int>& switch_epochs, const DataBundle& data);

/// Distill against only the final checkpoint (classic KD).
RunReport train_kd_baseline(const RcoRunConfig& cfg, const Trajectory& teacher,
                            const DataBundle& data);

/// Ground-truth labels only; no-teacher control arm. When a trajectory is
/// given its final checkpoint is used for the val_kl column so the balance=0
/// KD run produces the same numeric series.
RunReport train_softmax_baseline(const RcoRunConfig& cfg, const Trajectory* teacher,
                                 const DataBundle& data);

}  // namespace rco

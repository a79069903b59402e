#pragma once

#include "rco/data.hpp"
#include "rco/trajectory.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rco {

enum class ScheduleMode { kd, eei, one_stage_eei, gs };

const char* schedule_mode_name(ScheduleMode mode);

/// Ordered curriculum of teacher checkpoints. For one_stage_eei,
/// switch_epochs[k] is the student epoch at which segment k ends (the last
/// entry equals the student's total budget).
struct AnchorSchedule {
  ScheduleMode mode = ScheduleMode::kd;
  std::vector<int> anchor_epochs;
  int stage_epochs = 0;  // per-anchor budget (multi-stage); 0 = full schedule
  std::vector<int> switch_epochs;
};

/// {gap, 2*gap, ...} plus the final epoch.
std::vector<int> eei_select(int total_epochs, int gap);

/// Splits a one-stage student budget into anchor_count supervision segments:
/// segment k ends at floor((k+1) * student_epochs / anchor_count). The last
/// entry is always student_epochs.
std::vector<int> one_stage_switches(int student_epochs, int anchor_count);

/// Validation hardness: mean softened KL between anchor-teacher outputs and
/// current student outputs.
float hardness(const NetworkSpec& student_spec, const Params& student,
               const NetworkSpec& teacher_spec, const Checkpoint& anchor, const Dataset& val,
               float tau);

/// (h_j - h_i) / h_i; +infinity when h_i == 0 < h_j; 0 when both are 0.
float hardness_ratio(float h_i, float h_j);

struct GsConfig {
  float delta = 0.8f;
  int stage_epochs = 0;  // per-step training budget; 0 = full student schedule
};

/// Per-anchor hardness evaluations recorded during one selection step.
struct HardnessTable {
  int current_index = 0;
  std::vector<int> anchor_epochs;
  std::vector<float> h_values;
  std::vector<float> ratio_from_current;  // 0 for the current anchor itself

  void write_csv(const std::string& path) const;
};

/// Greedy walk over anchors after the current one: the first j whose hardness
/// ratio exceeds delta yields j - 1, clamped so the result always advances; if
/// none exceeds, the last anchor is returned. h_of(j) is evaluated lazily and
/// only for the indices the walk visits. Indices are 0-based positions.
int greedy_scan(int current_index, int count, float delta,
                const std::function<float(int)>& h_of);

/// greedy_scan driven by real validation hardness against a trajectory. If
/// table is non-null it receives every evaluation made.
int greedy_next_anchor(const NetworkSpec& student_spec, const Params& student,
                       const Trajectory& trajectory, int current_index, const GsConfig& cfg,
                       const Dataset& val, float tau, HardnessTable* table = nullptr);

}  // namespace rco

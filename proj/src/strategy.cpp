#include "rco/strategy.hpp"

#include "rco/csv.hpp"
#include "rco/errors.hpp"
#include "rco/losses.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace rco {

const char* schedule_mode_name(ScheduleMode mode) {
  switch (mode) {
    case ScheduleMode::kd: return "kd";
    case ScheduleMode::eei: return "eei";
    case ScheduleMode::one_stage_eei: return "eei_one_stage";
    case ScheduleMode::gs: return "gs";
  }
  return "unknown";
}

std::vector<int> eei_select(int total_epochs, int gap) {
  if (gap < 1 || gap > total_epochs) {
    fail(errc::invalid_argument, "gap " + std::to_string(gap) + " outside [1, " +
                                     std::to_string(total_epochs) + "]");
  }
  std::vector<int> anchors;
  for (int e = gap; e < total_epochs; e += gap) anchors.push_back(e);
  anchors.push_back(total_epochs);
  return anchors;
}

std::vector<int> one_stage_switches(int student_epochs, int anchor_count) {
  if (anchor_count < 1 || anchor_count > student_epochs) {
    fail(errc::invalid_argument, "cannot split " + std::to_string(student_epochs) +
                                     " epochs into " + std::to_string(anchor_count) +
                                     " segments");
  }
  std::vector<int> switches(static_cast<size_t>(anchor_count));
  for (int k = 0; k < anchor_count; ++k) {
    switches[static_cast<size_t>(k)] =
        static_cast<int>((static_cast<int64_t>(k + 1) * student_epochs) / anchor_count);
  }
  return switches;
}

namespace {
constexpr int kEvalChunk = 256;
}

float hardness(const NetworkSpec& student_spec, const Params& student,
               const NetworkSpec& teacher_spec, const Checkpoint& anchor, const Dataset& val,
               float tau) {
  if (val.n() == 0) fail(errc::invalid_argument, "hardness over an empty validation set");
  if (anchor.spec_hash != spec_digest(teacher_spec)) {
    fail(errc::digest_mismatch, "anchor checkpoint does not belong to the given teacher spec");
  }
  double total = 0.0;
  for (int start = 0; start < val.n(); start += kEvalChunk) {
    const int take = std::min(kEvalChunk, val.n() - start);
    std::vector<int> idx(static_cast<size_t>(take));
    for (int i = 0; i < take; ++i) idx[static_cast<size_t>(i)] = start + i;
    Batch chunk = gather(val, idx);
    ForwardResult ts = forward(teacher_spec, anchor.params, chunk.images);
    ForwardResult ss = forward(student_spec, student, chunk.images);
    ProbBatch pt = softened_softmax(ts.logits.mat2d(), tau);
    ProbBatch ps = softened_softmax(ss.logits.mat2d(), tau);
    total += static_cast<double>(kl_divergence(pt, ps)) * take;
  }
  return static_cast<float>(total / static_cast<double>(val.n()));
}

float hardness_ratio(float h_i, float h_j) {
  if (h_i < 0.0f || h_j < 0.0f) fail(errc::invalid_argument, "hardness values must be >= 0");
  if (h_i == 0.0f) return h_j == 0.0f ? 0.0f : std::numeric_limits<float>::infinity();
  return (h_j - h_i) / h_i;
}

int greedy_scan(int current_index, int count, float delta,
                const std::function<float(int)>& h_of) {
  if (count < 1) fail(errc::invalid_argument, "greedy_scan over an empty anchor list");
  if (current_index < 0 || current_index >= count - 1) {
    fail(errc::invalid_argument, "greedy_scan needs a current index below the last anchor");
  }
  const float h_i = h_of(current_index);
  for (int j = current_index + 1; j < count; ++j) {
    if (hardness_ratio(h_i, h_of(j)) > delta) {
      // The scan's j-1 rule, clamped so the walk always advances.
      return std::max(j - 1, current_index + 1);
    }
  }
  return count - 1;
}

void HardnessTable::write_csv(const std::string& path) const {
  CsvWriter csv({"anchor_epoch", "H", "r_from_current"});
  for (size_t i = 0; i < anchor_epochs.size(); ++i) {
    csv.add_row({std::to_string(anchor_epochs[i]), format_float(h_values[i]),
                 format_float(ratio_from_current[i])});
  }
  csv.write(path);
}

int greedy_next_anchor(const NetworkSpec& student_spec, const Params& student,
                       const Trajectory& trajectory, int current_index, const GsConfig& cfg,
                       const Dataset& val, float tau, HardnessTable* table) {
  if (!(cfg.delta > 0.0f)) fail(errc::invalid_argument, "greedy-search delta must be > 0");
  const int count = static_cast<int>(trajectory.checkpoints.size());
  float h_current = 0.0f;
  auto h_of = [&](int j) {
    float h = hardness(student_spec, student, trajectory.spec, trajectory.checkpoints[j], val,
                       tau);
    if (j == current_index) h_current = h;
    if (table != nullptr) {
      table->anchor_epochs.push_back(trajectory.checkpoints[static_cast<size_t>(j)].epoch);
      table->h_values.push_back(h);
      table->ratio_from_current.push_back(j == current_index ? 0.0f
                                                             : hardness_ratio(h_current, h));
    }
    return h;
  };
  if (table != nullptr) table->current_index = current_index;
  return greedy_scan(current_index, count, cfg.delta, h_of);
}

}  // namespace rco

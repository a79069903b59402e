#pragma once

#include "rco/data.hpp"
#include "rco/net.hpp"
#include "rco/optim.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rco {

/// One teacher snapshot. `epoch` counts completed epochs (1-based); in
/// iteration mode it counts completed optimizer steps instead.
struct Checkpoint {
  int epoch = 0;
  Params params;
  float lr_at_capture = 0.0f;
  float train_loss = 0.0f;
  uint64_t spec_hash = 0;
  uint64_t seed = 0;
};

struct TeacherTrainConfig {
  SgdConfig sgd;
  int epochs = 1;
  int batch_size = 64;
  uint64_t seed = 1;
  bool capture_per_iteration = false;
};

struct Trajectory {
  NetworkSpec spec;
  TeacherTrainConfig config;
  int capture_every = 1;
  bool iteration_mode = false;
  std::vector<Checkpoint> checkpoints;  // strictly increasing epochs; last is C_n

  const Checkpoint& final_checkpoint() const { return checkpoints.back(); }
  const Checkpoint& at_epoch(int epoch) const;  // errc::missing_input if absent
  bool has_epoch(int epoch) const;
};

/// Plain cross-entropy teacher training with capture at every
/// capture_every-th epoch plus the final epoch. Deterministic per seed.
Trajectory train_teacher(const NetworkSpec& spec, const TeacherTrainConfig& cfg,
                         const Dataset& train, int capture_every);

// --- checkpoint persistence -------------------------------------------------
// Fixed 8-byte magic, u32 format version, then header fields and little-endian
// float32 tensors in layer order. Round trips are byte-exact.

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
Checkpoint load_checkpoint(const std::string& path, uint64_t expected_spec_hash);

/// Writes ckpt_<epoch>.bin files plus manifest.json into dir.
void save_trajectory(const Trajectory& t, const std::string& dir);
Trajectory load_trajectory(const std::string& dir);

}  // namespace rco

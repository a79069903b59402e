#pragma once

#include "rco/config.hpp"

#include <string>

namespace rco {

// Output-directory layout shared by all commands:
//   config.json                      effective config echo
//   teacher/                         manifest.json + ckpt_<epoch>.bin
//   distill/<mode>/seed<k>/          report.json, epochs.csv, student_final.ckpt,
//                                    student_epoch_<e>.ckpt (when capturing),
//                                    hardness_step<j>.csv (greedy search)
//   analysis/                        summary.csv, kl_curve_*.csv, pca_trajectory_*.csv,
//                                    pca_explained.csv, noise_sweep_*.csv
// Rerunning any command with unchanged inputs rewrites identical bytes.

void echo_config(const ExperimentConfig& cfg, const std::string& out_dir);

/// Train the teacher and persist its trajectory under <out>/teacher.
void cmd_train_teacher(const ExperimentConfig& cfg, const std::string& out_dir);

/// One student run per seed against the stored teacher trajectory. Seeds run
/// as parallel workers bounded by `threads`; each arm is internally
/// sequential, so results do not depend on scheduling.
void cmd_distill(const ExperimentConfig& cfg, const std::string& out_dir, int threads);

/// Diagnostics over whatever runs exist under <out>/distill: an accuracy
/// summary with per-arm medians, a KL curve per run, weight-trajectory
/// projections, and a noise sweep pairing the first two arms. A failing
/// diagnostic is reported on stderr and skipped; the rest are still written.
void cmd_analyze(const ExperimentConfig& cfg, const std::string& out_dir);

/// Export the synthetic train/test sets as IDX files (exactly the images a
/// kind="synth" run would train on).
void cmd_gen_data(const DataConfig& data, const std::string& out_dir);

/// train-teacher, then distill, then analyze.
void cmd_all(const ExperimentConfig& cfg, const std::string& out_dir, int threads);

}  // namespace rco

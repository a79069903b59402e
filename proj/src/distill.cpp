#include "rco/distill.hpp"

#include "rco/analysis.hpp"
#include "rco/csv.hpp"
#include "rco/errors.hpp"
#include "rco/rng.hpp"

#include <algorithm>
#include <string>

namespace rco {

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kd: return "kd";
    case LossKind::hint: return "hint";
    case LossKind::hint_kd: return "hint_kd";
  }
  return "unknown";
}

void RunReport::write_epochs_csv(const std::string& path) const {
  CsvWriter csv({"epoch", "lr", "train_loss", "anchor_epoch", "val_kl", "test_top1"});
  for (const EpochRow& r : rows) {
    csv.add_row({std::to_string(r.epoch), format_float(r.lr), format_float(r.train_loss),
                 std::to_string(r.anchor_epoch), format_float(r.val_kl),
                 format_float(r.test_top1)});
  }
  csv.write(path);
}

namespace {

constexpr int kEvalChunk = 256;

int64_t flat_feature_size(const NetworkSpec& spec) {
  std::vector<std::vector<int>> shapes = validate_network(spec);
  return shape_size(shapes[static_cast<size_t>(spec.feature_tap)]);
}

struct DatasetOutputs {
  Mat logits;
  Mat features;
};

DatasetOutputs dataset_outputs(const NetworkSpec& spec, const Params& params, const Dataset& d,
                               bool want_features) {
  DatasetOutputs out;
  out.logits.resize(d.n(), spec.num_classes);
  if (want_features) out.features.resize(d.n(), flat_feature_size(spec));
  for (int start = 0; start < d.n(); start += kEvalChunk) {
    const int take = std::min(kEvalChunk, d.n() - start);
    std::vector<int> idx(static_cast<size_t>(take));
    for (int i = 0; i < take; ++i) idx[static_cast<size_t>(i)] = start + i;
    Batch chunk = gather(d, idx);
    ForwardResult r = forward(spec, params, chunk.images);
    out.logits.middleRows(start, take) = r.logits.mat2d();
    if (want_features) out.features.middleRows(start, take) = r.features.mat2d();
  }
  return out;
}

Mat gather_rows(const Mat& src, const std::vector<int>& indices) {
  Mat out(static_cast<Eigen::Index>(indices.size()), src.cols());
  for (size_t i = 0; i < indices.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = src.row(indices[i]);
  }
  return out;
}

void check_params_shape(const NetworkSpec& spec, const Params& p, const std::string& what) {
  Params ref = init_params(spec, 0);
  if (p.weights.size() != ref.weights.size() || p.biases.size() != ref.biases.size()) {
    fail(errc::shape_mismatch, what + " holds a different layer count than the student spec");
  }
  for (size_t i = 0; i < ref.weights.size(); ++i) {
    if (!same_shape(p.weights[i], ref.weights[i]) || !same_shape(p.biases[i], ref.biases[i])) {
      fail(errc::shape_mismatch, what + " disagrees with the student spec at layer " +
                                     std::to_string(i));
    }
  }
}

LrSchedule truncate_schedule(const LrSchedule& s, int epochs) {
  LrSchedule t = s;
  t.total_epochs = epochs;
  t.drop_epochs.clear();
  for (int e : s.drop_epochs) {
    if (e < epochs) t.drop_epochs.push_back(e);
  }
  return t;
}

int run_budget(const RcoRunConfig& cfg) {
  return cfg.epochs_override >= 0 ? cfg.epochs_override : cfg.sgd.schedule.total_epochs;
}

// Drives one student run: owns weights, velocity, bookkeeping, and the teacher
// output caches for the active anchor. Stages are sequences of epochs under a
// fixed anchor; the anchor curriculum is supplied by the callers below.
class StudentTrainer {
 public:
  StudentTrainer(const RcoRunConfig& cfg, const Trajectory* teacher, const DataBundle& data,
                 std::string mode_name)
      : cfg_(cfg), teacher_(teacher), data_(data) {
    validate_network(cfg.student_spec);
    validate(cfg.sgd);
    if (!(cfg.distill.temperature > 0.0f)) {
      fail(errc::config_invalid, "distill temperature must be > 0");
    }
    if (!(cfg.distill.balance >= 0.0f)) fail(errc::config_invalid, "balance must be >= 0");
    if (cfg.batch_size < 1) fail(errc::config_invalid, "batch_size must be >= 1");
    if (data.train == nullptr || data.val == nullptr || data.test == nullptr) {
      fail(errc::invalid_argument, "train/val/test datasets are all required");
    }
    if (data.train->n() == 0 || data.val->n() == 0 || data.test->n() == 0) {
      fail(errc::invalid_argument, "train/val/test datasets must be nonempty");
    }
    if (cfg.loss != LossKind::kd) {
      if (teacher == nullptr) fail(errc::invalid_argument, "hint losses need a teacher");
      if (flat_feature_size(teacher->spec) != flat_feature_size(cfg.student_spec)) {
        fail(errc::config_invalid,
             "feature taps disagree: teacher " + std::to_string(flat_feature_size(teacher->spec)) +
                 " vs student " + std::to_string(flat_feature_size(cfg.student_spec)) +
                 "; give the student a dense adapter layer at its tap");
      }
    }
    if (cfg.init_override.has_value()) {
      check_params_shape(cfg.student_spec, *cfg.init_override, "init_override");
      params_ = *cfg.init_override;
    } else {
      params_ = init_params(cfg.student_spec, cfg.seed);
    }
    velocity_ = zeros_like(params_);
    report_.mode = std::move(mode_name);
    report_.seed = cfg.seed;
  }

  const Params& params() const { return params_; }

  void add_gs_table(HardnessTable table) { report_.gs_tables.push_back(std::move(table)); }

  void run_stage(int anchor_epoch, int epochs, const LrSchedule& schedule, bool continuous) {
    if (!continuous) velocity_ = zeros_like(params_);
    load_anchor(anchor_epoch);
    if (!init_recorded_) {
      report_.init_val_kl = eval_val_kl();
      report_.init_test_top1 = top1_accuracy(cfg_.student_spec, params_, *data_.test);
      if (cfg_.capture_student_every > 0) {
        report_.student_snapshots.push_back({0, params_});
      }
      init_recorded_ = true;
    }
    if (anchor_epoch > 0) report_.anchor_epochs.push_back(anchor_epoch);
    if (stage_index_ > 0) report_.switch_epochs.push_back(global_epoch_ + 1);
    if (cfg_.on_stage_start) cfg_.on_stage_start(stage_index_, anchor_epoch, params_);

    for (int e = 0; e < epochs; ++e) {
      const float lr = lr_at(schedule, continuous ? global_epoch_ : e);
      current_lr_ = lr;
      BatchIter iter(*data_.train, cfg_.batch_size,
                     derive_seed(cfg_.seed, seed_stream::batch,
                                 static_cast<uint64_t>(global_epoch_)));
      Batch batch;
      double loss_sum = 0.0;
      while (iter.next(batch)) {
        loss_sum += train_step(batch) * static_cast<double>(batch.labels.size());
      }
      ++global_epoch_;
      EpochRow row;
      row.epoch = global_epoch_;
      row.lr = lr;
      row.train_loss = static_cast<float>(loss_sum / static_cast<double>(data_.train->n()));
      row.anchor_epoch = anchor_epoch;
      row.val_kl = eval_val_kl();
      row.test_top1 = top1_accuracy(cfg_.student_spec, params_, *data_.test);
      report_.rows.push_back(row);
      if (cfg_.capture_student_every > 0 && global_epoch_ % cfg_.capture_student_every == 0) {
        report_.student_snapshots.push_back({global_epoch_, params_});
      }
    }
    if (cfg_.on_stage_end) cfg_.on_stage_end(stage_index_, anchor_epoch, params_);
    ++stage_index_;
  }

  RunReport finish() {
    if (report_.student_snapshots.empty() ||
        report_.student_snapshots.back().epoch != global_epoch_) {
      report_.student_snapshots.push_back({global_epoch_, params_});
    }
    report_.final_params = params_;
    return std::move(report_);
  }

 private:
  float train_step(const Batch& batch) {
    Activations acts = forward_cached(cfg_.student_spec, params_, batch.images);
    const Tensor& logits = acts.logits();
    ConstMatMap student_logits = logits.mat2d();
    std::span<const int> labels(batch.labels);

    LossGrad lg;
    const bool kl_term = cfg_.loss != LossKind::hint;
    if (anchor_epoch_ > 0 && kl_term) {
      Mat anchor_logits = gather_rows(anchor_train_logits_, batch.indices);
      lg = rco_step_loss(student_logits, anchor_logits, labels, cfg_.distill);
    } else {
      lg = ce_loss(student_logits, labels);
    }

    float total_loss = lg.loss;
    Tensor feature_grad;
    if (anchor_epoch_ > 0 && cfg_.loss != LossKind::kd) {
      const Tensor& feat = acts.acts[static_cast<size_t>(cfg_.student_spec.feature_tap) + 1];
      Mat anchor_features = gather_rows(anchor_train_features_, batch.indices);
      FeatureLossGrad fg = mimic_loss(feat.mat2d(), anchor_features);
      total_loss += cfg_.hint_weight * fg.loss;
      feature_grad = Tensor::zeros(feat.shape);
      MatMap(feature_grad.data.data(), fg.feature_grad.rows(), fg.feature_grad.cols()) =
          cfg_.hint_weight * fg.feature_grad;
    }

    Tensor logit_grad = Tensor::zeros(logits.shape);
    MatMap(logit_grad.data.data(), lg.logit_grad.rows(), lg.logit_grad.cols()) = lg.logit_grad;
    Params grads = backward_from(cfg_.student_spec, params_, acts, logit_grad, feature_grad);
    const float lr = current_lr_;
    sgd_step_inplace(params_, velocity_, grads, cfg_.sgd, lr);
    ++report_.total_steps;
    return total_loss;
  }

  void load_anchor(int anchor_epoch) {
    if (anchor_loaded_ && anchor_epoch == anchor_epoch_) return;
    anchor_epoch_ = anchor_epoch;
    anchor_loaded_ = true;
    if (anchor_epoch == 0) {
      // Label-only stages still report val_kl against the converged teacher
      // when one is available.
      if (teacher_ != nullptr) {
        anchor_val_logits_ = dataset_outputs(teacher_->spec,
                                             teacher_->final_checkpoint().params, *data_.val,
                                             false)
                                 .logits;
      } else {
        anchor_val_logits_.resize(0, 0);
      }
      anchor_train_logits_.resize(0, 0);
      anchor_train_features_.resize(0, 0);
      return;
    }
    const Checkpoint& anchor = teacher_->at_epoch(anchor_epoch);
    const bool want_features = cfg_.loss != LossKind::kd;
    DatasetOutputs train_out =
        dataset_outputs(teacher_->spec, anchor.params, *data_.train, want_features);
    anchor_train_logits_ = std::move(train_out.logits);
    anchor_train_features_ = std::move(train_out.features);
    anchor_val_logits_ =
        dataset_outputs(teacher_->spec, anchor.params, *data_.val, false).logits;
  }

  // Mean softened KL between the cached anchor outputs and the current
  // student over the validation set; matches strategy::hardness numerically
  // (same chunking, same accumulation).
  float eval_val_kl() {
    if (anchor_val_logits_.rows() == 0) return 0.0f;
    const Dataset& val = *data_.val;
    double total = 0.0;
    for (int start = 0; start < val.n(); start += kEvalChunk) {
      const int take = std::min(kEvalChunk, val.n() - start);
      std::vector<int> idx(static_cast<size_t>(take));
      for (int i = 0; i < take; ++i) idx[static_cast<size_t>(i)] = start + i;
      Batch chunk = gather(val, idx);
      ForwardResult ss = forward(cfg_.student_spec, params_, chunk.images);
      ProbBatch pt =
          softened_softmax(anchor_val_logits_.middleRows(start, take), cfg_.distill.temperature);
      ProbBatch ps = softened_softmax(ss.logits.mat2d(), cfg_.distill.temperature);
      total += static_cast<double>(kl_divergence(pt, ps)) * take;
    }
    return static_cast<float>(total / static_cast<double>(val.n()));
  }

  const RcoRunConfig& cfg_;
  const Trajectory* teacher_;
  DataBundle data_;
  RunReport report_;
  Params params_;
  Params velocity_;
  int global_epoch_ = 0;
  int stage_index_ = 0;
  bool init_recorded_ = false;
  int anchor_epoch_ = 0;
  bool anchor_loaded_ = false;
  Mat anchor_train_logits_;
  Mat anchor_train_features_;
  Mat anchor_val_logits_;
  float current_lr_ = 0.0f;
};

}  // namespace

RunReport train_one_stage(const RcoRunConfig& cfg, const Trajectory& teacher,
                          const std::vector<int>& anchor_epochs,
                          const std::vector<int>& switch_epochs, const DataBundle& data) {
  if (anchor_epochs.empty() || anchor_epochs.size() != switch_epochs.size()) {
    fail(errc::config_invalid, "one-stage runs need matching anchor and switch lists");
  }
  int prev_anchor = 0, prev_switch = 0;
  for (size_t k = 0; k < anchor_epochs.size(); ++k) {
    if (anchor_epochs[k] <= prev_anchor) {
      fail(errc::config_invalid, "anchor epochs must be strictly increasing");
    }
    if (switch_epochs[k] <= prev_switch) {
      fail(errc::config_invalid, "switch epochs must be strictly increasing");
    }
    prev_anchor = anchor_epochs[k];
    prev_switch = switch_epochs[k];
    teacher.at_epoch(anchor_epochs[k]);  // pre-flight: fail before any training
  }
  if (switch_epochs.back() != cfg.sgd.schedule.total_epochs) {
    fail(errc::config_invalid, "last switch epoch " + std::to_string(switch_epochs.back()) +
                                   " must equal the schedule total " +
                                   std::to_string(cfg.sgd.schedule.total_epochs));
  }

  const bool degenerate_kd =
      anchor_epochs.size() == 1 && anchor_epochs[0] == teacher.final_checkpoint().epoch;
  StudentTrainer trainer(cfg, &teacher, data, degenerate_kd ? "kd" : "eei_one_stage");
  int start = 0;
  for (size_t k = 0; k < anchor_epochs.size(); ++k) {
    trainer.run_stage(anchor_epochs[k], switch_epochs[k] - start, cfg.sgd.schedule, true);
    start = switch_epochs[k];
  }
  return trainer.finish();
}

RunReport train_rco(const RcoRunConfig& cfg, const Trajectory& teacher,
                    const AnchorSchedule& schedule, const DataBundle& data) {
  if (teacher.checkpoints.empty()) fail(errc::missing_input, "teacher trajectory is empty");
  if (schedule.mode == ScheduleMode::one_stage_eei) {
    return train_one_stage(cfg, teacher, schedule.anchor_epochs, schedule.switch_epochs, data);
  }

  const int final_epoch = teacher.final_checkpoint().epoch;
  const int stage_epochs =
      schedule.mode == ScheduleMode::gs
          ? (cfg.gs.stage_epochs > 0 ? cfg.gs.stage_epochs : run_budget(cfg))
          : (schedule.stage_epochs > 0 ? schedule.stage_epochs : run_budget(cfg));
  if (stage_epochs > cfg.sgd.schedule.total_epochs) {
    fail(errc::config_invalid, "stage budget exceeds the learning-rate schedule");
  }
  const LrSchedule stage_schedule = truncate_schedule(cfg.sgd.schedule, stage_epochs);

  if (schedule.mode == ScheduleMode::gs) {
    if (!(cfg.gs.delta > 0.0f)) fail(errc::config_invalid, "greedy-search delta must be > 0");
    const int count = static_cast<int>(teacher.checkpoints.size());
    StudentTrainer trainer(cfg, &teacher, data, count == 1 ? "kd" : "gs");
    int idx = 0;
    for (;;) {
      trainer.run_stage(teacher.checkpoints[static_cast<size_t>(idx)].epoch, stage_epochs,
                        stage_schedule, false);
      if (idx == count - 1) break;
      HardnessTable table;
      idx = greedy_next_anchor(cfg.student_spec, trainer.params(), teacher, idx, cfg.gs,
                               *data.val, cfg.distill.temperature, &table);
      trainer.add_gs_table(std::move(table));
    }
    return trainer.finish();
  }

  if (schedule.anchor_epochs.empty()) {
    fail(errc::config_invalid, "anchor schedule is empty");
  }
  int prev = 0;
  for (int e : schedule.anchor_epochs) {
    if (e <= prev) fail(errc::config_invalid, "anchor epochs must be strictly increasing");
    prev = e;
    teacher.at_epoch(e);  // pre-flight: fail before any training
  }

  const bool degenerate_kd =
      schedule.anchor_epochs.size() == 1 && schedule.anchor_epochs[0] == final_epoch;
  StudentTrainer trainer(cfg, &teacher, data,
                         degenerate_kd ? "kd" : schedule_mode_name(schedule.mode));
  for (int anchor : schedule.anchor_epochs) {
    trainer.run_stage(anchor, stage_epochs, stage_schedule, false);
  }
  return trainer.finish();
}

RunReport train_kd_baseline(const RcoRunConfig& cfg, const Trajectory& teacher,
                            const DataBundle& data) {
  AnchorSchedule schedule;
  schedule.mode = ScheduleMode::kd;
  if (teacher.checkpoints.empty()) fail(errc::missing_input, "teacher trajectory is empty");
  schedule.anchor_epochs = {teacher.final_checkpoint().epoch};
  return train_rco(cfg, teacher, schedule, data);
}

RunReport train_softmax_baseline(const RcoRunConfig& cfg, const Trajectory* teacher,
                                 const DataBundle& data) {
  StudentTrainer trainer(cfg, teacher, data, "softmax");
  trainer.run_stage(0, run_budget(cfg), cfg.sgd.schedule, true);
  return trainer.finish();
}

}  // namespace rco

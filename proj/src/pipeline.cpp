#include "rco/pipeline.hpp"

#include "rco/analysis.hpp"
#include "rco/csv.hpp"
#include "rco/errors.hpp"
#include "rco/json_io.hpp"
#include "rco/strategy.hpp"
#include "rco/trajectory.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>
#include <vector>

namespace fs = std::filesystem;

namespace rco {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string seed_dir_name(uint64_t seed) { return "seed" + std::to_string(seed); }

void run_seeds(const std::vector<uint64_t>& seeds, int threads,
               const std::function<void(uint64_t)>& fn) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(seeds.size())));
  if (workers == 1) {
    for (uint64_t seed : seeds) fn(seed);
    return;
  }
  std::atomic<size_t> next{0};
  std::mutex mu;
  std::exception_ptr first_error;
  auto work = [&] {
    for (size_t i = next.fetch_add(1); i < seeds.size(); i = next.fetch_add(1)) {
      try {
        fn(seeds[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

Checkpoint student_checkpoint(const RunReport& report, const NetworkSpec& spec, int epoch,
                              const Params& params) {
  Checkpoint c;
  c.epoch = epoch;
  c.params = params;
  if (epoch >= 1 && epoch <= static_cast<int>(report.rows.size())) {
    c.lr_at_capture = report.rows[epoch - 1].lr;
    c.train_loss = report.rows[epoch - 1].train_loss;
  }
  c.spec_hash = spec_digest(spec);
  c.seed = report.seed;
  return c;
}

void write_arm(const RunReport& report, const NetworkSpec& student_spec, bool keep_snapshots,
               const fs::path& dir) {
  fs::create_directories(dir);
  write_json_file(report_to_json(report), (dir / "report.json").string());
  report.write_epochs_csv((dir / "epochs.csv").string());
  const int final_epoch = report.rows.empty() ? 0 : report.rows.back().epoch;
  save_checkpoint(student_checkpoint(report, student_spec, final_epoch, report.final_params),
                  (dir / "student_final.ckpt").string());
  if (keep_snapshots) {
    for (const StudentSnapshot& s : report.student_snapshots) {
      char name[40];
      std::snprintf(name, sizeof name, "student_epoch_%05d.ckpt", s.epoch);
      save_checkpoint(student_checkpoint(report, student_spec, s.epoch, s.params),
                      (dir / name).string());
    }
  }
  for (size_t i = 0; i < report.gs_tables.size(); ++i) {
    report.gs_tables[i].write_csv((dir / ("hardness_step" + std::to_string(i + 1) + ".csv")).string());
  }
}

// --- analyze helpers ---------------------------------------------------------

struct ArmRun {
  std::string mode;
  uint64_t seed = 0;
  fs::path dir;
};

std::vector<ArmRun> discover_runs(const fs::path& distill_dir) {
  std::vector<ArmRun> runs;
  if (!fs::exists(distill_dir)) return runs;
  for (const fs::directory_entry& mode_entry : fs::directory_iterator(distill_dir)) {
    if (!mode_entry.is_directory()) continue;
    for (const fs::directory_entry& seed_entry : fs::directory_iterator(mode_entry.path())) {
      if (!seed_entry.is_directory()) continue;
      const std::string name = seed_entry.path().filename().string();
      if (name.rfind("seed", 0) != 0) continue;
      uint64_t seed = 0;
      try {
        seed = std::stoull(name.substr(4));
      } catch (const std::exception&) {
        continue;
      }
      if (!fs::exists(seed_entry.path() / "report.json")) continue;
      runs.push_back({mode_entry.path().filename().string(), seed, seed_entry.path()});
    }
  }
  std::sort(runs.begin(), runs.end(), [](const ArmRun& a, const ArmRun& b) {
    return a.mode != b.mode ? a.mode < b.mode : a.seed < b.seed;
  });
  return runs;
}

float median(std::vector<float> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5f * (v[n / 2 - 1] + v[n / 2]);
}

struct RunSummary {
  float train_loss = 0.0f;
  float val_kl = 0.0f;
  float test_top1 = 0.0f;
};

RunSummary read_run_summary(const fs::path& dir) {
  const nlohmann::json j = read_json_file((dir / "report.json").string());
  RunSummary s;
  try {
    const nlohmann::json& f = j.at("final");
    s.train_loss = f.at("train_loss").get<float>();
    s.val_kl = f.at("val_kl").get<float>();
    s.test_top1 = f.at("test_top1").get<float>();
  } catch (const nlohmann::json::exception& e) {
    fail(errc::bad_format, dir.string() + "/report.json: " + e.what());
  }
  return s;
}

void write_summary_csv(const std::vector<ArmRun>& runs, const fs::path& path) {
  CsvWriter csv({"mode", "seed", "train_loss", "val_kl", "test_top1"});
  size_t i = 0;
  while (i < runs.size()) {
    const std::string& mode = runs[i].mode;
    std::vector<float> losses, kls, top1s;
    for (; i < runs.size() && runs[i].mode == mode; ++i) {
      const RunSummary s = read_run_summary(runs[i].dir);
      csv.add_row({mode, std::to_string(runs[i].seed), format_float(s.train_loss),
                   format_float(s.val_kl), format_float(s.test_top1)});
      losses.push_back(s.train_loss);
      kls.push_back(s.val_kl);
      top1s.push_back(s.test_top1);
    }
    csv.add_row({mode, "median", format_float(median(losses)), format_float(median(kls)),
                 format_float(median(top1s))});
  }
  csv.write(path.string());
}

Params load_student_params(const fs::path& ckpt, const NetworkSpec& spec) {
  return load_checkpoint(ckpt.string(), spec_digest(spec)).params;
}

/// Snapshot files sorted by captured epoch.
std::vector<std::pair<int, fs::path>> snapshot_files(const fs::path& dir) {
  std::vector<std::pair<int, fs::path>> out;
  for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("student_epoch_", 0) != 0 || name.size() < 20) continue;
    out.emplace_back(std::atoi(name.substr(14, 5).c_str()), entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void note_skipped(const char* what, const std::exception& e) {
  std::fprintf(stderr, "[analyze] %s skipped: %s\n", what, e.what());
}

}  // namespace

void echo_config(const ExperimentConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_json_file(effective_config_json(cfg), (fs::path(out_dir) / "config.json").string());
}

void cmd_train_teacher(const ExperimentConfig& cfg, const std::string& out_dir) {
  echo_config(cfg, out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  LoadedData data = load_data(cfg.data);
  TeacherTrainConfig tcfg;
  tcfg.sgd = cfg.teacher.sgd;
  tcfg.epochs = cfg.teacher.epochs;
  tcfg.batch_size = cfg.teacher.batch_size;
  tcfg.seed = cfg.teacher.seed;
  Trajectory trajectory = train_teacher(cfg.teacher.net, tcfg, data.train, cfg.teacher.capture_every);
  save_trajectory(trajectory, (fs::path(out_dir) / "teacher").string());
  const Checkpoint& last = trajectory.final_checkpoint();
  std::fprintf(stderr, "[teacher] %zu checkpoints over %d epochs, final top1 %.4f, %.1fs\n",
               trajectory.checkpoints.size(), cfg.teacher.epochs,
               top1_accuracy(cfg.teacher.net, last.params, data.test), seconds_since(t0));
}

void cmd_distill(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
  echo_config(cfg, out_dir);
  const Trajectory teacher = load_trajectory((fs::path(out_dir) / "teacher").string());
  const LoadedData data = load_data(cfg.data);
  const DataBundle bundle = data.bundle();
  const int teacher_epochs = teacher.final_checkpoint().epoch;

  run_seeds(cfg.seeds, threads, [&](uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const RcoRunConfig run = student_run_config(cfg, seed);
    RunReport report;
    if (cfg.strategy.mode == StrategyMode::softmax) {
      report = train_softmax_baseline(run, &teacher, bundle);
    } else {
      const AnchorSchedule schedule =
          build_schedule(cfg.strategy, teacher_epochs, cfg.student.epochs);
      report = train_rco(run, teacher, schedule, bundle);
    }
    const fs::path dir = fs::path(out_dir) / "distill" / report.mode / seed_dir_name(seed);
    write_arm(report, cfg.student.net, cfg.student.capture_every > 0, dir);
    std::fprintf(stderr, "[distill] %s seed %llu: top1 %.4f, val_kl %.5f, %.1fs\n",
                 report.mode.c_str(), static_cast<unsigned long long>(seed),
                 report.rows.empty() ? 0.0f : report.rows.back().test_top1,
                 report.rows.empty() ? report.init_val_kl : report.rows.back().val_kl,
                 seconds_since(t0));
  });
}

void cmd_analyze(const ExperimentConfig& cfg, const std::string& out_dir) {
  echo_config(cfg, out_dir);
  const fs::path out(out_dir);
  const std::vector<ArmRun> runs = discover_runs(out / "distill");
  if (runs.empty()) {
    fail(errc::missing_input, "no distillation runs under " + (out / "distill").string());
  }
  const fs::path analysis = out / "analysis";
  fs::create_directories(analysis);
  const float tau =
      cfg.analysis.tau > 0.0f ? cfg.analysis.tau : cfg.student.distill.temperature;

  write_summary_csv(runs, analysis / "summary.csv");

  Trajectory teacher;
  bool have_teacher = false;
  try {
    teacher = load_trajectory((out / "teacher").string());
    have_teacher = true;
  } catch (const std::exception& e) {
    note_skipped("teacher-dependent diagnostics", e);
  }
  LoadedData data = load_data(cfg.data);

  if (have_teacher) {
    for (const ArmRun& run : runs) {
      const std::string tag = run.mode + "_" + seed_dir_name(run.seed);
      try {
        const Params params = load_student_params(run.dir / "student_final.ckpt", cfg.student.net);
        kl_curve(cfg.student.net, params, teacher, data.val, tau)
            .write_csv((analysis / ("kl_curve_" + tag + ".csv")).string());
      } catch (const std::exception& e) {
        note_skipped(("kl_curve " + tag).c_str(), e);
      }
    }
  }

  CsvWriter explained({"trajectory", "explained_x", "explained_y"});
  bool any_projection = false;
  if (have_teacher) {
    try {
      std::vector<Params> points;
      std::vector<int> epochs;
      for (const Checkpoint& c : teacher.checkpoints) {
        points.push_back(c.params);
        epochs.push_back(c.epoch);
      }
      const TrajectoryProjection proj = pca_trajectory(points, epochs);
      proj.write_csv((analysis / "pca_trajectory_teacher.csv").string());
      explained.add_row({"teacher", format_float(proj.explained_x), format_float(proj.explained_y)});
      any_projection = true;
    } catch (const std::exception& e) {
      note_skipped("pca_trajectory teacher", e);
    }
  }
  for (const ArmRun& run : runs) {
    const std::vector<std::pair<int, fs::path>> snaps = snapshot_files(run.dir);
    if (snaps.size() < 3) continue;
    const std::string tag = run.mode + "_" + seed_dir_name(run.seed);
    try {
      std::vector<Params> points;
      std::vector<int> epochs;
      for (const auto& [epoch, path] : snaps) {
        points.push_back(load_student_params(path, cfg.student.net));
        epochs.push_back(epoch);
      }
      const TrajectoryProjection proj = pca_trajectory(points, epochs);
      proj.write_csv((analysis / ("pca_trajectory_" + tag + ".csv")).string());
      explained.add_row({tag, format_float(proj.explained_x), format_float(proj.explained_y)});
      any_projection = true;
    } catch (const std::exception& e) {
      note_skipped(("pca_trajectory " + tag).c_str(), e);
    }
  }
  if (any_projection) explained.write((analysis / "pca_explained.csv").string());

  // Noise robustness pairs the first two arms at their lowest shared seed.
  std::vector<std::string> modes;
  for (const ArmRun& run : runs) {
    if (modes.empty() || modes.back() != run.mode) modes.push_back(run.mode);
  }
  if (modes.size() < 2) {
    std::fprintf(stderr, "[analyze] noise_sweep skipped: needs two arms, found %zu\n",
                 modes.size());
    return;
  }
  auto seeds_of = [&](const std::string& mode) {
    std::vector<uint64_t> seeds;
    for (const ArmRun& run : runs) {
      if (run.mode == mode) seeds.push_back(run.seed);
    }
    return seeds;
  };
  const std::vector<uint64_t> seeds_a = seeds_of(modes[0]);
  const std::vector<uint64_t> seeds_b = seeds_of(modes[1]);
  uint64_t shared = 0;
  bool found = false;
  for (uint64_t s : seeds_a) {
    if (std::find(seeds_b.begin(), seeds_b.end(), s) != seeds_b.end()) {
      shared = s;
      found = true;
      break;
    }
  }
  if (!found) {
    std::fprintf(stderr, "[analyze] noise_sweep skipped: arms %s and %s share no seed\n",
                 modes[0].c_str(), modes[1].c_str());
    return;
  }
  const std::string tag = modes[0] + "_vs_" + modes[1] + "_" + seed_dir_name(shared);
  try {
    const fs::path base = out / "distill";
    const Params a =
        load_student_params(base / modes[0] / seed_dir_name(shared) / "student_final.ckpt",
                            cfg.student.net);
    const Params b =
        load_student_params(base / modes[1] / seed_dir_name(shared) / "student_final.ckpt",
                            cfg.student.net);
    noise_sweep(cfg.student.net, a, cfg.student.net, b, data.test, cfg.analysis.noise_deltas,
                shared)
        .write_csv((analysis / ("noise_sweep_" + tag + ".csv")).string());
  } catch (const std::exception& e) {
    note_skipped(("noise_sweep " + tag).c_str(), e);
  }
}

void cmd_gen_data(const DataConfig& data, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const auto [train, test] = synth_train_test(data);
  const fs::path out(out_dir);
  write_idx(train, (out / "train-images-idx3-ubyte").string(),
            (out / "train-labels-idx1-ubyte").string());
  write_idx(test, (out / "test-images-idx3-ubyte").string(),
            (out / "test-labels-idx1-ubyte").string());
  std::fprintf(stderr, "[gen-data] %zu train + %zu test images (%dx%d) in %s\n",
               train.labels.size(), test.labels.size(), train.image_size, train.image_size,
               out_dir.c_str());
}

void cmd_all(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
  cmd_train_teacher(cfg, out_dir);
  cmd_distill(cfg, out_dir, threads);
  cmd_analyze(cfg, out_dir);
}

}  // namespace rco

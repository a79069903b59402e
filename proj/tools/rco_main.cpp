#include "rco/errors.hpp"
#include "rco/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

namespace {

int exit_code_for(const rco::error& e) {
  switch (e.category()) {
    case rco::error_category::config: return 2;
    case rco::error_category::data: return 3;
    case rco::error_category::compute: return 4;
  }
  return 4;
}

struct Options {
  std::string config_path;
  std::string out_dir = "out";
  uint64_t seed_override = 0;
  bool has_seed_override = false;
  int threads = 1;
};

void add_common(CLI::App* cmd, Options& opt, bool with_workers) {
  cmd->add_option("-c,--config", opt.config_path, "experiment config (JSON)")->required();
  cmd->add_option("-o,--out", opt.out_dir, "output directory (default: out)");
  if (with_workers) {
    cmd->add_option("--seed-override", opt.seed_override,
                    "run only this seed instead of the config's list")
        ->each([&opt](const std::string&) { opt.has_seed_override = true; });
    cmd->add_option("--threads", opt.threads, "parallel seed workers (default: 1)")
        ->check(CLI::PositiveNumber);
  }
}

rco::ExperimentConfig load_for(const Options& opt) {
  rco::ExperimentConfig cfg = rco::load_experiment_config(opt.config_path);
  if (opt.has_seed_override) cfg.seeds = {opt.seed_override};
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distillation workbench: teacher trajectories, anchored students, diagnostics"};
  app.require_subcommand(1);

  Options opt;
  CLI::App* train = app.add_subcommand("train-teacher", "train the teacher and store its trajectory");
  add_common(train, opt, false);
  CLI::App* distill = app.add_subcommand("distill", "train students against the stored trajectory");
  add_common(distill, opt, true);
  CLI::App* analyze = app.add_subcommand("analyze", "produce CSV diagnostics from stored runs");
  add_common(analyze, opt, false);
  CLI::App* all = app.add_subcommand("all", "train-teacher, distill, analyze");
  add_common(all, opt, true);
  CLI::App* gen = app.add_subcommand("gen-data", "export the synthetic dataset as IDX files");
  add_common(gen, opt, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) {
      rco::cmd_train_teacher(load_for(opt), opt.out_dir);
    } else if (distill->parsed()) {
      rco::cmd_distill(load_for(opt), opt.out_dir, opt.threads);
    } else if (analyze->parsed()) {
      rco::cmd_analyze(load_for(opt), opt.out_dir);
    } else if (all->parsed()) {
      rco::cmd_all(load_for(opt), opt.out_dir, opt.threads);
    } else if (gen->parsed()) {
      rco::cmd_gen_data(rco::load_experiment_config(opt.config_path).data, opt.out_dir);
    }
  } catch (const rco::error& e) {
    std::fprintf(stderr, "error (%s): %s\n", rco::errc_name(e.code()), e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}

#include "rco/json_io.hpp"

#include "rco/errors.hpp"

#include <fstream>

namespace rco {

namespace {

template <typename T>
T get_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) {
    fail(errc::config_invalid, std::string("missing field \"") + key + "\"");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(errc::config_invalid, std::string("field \"") + key + "\" has the wrong type");
  }
}

// Absent keys keep the struct default; present keys must have the right type.
template <typename T>
void opt_field(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = get_field<T>(j, key);
}

}  // namespace

void to_json(nlohmann::json& j, const LayerSpec& s) {
  j = nlohmann::json{{"kind", layer_kind_name(s.kind)}};
  if (s.kind == LayerKind::dense || s.kind == LayerKind::conv3x3) {
    j["fan_in"] = s.fan_in;
    j["fan_out"] = s.fan_out;
  }
}

void from_json(const nlohmann::json& j, LayerSpec& s) {
  s.kind = layer_kind_from_name(get_field<std::string>(j, "kind"));
  if (s.kind == LayerKind::dense || s.kind == LayerKind::conv3x3) {
    s.fan_in = get_field<int>(j, "fan_in");
    s.fan_out = get_field<int>(j, "fan_out");
  } else {
    s.fan_in = 0;
    s.fan_out = 0;
  }
}

void to_json(nlohmann::json& j, const NetworkSpec& s) {
  j = nlohmann::json{{"input", s.input_shape},
                     {"layers", s.layers},
                     {"num_classes", s.num_classes},
                     {"feature_tap", s.feature_tap}};
}

void from_json(const nlohmann::json& j, NetworkSpec& s) {
  s.input_shape = get_field<std::vector<int>>(j, "input");
  s.layers = get_field<std::vector<LayerSpec>>(j, "layers");
  s.num_classes = get_field<int>(j, "num_classes");
  s.feature_tap = 0;
  opt_field(j, "feature_tap", s.feature_tap);
}

void to_json(nlohmann::json& j, const LrSchedule& s) {
  j = nlohmann::json{{"initial", s.initial_lr},
                     {"drop_epochs", s.drop_epochs},
                     {"drop_factor", s.drop_factor},
                     {"total_epochs", s.total_epochs}};
}

void from_json(const nlohmann::json& j, LrSchedule& s) {
  s = LrSchedule{};
  opt_field(j, "initial", s.initial_lr);
  opt_field(j, "drop_epochs", s.drop_epochs);
  opt_field(j, "drop_factor", s.drop_factor);
  opt_field(j, "total_epochs", s.total_epochs);
}

void to_json(nlohmann::json& j, const SgdConfig& s) {
  j = nlohmann::json{
      {"momentum", s.momentum}, {"weight_decay", s.weight_decay}, {"lr", s.schedule}};
}

void from_json(const nlohmann::json& j, SgdConfig& s) {
  s = SgdConfig{};
  opt_field(j, "momentum", s.momentum);
  opt_field(j, "weight_decay", s.weight_decay);
  opt_field(j, "lr", s.schedule);
}

void to_json(nlohmann::json& j, const DistillConfig& s) {
  j = nlohmann::json{{"temperature", s.temperature},
                     {"balance", s.balance},
                     {"kl_grad_scale", s.kl_grad_scale}};
}

void from_json(const nlohmann::json& j, DistillConfig& s) {
  s = DistillConfig{};
  opt_field(j, "temperature", s.temperature);
  opt_field(j, "balance", s.balance);
  opt_field(j, "kl_grad_scale", s.kl_grad_scale);
}

void to_json(nlohmann::json& j, const SynthConfig& s) {
  j = nlohmann::json{{"classes", s.classes},
                     {"image_size", s.image_size},
                     {"count", s.count},
                     {"noise", s.noise},
                     {"max_shift", s.max_shift},
                     {"amplitude_jitter", s.amplitude_jitter},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SynthConfig& s) {
  s = SynthConfig{};
  opt_field(j, "classes", s.classes);
  opt_field(j, "image_size", s.image_size);
  opt_field(j, "count", s.count);
  opt_field(j, "noise", s.noise);
  opt_field(j, "max_shift", s.max_shift);
  opt_field(j, "amplitude_jitter", s.amplitude_jitter);
  opt_field(j, "seed", s.seed);
}

nlohmann::json report_to_json(const RunReport& report) {
  nlohmann::json j;
  j["mode"] = report.mode;
  j["seed"] = report.seed;
  j["anchor_epochs"] = report.anchor_epochs;
  j["switch_epochs"] = report.switch_epochs;
  j["total_steps"] = report.total_steps;
  j["epoch_count"] = report.rows.size();
  j["init"] = {{"val_kl", report.init_val_kl}, {"test_top1", report.init_test_top1}};
  if (!report.rows.empty()) {
    const EpochRow& last = report.rows.back();
    j["final"] = {{"val_kl", last.val_kl},
                  {"test_top1", last.test_top1},
                  {"train_loss", last.train_loss}};
  } else {
    j["final"] = {{"val_kl", report.init_val_kl},
                  {"test_top1", report.init_test_top1},
                  {"train_loss", 0.0f}};
  }
  return j;
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(errc::io_failure, "cannot open " + path + " for writing");
  const std::string text = j.dump(2) + "\n";
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(errc::io_failure, "write failed for " + path);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io_failure, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(errc::bad_format, path + ": " + e.what());
  }
  return j;
}

}  // namespace rco

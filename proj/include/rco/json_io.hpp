#pragma once

#include "rco/data.hpp"
#include "rco/distill.hpp"
#include "rco/losses.hpp"
#include "rco/net.hpp"
#include "rco/optim.hpp"

#include <json.hpp>

#include <string>

namespace rco {

// ADL serializers so nlohmann::json converts these directly. from_json calls
// throw rco::error with errc::config_invalid on malformed fields.

void to_json(nlohmann::json& j, const LayerSpec& s);
void from_json(const nlohmann::json& j, LayerSpec& s);

void to_json(nlohmann::json& j, const NetworkSpec& s);
void from_json(const nlohmann::json& j, NetworkSpec& s);

void to_json(nlohmann::json& j, const LrSchedule& s);
void from_json(const nlohmann::json& j, LrSchedule& s);

void to_json(nlohmann::json& j, const SgdConfig& s);
void from_json(const nlohmann::json& j, SgdConfig& s);

void to_json(nlohmann::json& j, const DistillConfig& s);
void from_json(const nlohmann::json& j, DistillConfig& s);

void to_json(nlohmann::json& j, const SynthConfig& s);
void from_json(const nlohmann::json& j, SynthConfig& s);

/// Run summary without the per-epoch rows (those live in the CSV next to it).
nlohmann::json report_to_json(const RunReport& report);

/// Sorted keys, 2-space indent, trailing newline; identical values always
/// produce identical bytes.
void write_json_file(const nlohmann::json& j, const std::string& path);

nlohmann::json read_json_file(const std::string& path);

}  // namespace rco

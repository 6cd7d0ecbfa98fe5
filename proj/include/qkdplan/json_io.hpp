#pragma once

#include <filesystem>

#include <json.hpp>

#include "qkdplan/link_model.hpp"
#include "qkdplan/planner.hpp"
#include "qkdplan/protocol.hpp"

namespace qkdplan {

struct Config {
  LinkParams link;
  SecurityParams security;
};

/// Reads link and security fields either from "link"/"security" sub-objects
/// or from the top level. Missing fields keep their defaults; "mu" sets
/// eta_e = 1 - exp(-mu) when eta_e itself is absent.
Config config_from_json(const nlohmann::json& doc);
Config load_config(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const LinkParams& p);
void to_json(nlohmann::json& j, const SecurityParams& p);
void to_json(nlohmann::json& j, const ChannelDerived& c);
void to_json(nlohmann::json& j, const Strategy& s);
void to_json(nlohmann::json& j, const Plan& p);

struct RunRecordFormat {
  bool emit_keys = false;
  std::size_t max_key_bits = 4096;  // final_key omitted above this unless emit_keys
  bool include_post_time = false;
};

nlohmann::json run_record_json(const RunRecord& r, const RunRecordFormat& fmt = {});

}  // namespace qkdplan

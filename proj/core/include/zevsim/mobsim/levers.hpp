#pragma once

#include <nlohmann/json.hpp>

#include "zevsim/mobsim/world.hpp"

namespace zevsim::mobsim {

struct PolicyLevers {
  double congestion_price = 0.0;           // USD per trip touching a priced zone
  double ev_incentive_usd = 0.0;
  double transit_headway_multiplier = 1.0;
  double parking_search_minutes = 6.0;
  int charger_ports_added = 0;             // per hub

  bool operator==(const PolicyLevers&) const = default;
};

struct LeverBounds {
  double max_congestion_price = 50.0;
  double max_ev_incentive_usd = 20'000.0;
  double min_headway_multiplier = 0.25;
  double max_headway_multiplier = 4.0;
  double max_parking_search_minutes = 60.0;
  int max_charger_ports_added = 50;
};

/// Throws InvalidLeverValue naming the first offending lever.
void validate(const PolicyLevers& levers, const LeverBounds& bounds = {});

PolicyLevers default_levers(const WorldConfig& config);

nlohmann::json to_json(const PolicyLevers& levers);
nlohmann::json to_json(const LeverBounds& bounds);
/// Fields present in `patch` override `base`; unknown keys are rejected.
PolicyLevers levers_from_json(const nlohmann::json& patch, const PolicyLevers& base);
LeverBounds lever_bounds_from_json(const nlohmann::json& j);

struct LeverPreset {
  std::string name;
  PolicyLevers levers;
  double target_vmt_ratio = 1.0;  // against the same world and seed with no levers
};

/// {"name", "levers": {...}, "target_vmt_ratio"}; levers patch `base`.
LeverPreset load_lever_preset(const std::filesystem::path& path, const PolicyLevers& base);

}  // namespace zevsim::mobsim

#include "zevsim/mobsim/levers.hpp"

#include <cmath>

#include "zevsim/error.hpp"
#include "zevsim/io.hpp"

namespace zevsim::mobsim {

using nlohmann::json;

void validate(const PolicyLevers& l, const LeverBounds& b) {
  auto bad = [](const std::string& what) { throw Error(Errc::InvalidLeverValue, what); };
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(l.congestion_price) || l.congestion_price < 0.0 || l.congestion_price > b.max_congestion_price)
    bad("congestion_price must be in [0, " + std::to_string(b.max_congestion_price) + "]");
  if (!finite(l.ev_incentive_usd) || l.ev_incentive_usd < 0.0 || l.ev_incentive_usd > b.max_ev_incentive_usd)
    bad("ev_incentive_usd must be in [0, " + std::to_string(b.max_ev_incentive_usd) + "]");
  if (!finite(l.transit_headway_multiplier) || !(l.transit_headway_multiplier > 0.0) ||
      l.transit_headway_multiplier < b.min_headway_multiplier || l.transit_headway_multiplier > b.max_headway_multiplier)
    bad("transit_headway_multiplier must be in [" + std::to_string(b.min_headway_multiplier) + ", " +
        std::to_string(b.max_headway_multiplier) + "]");
  if (!finite(l.parking_search_minutes) || l.parking_search_minutes < 0.0 ||
      l.parking_search_minutes > b.max_parking_search_minutes)
    bad("parking_search_minutes must be in [0, " + std::to_string(b.max_parking_search_minutes) + "]");
  if (l.charger_ports_added < 0 || l.charger_ports_added > b.max_charger_ports_added)
    bad("charger_ports_added must be in [0, " + std::to_string(b.max_charger_ports_added) + "]");
}

PolicyLevers default_levers(const WorldConfig& config) {
  PolicyLevers l;
  l.parking_search_minutes = config.default_parking_search_minutes;
  return l;
}

json to_json(const PolicyLevers& l) {
  return {{"congestion_price", l.congestion_price},
          {"ev_incentive_usd", l.ev_incentive_usd},
          {"transit_headway_multiplier", l.transit_headway_multiplier},
          {"parking_search_minutes", l.parking_search_minutes},
          {"charger_ports_added", l.charger_ports_added}};
}

json to_json(const LeverBounds& b) {
  return {{"congestion_price", {{"min", 0.0}, {"max", b.max_congestion_price}}},
          {"ev_incentive_usd", {{"min", 0.0}, {"max", b.max_ev_incentive_usd}}},
          {"transit_headway_multiplier", {{"min", b.min_headway_multiplier}, {"max", b.max_headway_multiplier}}},
          {"parking_search_minutes", {{"min", 0.0}, {"max", b.max_parking_search_minutes}}},
          {"charger_ports_added", {{"min", 0}, {"max", b.max_charger_ports_added}}}};
}

PolicyLevers levers_from_json(const json& patch, const PolicyLevers& base) {
  if (!patch.is_object()) throw Error(Errc::InvalidLeverValue, "levers must be a JSON object");
  PolicyLevers l = base;
  for (const auto& [key, value] : patch.items()) {
    if (!value.is_number()) throw Error(Errc::InvalidLeverValue, key + " must be a number");
    if (key == "congestion_price") l.congestion_price = value.get<double>();
    else if (key == "ev_incentive_usd") l.ev_incentive_usd = value.get<double>();
    else if (key == "transit_headway_multiplier") l.transit_headway_multiplier = value.get<double>();
    else if (key == "parking_search_minutes") l.parking_search_minutes = value.get<double>();
    else if (key == "charger_ports_added") {
      double v = value.get<double>();
      if (v != std::floor(v)) throw Error(Errc::InvalidLeverValue, "charger_ports_added must be an integer");
      l.charger_ports_added = static_cast<int>(v);
    } else
      throw Error(Errc::InvalidLeverValue, "unknown lever '" + key + "'");
  }
  return l;
}

LeverBounds lever_bounds_from_json(const json& j) {
  LeverBounds b;
  auto max_of = [&](const char* key, auto fallback) {
    return j.contains(key) ? j[key].value("max", fallback) : fallback;
  };
  b.max_congestion_price = max_of("congestion_price", b.max_congestion_price);
  b.max_ev_incentive_usd = max_of("ev_incentive_usd", b.max_ev_incentive_usd);
  b.max_headway_multiplier = max_of("transit_headway_multiplier", b.max_headway_multiplier);
  if (j.contains("transit_headway_multiplier"))
    b.min_headway_multiplier = j["transit_headway_multiplier"].value("min", b.min_headway_multiplier);
  b.max_parking_search_minutes = max_of("parking_search_minutes", b.max_parking_search_minutes);
  b.max_charger_ports_added = max_of("charger_ports_added", b.max_charger_ports_added);
  return b;
}

LeverPreset load_lever_preset(const std::filesystem::path& path, const PolicyLevers& base) {
  json j = json::parse(io::read_text(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::ParseError, path.string() + ": invalid JSON");
  LeverPreset p;
  p.name = j.value("name", path.stem().string());
  p.levers = levers_from_json(j.value("levers", json::object()), base);
  p.target_vmt_ratio = j.value("target_vmt_ratio", 1.0);
  validate(p.levers);
  return p;
}

}  // namespace zevsim::mobsim

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zevsim/equity.hpp"

namespace zevsim::mobsim {

inline constexpr int kMinutesPerDay = 1440;
inline constexpr std::size_t kMaxZones = 50;
inline constexpr std::size_t kMaxAgents = 50'000;

struct Zone {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  double population = 0.0;
  double employment = 0.0;
  std::string tract_id;
};

struct NetworkEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  double distance_miles = 0.0;
  double free_flow_minutes = 0.0;
  double capacity_vph = 0.0;
};

/// Headway-based service derived from the GTFS-lite feed. Runs both ways over
/// the stop sequence with the same headway.
struct TransitRoute {
  std::string id;
  std::string name;
  std::vector<std::size_t> stop_zones;
  std::vector<double> stop_offsets;  // minutes from the first stop, forward direction
  double first_departure = 0.0;      // minutes after midnight, from either terminal
  double last_departure = 0.0;
  double headway = 0.0;              // minutes

  std::optional<std::size_t> stop_index(std::size_t zone) const;
  double running_time() const { return stop_offsets.empty() ? 0.0 : stop_offsets.back(); }
  /// Earliest departure at stop `from` toward stop `to` not before `time`;
  /// nullopt when service has ended.
  std::optional<double> next_departure(std::size_t from, std::size_t to, double time, double headway_multiplier) const;
  double in_vehicle_minutes(std::size_t from, std::size_t to) const;
};

struct Hub {
  std::string id;
  std::size_t zone = 0;
  int parking_spaces = 0;
  int charger_ports = 0;
  std::vector<std::size_t> routes;  // indices into World::routes
};

struct TripWindows {
  int am_start_hour = 6;
  int am_end_hour = 9;
  int pm_start_hour = 16;
  int pm_end_hour = 19;
};

enum class ServiceModel { Deterministic, Exponential };

/// Behavioural and cost parameters read from the agents config.
struct WorldConfig {
  std::size_t n_agents = 10'000;
  std::uint64_t default_seed = 7;
  double employment_rate = 0.92;
  TripWindows windows;
  double income_sigma = 0.5;
  double low_income_below = 40'000.0;
  double high_income_from = 100'000.0;
  double vot_wage_fraction = 0.5;
  double work_hours_per_year = 2'080.0;
  std::array<double, 3> no_vehicle_propensity{0.6, 0.25, 0.08};  // x sub_two_car_rate, by income band
  double ev_base_share = 0.04;
  std::array<double, 3> ev_band_multiplier{0.4, 1.0, 2.2};

  double logit_scale_usd = 4.0;
  double gas_cost_per_mile = 0.16;
  double ev_cost_per_mile = 0.05;
  double parking_cost = 4.0;           // at destination, drive modes
  double hub_parking_cost = 0.0;
  double transit_fare = 1.25;
  double transit_access_minutes = 8.0;
  double hub_transfer_minutes = 4.0;
  double active_speed_mph = 9.0;
  double default_parking_search_minutes = 6.0;
  double incentive_amortization_trips = 2'500.0;
  double demand_scale = 12.0;          // vehicles per agent on the road network
  std::set<std::size_t> priced_zones;

  ServiceModel charger_service = ServiceModel::Exponential;
  double charger_service_minutes = 90.0;
  double charge_probability = 0.8;     // EV park-and-ride users who plug in
  int factor_year = 2014;

  /// No-lever daily totals used by milestone gauges; optional.
  std::optional<double> reference_daily_vmt;
  std::vector<double> reference_cumulative_vmt;  // by hour end, 24 values
};

struct World {
  std::string name;
  std::vector<Zone> zones;
  std::vector<NetworkEdge> edges;
  std::vector<TransitRoute> routes;
  std::vector<Hub> hubs;
  std::map<std::string, TractProfile> tracts;
  WorldConfig config;
  std::map<std::string, nlohmann::json> zone_geometry;

  std::optional<std::size_t> zone_index(const std::string& id) const;
};

/// Throws ValidationFailure listing every offending entity.
void validate(const World& world);

/// Loads a world bundle directory: zones.geojson, edges.csv, hubs.csv,
/// gtfs-lite/{stops,routes,trips,stop_times}.txt, agents.json, tracts.csv.
World load_world(const std::filesystem::path& dir);

WorldConfig world_config_from_json(const nlohmann::json& j, const std::vector<Zone>& zones);

/// Free-flow shortest paths over the zone graph.
class NetworkIndex {
 public:
  explicit NetworkIndex(const World& world);

  bool reachable(std::size_t from, std::size_t to) const;
  /// Edge indices from `from` to `to`; empty when from == to.
  const std::vector<std::size_t>& path(std::size_t from, std::size_t to) const;
  double distance_miles(std::size_t from, std::size_t to) const;
  double free_flow_minutes(std::size_t from, std::size_t to) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::vector<std::size_t>> paths_;
  std::vector<double> distance_;
  std::vector<double> minutes_;
  std::vector<bool> reachable_;
};

}  // namespace zevsim::mobsim

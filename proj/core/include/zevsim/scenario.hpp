#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zevsim/inventory.hpp"
#include "zevsim/trajectory.hpp"

namespace zevsim {

inline constexpr int kDefaultHorizonYear = 2050;
inline constexpr double kMilestoneTolerance = 0.002;
inline constexpr double kAcresPerSquareMile = 640.0;

struct ScenarioSpec {
  std::string name;
  std::string description;
  bool illustrative = false;
  int end_year = kDefaultHorizonYear;
  Trajectory population;                                  // persons
  Trajectory vmt_per_capita_multiplier = Trajectory::constant(1.0);
  std::array<Trajectory, kVehicleClassCount> efficiency_multiplier;  // indexed by VehicleClass
  std::optional<Trajectory> ev_fleet_share;               // nullopt: held at the baseline share

  const Trajectory& efficiency(VehicleClass c) const { return efficiency_multiplier[static_cast<std::size_t>(c)]; }
};

/// Multipliers 1, EV share at baseline: reproduces business-as-usual.
ScenarioSpec neutral_scenario(std::string name, Trajectory population);

/// Throws InvalidTrajectory on any violated bound.
void validate(const ScenarioSpec& spec);

struct EmissionSeries {
  std::string name;
  int first_year = 0;
  double baseline_mtco2e = 0.0;
  double baseline_vmt = 0.0;
  std::vector<double> mtco2e;
  std::vector<double> vmt;
  std::vector<double> reduction;                 // 1 - emissions/baseline
  std::vector<double> population;
  std::vector<double> zev_share;                 // light-duty EV VMT share
  std::vector<double> vmt_per_capita_reduction;  // 1 - per-capita VMT / baseline per-capita VMT

  int last_year() const noexcept { return first_year + static_cast<int>(mtco2e.size()) - 1; }
  bool covers(int year) const noexcept { return year >= first_year && year <= last_year(); }
  std::size_t offset(int year) const;
  double emissions_at(int year) const { return mtco2e[offset(year)]; }
  double reduction_at(int year) const { return reduction[offset(year)]; }
};

/// emissions(y) = baseline x population(y)/base_population.
EmissionSeries project_bau(const EmissionInventory& baseline, const Trajectory& population, double base_population,
                           int end_year = kDefaultHorizonYear);

EmissionSeries apply_scenario(const EmissionInventory& baseline, const ScenarioSpec& spec, double base_population);

enum class GoalMetric { EmissionReduction, ZevShare, VmtPerCapitaReduction };
std::string_view to_string(GoalMetric m) noexcept;

struct GoalSet {
  std::map<int, double> reduction;                 // year -> fraction below baseline
  std::map<int, double> zev_share;                 // year -> fraction
  std::map<int, double> vmt_per_capita_reduction;  // year -> fraction

  /// Linear between milestones of a metric, flat beyond.
  double required(GoalMetric metric, double year) const;
};

struct MilestoneResult {
  GoalMetric metric{};
  int year = 0;
  double required = 0.0;
  double achieved = 0.0;
  bool pass = false;
  double gap = 0.0;  // achieved - required
};

struct ComplianceReport {
  std::string series_name;
  std::vector<MilestoneResult> milestones;  // sorted by (metric, year)
  bool all_pass() const noexcept;
};

ComplianceReport check_goals(const EmissionSeries& series, const GoalSet& goals);

struct OffsetPlan {
  double grid_intensity = 0.0;  // MTCO2e per gWh
  double solar_yield = 0.0;     // gWh per acre per year
};

struct OffsetSizing {
  double gwh_per_year = 0.0;
  double acres = 0.0;
  double square_miles = 0.0;
};

OffsetSizing size_offsets(double residual_mtco2e, const OffsetPlan& plan);

// -- file formats -------------------------------------------------------------

ScenarioSpec scenario_from_json(const nlohmann::json& j);
ScenarioSpec load_scenario(const std::filesystem::path& path);
GoalSet goals_from_json(const nlohmann::json& j);
GoalSet load_goals(const std::filesystem::path& path);
OffsetPlan offset_plan_from_json(const nlohmann::json& j);
OffsetPlan load_offset_plan(const std::filesystem::path& path);

nlohmann::json to_json(const EmissionSeries& series);
nlohmann::json to_json(const ComplianceReport& report);
nlohmann::json to_json(const OffsetSizing& sizing);
/// milestone_year,metric,required,achieved,pass
std::string to_csv(const ComplianceReport& report);

}  // namespace zevsim

#include "zevsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "zevsim/error.hpp"
#include "zevsim/io.hpp"

namespace zevsim {

ScenarioSpec neutral_scenario(std::string name, Trajectory population) {
  ScenarioSpec spec;
  spec.name = std::move(name);
  spec.population = std::move(population);
  spec.efficiency_multiplier.fill(Trajectory::constant(1.0));
  return spec;
}

void validate(const ScenarioSpec& spec) {
  if (spec.population.empty() || !(spec.population.min_value() > 0.0)) {
    throw Error(Errc::InvalidTrajectory, spec.name + ": population must be positive");
  }
  if (spec.vmt_per_capita_multiplier.empty() || spec.vmt_per_capita_multiplier.min_value() < 0.0) {
    throw Error(Errc::InvalidTrajectory, spec.name + ": VMT multiplier must be >= 0");
  }
  for (auto c : kVehicleClasses) {
    const auto& t = spec.efficiency(c);
    if (t.empty() || t.min_value() < 0.0) {
      throw Error(Errc::InvalidTrajectory,
                  spec.name + ": efficiency multiplier for " + std::string(to_string(c)) + " must be >= 0");
    }
  }
  if (spec.ev_fleet_share && (spec.ev_fleet_share->min_value() < 0.0 || spec.ev_fleet_share->max_value() > 1.0)) {
    throw Error(Errc::InvalidTrajectory, spec.name + ": EV fleet share must lie in [0, 1]");
  }
}

std::size_t EmissionSeries::offset(int year) const {
  if (!covers(year)) throw Error(Errc::MilestoneOutsideSeries, name + ": year " + std::to_string(year));
  return static_cast<std::size_t>(year - first_year);
}

namespace {

EmissionSeries make_series(std::string name, const EmissionInventory& baseline, int end_year) {
  EmissionSeries s;
  s.name = std::move(name);
  s.first_year = baseline.baseline_year();
  s.baseline_mtco2e = baseline.on_road_total();
  s.baseline_vmt = baseline.total_vmt();
  if (end_year < s.first_year) throw Error(Errc::InvalidArgument, "horizon precedes the baseline year");
  const auto n = static_cast<std::size_t>(end_year - s.first_year + 1);
  for (auto* v : {&s.mtco2e, &s.vmt, &s.reduction, &s.population, &s.zev_share, &s.vmt_per_capita_reduction}) {
    v->assign(n, 0.0);
  }
  return s;
}

double reduction_of(double emissions, double baseline) { return baseline > 0.0 ? 1.0 - emissions / baseline : 0.0; }

}  // namespace

EmissionSeries project_bau(const EmissionInventory& baseline, const Trajectory& population, double base_population,
                           int end_year) {
  if (!(base_population > 0.0)) throw Error(Errc::NonPositivePopulation, "base population must be positive");
  if (population.empty() || !(population.min_value() > 0.0)) {
    throw Error(Errc::NonPositivePopulation, "population trajectory must be positive");
  }
  auto s = make_series("bau", baseline, end_year);
  const double ev_share = baseline.light_duty_ev_share();
  for (std::size_t i = 0; i < s.mtco2e.size(); ++i) {
    const double year = s.first_year + static_cast<double>(i);
    const double growth = population(year) / base_population;
    s.population[i] = population(year);
    s.mtco2e[i] = s.baseline_mtco2e * growth;
    s.vmt[i] = s.baseline_vmt * growth;
    s.reduction[i] = reduction_of(s.mtco2e[i], s.baseline_mtco2e);
    s.zev_share[i] = ev_share;
    s.vmt_per_capita_reduction[i] = 0.0;
  }
  return s;
}

EmissionSeries apply_scenario(const EmissionInventory& baseline, const ScenarioSpec& spec, double base_population) {
  validate(spec);
  if (!(base_population > 0.0)) throw Error(Errc::NonPositivePopulation, "base population must be positive");

  auto s = make_series(spec.name, baseline, spec.end_year);
  const double base_ev = baseline.light_duty_ev_share();

  for (std::size_t i = 0; i < s.mtco2e.size(); ++i) {
    const double year = s.first_year + static_cast<double>(i);
    const double growth = spec.population(year) / base_population;
    const double vmt_mult = spec.vmt_per_capita_multiplier(year);
    const double ev = spec.ev_fleet_share ? (*spec.ev_fleet_share)(year) : base_ev;
    // Light-duty combustion VMT scales with (1 - ev) relative to the baseline combustion share.
    const double ld_displacement = base_ev < 1.0 ? (1.0 - ev) / (1.0 - base_ev) : 0.0;

    double total = 0.0;
    for (auto c : kVehicleClasses) {
      double e = baseline.class_total(c) * growth * vmt_mult * spec.efficiency(c)(year);
      if (is_light_duty(c)) e *= ld_displacement;
      total += e;
    }
    s.population[i] = spec.population(year);
    s.mtco2e[i] = total;
    s.vmt[i] = s.baseline_vmt * growth * vmt_mult;
    s.reduction[i] = reduction_of(total, s.baseline_mtco2e);
    s.zev_share[i] = ev;
    s.vmt_per_capita_reduction[i] = 1.0 - vmt_mult;
  }
  return s;
}

std::string_view to_string(GoalMetric m) noexcept {
  switch (m) {
    case GoalMetric::EmissionReduction: return "emission_reduction";
    case GoalMetric::ZevShare: return "zev_share";
    case GoalMetric::VmtPerCapitaReduction: return "vmt_per_capita_reduction";
  }
  return "?";
}

namespace {

const std::map<int, double>& milestones_of(const GoalSet& g, GoalMetric m) {
  switch (m) {
    case GoalMetric::EmissionReduction: return g.reduction;
    case GoalMetric::ZevShare: return g.zev_share;
    case GoalMetric::VmtPerCapitaReduction: return g.vmt_per_capita_reduction;
  }
  return g.reduction;
}

double achieved_of(const EmissionSeries& s, GoalMetric m, int year) {
  const auto i = s.offset(year);
  switch (m) {
    case GoalMetric::EmissionReduction: return s.reduction[i];
    case GoalMetric::ZevShare: return s.zev_share[i];
    case GoalMetric::VmtPerCapitaReduction: return s.vmt_per_capita_reduction[i];
  }
  return 0.0;
}

}  // namespace

double GoalSet::required(GoalMetric metric, double year) const {
  const auto& m = milestones_of(*this, metric);
  if (m.empty()) throw Error(Errc::InvalidArgument, "no milestones for " + std::string(to_string(metric)));
  std::vector<Trajectory::Anchor> anchors;
  for (const auto& [y, v] : m) anchors.emplace_back(y, v);
  return Trajectory(std::move(anchors))(year);
}

ComplianceReport check_goals(const EmissionSeries& series, const GoalSet& goals) {
  ComplianceReport report;
  report.series_name = series.name;
  for (auto metric : {GoalMetric::EmissionReduction, GoalMetric::ZevShare, GoalMetric::VmtPerCapitaReduction}) {
    for (const auto& [year, required] : milestones_of(goals, metric)) {
      if (!(required >= 0.0 && required <= 1.0)) {
        throw Error(Errc::InvalidArgument, "milestone fraction outside [0, 1] at " + std::to_string(year));
      }
      if (!series.covers(year)) {
        throw Error(Errc::MilestoneOutsideSeries, series.name + " does not cover " + std::to_string(year));
      }
      MilestoneResult r;
      r.metric = metric;
      r.year = year;
      r.required = required;
      r.achieved = achieved_of(series, metric, year);
      r.pass = r.achieved >= required - kMilestoneTolerance;
      r.gap = r.achieved - required;
      report.milestones.push_back(r);
    }
  }
  return report;
}

bool ComplianceReport::all_pass() const noexcept {
  return std::all_of(milestones.begin(), milestones.end(), [](const auto& m) { return m.pass; });
}

OffsetSizing size_offsets(double residual_mtco2e, const OffsetPlan& plan) {
  if (!(plan.grid_intensity > 0.0) || !(plan.solar_yield > 0.0)) {
    throw Error(Errc::NonPositivePlanParameter, "grid intensity and solar yield must be positive");
  }
  if (!(residual_mtco2e >= 0.0)) throw Error(Errc::InvalidArgument, "residual emissions must be >= 0");
  OffsetSizing out;
  out.gwh_per_year = residual_mtco2e / plan.grid_intensity;
  out.acres = out.gwh_per_year / plan.solar_yield;
  out.square_miles = out.acres / kAcresPerSquareMile;
  return out;
}

// -- file formats -------------------------------------------------------------

ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  try {
    ScenarioSpec spec = neutral_scenario(j.at("name").get<std::string>(), trajectory_from_json(j.at("population")));
    spec.description = j.value("description", "");
    spec.illustrative = j.value("illustrative", false);
    spec.end_year = j.value("end_year", kDefaultHorizonYear);
    if (j.contains("vmt_per_capita_multiplier")) {
      spec.vmt_per_capita_multiplier = trajectory_from_json(j.at("vmt_per_capita_multiplier"));
    }
    if (j.contains("efficiency_multiplier")) {
      const auto& eff = j.at("efficiency_multiplier");
      if (eff.contains("default")) spec.efficiency_multiplier.fill(trajectory_from_json(eff.at("default")));
      for (const auto& [key, value] : eff.items()) {
        if (key == "default") continue;
        spec.efficiency_multiplier[static_cast<std::size_t>(parse_vehicle_class(key))] = trajectory_from_json(value);
      }
    }
    if (j.contains("ev_fleet_share") && !(j.at("ev_fleet_share").is_string() && j.at("ev_fleet_share") == "baseline")) {
      spec.ev_fleet_share = trajectory_from_json(j.at("ev_fleet_share"));
    }
    validate(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("scenario spec: ") + e.what());
  }
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

namespace {

std::map<int, double> milestone_map(const nlohmann::json& j, const char* key) {
  std::map<int, double> out;
  if (!j.contains(key)) return out;
  for (const auto& [year, value] : j.at(key).items()) out[std::stoi(year)] = value.get<double>();
  return out;
}

nlohmann::json parse_file(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace

GoalSet goals_from_json(const nlohmann::json& j) {
  try {
    GoalSet g;
    g.reduction = milestone_map(j, "reduction");
    g.zev_share = milestone_map(j, "zev_share");
    g.vmt_per_capita_reduction = milestone_map(j, "vmt_per_capita_reduction");
    return g;
  } catch (const std::exception& e) {
    throw Error(Errc::ParseError, std::string("goal set: ") + e.what());
  }
}

GoalSet load_goals(const std::filesystem::path& path) { return goals_from_json(parse_file(path)); }

OffsetPlan offset_plan_from_json(const nlohmann::json& j) {
  try {
    return {j.at("grid_intensity_mtco2e_per_gwh").get<double>(), j.at("solar_yield_gwh_per_acre").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("offset plan: ") + e.what());
  }
}

OffsetPlan load_offset_plan(const std::filesystem::path& path) { return offset_plan_from_json(parse_file(path)); }

nlohmann::json to_json(const EmissionSeries& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < s.mtco2e.size(); ++i) {
    rows.push_back({{"year", s.first_year + static_cast<int>(i)},
                    {"mtco2e", s.mtco2e[i]},
                    {"vmt", s.vmt[i]},
                    {"reduction", s.reduction[i]},
                    {"population", s.population[i]},
                    {"zev_share", s.zev_share[i]},
                    {"vmt_per_capita_reduction", s.vmt_per_capita_reduction[i]}});
  }
  return {{"name", s.name},
          {"baseline_year", s.first_year},
          {"baseline_mtco2e", s.baseline_mtco2e},
          {"baseline_vmt", s.baseline_vmt},
          {"years", std::move(rows)}};
}

nlohmann::json to_json(const ComplianceReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& m : report.milestones) {
    rows.push_back({{"metric", to_string(m.metric)},
                    {"milestone_year", m.year},
                    {"required", m.required},
                    {"achieved", m.achieved},
                    {"pass", m.pass},
                    {"gap", m.gap}});
  }
  return {{"series", report.series_name}, {"all_pass", report.all_pass()}, {"milestones", std::move(rows)}};
}

nlohmann::json to_json(const OffsetSizing& s) {
  return {{"gwh_per_year", s.gwh_per_year}, {"acres", s.acres}, {"square_miles", s.square_miles}};
}

std::string to_csv(const ComplianceReport& report) {
  std::ostringstream out;
  out << "milestone_year,required,achieved,pass,metric\n";
  for (const auto& m : report.milestones) {
    out << m.year << ',' << io::format_double(m.required) << ',' << io::format_double(m.achieved) << ','
        << (m.pass ? "true" : "false") << ',' << to_string(m.metric) << '\n';
  }
  return out.str();
}

}  // namespace zevsim

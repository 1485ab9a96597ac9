#include "zevsim/gateway/catalog.hpp"

#include <cstdlib>

#include "zevsim/error.hpp"
#include "zevsim/io.hpp"

namespace zevsim::gateway {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int parse_port(const std::string& text, std::string_view origin) {
  try {
    std::size_t used = 0;
    int port = std::stoi(text, &used);
    if (used == text.size() && port >= 0 && port <= 65535) return port;
  } catch (const std::exception&) {
  }
  throw Error(Errc::InvalidArgument, std::string(origin) + ": invalid port '" + text + "'");
}

}  // namespace

ServiceConfig config_from_json(const json& j, ServiceConfig base) {
  if (!j.is_object()) throw Error(Errc::ParseError, "config must be a JSON object");
  try {
    if (j.contains("host")) base.host = j["host"].get<std::string>();
    if (j.contains("port")) base.port = j["port"].get<int>();
    if (j.contains("data_dir")) base.data_dir = j["data_dir"].get<std::string>();
    if (j.contains("baseline")) base.baseline = j["baseline"].get<std::string>();
    if (j.contains("world")) base.world = j["world"].get<std::string>();
    if (j.contains("cadence_ticks")) base.cadence_ticks = j["cadence_ticks"].get<int>();
    if (j.contains("pipeline_key")) base.pipeline_key = j["pipeline_key"].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("config: ") + e.what());
  }
  if (j.contains("lever_bounds")) base.lever_bounds = mobsim::lever_bounds_from_json(j["lever_bounds"]);
  if (base.port < 0 || base.port > 65535) throw Error(Errc::InvalidArgument, "config: port out of range");
  if (base.cadence_ticks <= 0) throw Error(Errc::InvalidArgument, "config: cadence_ticks must be positive");
  return base;
}

EnvLookup process_env() {
  return [](std::string_view name) -> std::optional<std::string> {
    const char* v = std::getenv(std::string(name).c_str());
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
}

ServiceConfig resolve_config(const std::optional<fs::path>& file, const EnvLookup& env, ServiceConfig cfg) {
  if (file) {
    json j;
    try {
      j = json::parse(io::read_text(*file));
    } catch (const json::parse_error& e) {
      throw Error(Errc::ParseError, file->string() + ": " + e.what());
    }
    cfg = config_from_json(j, std::move(cfg));
  }
  if (auto v = env("ZEVSIM_PORT")) cfg.port = parse_port(*v, "ZEVSIM_PORT");
  if (auto v = env("ZEVSIM_HOST")) cfg.host = *v;
  if (auto v = env("ZEVSIM_DATA_DIR")) cfg.data_dir = *v;
  if (auto v = env("ZEVSIM_PIPELINE_KEY")) cfg.pipeline_key = *v;
  return cfg;
}

Catalog::Catalog(fs::path data_dir) : data_dir_(std::move(data_dir)) {}

fs::path Catalog::resolve(const std::string& name, std::string_view subdir, std::string_view ext) const {
  if (name.empty()) throw Error(Errc::InvalidArgument, "empty dataset name");
  if (name.find('/') != std::string::npos || fs::exists(name)) return name;
  std::string file = name;
  if (!ext.empty() && !(file.size() > ext.size() && file.ends_with(ext))) file += ext;
  return data_dir_ / subdir / file;
}

std::shared_ptr<const mobsim::World> Catalog::world(const std::string& name) {
  std::lock_guard lock(mu_);
  if (auto it = worlds_.find(name); it != worlds_.end()) return it->second;
  auto w = std::make_shared<const mobsim::World>(mobsim::load_world(resolve(name, "worlds", "")));
  worlds_.emplace(name, w);
  return w;
}

std::shared_ptr<const BaselineDataset> Catalog::baseline(const std::string& name) {
  std::lock_guard lock(mu_);
  if (auto it = baselines_.find(name); it != baselines_.end()) return it->second;
  auto d = std::make_shared<const BaselineDataset>(load_baseline_dataset(resolve(name, "inventory", "")));
  baselines_.emplace(name, d);
  return d;
}

ScenarioSpec Catalog::scenario(const std::string& name) const { return load_scenario(resolve(name, "scenarios", ".json")); }

mobsim::LeverPreset Catalog::preset(const std::string& world_name, const std::string& name) {
  auto w = world(world_name);
  fs::path p = name.find('/') != std::string::npos || fs::exists(name)
                   ? fs::path(name)
                   : resolve(world_name, "worlds", "") / "presets" / (name.ends_with(".json") ? name : name + ".json");
  return mobsim::load_lever_preset(p, mobsim::default_levers(w->config));
}

GoalSet Catalog::goals() const { return load_goals(data_dir_ / "scenarios" / "goals.json"); }

OffsetPlan Catalog::offset_plan() const { return load_offset_plan(data_dir_ / "scenarios" / "offset_plan.json"); }

std::vector<TractProfile> Catalog::tracts(const std::string& name) const { return load_tracts(resolve(name, "tracts", ".csv")); }

std::map<std::string, json> Catalog::tract_geometry() const {
  auto p = data_dir_ / "tracts" / "tracts.geojson";
  if (!fs::exists(p)) return {};
  return load_geometry(p, "tract_id");
}

fs::path Catalog::matrix_csv() const { return data_dir_ / "hubs" / "intermodal_matrix.csv"; }

json baseline_summary(const BaselineDataset& dataset) {
  auto inventory = build_baseline(dataset);
  auto report = baseline_report(inventory, dataset.other_sectors);
  report["dataset"] = dataset.name;
  report["base_population"] = dataset.base_population;
  return report;
}

json equity_summary(std::span<const TractProfile> tracts, const EquityOptions& options) {
  auto index = compute_equity_index(tracts);
  json scores = json::array();
  for (const auto& s : index.scores)
    scores.push_back({{"tract_id", s.tract_id}, {"internal", s.internal}, {"external", s.external}, {"index", s.index}});
  json degenerate = json::array();
  for (auto i : index.degenerate_indicators) degenerate.push_back(to_string(i));
  auto new_ev = affordability_gap(tracts, options.new_ev_price, options.terms, 0.0);
  auto used_ev = affordability_gap(tracts, options.used_ev_price, options.terms, options.used_incentive_usd);
  json out = {{"tracts", tracts.size()},
              {"scores", scores},
              {"degenerate_indicators", degenerate},
              {"affordability",
               {{"new_ev", {{"price", options.new_ev_price}, {"incentive", 0.0}, {"annual_payment", new_ev.annual_payment},
                            {"pass_rate", new_ev.fraction_affording}}},
                {"used_ev", {{"price", options.used_ev_price}, {"incentive", options.used_incentive_usd},
                             {"annual_payment", used_ev.annual_payment}, {"pass_rate", used_ev.fraction_affording}}}}}};
  if (options.charger_counts) {
    auto r = charger_ratio(options.charger_counts->first, options.charger_counts->second);
    out["charger_ratio"] = {{"evs_per_charger", r.per_charger}, {"label", r.label}};
  }
  return out;
}

json evaluate_scenario(const BaselineDataset& dataset, const ScenarioSpec& spec, const GoalSet& goals,
                       const OffsetPlan& plan) {
  auto inventory = build_baseline(dataset);
  auto series = apply_scenario(inventory, spec, dataset.base_population);
  auto report = check_goals(series, goals);
  const double residual = series.emissions_at(series.last_year());
  return {{"scenario", spec.name},
          {"description", spec.description},
          {"illustrative", spec.illustrative},
          {"series", to_json(series)},
          {"compliance", to_json(report)},
          {"all_pass", report.all_pass()},
          {"residual_mtco2e", residual},
          {"residual_year", series.last_year()},
          {"offsets", to_json(size_offsets(residual, plan))}};
}

}  // namespace zevsim::gateway

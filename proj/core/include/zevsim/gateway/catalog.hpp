#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "zevsim/equity.hpp"
#include "zevsim/inventory.hpp"
#include "zevsim/mobsim/levers.hpp"
#include "zevsim/mobsim/world.hpp"
#include "zevsim/scenario.hpp"

namespace zevsim::gateway {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "data";
  std::string baseline = "houston-2014";
  std::string world = "demo";
  int cadence_ticks = 60;
  std::string pipeline_key;
  mobsim::LeverBounds lever_bounds;
};

/// Keys as in ServiceConfig; lever_bounds uses the {lever: {min, max}} shape.
ServiceConfig config_from_json(const nlohmann::json& j, ServiceConfig base = {});

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;
EnvLookup process_env();

/// Defaults < config file < ZEVSIM_* environment. Command-line flags are
/// applied by the caller on top.
ServiceConfig resolve_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env,
                             ServiceConfig defaults = {});

/// Named datasets under a data directory, loaded once. A name containing a
/// path separator or naming an existing file is used as a path.
class Catalog {
 public:
  explicit Catalog(std::filesystem::path data_dir);

  const std::filesystem::path& data_dir() const noexcept { return data_dir_; }

  std::shared_ptr<const mobsim::World> world(const std::string& name);
  std::shared_ptr<const BaselineDataset> baseline(const std::string& name);
  ScenarioSpec scenario(const std::string& name) const;
  mobsim::LeverPreset preset(const std::string& world, const std::string& name);
  GoalSet goals() const;
  OffsetPlan offset_plan() const;
  std::vector<TractProfile> tracts(const std::string& name = "houston-tracts") const;
  std::map<std::string, nlohmann::json> tract_geometry() const;
  std::filesystem::path matrix_csv() const;

 private:
  std::filesystem::path resolve(const std::string& name, std::string_view subdir, std::string_view ext) const;

  std::filesystem::path data_dir_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const mobsim::World>> worlds_;
  std::map<std::string, std::shared_ptr<const BaselineDataset>> baselines_;
};

struct EquityOptions {
  double new_ev_price = 48'000.0;
  double used_ev_price = 28'000.0;
  double used_incentive_usd = 4'000.0;
  LoanTerms terms;
  std::optional<std::pair<double, double>> charger_counts;  // EVs, public chargers
};

nlohmann::json baseline_summary(const BaselineDataset& dataset);
nlohmann::json equity_summary(std::span<const TractProfile> tracts, const EquityOptions& options = {});
/// Series, milestone compliance and the offset sizing for the residual at the
/// final year.
nlohmann::json evaluate_scenario(const BaselineDataset& dataset, const ScenarioSpec& spec, const GoalSet& goals,
                                 const OffsetPlan& plan);

}  // namespace zevsim::gateway

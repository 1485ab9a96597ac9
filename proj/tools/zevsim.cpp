// zevsim: baseline, scenario, equity, simulation and telemetry commands, and
// the HTTP service.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error, 64 usage error.

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>

#include <CLI11.hpp>

#include "zevsim/error.hpp"
#include "zevsim/gateway/catalog.hpp"
#include "zevsim/gateway/service.hpp"
#include "zevsim/hubpipe.hpp"
#include "zevsim/io.hpp"
#include "zevsim/mobsim/simulation.hpp"

#ifndef ZEVSIM_DEFAULT_DATA_DIR
#define ZEVSIM_DEFAULT_DATA_DIR "data"
#endif

using namespace zevsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;

struct Common {
  std::optional<std::string> config;
  std::optional<std::string> data_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void emit(const Common& c, const std::string& name, const std::string& text) {
  if (!c.out) {
    std::cout << text;
    if (!text.ends_with('\n')) std::cout << '\n';
    return;
  }
  fs::create_directories(*c.out);
  io::write_text(fs::path(*c.out) / name, text);
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

gateway::ServiceConfig resolve(const Common& c) {
  gateway::ServiceConfig defaults;
  defaults.data_dir = ZEVSIM_DEFAULT_DATA_DIR;
  auto cfg = gateway::resolve_config(c.config ? std::optional<fs::path>(*c.config) : std::nullopt,
                                     gateway::process_env(), defaults);
  if (c.data_dir) cfg.data_dir = *c.data_dir;
  return cfg;
}

gateway::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Urban transportation decarbonization simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config, "JSON config file (port, data_dir, baseline, lever_bounds, ...)");
  app.add_option("--data-dir", common.data_dir, "Bundled data directory");
  app.add_option("--seed", common.seed, "Random seed");
  app.add_option("--out", common.out, "Output directory (default: stdout)");

  auto* ingest = app.add_subcommand("ingest", "Run telemetry JSONL through the hub pipeline");
  std::string ingest_input;
  std::optional<std::string> ingest_key;
  std::optional<std::int64_t> window_start, window_end;
  std::size_t capacity = 1'000'000;
  ingest->add_option("--input", ingest_input, "Line-delimited JSON telemetry")->required();
  ingest->add_option("--key", ingest_key, "Tokenization key (default: config pipeline_key / ZEVSIM_PIPELINE_KEY)");
  ingest->add_option("--window-start", window_start, "Aggregation window start, epoch seconds");
  ingest->add_option("--window-end", window_end, "Aggregation window end (exclusive), epoch seconds");
  ingest->add_option("--capacity", capacity, "Storage log capacity");

  auto* baseline = app.add_subcommand("baseline", "Build the on-road emissions baseline");
  std::optional<std::string> baseline_name;
  baseline->add_option("--dataset", baseline_name, "Inventory dataset name or directory");

  auto* scenario = app.add_subcommand("scenario", "Scenario projections");
  scenario->require_subcommand(1);
  auto* scenario_run = scenario->add_subcommand("run", "Project a scenario and check milestones");
  std::string scenario_spec;
  std::optional<std::string> scenario_baseline, goals_file;
  scenario_run->add_option("--spec", scenario_spec, "Scenario name or JSON file")->required();
  scenario_run->add_option("--baseline", scenario_baseline, "Inventory dataset name or directory");
  scenario_run->add_option("--goals", goals_file, "Goal set JSON (default: bundled milestones)");

  auto* equity = app.add_subcommand("equity", "Tract equity index and affordability");
  std::string tracts_name = "houston-tracts";
  gateway::EquityOptions eq;
  std::optional<double> evs, chargers;
  equity->add_option("--tracts", tracts_name, "Tract CSV name or path");
  equity->add_option("--new-price", eq.new_ev_price, "New EV price, USD");
  equity->add_option("--used-price", eq.used_ev_price, "Used EV price, USD");
  equity->add_option("--incentive", eq.used_incentive_usd, "Incentive applied to the used EV, USD");
  equity->add_option("--evs", evs, "Registered EVs for the charger ratio");
  equity->add_option("--chargers", chargers, "Public chargers for the charger ratio");

  auto* simulate = app.add_subcommand("simulate", "Simulate one day on a world");
  std::optional<std::string> world_name, preset_name, levers_file;
  int horizon = mobsim::kMinutesPerDay;
  simulate->add_option("--world", world_name, "World name or directory");
  simulate->add_option("--preset", preset_name, "Lever preset of the world");
  simulate->add_option("--levers", levers_file, "JSON lever patch applied last");
  simulate->add_option("--horizon", horizon, "Ticks (minutes) to simulate")->check(CLI::PositiveNumber);

  auto* serve = app.add_subcommand("serve", "Serve the /v1 HTTP API");
  std::optional<std::string> host;
  std::optional<int> port;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0: any free port)")->check(CLI::Range(0, 65535));

  auto* exporter = app.add_subcommand("export", "Export a map or table");
  std::string export_kind;
  std::optional<std::string> export_world, export_dataset;
  exporter->add_option("kind", export_kind, "emissions-map | equity-map | zones | matrix | lever-bounds")
      ->required()
      ->check(CLI::IsMember({"emissions-map", "equity-map", "zones", "matrix", "lever-bounds"}));
  exporter->add_option("--world", export_world, "World for zones");
  exporter->add_option("--dataset", export_dataset, "Inventory dataset for emissions-map");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "zevsim: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    auto cfg = resolve(common);
    gateway::Catalog catalog(cfg.data_dir);

    if (*ingest) {
      std::string key = ingest_key.value_or(cfg.pipeline_key);
      if (key.empty()) throw Error(Errc::InvalidArgument, "no tokenization key: pass --key or set pipeline_key");
      std::vector<hubpipe::ZoneCentroid> zones;
      for (const auto& z : catalog.world(cfg.world)->zones) zones.push_back({z.id, z.lat, z.lon});
      hubpipe::Pipeline pipeline({key, capacity}, zones);
      auto report = pipeline.ingest_jsonl(io::read_text(ingest_input));
      auto stored = pipeline.storage().read();
      hubpipe::Window w{window_start.value_or(std::numeric_limits<std::int64_t>::max()), window_end.value_or(0)};
      if (!window_start || !window_end) {
        for (const auto& r : stored) {
          if (!window_start) w.start = std::min(w.start, r.timestamp);
          if (!window_end) w.end = std::max(w.end, r.timestamp + 1);
        }
      }
      json summary = {{"input", report.input}, {"stored", report.stored}, {"rejected", report.rejected}};
      if (common.out) {
        std::string log;
        for (const auto& r : stored) log += hubpipe::to_json(r, hubpipe::Role::Analyst).dump() + "\n";
        emit(common, "stored.jsonl", log);
        emit(common, "rejections.csv", pipeline.rejections_csv());
        emit(common, "aggregates.json", pretty(hubpipe::to_json(pipeline.replay(w))));
        std::cout << summary.dump() << "\n";
      } else {
        summary["aggregates"] = hubpipe::to_json(pipeline.replay(w));
        std::cout << pretty(summary);
      }
      return 0;
    }

    if (*baseline) {
      auto dataset = catalog.baseline(baseline_name.value_or(cfg.baseline));
      auto summary = gateway::baseline_summary(*dataset);
      if (common.out) {
        emit(common, "baseline.json", pretty(summary));
        emit(common, "emissions.geojson", to_geojson(emissions_map(build_baseline(*dataset)), dataset->zone_geometry).dump());
      }
      std::cout << pretty(summary);
      return 0;
    }

    if (*scenario_run) {
      auto dataset = catalog.baseline(scenario_baseline.value_or(cfg.baseline));
      auto goals = goals_file ? load_goals(*goals_file) : catalog.goals();
      auto spec = catalog.scenario(scenario_spec);
      auto result = gateway::evaluate_scenario(*dataset, spec, goals, catalog.offset_plan());
      if (common.out) {
        emit(common, "scenario.json", pretty(result));
        auto series = apply_scenario(build_baseline(*dataset), spec, dataset->base_population);
        emit(common, "compliance.csv", to_csv(check_goals(series, goals)));
      }
      std::cout << "scenario " << spec.name << " against " << dataset->name << "\n";
      for (const auto& m : result["compliance"]["milestones"]) {
        std::cout << "  " << m["milestone_year"].get<int>() << ' ' << std::left << std::setw(26) << m["metric"].get<std::string>()
                  << std::right << std::fixed << std::setprecision(3) << " required " << m["required"].get<double>()
                  << " achieved " << m["achieved"].get<double>() << (m["pass"].get<bool>() ? "  PASS" : "  FAIL") << "\n";
      }
      std::cout << "  residual " << std::setprecision(0) << result["residual_mtco2e"].get<double>() << " MTCO2e in "
                << result["residual_year"].get<int>() << ", offsets " << std::setprecision(0)
                << result["offsets"]["gwh_per_year"].get<double>() << " gWh/yr, " << std::setprecision(1)
                << result["offsets"]["square_miles"].get<double>() << " sq mi\n";
      return 0;
    }

    if (*equity) {
      if (evs.has_value() != chargers.has_value()) throw Error(Errc::InvalidArgument, "--evs and --chargers go together");
      if (evs) eq.charger_counts = std::pair{*evs, *chargers};
      auto tracts = catalog.tracts(tracts_name);
      auto summary = gateway::equity_summary(tracts, eq);
      if (common.out) {
        auto index = compute_equity_index(tracts);
        emit(common, "equity.json", pretty(summary));
        emit(common, "equity.csv", to_csv(index));
        emit(common, "equity.geojson", to_geojson(index, catalog.tract_geometry()).dump());
      }
      json brief = {{"tracts", summary["tracts"]}, {"affordability", summary["affordability"]}};
      if (summary.contains("charger_ratio")) brief["charger_ratio"] = summary["charger_ratio"];
      std::cout << pretty(brief);
      return 0;
    }

    if (*simulate) {
      auto world = catalog.world(world_name.value_or(cfg.world));
      auto levers = preset_name ? catalog.preset(world_name.value_or(cfg.world), *preset_name).levers
                                : mobsim::default_levers(world->config);
      if (levers_file) levers = mobsim::levers_from_json(json::parse(io::read_text(*levers_file)), levers);
      mobsim::validate(levers, cfg.lever_bounds);
      const auto seed = common.seed.value_or(world->config.default_seed);
      mobsim::SimOptions options;
      options.horizon_ticks = horizon;
      mobsim::SimulationRun run(world, levers, catalog.baseline(cfg.baseline)->factors, seed, std::move(options));
      run.run();
      auto result = run.result();
      json summary = {{"world", result.world},
                      {"seed", result.seed},
                      {"agents", result.agents},
                      {"trips_completed", result.trips_completed},
                      {"total_vmt", result.total_vmt},
                      {"total_mtco2e", result.total_mtco2e},
                      {"hash", mobsim::result_hash(result)}};
      if (common.out) {
        emit(common, "result.json", pretty(mobsim::to_json(result)));
        emit(common, "modes.csv", mobsim::modes_csv(result));
        emit(common, "hubs.csv", mobsim::hubs_csv(result));
        emit(common, "emissions.geojson", to_geojson(result.grid, world->zone_geometry).dump());
      }
      std::cout << pretty(summary);
      return 0;
    }

    if (*serve) {
      if (host) cfg.host = *host;
      if (port) cfg.port = *port;
      gateway::Api api(cfg);
      gateway::HttpServer server(api);
      int bound = server.bind(cfg.host, cfg.port);
      std::cout << "listening on http://" << cfg.host << ':' << bound << "/v1" << std::endl;
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.serve();
      g_server = nullptr;
      return 0;
    }

    if (*exporter) {
      std::string text;
      std::string name;
      if (export_kind == "emissions-map") {
        auto dataset = catalog.baseline(export_dataset.value_or(cfg.baseline));
        text = to_geojson(emissions_map(build_baseline(*dataset)), dataset->zone_geometry).dump();
        name = "emissions.geojson";
      } else if (export_kind == "equity-map") {
        text = to_geojson(compute_equity_index(catalog.tracts()), catalog.tract_geometry()).dump();
        name = "equity.geojson";
      } else if (export_kind == "zones") {
        gateway::Api api(cfg);
        gateway::HttpRequest req{"GET", "/v1/worlds/" + export_world.value_or(cfg.world) + "/zones", {}, {}, {}};
        auto res = api.handle(req);
        if (res.status != 200) throw Error(Errc::IoError, json::parse(res.body).value("message", "zones unavailable"));
        text = res.body;
        name = "zones.geojson";
      } else if (export_kind == "matrix") {
        text = mobsim::IntermodalMatrix::standard().to_csv();
        name = "intermodal_matrix.csv";
      } else {
        text = pretty(mobsim::to_json(cfg.lever_bounds));
        name = "lever_bounds.json";
      }
      emit(common, name, text);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "zevsim: " << e.what() << "\n";
    return e.is_io() ? kExitIo : kExitValidation;
  } catch (const json::exception& e) {
    std::cerr << "zevsim: invalid JSON: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "zevsim: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}

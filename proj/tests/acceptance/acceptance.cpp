// Acceptance checks: one PASS/FAIL line per criterion, exit 1 on any failure.
#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "telemetry_stream.hpp"
#include "test_data.hpp"
#include "zevsim/equity.hpp"
#include "zevsim/gateway/service.hpp"
#include "zevsim/hubpipe.hpp"
#include "zevsim/inventory.hpp"
#include "zevsim/io.hpp"
#include "zevsim/mobsim/charger.hpp"
#include "zevsim/mobsim/simulation.hpp"
#include "zevsim/scenario.hpp"

using namespace zevsim;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  std::vector<std::string> failures;
  std::ostringstream notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

int failed = 0;

void criterion(const std::string& name, double limit_seconds, const std::function<void(Verdict&)>& body) {
  Verdict v;
  auto t0 = Clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.failures.push_back(std::string("exception: ") + e.what());
  }
  double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (limit_seconds > 0 && secs >= limit_seconds)
    v.failures.push_back("runtime " + std::to_string(secs) + " s over " + std::to_string(limit_seconds) + " s");
  bool ok = v.failures.empty();
  failed += !ok;
  std::printf("%s %s (%.2f s) %s\n", ok ? "PASS" : "FAIL", name.c_str(), secs, v.notes.str().c_str());
  for (const auto& f : v.failures) std::printf("     - %s\n", f.c_str());
  std::fflush(stdout);
}

bool within_rel(double got, double want, double tol) { return std::abs(got - want) <= tol * std::abs(want); }

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::filesystem::path data() { return test::data_dir(); }

std::string run_cli(const std::string& args, int& code) {
  std::string cmd = std::string(ZEVSIM_CLI_PATH) + " " + args + " 2>&1";
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  std::array<char, 4096> buf;
  while (auto n = fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  int status = pclose(pipe);
  code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

const BaselineDataset& houston() {
  static const auto ds = load_baseline_dataset(data() / "inventory" / "houston-2014");
  return ds;
}

// Erlang C mean wait in queue.
double erlang_c_wait(double lambda, double mean_service, int c) {
  double a = lambda * mean_service, rho = a / c;
  double sum = 0.0, term = 1.0;
  for (int k = 0; k < c; ++k) {
    if (k > 0) term *= a / k;
    sum += term;
  }
  double top = term * a / c / (1.0 - rho);
  return top / (sum + top) * mean_service / (c * (1.0 - rho));
}

// Grid world at the size envelope, built on the demo world's behaviour and tracts.
mobsim::World envelope_world(const mobsim::World& demo, int cols, int rows, std::size_t agents) {
  using namespace mobsim;
  World w;
  w.name = "envelope";
  w.tracts = demo.tracts;
  w.config = demo.config;
  w.config.n_agents = agents;
  w.config.reference_daily_vmt.reset();
  w.config.reference_cumulative_vmt.clear();
  w.config.priced_zones.clear();

  std::vector<std::string> tract_ids;
  for (const auto& z : demo.zones) tract_ids.push_back(z.tract_id);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> pop(40, 100), emp(10, 40);
  auto at = [cols](int r, int c) { return static_cast<std::size_t>(r * cols + c); };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      Zone z;
      char id[8];
      std::snprintf(id, sizeof id, "E%02d", r * cols + c + 1);
      z.id = id;
      z.lat = 29.6 + 0.05 * r;
      z.lon = -95.6 + 0.05 * c;
      z.population = pop(rng);
      z.employment = emp(rng);
      bool core = std::abs(r - rows / 2) <= 0 && std::abs(c - cols / 2) <= 1;
      if (core) z.employment *= 8;
      z.tract_id = tract_ids[w.zones.size() % tract_ids.size()];
      if (core) w.config.priced_zones.insert(w.zones.size());
      w.zones.push_back(z);
    }
  auto link = [&](std::size_t a, std::size_t b) {
    w.edges.push_back({a, b, 3.0, 6.0, 1800.0});
    w.edges.push_back({b, a, 3.0, 6.0, 1800.0});
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) link(at(r, c), at(r, c + 1));
      if (r + 1 < rows) link(at(r, c), at(r + 1, c));
    }
  for (int r = 0; r < rows; ++r) {
    TransitRoute route;
    route.id = "R" + std::to_string(r + 1);
    route.name = route.id;
    for (int c = 0; c < cols; ++c) {
      route.stop_zones.push_back(at(r, c));
      route.stop_offsets.push_back(7.0 * c);
    }
    route.first_departure = 5 * 60;
    route.last_departure = 23 * 60;
    route.headway = 12;
    w.routes.push_back(route);
  }
  int hub = 0;
  for (int r : {0, rows - 1})
    for (int c : {0, cols - 1}) {
      Hub h;
      h.id = "HUB" + std::to_string(++hub);
      h.zone = at(r, c);
      h.parking_spaces = 600;
      h.charger_ports = 4;
      h.routes = {static_cast<std::size_t>(r)};
      w.hubs.push_back(h);
    }
  validate(w);
  return w;
}

void baseline_reproduction(Verdict& v) {
  int code = 0;
  auto out = run_cli("baseline --data-dir " + data().string(), code);
  v.expect(code == 0, "baseline exited " + std::to_string(code));
  auto j = json::parse(out);
  double total = j["on_road_total_mtco2e"];
  v.expect(within_rel(total, 15'932'882.0, 0.001), "on-road total " + fmt(total, 10));
  const auto& s = j["sector_shares"];
  auto pct = [](double x) { return std::lround(x * 100); };
  v.expect(std::abs(pct(s["stationary_energy"]) - 49) <= 1, "stationary share");
  v.expect(std::abs(pct(s["transport"]) - 48) <= 1, "transport share");
  v.expect(std::abs(pct(s["waste"]) - 2) <= 1, "waste share");
  const auto& g = j["class_group_shares"];
  v.expect(pct(g["personal"]) == 89, "personal share");
  v.expect(pct(g["short_haul_commercial"]) == 8, "short-haul share");
  v.expect(pct(g["long_haul"]) == 3, "long-haul share");
  v.expect(g["fleet"].get<double>() < 0.01, "fleet share");
  v.notes << "on-road " << fmt(total, 10) << " MTCO2e, sectors " << pct(s["stationary_energy"]) << "/"
          << pct(s["transport"]) << "/" << pct(s["waste"]) << ", groups " << pct(g["personal"]) << "/"
          << pct(g["short_haul_commercial"]) << "/" << pct(g["long_haul"]) << "/<1";
}

void scenario_milestones(Verdict& v) {
  gateway::Catalog catalog(data());
  const auto inv = build_baseline(houston());
  const auto goals = catalog.goals();
  const auto s4 = apply_scenario(inv, catalog.scenario("scenario4"), houston().base_population);
  const auto bau = apply_scenario(inv, catalog.scenario("bau"), houston().base_population);
  const std::map<int, double> targets{{2030, 0.33}, {2040, 0.58}, {2050, 0.70}};
  auto r4 = check_goals(s4, goals);
  auto rb = check_goals(bau, goals);
  for (auto [year, required] : targets) {
    auto find = [&](const ComplianceReport& rep) {
      for (const auto& m : rep.milestones)
        if (m.metric == GoalMetric::EmissionReduction && m.year == year) return m;
      throw std::runtime_error("no milestone for " + std::to_string(year));
    };
    auto m4 = find(r4), mb = find(rb);
    v.expect(m4.required == required, "required reduction " + std::to_string(year));
    v.expect(m4.pass && std::abs(m4.achieved - required) <= 0.005 + 1e-12,
             "scenario4 " + std::to_string(year) + " achieved " + fmt(m4.achieved));
    v.expect(!mb.pass, "BAU passes " + std::to_string(year));
    v.notes << year << " " << fmt(m4.achieved, 3) << " ";
  }
  double ratio = bau.emissions_at(2050) / inv.on_road_total();
  v.expect(within_rel(ratio, 1.31, 0.01), "BAU 2050 ratio " + fmt(ratio));
  double pop_ratio = 3'300'000.0 / 2'520'000.0;
  v.expect(within_rel(ratio, pop_ratio, 1e-9), "BAU ratio differs from population growth " + fmt(pop_ratio));
  v.notes << "| BAU 2050 = " << fmt(ratio) << " x baseline";
}

void offset_sizing(Verdict& v) {
  gateway::Catalog catalog(data());
  const double residual = 0.30 * build_baseline(houston()).on_road_total();
  auto s = size_offsets(residual, catalog.offset_plan());
  v.expect(within_rel(s.gwh_per_year, 15'490.0, 0.01), "gWh " + fmt(s.gwh_per_year, 6));
  v.expect(within_rel(s.square_miles, 67.0, 0.02), "sq mi " + fmt(s.square_miles, 4));
  v.expect(within_rel(s.acres / 640.0, s.square_miles, 1e-12), "acres vs square miles");
  v.notes << fmt(residual, 8) << " MTCO2e -> " << fmt(s.gwh_per_year, 6) << " gWh, " << fmt(s.square_miles, 4)
          << " sq mi";
}

double parse_exact(const std::string& s) {
  double x = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), x);
  return x;
}

void equity_calibration(Verdict& v) {
  gateway::Catalog catalog(data());
  const auto tracts = catalog.tracts();
  v.expect(tracts.size() == 100, "tract count");
  double new_rate = affordability_gap(tracts, 48'000.0, LoanTerms{}, 0.0).fraction_affording;
  double used_rate = affordability_gap(tracts, 28'000.0, LoanTerms{}, 4'000.0).fraction_affording;
  v.expect(std::abs(new_rate - 0.19) <= 0.01, "new-EV rate " + fmt(new_rate));
  v.expect(std::abs(used_rate - 0.44) <= 0.01, "used-EV rate " + fmt(used_rate));

  const auto idx = compute_equity_index(tracts);
  const auto oracle = io::CsvTable::load(data() / "tracts" / "equity_oracle.csv");
  v.expect(oracle.rows() == tracts.size(), "oracle rows");
  std::size_t mismatches = 0;
  for (std::size_t r = 0; r < std::min(oracle.rows(), idx.scores.size()); ++r) {
    const auto& s = idx.scores[r];
    mismatches += oracle.at(r, 0) != s.tract_id || parse_exact(oracle.at(r, 1)) != s.internal ||
                  parse_exact(oracle.at(r, 2)) != s.external || parse_exact(oracle.at(r, 3)) != s.index;
  }
  v.expect(mismatches == 0, std::to_string(mismatches) + " tracts differ from the oracle");
  v.notes << "new " << new_rate << ", used+$4000 " << used_rate << ", oracle mismatches " << mismatches << "/"
          << oracle.rows();
}

void charger_ratios(Verdict& v) {
  auto a = charger_ratio(22'000, 1'000), b = charger_ratio(25'800, 1'000);
  v.expect(a.per_charger == 22.0, "national ratio " + fmt(a.per_charger));
  v.expect(b.per_charger == 25.8, "Texas ratio " + fmt(b.per_charger));
  v.notes << a.label << ", " << b.label;
}

void simulation_properties(Verdict& v) {
  using namespace mobsim;
  const auto demo = load_world(data() / "worlds" / "demo");
  const auto& factors = houston().factors;
  const auto big = envelope_world(demo, 10, 5, kMaxAgents);
  const auto levers = default_levers(big.config);

  // determinism at the envelope
  auto t0 = Clock::now();
  auto r1 = simulate_day(big, levers, factors, 7);
  double one_run = std::chrono::duration<double>(Clock::now() - t0).count();
  auto r2 = simulate_day(big, levers, factors, 7);
  auto r3 = simulate_day(big, levers, factors, 7);
  auto h = result_hash(r1);
  v.expect(h == result_hash(r2) && h == result_hash(r3), "result hash differs across runs");
  v.expect(h != result_hash(simulate_day(big, levers, factors, 8)), "seed does not change the hash");

  // conservation
  v.expect(r1.trips_started > 0 && r1.trips_started == r1.trips_completed, "trips started != completed");
  v.expect(std::accumulate(r1.mode_trips.begin(), r1.mode_trips.end(), std::uint64_t{0}) == r1.trips_started,
           "mode trips do not sum to trips");
  std::uint64_t sessions = 0;
  for (const auto& hub : r1.hubs) {
    v.expect(hub.parked_in == hub.parked_out + static_cast<std::uint64_t>(hub.occupancy), hub.hub_id + " parking");
    v.expect(hub.parking_peak <= hub.capacity, hub.hub_id + " over capacity");
    v.expect(hub.sessions_started == hub.sessions_completed + hub.sessions_in_progress, hub.hub_id + " sessions");
    v.expect(hub.sessions_arrived == hub.sessions_started + hub.sessions_waiting + hub.sessions_abandoned,
             hub.hub_id + " arrivals");
    sessions += hub.sessions_arrived;
  }
  v.expect(sessions > 0, "no charging sessions");

  // emissions oracle over the run's own VMT log
  std::vector<std::string> zone_ids;
  for (const auto& z : big.zones) zone_ids.push_back(z.id);
  auto inv = build_baseline(r1.vmt_log, factors, big.config.factor_year, zone_ids);
  v.expect(inv.on_road_total() == r1.total_mtco2e, "emissions differ from the inventory oracle");

  // paired-seed monotonicity on the demo world
  const auto base = default_levers(demo.config);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double last_drive = 2.0;
    for (double price : {0.0, 2.0, 5.0, 10.0}) {
      auto l = base;
      l.congestion_price = price;
      auto r = simulate_day(demo, l, factors, seed);
      double drive = r.mode_shares[static_cast<std::size_t>(Mode::DriveGas)] +
                     r.mode_shares[static_cast<std::size_t>(Mode::DriveEV)];
      v.expect(drive <= last_drive, "drive share rose with price at seed " + std::to_string(seed));
      last_drive = drive;
    }
    std::vector<double> last_wait;
    for (int ports : {0, 1, 3}) {
      auto l = base;
      l.charger_ports_added = ports;
      auto r = simulate_day(demo, l, factors, seed);
      for (std::size_t i = 0; i < r.hubs.size(); ++i) {
        if (!last_wait.empty())
          v.expect(r.hubs[i].mean_wait_minutes <= last_wait[i], "wait rose with ports at seed " + std::to_string(seed));
      }
      last_wait.clear();
      for (const auto& hub : r.hubs) last_wait.push_back(hub.mean_wait_minutes);
    }
  }

  // M/M/2 over 10,000 simulated hours
  const double lambda = 4.0 / 60.0, service = 20.0;
  ChargerQueueState s;
  s.ports = 2;
  std::mt19937_64 rng(2718);
  std::exponential_distribution<double> gap(lambda), svc(1.0 / service);
  double next = gap(rng);
  std::uint64_t id = 0;
  std::vector<ChargerArrival> arr;
  for (int t = 0; t < 10'000 * 60; ++t) {
    arr.clear();
    while (next < t + 1.0) {
      arr.push_back({next, svc(rng), ++id});
      next += gap(rng);
    }
    s = charger_queue_step(s, arr, 1.0).state;
  }
  double expected = erlang_c_wait(lambda, service, 2);
  double err = std::abs(s.mean_wait() - expected) / expected;
  v.expect(err <= 0.15, "M/M/2 wait " + fmt(s.mean_wait()) + " vs " + fmt(expected));

  v.notes << big.zones.size() << " zones x " << big.config.n_agents << " agents, " << fmt(one_run, 3)
          << " s/day, hash " << h << "; M/M/2 wait " << fmt(s.mean_wait()) << " vs " << fmt(expected)
          << " min";
}

void pipeline_properties(Verdict& v) {
  using namespace hubpipe;
  const auto stream = test::random_stream(10'000, 17);
  Pipeline p({"acceptance-key", 20'000}, test::zones());
  auto rep = p.ingest(stream);
  v.expect(rep.input == 10'000, "input count");
  v.expect(rep.input == rep.stored + rep.rejected, "input != stored + rejected");
  v.expect(p.storage().size() == rep.stored && p.rejections().size() == rep.rejected, "log sizes");

  Window all{-1'000'000, 1'000'000'000};
  auto live = p.live(all);
  auto replay1 = p.replay(all);
  auto replay2 = p.replay(all);
  v.expect(to_json(live).dump() == to_json(replay1).dump(), "replay differs from live");
  v.expect(to_json(replay1).dump() == to_json(replay2).dump(), "replays differ");

  auto stored = p.storage().read();
  std::set<std::string> oracle;
  for (const auto& r : stored)
    oracle.insert(r.device_token + "#" + std::to_string(r.timestamp) + "#" +
                  to_json(r, Role::Operator)["payload"].dump());
  v.expect(live.deduplicated == oracle.size(), "dedup " + std::to_string(live.deduplicated) + " vs oracle " +
                                                   std::to_string(oracle.size()));

  AccessPolicy policy = AccessPolicy::standard();
  for (auto role : {"analyst", "rider"})
    for (auto c : kFieldCategories) policy.authorize(role, c, {Granularity::Raw, false, false});
  std::string surface;
  for (const auto& r : stored) surface += to_json(r, Role::Analyst).dump() + to_json(r, Role::Rider).dump();
  surface += to_json(replay1).dump() + p.rejections_csv() + policy.audit_jsonl();
  std::set<std::string> secrets;
  for (const auto& r : stream) {
    if (!r.device_id.empty()) secrets.insert("\"" + r.device_id + "\"");
    if (r.user_id) secrets.insert("\"" + *r.user_id + "\"");
    if (r.lat) secrets.insert(json(*r.lat).dump());
    if (r.lon) secrets.insert(json(*r.lon).dump());
  }
  std::size_t leaks = 0;
  for (const auto& s : secrets) leaks += surface.find(s) != std::string::npos;
  v.expect(leaks == 0, std::to_string(leaks) + " raw identifiers or coordinates leaked");
  v.notes << rep.input << " = " << rep.stored << " stored + " << rep.rejected << " rejected, dedup "
          << live.deduplicated << ", " << secrets.size() << " secrets scanned, " << leaks << " leaks";
}

void cli_api_equivalence(Verdict& v) {
  gateway::ServiceConfig cfg;
  cfg.data_dir = data();
  gateway::Api api(cfg);
  gateway::HttpServer server(api);
  int port = server.bind("127.0.0.1", 0);
  server.start();
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(120, 0);
  for (int seed : {3, 7, 11}) {
    int code = 0;
    auto out = run_cli("simulate --world demo --seed " + std::to_string(seed) + " --data-dir " + data().string(), code);
    v.expect(code == 0, "simulate exited " + std::to_string(code));
    auto cli = json::parse(out);

    auto created = client.Post("/v1/runs", json{{"world", "demo"}, {"seed", seed}, {"start", true}}.dump(),
                               "application/json");
    if (!created || created->status != 201) {
      v.expect(false, "POST /v1/runs failed");
      continue;
    }
    auto id = json::parse(created->body)["id"].get<std::string>();
    std::string ndjson;
    client.Get("/v1/runs/" + id + "/snapshots?stream=1&since=-1", [&](const char* d, std::size_t n) {
      ndjson.append(d, n);
      return true;
    });
    auto res = client.Get("/v1/runs/" + id + "/result");
    if (!res || res->status != 200) {
      v.expect(false, "GET result failed for " + id);
      continue;
    }
    auto api_result = json::parse(res->body);
    for (auto key : {"total_mtco2e", "total_vmt", "trips_completed"})
      v.expect(api_result[key] == cli[key], std::string(key) + " differs at seed " + std::to_string(seed));
    v.expect(api_result["hash"] == cli["hash"], "hash differs at seed " + std::to_string(seed));
    auto last_nl = ndjson.rfind('\n', ndjson.size() - 2);
    auto last = json::parse(ndjson.substr(last_nl == std::string::npos ? 0 : last_nl + 1));
    v.expect(last["cumulative_mtco2e"] == cli["total_mtco2e"], "final snapshot total differs");
    v.notes << "seed " << seed << ": " << cli["total_mtco2e"].get<double>() << " MTCO2e; ";
  }
  server.stop();
}

}  // namespace

int main() {
  criterion("baseline-reproduction", 5.0, baseline_reproduction);
  criterion("scenario-milestones", 1.0, scenario_milestones);
  criterion("offset-sizing", 0.0, offset_sizing);
  criterion("equity-calibration", 0.0, equity_calibration);
  criterion("charger-ratio", 0.0, charger_ratios);
  criterion("simulation-properties", 300.0, simulation_properties);
  criterion("pipeline-properties", 0.0, pipeline_properties);
  criterion("cli-api-equivalence", 0.0, cli_api_equivalence);
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}

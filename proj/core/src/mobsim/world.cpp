#include "zevsim/mobsim/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "zevsim/error.hpp"
#include "zevsim/io.hpp"

namespace zevsim::mobsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kUnresolved = std::numeric_limits<std::size_t>::max();

double parse_clock(std::string_view text) {
  auto parts = io::split(io::trim(text), ':');
  if (parts.size() != 3) throw Error(Errc::ParseError, "bad GTFS time '" + std::string(text) + "'");
  double h = std::stod(parts[0]), m = std::stod(parts[1]), s = std::stod(parts[2]);
  return h * 60.0 + m + s / 60.0;
}

std::array<double, 3> band_array(const json& j, std::array<double, 3> fallback) {
  if (j.is_null()) return fallback;
  return {j.value("low", fallback[0]), j.value("middle", fallback[1]), j.value("high", fallback[2])};
}

[[noreturn]] void fail(const std::vector<std::string>& problems) {
  std::ostringstream msg;
  msg << problems.size() << " problem(s): ";
  for (std::size_t i = 0; i < problems.size(); ++i) msg << (i ? "; " : "") << problems[i];
  throw Error(Errc::ValidationFailure, msg.str());
}

std::vector<std::string> validation_problems(const World& w) {
  std::vector<std::string> out;
  const std::size_t nz = w.zones.size();
  if (nz == 0) out.emplace_back("world has no zones");
  if (nz > kMaxZones) out.push_back("world has " + std::to_string(nz) + " zones (limit 50)");
  if (w.config.n_agents == 0 || w.config.n_agents > kMaxAgents)
    out.push_back("n_agents " + std::to_string(w.config.n_agents) + " outside 1..50000");

  std::set<std::string> seen;
  for (const auto& z : w.zones) {
    if (!seen.insert(z.id).second) out.push_back("zone " + z.id + ": duplicate id");
    if (!(z.population >= 0.0) || !(z.employment >= 0.0) || !std::isfinite(z.population) ||
        !std::isfinite(z.employment))
      out.push_back("zone " + z.id + ": population and employment must be finite and >= 0");
    if (!z.tract_id.empty() && !w.tracts.empty() && !w.tracts.count(z.tract_id))
      out.push_back("zone " + z.id + ": unknown tract " + z.tract_id);
  }

  for (std::size_t i = 0; i < w.edges.size(); ++i) {
    const auto& e = w.edges[i];
    std::string tag = "edge " + std::to_string(i);
    if (e.from >= nz || e.to >= nz) {
      out.push_back(tag + ": unknown zone");
      continue;
    }
    tag += " (" + w.zones[e.from].id + "->" + w.zones[e.to].id + ")";
    if (e.from == e.to) out.push_back(tag + ": self loop");
    if (!(e.distance_miles > 0.0)) out.push_back(tag + ": distance must be > 0");
    if (!(e.capacity_vph > 0.0)) out.push_back(tag + ": capacity must be > 0");
    if (!(e.free_flow_minutes > 0.0)) out.push_back(tag + ": free-flow minutes must be > 0");
  }

  for (const auto& r : w.routes) {
    if (r.stop_zones.size() < 2) out.push_back("route " + r.id + ": fewer than two stops");
    for (auto z : r.stop_zones)
      if (z >= nz) out.push_back("route " + r.id + ": stop in unknown zone");
    for (std::size_t i = 1; i < r.stop_offsets.size(); ++i)
      if (!(r.stop_offsets[i] > r.stop_offsets[i - 1])) out.push_back("route " + r.id + ": stop times not increasing");
    if (!(r.headway > 0.0)) out.push_back("route " + r.id + ": headway must be > 0");
    if (r.last_departure < r.first_departure) out.push_back("route " + r.id + ": service span inverted");
  }

  for (const auto& h : w.hubs) {
    if (h.zone >= nz) out.push_back("hub " + h.id + ": unknown zone");
    if (h.parking_spaces < 0) out.push_back("hub " + h.id + ": parking spaces must be >= 0");
    if (h.charger_ports < 0) out.push_back("hub " + h.id + ": charger ports must be >= 0");
    for (auto r : h.routes) {
      if (r >= w.routes.size()) {
        out.push_back("hub " + h.id + ": unknown route");
      } else if (h.zone < nz && !w.routes[r].stop_index(h.zone)) {
        out.push_back("hub " + h.id + ": route " + w.routes[r].id + " does not stop at hub zone");
      }
    }
  }

  // strong connectivity over zones that generate or attract demand
  if (nz > 0 && nz <= kMaxZones) {
    std::vector<std::vector<std::size_t>> fwd(nz), rev(nz);
    for (const auto& e : w.edges) {
      if (e.from >= nz || e.to >= nz) continue;
      fwd[e.from].push_back(e.to);
      rev[e.to].push_back(e.from);
    }
    std::vector<std::size_t> demand;
    for (std::size_t i = 0; i < nz; ++i)
      if (w.zones[i].population > 0.0 || w.zones[i].employment > 0.0) demand.push_back(i);
    if (!demand.empty()) {
      auto reach = [&](const std::vector<std::vector<std::size_t>>& g) {
        std::vector<bool> hit(nz, false);
        std::vector<std::size_t> stack{demand.front()};
        hit[demand.front()] = true;
        while (!stack.empty()) {
          auto v = stack.back();
          stack.pop_back();
          for (auto u : g[v])
            if (!hit[u]) {
              hit[u] = true;
              stack.push_back(u);
            }
        }
        return hit;
      };
      auto a = reach(fwd), b = reach(rev);
      for (auto z : demand)
        if (!a[z] || !b[z]) out.push_back("zone " + w.zones[z].id + ": not strongly connected to demand network");
    }
  }
  return out;
}

}  // namespace

std::optional<std::size_t> TransitRoute::stop_index(std::size_t zone) const {
  auto it = std::find(stop_zones.begin(), stop_zones.end(), zone);
  if (it == stop_zones.end()) return std::nullopt;
  return static_cast<std::size_t>(it - stop_zones.begin());
}

std::optional<double> TransitRoute::next_departure(std::size_t from, std::size_t to, double time,
                                                   double headway_multiplier) const {
  if (from == to || from >= stop_offsets.size() || to >= stop_offsets.size()) return std::nullopt;
  double offset = to > from ? stop_offsets[from] : running_time() - stop_offsets[from];
  double h = headway * headway_multiplier;
  double k = std::max(0.0, std::ceil((time - offset - first_departure) / h - 1e-9));
  double dep = first_departure + k * h;
  if (dep > last_departure + 1e-9) return std::nullopt;
  return dep + offset;
}

double TransitRoute::in_vehicle_minutes(std::size_t from, std::size_t to) const {
  return std::abs(stop_offsets.at(to) - stop_offsets.at(from));
}

std::optional<std::size_t> World::zone_index(const std::string& id) const {
  for (std::size_t i = 0; i < zones.size(); ++i)
    if (zones[i].id == id) return i;
  return std::nullopt;
}

void validate(const World& world) {
  auto problems = validation_problems(world);
  if (!problems.empty()) fail(problems);
}

WorldConfig world_config_from_json(const json& j, const std::vector<Zone>& zones) {
  WorldConfig c;
  c.n_agents = j.value("n_agents", c.n_agents);
  c.default_seed = j.value("seed", c.default_seed);
  c.employment_rate = j.value("employment_rate", c.employment_rate);
  if (j.contains("am_window")) {
    c.windows.am_start_hour = j["am_window"].at(0);
    c.windows.am_end_hour = j["am_window"].at(1);
  }
  if (j.contains("pm_window")) {
    c.windows.pm_start_hour = j["pm_window"].at(0);
    c.windows.pm_end_hour = j["pm_window"].at(1);
  }
  c.income_sigma = j.value("income_sigma", c.income_sigma);
  if (j.contains("income_bands")) {
    c.low_income_below = j["income_bands"].value("low_below", c.low_income_below);
    c.high_income_from = j["income_bands"].value("high_from", c.high_income_from);
  }
  c.vot_wage_fraction = j.value("vot_wage_fraction", c.vot_wage_fraction);
  c.work_hours_per_year = j.value("work_hours_per_year", c.work_hours_per_year);
  c.no_vehicle_propensity = band_array(j.value("no_vehicle_propensity", json()), c.no_vehicle_propensity);
  c.ev_base_share = j.value("ev_base_share", c.ev_base_share);
  c.ev_band_multiplier = band_array(j.value("ev_band_multiplier", json()), c.ev_band_multiplier);

  const json costs = j.value("costs", json::object());
  c.logit_scale_usd = costs.value("logit_scale_usd", c.logit_scale_usd);
  c.gas_cost_per_mile = costs.value("gas_per_mile", c.gas_cost_per_mile);
  c.ev_cost_per_mile = costs.value("ev_per_mile", c.ev_cost_per_mile);
  c.parking_cost = costs.value("parking", c.parking_cost);
  c.hub_parking_cost = costs.value("hub_parking", c.hub_parking_cost);
  c.transit_fare = costs.value("transit_fare", c.transit_fare);
  c.incentive_amortization_trips = costs.value("incentive_amortization_trips", c.incentive_amortization_trips);

  c.transit_access_minutes = j.value("transit_access_minutes", c.transit_access_minutes);
  c.hub_transfer_minutes = j.value("hub_transfer_minutes", c.hub_transfer_minutes);
  c.active_speed_mph = j.value("active_speed_mph", c.active_speed_mph);
  c.default_parking_search_minutes = j.value("parking_search_minutes", c.default_parking_search_minutes);
  c.demand_scale = j.value("demand_scale", c.demand_scale);
  for (const auto& id : j.value("priced_zones", std::vector<std::string>{})) {
    auto it = std::find_if(zones.begin(), zones.end(), [&](const Zone& z) { return z.id == id; });
    if (it == zones.end()) throw Error(Errc::ValidationFailure, "priced zone " + id + " is not a zone");
    c.priced_zones.insert(static_cast<std::size_t>(it - zones.begin()));
  }
  if (j.contains("charger")) {
    const auto& ch = j["charger"];
    std::string model = ch.value("service", std::string("exponential"));
    if (model == "deterministic") c.charger_service = ServiceModel::Deterministic;
    else if (model == "exponential") c.charger_service = ServiceModel::Exponential;
    else throw Error(Errc::ParseError, "unknown charger service model '" + model + "'");
    c.charger_service_minutes = ch.value("mean_minutes", c.charger_service_minutes);
    c.charge_probability = ch.value("charge_probability", c.charge_probability);
  }
  c.factor_year = j.value("factor_year", c.factor_year);
  if (j.contains("reference")) {
    const auto& r = j["reference"];
    if (r.contains("daily_vmt")) c.reference_daily_vmt = r["daily_vmt"].get<double>();
    c.reference_cumulative_vmt = r.value("cumulative_vmt_by_hour", std::vector<double>{});
  }
  return c;
}

World load_world(const fs::path& dir) {
  World w;
  w.name = dir.filename().string();
  std::vector<std::string> problems;

  json zones = json::parse(io::read_text(dir / "zones.geojson"), nullptr, false);
  if (zones.is_discarded() || !zones.contains("features"))
    throw Error(Errc::ParseError, (dir / "zones.geojson").string() + ": not a GeoJSON FeatureCollection");
  for (const auto& f : zones["features"]) {
    const auto& p = f.at("properties");
    Zone z;
    z.id = p.at("zone_id").get<std::string>();
    z.population = p.value("population", 0.0);
    z.employment = p.value("employment", 0.0);
    z.tract_id = p.value("tract_id", std::string());
    if (p.contains("centroid_lat")) {
      z.lat = p["centroid_lat"];
      z.lon = p["centroid_lon"];
    } else if (f.contains("geometry") && f["geometry"].value("type", "") == "Polygon") {
      const auto& ring = f["geometry"]["coordinates"].at(0);
      double sx = 0, sy = 0;
      std::size_t n = ring.size() > 1 ? ring.size() - 1 : ring.size();
      for (std::size_t i = 0; i < n; ++i) {
        sx += ring[i].at(0).get<double>();
        sy += ring[i].at(1).get<double>();
      }
      z.lon = sx / static_cast<double>(n);
      z.lat = sy / static_cast<double>(n);
    }
    if (f.contains("geometry")) w.zone_geometry[z.id] = f["geometry"];
    w.zones.push_back(std::move(z));
  }

  auto resolve = [&](const std::string& id, const std::string& who) {
    auto idx = w.zone_index(id);
    if (!idx) {
      problems.push_back(who + ": unknown zone " + id);
      return kUnresolved;
    }
    return *idx;
  };

  auto edges = io::CsvTable::load(dir / "edges.csv");
  auto ef = edges.column("from"), et = edges.column("to"), ed = edges.column("distance_miles"),
       em = edges.column("free_flow_minutes"), ec = edges.column("capacity_vph");
  for (std::size_t r = 0; r < edges.rows(); ++r) {
    std::string tag = "edge row " + std::to_string(r + 1);
    auto from = resolve(edges.at(r, ef), tag), to = resolve(edges.at(r, et), tag);
    if (from == kUnresolved || to == kUnresolved) continue;
    w.edges.push_back({from, to, edges.number(r, ed), edges.number(r, em), edges.number(r, ec)});
  }

  // GTFS-lite: the earliest outbound trip gives the stop pattern, outbound
  // start times give the service span and mean headway
  const fs::path gtfs = dir / "gtfs-lite";
  auto stops = io::CsvTable::load(gtfs / "stops.txt");
  std::map<std::string, std::size_t> stop_zone;
  {
    auto sid = stops.column("stop_id"), sz = stops.column("zone_id");
    for (std::size_t r = 0; r < stops.rows(); ++r) {
      auto z = resolve(stops.at(r, sz), "stop " + stops.at(r, sid));
      if (z != kUnresolved) stop_zone[stops.at(r, sid)] = z;
    }
  }
  auto routes = io::CsvTable::load(gtfs / "routes.txt");
  auto trips = io::CsvTable::load(gtfs / "trips.txt");
  auto times = io::CsvTable::load(gtfs / "stop_times.txt");

  struct StopTime {
    long long seq;
    double dep;
    std::string stop;
  };
  std::map<std::string, std::vector<StopTime>> by_trip;
  {
    auto tt = times.column("trip_id"), td = times.column("departure_time"), ts = times.column("stop_id"),
         tq = times.column("stop_sequence");
    for (std::size_t r = 0; r < times.rows(); ++r)
      by_trip[times.at(r, tt)].push_back({times.integer(r, tq), parse_clock(times.at(r, td)), times.at(r, ts)});
    for (auto& [_, v] : by_trip)
      std::sort(v.begin(), v.end(), [](const StopTime& a, const StopTime& b) { return a.seq < b.seq; });
  }
  std::map<std::string, std::vector<std::string>> outbound;
  {
    auto rr = trips.column("route_id"), rt = trips.column("trip_id"), rd = trips.column("direction_id");
    for (std::size_t r = 0; r < trips.rows(); ++r)
      if (trips.integer(r, rd) == 0) outbound[trips.at(r, rr)].push_back(trips.at(r, rt));
  }
  {
    auto ri = routes.column("route_id");
    auto rn = routes.has_column("route_long_name") ? routes.column("route_long_name") : ri;
    for (std::size_t r = 0; r < routes.rows(); ++r) {
      TransitRoute route;
      route.id = routes.at(r, ri);
      route.name = routes.at(r, rn);
      std::vector<double> starts;
      const std::vector<StopTime>* pattern = nullptr;
      for (const auto& trip : outbound[route.id]) {
        const auto& st = by_trip[trip];
        if (st.empty()) continue;
        starts.push_back(st.front().dep);
        if (!pattern || st.front().dep < pattern->front().dep) pattern = &st;
      }
      if (!pattern) {
        problems.push_back("route " + route.id + ": no outbound trips");
        continue;
      }
      std::sort(starts.begin(), starts.end());
      for (const auto& s : *pattern) {
        auto it = stop_zone.find(s.stop);
        if (it == stop_zone.end()) {
          problems.push_back("route " + route.id + ": unknown stop " + s.stop);
          continue;
        }
        route.stop_zones.push_back(it->second);
        route.stop_offsets.push_back(s.dep - pattern->front().dep);
      }
      route.first_departure = starts.front();
      route.last_departure = starts.back();
      route.headway =
          starts.size() > 1 ? (starts.back() - starts.front()) / static_cast<double>(starts.size() - 1) : 0.0;
      w.routes.push_back(std::move(route));
    }
  }

  auto hubs = io::CsvTable::load(dir / "hubs.csv");
  {
    auto hi = hubs.column("hub_id"), hz = hubs.column("zone"), hp = hubs.column("parking_spaces"),
         hc = hubs.column("charger_ports"), hr = hubs.column("routes");
    for (std::size_t r = 0; r < hubs.rows(); ++r) {
      Hub h;
      h.id = hubs.at(r, hi);
      h.zone = resolve(hubs.at(r, hz), "hub " + h.id);
      h.parking_spaces = static_cast<int>(hubs.integer(r, hp));
      h.charger_ports = static_cast<int>(hubs.integer(r, hc));
      for (const auto& rid : io::split(hubs.at(r, hr), ';')) {
        auto id = std::string(io::trim(rid));
        if (id.empty()) continue;
        auto it = std::find_if(w.routes.begin(), w.routes.end(), [&](const TransitRoute& x) { return x.id == id; });
        if (it == w.routes.end()) problems.push_back("hub " + h.id + ": unknown route " + id);
        else h.routes.push_back(static_cast<std::size_t>(it - w.routes.begin()));
      }
      w.hubs.push_back(std::move(h));
    }
  }

  if (fs::exists(dir / "tracts.csv"))
    for (auto& t : load_tracts(dir / "tracts.csv")) w.tracts.emplace(t.tract_id, t);

  json agents = json::parse(io::read_text(dir / "agents.json"), nullptr, false);
  if (agents.is_discarded()) throw Error(Errc::ParseError, (dir / "agents.json").string() + ": invalid JSON");
  if (agents.contains("name")) w.name = agents["name"].get<std::string>();
  w.config = world_config_from_json(agents, w.zones);

  auto more = validation_problems(w);
  problems.insert(problems.end(), more.begin(), more.end());
  if (!problems.empty()) fail(problems);
  return w;
}

NetworkIndex::NetworkIndex(const World& world) : n_(world.zones.size()) {
  paths_.assign(n_ * n_, {});
  distance_.assign(n_ * n_, 0.0);
  minutes_.assign(n_ * n_, 0.0);
  reachable_.assign(n_ * n_, false);
  std::vector<std::vector<std::size_t>> out(n_);
  for (std::size_t i = 0; i < world.edges.size(); ++i) out[world.edges[i].from].push_back(i);

  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < n_; ++s) {
    std::vector<double> dist(n_, inf);
    std::vector<std::size_t> via(n_, kUnresolved);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[s] = 0.0;
    pq.push({0.0, s});
    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (d > dist[v]) continue;
      for (auto ei : out[v]) {
        const auto& e = world.edges[ei];
        double nd = d + e.free_flow_minutes;
        if (nd < dist[e.to]) {
          dist[e.to] = nd;
          via[e.to] = ei;
          pq.push({nd, e.to});
        }
      }
    }
    for (std::size_t t = 0; t < n_; ++t) {
      auto k = s * n_ + t;
      if (dist[t] == inf) continue;
      reachable_[k] = true;
      minutes_[k] = dist[t];
      std::vector<std::size_t> p;
      for (auto v = t; v != s; v = world.edges[via[v]].from) p.push_back(via[v]);
      std::reverse(p.begin(), p.end());
      double miles = 0.0;
      for (auto ei : p) miles += world.edges[ei].distance_miles;
      distance_[k] = miles;
      paths_[k] = std::move(p);
    }
  }
}

bool NetworkIndex::reachable(std::size_t from, std::size_t to) const { return reachable_.at(from * n_ + to); }
const std::vector<std::size_t>& NetworkIndex::path(std::size_t from, std::size_t to) const {
  return paths_.at(from * n_ + to);
}
double NetworkIndex::distance_miles(std::size_t from, std::size_t to) const { return distance_.at(from * n_ + to); }
double NetworkIndex::free_flow_minutes(std::size_t from, std::size_t to) const { return minutes_.at(from * n_ + to); }

}  // namespace zevsim::mobsim

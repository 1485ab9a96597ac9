#include "zevsim/mobsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <queue>
#include <sstream>
#include <tuple>

#include "zevsim/error.hpp"
#include "zevsim/io.hpp"
#include "zevsim/mobsim/rng.hpp"

namespace zevsim::mobsim {

using nlohmann::json;

namespace {

constexpr double kIntrazonalMiles = 1.5;
constexpr double kIntrazonalMph = 25.0;
constexpr int kFlowWindow = 60;  // minutes of entries counted as hourly volume
constexpr double kBprAlpha = 0.15;
constexpr double kBprBeta = 4.0;

enum class EventKind { DepartAm, DepartPm, HubArrive, HubReturn, Arrive };

struct Event {
  double time;
  std::uint64_t seq;
  EventKind kind;
  std::uint32_t agent;
  bool operator>(const Event& o) const { return std::tie(time, seq) > std::tie(o.time, o.seq); }
};

struct Leg {
  double minutes = 0.0;
  double miles = 0.0;
  bool priced = false;
};

struct RouteChoice {
  std::size_t route = 0;
  std::size_t from = 0;  // stop indices
  std::size_t to = 0;
  double score = 0.0;
};

struct Tour {
  Mode mode = Mode::Active;
  std::size_t hub = 0;
  std::optional<RouteChoice> route;
  bool parked = false;
  bool via_hub = false;  // left the car near the hub after parking was denied
  bool charging = false;
};

struct PendingArrival {
  HubArrival arrival;
  std::uint32_t agent;
};

}  // namespace

struct SimulationRun::Impl {
  std::shared_ptr<const World> world;
  const WorldConfig& cfg;
  NetworkIndex net;
  std::vector<Agent> agents;
  std::vector<EmissionFactor> factors;
  std::uint64_t seed;
  SimOptions options;
  double gas_rate = 0.0, ev_rate = 0.0;

  mutable std::mutex mu;
  PolicyLevers active;
  std::uint64_t active_id = 1;
  std::optional<std::pair<PolicyLevers, std::uint64_t>> pending;
  std::uint64_t next_id = 1;
  std::vector<LeverChange> history;

  int tick = 0;
  bool finished = false;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::uint64_t seq = 0;

  std::vector<std::vector<std::uint32_t>> entries;  // per edge, per minute
  std::vector<Tour> tours;
  std::vector<HubState> hubs;
  std::vector<std::vector<PendingArrival>> hub_pending;
  std::vector<std::vector<ChargerArrival>> charger_arrivals;
  std::vector<std::vector<ChargerDeparture>> charger_departures;

  std::map<std::tuple<FuelType, std::size_t, int>, double> vmt_cells;
  double total_vmt = 0.0, running_mtco2e = 0.0;
  std::array<double, kModeCount> mode_vmt{};
  std::array<std::uint64_t, kModeCount> mode_trips{};
  std::uint64_t started = 0, completed = 0;
  std::vector<std::array<std::uint32_t, kModeCount>> departures;

  Impl(std::shared_ptr<const World> w, const PolicyLevers& levers, std::vector<EmissionFactor> f, std::uint64_t s,
       SimOptions o)
      : world(std::move(w)), cfg(world->config), net(*world), factors(std::move(f)), seed(s), options(std::move(o)) {
    validate(*world);
    validate(levers);
    agents = options.agents ? *options.agents
                            : generate_population(world->zones, world->tracts, cfg.n_agents, seed, cfg);
    for (const auto& a : agents)
      if (a.home >= world->zones.size() || a.work >= world->zones.size() || !(a.value_of_time > 0.0))
        throw Error(Errc::ValidationFailure, "agent " + std::to_string(a.id) + " is not valid for this world");

    bool have_gas = false, have_ev = false;
    for (const auto& ef : factors) {
      if (ef.vehicle_class != VehicleClass::PassengerCar || ef.year != cfg.factor_year) continue;
      if (ef.fuel == FuelType::Gasoline) gas_rate = ef.g_per_mile, have_gas = true;
      if (ef.fuel == FuelType::Electric) ev_rate = ef.g_per_mile, have_ev = true;
    }
    if (!have_gas || !have_ev)
      throw Error(Errc::MissingFactor,
                  "passenger car gasoline and electric factors required for year " + std::to_string(cfg.factor_year));

    active = levers;
    history.push_back({0, active_id, active});
    next_id = active_id;

    const int bins = options.horizon_ticks * 2 + kFlowWindow;
    entries.assign(world->edges.size(), std::vector<std::uint32_t>(static_cast<std::size_t>(bins), 0));
    departures.assign(static_cast<std::size_t>(bins), {});
    tours.assign(agents.size(), {});
    for (const auto& h : world->hubs) {
      HubState st;
      st.hub_id = h.id;
      st.capacity = h.parking_spaces;
      st.charger.ports = h.charger_ports + active.charger_ports_added;
      hubs.push_back(std::move(st));
    }
    hub_pending.assign(hubs.size(), {});
    charger_arrivals.assign(hubs.size(), {});
    charger_departures.assign(hubs.size(), {});

    for (const auto& a : agents) {
      if (!a.employed) continue;
      push(a.am_departure, EventKind::DepartAm, a.id);
      push(a.pm_departure, EventKind::DepartPm, a.id);
    }
  }

  void push(double time, EventKind kind, std::uint32_t agent) { events.push({time, seq++, kind, agent}); }

  std::size_t agent_index(std::uint32_t id) const {
    // ids are positions when generated; custom lists are looked up
    if (id < agents.size() && agents[id].id == id) return id;
    for (std::size_t i = 0; i < agents.size(); ++i)
      if (agents[i].id == id) return i;
    throw Error(Errc::InvalidArgument, "unknown agent");
  }

  static std::size_t minute_bin(double t, std::size_t size) {
    auto m = static_cast<std::ptrdiff_t>(std::floor(t));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(m, 0, static_cast<std::ptrdiff_t>(size) - 1));
  }

  double edge_minutes(std::size_t e, double t) const {
    const auto& edge = world->edges[e];
    const auto& bins = entries[e];
    std::size_t m = minute_bin(t, bins.size());
    std::uint64_t n = 0;
    for (std::size_t k = m + 1 > kFlowWindow ? m + 1 - kFlowWindow : 0; k <= m; ++k) n += bins[k];
    double vc = static_cast<double>(n) * cfg.demand_scale / edge.capacity_vph;
    return edge.free_flow_minutes * (1.0 + kBprAlpha * std::pow(vc, kBprBeta));
  }

  void log_vmt(FuelType fuel, std::size_t zone, double t, double miles, Mode mode) {
    int hour = (static_cast<int>(std::floor(t)) / 60) % 24;
    vmt_cells[{fuel, zone, hour}] += miles;
    total_vmt += miles;
    mode_vmt[static_cast<std::size_t>(mode)] += miles;
    running_mtco2e += miles * (fuel == FuelType::Electric ? ev_rate : gas_rate) / kGramsPerMetricTon;
  }

  bool priced(std::size_t zone) const { return cfg.priced_zones.count(zone) != 0; }

  /// Congested traversal from the current volumes; records entries and VMT
  /// when `record` is set.
  Leg traverse(std::size_t from, std::size_t to, double t0, bool record, FuelType fuel = FuelType::Gasoline,
               Mode mode = Mode::DriveGas) {
    Leg leg;
    leg.priced = priced(from) || priced(to);
    const auto& path = net.path(from, to);
    if (path.empty()) {
      leg.miles = kIntrazonalMiles;
      leg.minutes = kIntrazonalMiles / kIntrazonalMph * 60.0;
      if (record) log_vmt(fuel, from, t0, leg.miles, mode);
      return leg;
    }
    double t = t0;
    for (auto e : path) {
      const auto& edge = world->edges[e];
      leg.priced = leg.priced || priced(edge.to);
      double dt = edge_minutes(e, t);
      if (record) {
        ++entries[e][minute_bin(t, entries[e].size())];
        log_vmt(fuel, edge.from, t, edge.distance_miles, mode);
      }
      leg.miles += edge.distance_miles;
      t += dt;
    }
    leg.minutes = t - t0;
    return leg;
  }

  double active_minutes(std::size_t from, std::size_t to) const {
    double miles = from == to ? kIntrazonalMiles : net.distance_miles(from, to);
    return miles / cfg.active_speed_mph * 60.0;
  }

  std::optional<RouteChoice> best_route(std::size_t from_zone, std::size_t to_zone,
                                        std::span<const std::size_t> candidates) const {
    std::optional<RouteChoice> best;
    for (auto r : candidates) {
      const auto& route = world->routes[r];
      auto a = route.stop_index(from_zone), b = route.stop_index(to_zone);
      if (!a || !b || *a == *b) continue;
      double score = 0.5 * route.headway * active.transit_headway_multiplier + route.in_vehicle_minutes(*a, *b);
      if (!best || score < best->score) best = RouteChoice{r, *a, *b, score};
    }
    return best;
  }

  std::vector<std::size_t> all_routes() const {
    std::vector<std::size_t> v(world->routes.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
    return v;
  }

  std::optional<double> next_departure(const RouteChoice& rc, bool outbound, double t) const {
    const auto& route = world->routes[rc.route];
    return outbound ? route.next_departure(rc.from, rc.to, t, active.transit_headway_multiplier)
                    : route.next_departure(rc.to, rc.from, t, active.transit_headway_multiplier);
  }

  static FuelType fuel_of(const Agent& a) { return a.vehicle == Vehicle::EV ? FuelType::Electric : FuelType::Gasoline; }
  static Mode drive_mode_of(const Agent& a) { return a.vehicle == Vehicle::EV ? Mode::DriveEV : Mode::DriveGas; }

  void count_departure(Mode m) {
    ++started;
    ++mode_trips[static_cast<std::size_t>(m)];
    ++departures[static_cast<std::size_t>(tick)][static_cast<std::size_t>(m)];
  }

  void switch_mode(Tour& tour, Mode to) {
    --mode_trips[static_cast<std::size_t>(tour.mode)];
    ++mode_trips[static_cast<std::size_t>(to)];
    tour.mode = to;
  }

  void depart_am(const Agent& a, double t) {
    auto& tour = tours[agent_index(a.id)];
    const auto routes = all_routes();

    TripContext ctx;
    Leg drive = traverse(a.home, a.work, t, false);
    ctx.drive_minutes = drive.minutes;
    ctx.drive_miles = drive.miles;
    ctx.drive_priced = drive.priced;

    std::optional<std::pair<std::size_t, RouteChoice>> pnr;
    if (a.vehicle != Vehicle::None && a.home != a.work) {
      double best = 0.0;
      for (std::size_t h = 0; h < hubs.size(); ++h) {
        const auto& hub = world->hubs[h];
        if (hubs[h].occupied >= hubs[h].capacity || hub.zone == a.work) continue;
        if (hub.zone != a.home && net.free_flow_minutes(a.home, hub.zone) >= net.free_flow_minutes(a.home, a.work))
          continue;
        auto rc = best_route(hub.zone, a.work, hub.routes);
        if (!rc) continue;
        Leg leg = traverse(a.home, hub.zone, t, false);
        double score = leg.minutes + rc->score;
        if (!pnr || score < best) {
          best = score;
          pnr = {h, *rc};
          const auto& route = world->routes[rc->route];
          ctx.park_and_ride =
              ParkAndRideLeg{h, leg.minutes, leg.miles, leg.priced, route.headway, route.in_vehicle_minutes(rc->from, rc->to)};
        }
      }
    }
    auto transit = a.home != a.work ? best_route(a.home, a.work, routes) : std::nullopt;
    if (transit) {
      const auto& route = world->routes[transit->route];
      ctx.transit = TransitLeg{route.headway, route.in_vehicle_minutes(transit->from, transit->to)};
    }
    ctx.active_minutes = active_minutes(a.home, a.work);

    auto choice = choose_mode(a, ctx, active, cfg, keyed_uniform(seed, Stream::ModeChoice, a.id, 0));
    tour.mode = choice.mode;
    count_departure(choice.mode);

    switch (choice.mode) {
      case Mode::DriveGas:
      case Mode::DriveEV: {
        Leg leg = traverse(a.home, a.work, t, true, fuel_of(a), choice.mode);
        push(t + leg.minutes + active.parking_search_minutes, EventKind::Arrive, a.id);
        break;
      }
      case Mode::ParkAndRide: {
        tour.hub = pnr->first;
        tour.route = pnr->second;
        Leg leg = traverse(a.home, world->hubs[tour.hub].zone, t, true, fuel_of(a), Mode::ParkAndRide);
        push(t + leg.minutes + active.parking_search_minutes, EventKind::HubArrive, a.id);
        break;
      }
      case Mode::TransitDirect: {
        tour.route = transit;
        double board = t + cfg.transit_access_minutes;
        auto dep = next_departure(*transit, true, board);
        push(dep ? *dep + world->routes[transit->route].in_vehicle_minutes(transit->from, transit->to)
                 : t + ctx.active_minutes,
             EventKind::Arrive, a.id);
        break;
      }
      case Mode::Active:
        push(t + ctx.active_minutes, EventKind::Arrive, a.id);
        break;
    }
  }

  void hub_arrive(const Agent& a, double t) {
    const auto& tour = tours[agent_index(a.id)];
    const auto& hub = world->hubs[tour.hub];
    const auto& rc = *tour.route;
    HubArrival arr;
    arr.agent = a.id;
    arr.mode = a.vehicle == Vehicle::EV ? AccessMode::EvAuto : AccessMode::Other;
    arr.service = HubService::ParkNRide;
    arr.time = t;
    arr.wants_charge =
        a.vehicle == Vehicle::EV && keyed_uniform(seed, Stream::ChargeIntent, a.id) < cfg.charge_probability;
    arr.route = world->routes[rc.route].id;
    arr.next_departure = next_departure(rc, true, t + cfg.hub_transfer_minutes);
    (void)hub;
    hub_pending[tour.hub].push_back({arr, a.id});
  }

  void settle_hub_batches() {
    for (std::size_t h = 0; h < hubs.size(); ++h) {
      auto& pending = hub_pending[h];
      if (pending.empty()) continue;
      std::vector<HubArrival> batch;
      for (const auto& p : pending) batch.push_back(p.arrival);
      auto outcomes = hub_transfer(hubs[h], batch, options.matrix);
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        const auto& arr = batch[i];
        const Agent& a = agents[agent_index(pending[i].agent)];
        auto& tour = tours[agent_index(a.id)];
        const auto& rc = *tour.route;
        double ivt = world->routes[rc.route].in_vehicle_minutes(rc.from, rc.to);
        if (o.parked) {
          tour.parked = true;
          if (o.charging) {
            tour.charging = true;
            double service = cfg.charger_service == ServiceModel::Exponential
                                 ? keyed_exponential(cfg.charger_service_minutes, seed, Stream::ChargeService, a.id)
                                 : cfg.charger_service_minutes;
            charger_arrivals[h].push_back({arr.time, service, std::uint64_t{a.id} + 1});
          }
          push(arr.next_departure ? *arr.next_departure + ivt : arr.time + active_minutes(world->hubs[h].zone, a.work),
               EventKind::Arrive, a.id);
          continue;
        }
        reroute(a, tour, h, arr);
      }
      pending.clear();
    }
  }

  /// Parking denied: drive on or ride from the hub, by a fresh logit draw.
  void reroute(const Agent& a, Tour& tour, std::size_t h, const HubArrival& arr) {
    const auto& rc = *tour.route;
    const std::size_t hub_zone = world->hubs[h].zone;
    const auto& route = world->routes[rc.route];
    TripContext ctx;
    Leg onward = traverse(hub_zone, a.work, arr.time, false);
    ctx.drive_minutes = onward.minutes;
    ctx.drive_miles = onward.miles;
    ctx.drive_priced = onward.priced;
    ctx.transit = TransitLeg{route.headway, route.in_vehicle_minutes(rc.from, rc.to)};
    auto costs = mode_costs(a, ctx, active, cfg);
    const Mode drive = drive_mode_of(a);
    for (auto m : kModes)
      if (m != drive && m != Mode::TransitDirect) costs[static_cast<std::size_t>(m)].feasible = false;
    if (!arr.next_departure) costs[static_cast<std::size_t>(Mode::TransitDirect)].feasible = false;
    auto p = choice_probabilities(a, costs, cfg.logit_scale_usd);
    double u = keyed_uniform(seed, Stream::Reroute, a.id);
    if (u < p[static_cast<std::size_t>(drive)]) {
      switch_mode(tour, drive);
      Leg leg = traverse(hub_zone, a.work, arr.time, true, fuel_of(a), drive);
      push(arr.time + leg.minutes + active.parking_search_minutes, EventKind::Arrive, a.id);
    } else {
      switch_mode(tour, Mode::TransitDirect);
      tour.via_hub = true;
      push(*arr.next_departure + route.in_vehicle_minutes(rc.from, rc.to), EventKind::Arrive, a.id);
    }
  }

  void depart_pm(const Agent& a, double t) {
    auto& tour = tours[agent_index(a.id)];
    count_departure(tour.mode);
    switch (tour.mode) {
      case Mode::DriveGas:
      case Mode::DriveEV: {
        Leg leg = traverse(a.work, a.home, t, true, fuel_of(a), tour.mode);
        push(t + leg.minutes, EventKind::Arrive, a.id);
        return;
      }
      case Mode::ParkAndRide:
      case Mode::TransitDirect: {
        if (tour.mode == Mode::TransitDirect && !tour.via_hub) {
          const auto& rc = *tour.route;
          auto dep = next_departure(rc, false, t + cfg.transit_access_minutes);
          push(dep ? *dep + world->routes[rc.route].in_vehicle_minutes(rc.from, rc.to) : t + active_minutes(a.work, a.home),
               EventKind::Arrive, a.id);
          return;
        }
        const auto& rc = *tour.route;
        auto dep = next_departure(rc, false, t + cfg.transit_access_minutes);
        push(dep ? *dep + world->routes[rc.route].in_vehicle_minutes(rc.from, rc.to)
                 : t + active_minutes(a.work, world->hubs[tour.hub].zone),
             EventKind::HubReturn, a.id);
        return;
      }
      case Mode::Active:
        push(t + active_minutes(a.work, a.home), EventKind::Arrive, a.id);
        return;
    }
  }

  void hub_return(const Agent& a, double t) {
    auto& tour = tours[agent_index(a.id)];
    auto& hub = hubs[tour.hub];
    if (tour.parked) {
      release_parking(hub);
      tour.parked = false;
      ++hub.transfers;
      if (tour.charging) {
        charger_departures[tour.hub].push_back({t, std::uint64_t{a.id} + 1});
        tour.charging = false;
      }
    }
    const Mode leg_mode = tour.mode == Mode::ParkAndRide ? Mode::ParkAndRide : drive_mode_of(a);
    Leg leg = traverse(world->hubs[tour.hub].zone, a.home, t, true, fuel_of(a), leg_mode);
    push(t + leg.minutes, EventKind::Arrive, a.id);
  }

  void apply_pending_levers() {
    std::lock_guard lock(mu);
    if (!pending) return;
    active = pending->first;
    active_id = pending->second;
    pending.reset();
    history.push_back({tick, active_id, active});
    for (std::size_t h = 0; h < hubs.size(); ++h)
      hubs[h].charger.ports = world->hubs[h].charger_ports + active.charger_ports_added;
  }

  void step() {
    if (finished) return;
    apply_pending_levers();
    const double t_end = tick + 1.0;
    while (!events.empty() && events.top().time < t_end) {
      Event ev = events.top();
      events.pop();
      const Agent& a = agents[agent_index(ev.agent)];
      switch (ev.kind) {
        case EventKind::DepartAm: depart_am(a, ev.time); break;
        case EventKind::DepartPm: depart_pm(a, ev.time); break;
        case EventKind::HubArrive: hub_arrive(a, ev.time); break;
        case EventKind::HubReturn: hub_return(a, ev.time); break;
        case EventKind::Arrive: ++completed; break;
      }
    }
    settle_hub_batches();
    for (std::size_t h = 0; h < hubs.size(); ++h) {
      auto stepped = charger_queue_step(hubs[h].charger, charger_arrivals[h], 1.0, charger_departures[h]);
      hubs[h].charger = std::move(stepped.state);
      charger_arrivals[h].clear();
      charger_departures[h].clear();
    }
    ++tick;
    const int hard_stop = static_cast<int>(departures.size()) - kFlowWindow;
    if ((tick >= options.horizon_ticks && events.empty()) || tick >= hard_stop) finished = true;
  }

  HubStats stats(std::size_t h) const {
    const auto& s = hubs[h];
    HubStats out;
    out.hub_id = s.hub_id;
    out.capacity = s.capacity;
    out.charger_ports = s.charger.ports;
    out.transfers = s.transfers;
    out.reroutes = s.reroutes;
    out.parking_peak = s.peak;
    out.occupancy = s.occupied;
    out.parked_in = s.parked_in;
    out.parked_out = s.parked_out;
    out.sessions_arrived = s.charger.arrived;
    out.sessions_started = s.charger.started;
    out.sessions_completed = s.charger.completed;
    out.sessions_in_progress = s.charger.in_service.size();
    out.sessions_waiting = s.charger.waiting.size();
    out.sessions_abandoned = s.charger.abandoned;
    out.mean_wait_minutes = s.charger.mean_wait();
    out.max_wait_minutes = s.charger.max_wait;
    return out;
  }

  std::array<double, kModeCount> shares() const {
    std::array<double, kModeCount> out{};
    if (started == 0) return out;
    for (std::size_t i = 0; i < kModeCount; ++i)
      out[i] = static_cast<double>(mode_trips[i]) / static_cast<double>(started);
    return out;
  }
};

SimulationRun::SimulationRun(std::shared_ptr<const World> world, const PolicyLevers& levers,
                             std::vector<EmissionFactor> factors, std::uint64_t seed, SimOptions options)
    : impl_(std::make_unique<Impl>(std::move(world), levers, std::move(factors), seed, std::move(options))) {}

SimulationRun::~SimulationRun() = default;

int SimulationRun::tick() const noexcept { return impl_->tick; }
bool SimulationRun::finished() const noexcept { return impl_->finished; }
void SimulationRun::step() { impl_->step(); }

void SimulationRun::run_until(int tick) {
  while (!impl_->finished && impl_->tick < tick) impl_->step();
}

void SimulationRun::run() {
  while (!impl_->finished) impl_->step();
}

LeverAck SimulationRun::submit_levers(const PolicyLevers& levers, const LeverBounds& bounds) {
  validate(levers, bounds);
  std::lock_guard lock(impl_->mu);
  const auto& latest = impl_->pending ? impl_->pending->first : impl_->active;
  const auto latest_id = impl_->pending ? impl_->pending->second : impl_->active_id;
  if (levers == latest) return {latest_id, latest, false};
  impl_->pending = {levers, ++impl_->next_id};
  return {impl_->next_id, levers, true};
}

PolicyLevers SimulationRun::levers() const {
  std::lock_guard lock(impl_->mu);
  return impl_->active;
}

Progress SimulationRun::progress() const {
  const auto& m = *impl_;
  Progress p;
  p.tick = m.tick;
  p.finished = m.finished;
  p.trips_started = m.started;
  p.trips_completed = m.completed;
  p.mode_trips = m.mode_trips;
  p.mode_shares = m.shares();
  p.cumulative_vmt = m.total_vmt;
  p.cumulative_mtco2e = m.running_mtco2e;
  for (std::size_t h = 0; h < m.hubs.size(); ++h) p.hubs.push_back(m.stats(h));
  std::lock_guard lock(m.mu);
  p.lever_snapshot_id = m.active_id;
  p.levers = m.active;
  return p;
}

SimResult SimulationRun::result() const {
  const auto& m = *impl_;
  if (!m.finished) throw Error(Errc::IllegalTransition, "run has not finished");
  SimResult r;
  r.world = m.world->name;
  r.seed = m.seed;
  r.agents = m.agents.size();
  r.final_tick = m.tick;
  r.trips_started = m.started;
  r.trips_completed = m.completed;
  r.mode_trips = m.mode_trips;
  r.mode_shares = m.shares();
  r.mode_vmt = m.mode_vmt;
  for (const auto& [key, miles] : m.vmt_cells) {
    const auto& [fuel, zone, hour] = key;
    r.vmt_log.push_back({VehicleClass::PassengerCar, fuel, m.world->zones[zone].id, hour, miles});
    r.total_vmt += miles;
  }
  r.vmt_per_capita = r.agents ? r.total_vmt / static_cast<double>(r.agents) : 0.0;
  std::vector<std::string> zone_ids;
  for (const auto& z : m.world->zones) zone_ids.push_back(z.id);
  auto inventory = build_baseline(r.vmt_log, m.factors, m.cfg.factor_year, zone_ids);
  r.total_mtco2e = inventory.on_road_total();
  r.grid = emissions_map(inventory);
  for (std::size_t h = 0; h < m.hubs.size(); ++h) r.hubs.push_back(m.stats(h));
  std::lock_guard lock(m.mu);
  r.lever_history = m.history;
  return r;
}

std::array<std::uint64_t, kModeCount> SimulationRun::departures_between(int from, int to) const {
  std::array<std::uint64_t, kModeCount> out{};
  const auto& d = impl_->departures;
  for (int t = std::max(0, from); t < std::min(to, static_cast<int>(d.size())); ++t)
    for (std::size_t i = 0; i < kModeCount; ++i) out[i] += d[static_cast<std::size_t>(t)][i];
  return out;
}

const std::vector<Agent>& SimulationRun::agents() const noexcept { return impl_->agents; }
const World& SimulationRun::world() const noexcept { return *impl_->world; }

SimResult simulate_day(const World& world, const PolicyLevers& levers, std::span<const EmissionFactor> factors,
                       std::uint64_t seed) {
  SimulationRun run(std::make_shared<const World>(world), levers, {factors.begin(), factors.end()}, seed);
  run.run();
  return run.result();
}

json to_json(const HubStats& h) {
  return {{"hub_id", h.hub_id},
          {"capacity", h.capacity},
          {"charger_ports", h.charger_ports},
          {"transfers", h.transfers},
          {"reroutes", h.reroutes},
          {"parking_peak", h.parking_peak},
          {"occupancy", h.occupancy},
          {"parked_in", h.parked_in},
          {"parked_out", h.parked_out},
          {"sessions_arrived", h.sessions_arrived},
          {"sessions_started", h.sessions_started},
          {"sessions_completed", h.sessions_completed},
          {"sessions_in_progress", h.sessions_in_progress},
          {"sessions_waiting", h.sessions_waiting},
          {"sessions_abandoned", h.sessions_abandoned},
          {"mean_wait_minutes", h.mean_wait_minutes},
          {"max_wait_minutes", h.max_wait_minutes}};
}

json to_json(const SimResult& r) {
  json modes = json::object();
  for (std::size_t i = 0; i < kModeCount; ++i)
    modes[std::string(to_string(kModes[i]))] = {
        {"trips", r.mode_trips[i]}, {"share", r.mode_shares[i]}, {"vmt", r.mode_vmt[i]}};
  json hubs = json::array();
  for (const auto& h : r.hubs) hubs.push_back(to_json(h));
  json zones = json::array();
  for (std::size_t z = 0; z < r.grid.zones.size(); ++z)
    zones.push_back({{"zone_id", r.grid.zones[z]}, {"mtco2e", r.grid.zone_totals[z]}});
  json log = json::array();
  for (const auto& rec : r.vmt_log)
    log.push_back({{"fuel", to_string(rec.fuel)}, {"zone", rec.zone}, {"hour", rec.hour}, {"vmt", rec.vmt}});
  json levers = json::array();
  for (const auto& c : r.lever_history)
    levers.push_back({{"tick", c.tick}, {"snapshot_id", c.snapshot_id}, {"levers", to_json(c.levers)}});
  return {{"world", r.world},
          {"seed", r.seed},
          {"agents", r.agents},
          {"final_tick", r.final_tick},
          {"trips_started", r.trips_started},
          {"trips_completed", r.trips_completed},
          {"modes", modes},
          {"total_vmt", r.total_vmt},
          {"vmt_per_capita", r.vmt_per_capita},
          {"total_mtco2e", r.total_mtco2e},
          {"hubs", hubs},
          {"zone_emissions", zones},
          {"hour_emissions", r.grid.hour_totals},
          {"vmt_log", log},
          {"lever_history", levers}};
}

std::string result_hash(const SimResult& result) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : to_json(result).dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string modes_csv(const SimResult& r) {
  std::ostringstream out;
  out << "mode,trips,share,vmt\n";
  for (std::size_t i = 0; i < kModeCount; ++i)
    out << to_string(kModes[i]) << ',' << r.mode_trips[i] << ',' << io::format_double(r.mode_shares[i]) << ','
        << io::format_double(r.mode_vmt[i]) << '\n';
  return out.str();
}

std::string hubs_csv(const SimResult& r) {
  std::ostringstream out;
  out << "hub_id,capacity,charger_ports,transfers,reroutes,parking_peak,occupancy,parked_in,parked_out,"
         "sessions_started,sessions_completed,sessions_in_progress,mean_wait_minutes,max_wait_minutes\n";
  for (const auto& h : r.hubs)
    out << h.hub_id << ',' << h.capacity << ',' << h.charger_ports << ',' << h.transfers << ',' << h.reroutes << ','
        << h.parking_peak << ',' << h.occupancy << ',' << h.parked_in << ',' << h.parked_out << ','
        << h.sessions_started << ',' << h.sessions_completed << ',' << h.sessions_in_progress << ','
        << io::format_double(h.mean_wait_minutes) << ',' << io::format_double(h.max_wait_minutes) << '\n';
  return out.str();
}

}  // namespace zevsim::mobsim

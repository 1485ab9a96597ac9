#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "test_data.hpp"
#include "zevsim/error.hpp"
#include "zevsim/mobsim/simulation.hpp"
#include "zevsim/mobsim/rng.hpp"

using namespace zevsim;
using namespace zevsim::mobsim;

namespace {

std::filesystem::path demo_dir() { return test::data_dir() / "worlds" / "demo"; }

const World& demo_world() {
  static const World w = load_world(demo_dir());
  return w;
}

const std::vector<EmissionFactor>& factors() {
  static const auto f = load_baseline_dataset(test::data_dir() / "inventory" / "houston-2014").factors;
  return f;
}

Zone zone(std::string id, double pop, double emp = 1.0) {
  Zone z;
  z.id = std::move(id);
  z.population = pop;
  z.employment = emp;
  return z;
}

Agent plain_agent(double vot = 20.0, Vehicle v = Vehicle::GasolineCar) {
  Agent a;
  a.value_of_time = vot;
  a.vehicle = v;
  return a;
}

double share(const std::array<std::uint64_t, kModeCount>& counts, std::initializer_list<Mode> modes) {
  double total = 0, part = 0;
  for (auto c : counts) total += static_cast<double>(c);
  for (auto m : modes) part += static_cast<double>(counts[static_cast<std::size_t>(m)]);
  return total > 0 ? part / total : 0.0;
}

// Erlang C mean queueing delay, minutes.
double mmc_wait(double lambda, double mean_service, int c) {
  double a = lambda * mean_service, rho = a / c;
  double sum = 0.0, term = 1.0;
  for (int k = 0; k < c; ++k) {
    if (k > 0) term *= a / k;
    sum += term;
  }
  double top = term * a / c / (1.0 - rho);  // a^c / c! / (1 - rho)
  double p_wait = top / (sum + top);
  return p_wait * mean_service / (c * (1.0 - rho));
}

}  // namespace

TEST_CASE("population is deterministic and follows zone weights") {
  std::vector<Zone> zones{zone("A", 3000), zone("B", 1000)};
  std::map<std::string, TractProfile> none;

  auto a = generate_population(zones, none, 500, 11);
  auto b = generate_population(zones, none, 500, 11);
  CHECK(agents_to_csv(a) == agents_to_csv(b));
  CHECK(agents_to_csv(a) != agents_to_csv(generate_population(zones, none, 500, 12)));

  std::vector<Zone> one{zone("solo", 10)};
  for (const auto& ag : generate_population(one, none, 200, 3)) {
    CHECK(ag.home == 0);
    CHECK(ag.value_of_time > 0.0);
  }

  // binomial(10000, 0.75): sd = 43.3, so 3 sd = 130 < the 150-agent (2%) bound
  const double sd = std::sqrt(10000 * 0.75 * 0.25);
  for (std::uint64_t seed : {1u, 7u, 99u, 2024u}) {
    auto pop = generate_population(zones, none, 10'000, seed);
    auto home_a = std::count_if(pop.begin(), pop.end(), [](const Agent& x) { return x.home == 0; });
    CHECK(std::abs(static_cast<double>(home_a) - 7500.0) <= 3 * sd);
    CHECK(std::abs(static_cast<double>(home_a) - 7500.0) <= 150.0);
  }

  CHECK_THROWS_AS(generate_population(std::vector<Zone>{}, none, 10, 1), Error);
  try {
    generate_population(std::vector<Zone>{zone("z", 0)}, none, 10, 1);
    FAIL("expected EmptyZones");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyZones);
  }
}

TEST_CASE("vehicle ownership follows tract sub-two-car rate") {
  WorldConfig cfg;
  cfg.no_vehicle_propensity = {1.0, 1.0, 1.0};
  TractProfile car_free{}, car_rich{};
  car_free.tract_id = "T1";
  car_free.median_income = 50'000;
  car_free.sub_two_car_rate = 1.0;
  car_rich.tract_id = "T2";
  car_rich.median_income = 50'000;
  car_rich.sub_two_car_rate = 0.0;
  std::map<std::string, TractProfile> tracts{{"T1", car_free}, {"T2", car_rich}};
  std::vector<Zone> zones{zone("A", 1), zone("B", 1)};
  zones[0].tract_id = "T1";
  zones[1].tract_id = "T2";
  for (const auto& a : generate_population(zones, tracts, 2000, 5, cfg)) {
    if (a.home == 0) CHECK(a.vehicle == Vehicle::None);
    else CHECK(a.vehicle != Vehicle::None);
  }
}

TEST_CASE("OD matrix counts one trip each way per employed agent") {
  std::vector<Agent> agents(100);
  for (std::uint32_t i = 0; i < 100; ++i) {
    agents[i].id = i;
    agents[i].home = 0;
    agents[i].work = 1;
    agents[i].am_departure = 6 * 60 + static_cast<int>(i % 180);
    agents[i].pm_departure = 16 * 60 + static_cast<int>(i % 180);
    agents[i].value_of_time = 10;
  }
  auto od = build_od(agents, 2);
  CHECK(od.window_total(0, 1, 6, 9) == 100);
  CHECK(od.window_total(1, 0, 16, 19) == 100);
  CHECK(od.total() == 200);

  for (auto& a : agents) a.employed = false;
  CHECK(build_od(agents, 2).total() == 0);

  // bundled world: per-zone row sums equal employed agents by home zone
  const auto& w = demo_world();
  auto pop = generate_population(w.zones, w.tracts, w.config.n_agents, w.config.default_seed, w.config);
  auto full = build_od(pop, w.zones.size(), w.config.windows);
  std::vector<std::uint64_t> homes(w.zones.size()), works(w.zones.size());
  std::uint64_t employed = 0;
  for (const auto& a : pop)
    if (a.employed) {
      ++homes[a.home];
      ++works[a.work];
      ++employed;
    }
  for (std::size_t z = 0; z < w.zones.size(); ++z) {
    CHECK(full.origin_total(z, 6, 9) == homes[z]);
    CHECK(full.destination_total(z, 16, 19) == homes[z]);
    CHECK(full.destination_total(z, 6, 9) == works[z]);
  }
  CHECK(full.total() == 2 * employed);
}

TEST_CASE("logit choice matches closed-form probabilities") {
  WorldConfig cfg;
  cfg.logit_scale_usd = 2.0;
  cfg.parking_cost = 0.0;
  cfg.gas_cost_per_mile = 0.0;
  cfg.transit_fare = 0.0;
  cfg.transit_access_minutes = 0.0;
  PolicyLevers levers;
  levers.parking_search_minutes = 0.0;
  Agent agent = plain_agent(60.0, Vehicle::None);  // 1 USD per minute

  // transit vs active only
  TripContext trip;
  trip.transit = TransitLeg{0.0, 30.0};
  trip.active_minutes = 30.0;
  auto p = choose_mode(agent, trip, levers, cfg, 0.0).probabilities;
  CHECK(p[static_cast<std::size_t>(Mode::TransitDirect)] == doctest::Approx(0.5));
  CHECK(p[static_cast<std::size_t>(Mode::DriveGas)] == 0.0);
  CHECK(p[static_cast<std::size_t>(Mode::ParkAndRide)] == 0.0);

  auto empirical = [&](const TripContext& t, Mode m) {
    int hits = 0;
    for (std::uint64_t i = 0; i < 10'000; ++i)
      if (choose_mode(agent, t, levers, cfg, keyed_uniform(42, Stream::ModeChoice, i)).mode == m) ++hits;
    return hits / 10'000.0;
  };
  CHECK(std::abs(empirical(trip, Mode::TransitDirect) - 0.5) <= 0.02);

  // one scale unit (2 USD = 2 minutes) in favour of transit
  trip.transit->in_vehicle_minutes = 28.0;
  const double logistic = 1.0 / (1.0 + std::exp(-1.0));
  p = choose_mode(agent, trip, levers, cfg, 0.0).probabilities;
  CHECK(p[static_cast<std::size_t>(Mode::TransitDirect)] == doctest::Approx(logistic).epsilon(1e-12));
  CHECK(std::abs(empirical(trip, Mode::TransitDirect) - logistic) <= 0.02);
}

TEST_CASE("mode feasibility and dominance limits") {
  WorldConfig cfg;
  PolicyLevers levers;
  TripContext trip;
  trip.drive_minutes = 15;
  trip.drive_miles = 8;
  trip.drive_priced = true;
  trip.park_and_ride = ParkAndRideLeg{0, 6, 3, true, 15, 20};
  trip.transit = TransitLeg{15, 30};
  trip.active_minutes = 80;

  auto gas = choose_mode(plain_agent(), trip, levers, cfg, 0.5).probabilities;
  CHECK(gas[static_cast<std::size_t>(Mode::DriveEV)] == 0.0);
  CHECK(gas[static_cast<std::size_t>(Mode::DriveGas)] > 0.0);
  auto ev = choose_mode(plain_agent(20, Vehicle::EV), trip, levers, cfg, 0.5).probabilities;
  CHECK(ev[static_cast<std::size_t>(Mode::DriveGas)] == 0.0);
  CHECK(ev[static_cast<std::size_t>(Mode::DriveEV)] > 0.0);
  auto walker = choose_mode(plain_agent(20, Vehicle::None), trip, levers, cfg, 0.5).probabilities;
  CHECK(walker[static_cast<std::size_t>(Mode::ParkAndRide)] == 0.0);

  trip.park_and_ride.reset();
  CHECK(choose_mode(plain_agent(), trip, levers, cfg, 0.5).probabilities[2] == 0.0);

  // price limit: every driven option vanishes
  trip.park_and_ride = ParkAndRideLeg{0, 6, 3, true, 15, 20};
  levers.congestion_price = std::numeric_limits<double>::infinity();
  for (auto a : {plain_agent(), plain_agent(40, Vehicle::EV)}) {
    auto p = choose_mode(a, trip, levers, cfg, 0.999).probabilities;
    CHECK(p[static_cast<std::size_t>(Mode::TransitDirect)] + p[static_cast<std::size_t>(Mode::Active)] ==
          doctest::Approx(1.0));
  }
  // active is always available
  TripContext bare;
  bare.active_minutes = 10;
  CHECK(choose_mode(plain_agent(20, Vehicle::None), bare, {}, cfg, 0.99).mode == Mode::Active);
}

TEST_CASE("intermodal matrix matches the committed table") {
  auto m = IntermodalMatrix::standard();
  CHECK(m.size() == 99);
  CHECK(m == IntermodalMatrix::load(test::data_dir() / "hubs" / "intermodal_matrix.csv"));
  CHECK(IntermodalMatrix::parse_csv(m.to_csv()) == m);
  CHECK(m.pairing(HubService::ParkNRide, AccessMode::EvAuto) == Pairing::Primary);
  CHECK(m.pairing(HubService::ParkNRide, AccessMode::EvCarShare) == Pairing::Primary);
  CHECK(m.pairing(HubService::ParkNRide, AccessMode::Other) == Pairing::Supporting);
  CHECK(m.pairing(HubService::MetroLocal, AccessMode::EvShuttle) == Pairing::Primary);
  CHECK(m.pairing(HubService::MetroXpress, AccessMode::EvShuttle) == Pairing::Supporting);

  auto partial = IntermodalMatrix::parse_csv("service,EV Auto (ownership)\nPark n Ride,Primary\n");
  try {
    partial.pairing(HubService::ParkNRide, AccessMode::Other);
    FAIL("expected UnknownPairing");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownPairing);
  }
}

TEST_CASE("hub transfer allocates spaces by pairing then arrival") {
  const auto matrix = IntermodalMatrix::standard();
  HubState hub;
  hub.capacity = 5;
  hub.charger.ports = 2;
  HubArrival ev;
  ev.agent = 1;
  ev.mode = AccessMode::EvAuto;
  ev.time = 420.0;
  ev.wants_charge = true;
  ev.route = "X1";
  ev.next_departure = 431.0;
  auto out = hub_transfer(hub, std::span(&ev, 1), matrix);
  REQUIRE(out.size() == 1);
  CHECK(out[0].parked);
  CHECK(out[0].charging);
  CHECK(out[0].boarded_route == std::optional<std::string>("X1"));
  CHECK(out[0].wait_minutes == doctest::Approx(11.0));
  CHECK(out[0].pairing == Pairing::Primary);

  HubState full;
  full.capacity = 3;
  full.occupied = 3;
  out = hub_transfer(full, std::span(&ev, 1), matrix);
  CHECK_FALSE(out[0].parked);
  CHECK(out[0].rerouted);
  CHECK(full.reroutes == 1);
  CHECK(full.occupied == 3);

  // 100 simultaneous-tick arrivals, 40 spaces: sorting oracle
  std::mt19937_64 rng(9);
  std::vector<HubArrival> batch(100);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    batch[i].agent = i;
    batch[i].mode = rng() % 3 == 0 ? AccessMode::Other : AccessMode::EvAuto;
    batch[i].time = 480.0 + static_cast<double>(rng() % 60) / 60.0;
  }
  HubState lot;
  lot.capacity = 40;
  out = hub_transfer(lot, batch, matrix);
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto ka = std::tuple(batch[a].mode == AccessMode::Other, batch[a].time, a);
    auto kb = std::tuple(batch[b].mode == AccessMode::Other, batch[b].time, b);
    return ka < kb;
  });
  std::set<std::size_t> expected(order.begin(), order.begin() + 40);
  std::size_t parked = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].parked == (expected.count(i) == 1));
    parked += out[i].parked;
  }
  CHECK(parked == 40);
  CHECK(lot.occupied == 40);
  CHECK(lot.peak == 40);

  release_parking(lot);
  CHECK(lot.occupied == 39);
  CHECK(lot.parked_out == 1);
}

TEST_CASE("charger queue edge cases") {
  ChargerQueueState s;
  s.ports = 2;
  auto idle = charger_queue_step(s, {}, 1.0);
  ChargerQueueState expect = s;
  expect.clock = 1.0;
  CHECK(idle.state == expect);
  CHECK(idle.stats.waits.empty());

  // critically loaded deterministic single server
  ChargerQueueState one;
  one.ports = 1;
  std::uint64_t id = 0;
  for (int t = 0; t < 600; ++t) {
    std::vector<ChargerArrival> arr;
    if (t % 30 == 0) arr.push_back({static_cast<double>(t), 30.0, ++id});
    one = charger_queue_step(one, arr, 1.0).state;
  }
  CHECK(one.started == 20);
  CHECK(one.max_wait == 0.0);
  CHECK(one.completed + one.in_service.size() == one.started);

  // FIFO with abandonment
  ChargerQueueState q;
  q.ports = 1;
  std::vector<ChargerArrival> arr{{0.0, 100.0, 1}, {1.0, 10.0, 2}, {2.0, 10.0, 3}};
  q = charger_queue_step(q, arr, 5.0).state;
  std::vector<ChargerDeparture> leave{{7.0, 2}};
  auto st = charger_queue_step(q, {}, 5.0, leave);
  CHECK(st.state.abandoned == 1);
  CHECK(st.state.waiting.size() == 1);
  CHECK(st.state.waiting.front().session == 3);
  CHECK(st.state.arrived == st.state.started + st.state.waiting.size() + st.state.abandoned);
  CHECK(st.state.max_wait == doctest::Approx(6.0));
}

TEST_CASE("M/M/2 charger queue matches the Erlang C wait") {
  const double lambda = 4.0 / 60.0, service = 20.0;
  const double expected = mmc_wait(lambda, service, 2);
  CHECK(expected == doctest::Approx(16.0));

  ChargerQueueState s;
  s.ports = 2;
  std::mt19937_64 rng(2718);
  std::exponential_distribution<double> gap(lambda), svc(1.0 / service);
  const int minutes = 10'000 * 60;
  double next = gap(rng);
  std::uint64_t id = 0;
  std::vector<ChargerArrival> arr;
  double sum_wait_steps = 0.0;
  for (int t = 0; t < minutes; ++t) {
    arr.clear();
    while (next < t + 1.0) {
      arr.push_back({next, svc(rng), ++id});
      next += gap(rng);
    }
    auto step = charger_queue_step(s, arr, 1.0);
    for (double w : step.stats.waits) {
      CHECK_MESSAGE(w >= 0.0, "negative wait");
      sum_wait_steps += w;
    }
    s = std::move(step.state);
  }
  double mean = s.mean_wait();
  MESSAGE("M/M/2 mean wait " << mean << " vs " << expected);
  CHECK(std::abs(mean - expected) / expected <= 0.15);
  CHECK(sum_wait_steps == doctest::Approx(s.total_wait));

  // Little: time-average queue length against arrival rate x mean wait
  double L = s.queue_area / minutes;
  double lam_hat = static_cast<double>(s.arrived) / minutes;
  CHECK(std::abs(L - lam_hat * mean) / (lam_hat * mean) <= 0.10);
}

TEST_CASE("demo world loads and validation names offenders") {
  const auto& w = demo_world();
  CHECK(w.zones.size() == 12);
  CHECK(w.hubs.size() == 4);
  CHECK(w.routes.size() == 7);
  CHECK(w.config.priced_zones.size() == 2);
  CHECK_NOTHROW(validate(w));

  World broken = w;
  broken.edges[0].capacity_vph = 0.0;
  broken.hubs[1].parking_spaces = -1;
  broken.hubs[2].zone = 99;
  // cut every edge into Z12
  auto z12 = *w.zone_index("Z12");
  std::erase_if(broken.edges, [&](const NetworkEdge& e) { return e.to == z12; });
  try {
    validate(broken);
    FAIL("expected ValidationFailure");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(e.code() == Errc::ValidationFailure);
    CHECK(msg.find("capacity") != std::string::npos);
    CHECK(msg.find("hub H-EAST") != std::string::npos);
    CHECK(msg.find("hub H-NORTHWEST: unknown zone") != std::string::npos);
    CHECK(msg.find("zone Z12") != std::string::npos);
  }
}

TEST_CASE("free-flow paths agree with Floyd-Warshall") {
  const auto& w = demo_world();
  const std::size_t n = w.zones.size();
  NetworkIndex net(w);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(n * n, inf);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0.0;
  for (const auto& e : w.edges) d[e.from * n + e.to] = std::min(d[e.from * n + e.to], e.free_flow_minutes);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(net.reachable(i, j));
      CHECK(net.free_flow_minutes(i, j) == doctest::Approx(d[i * n + j]).epsilon(1e-12));
      double sum = 0.0;
      for (auto e : net.path(i, j)) sum += w.edges[e].free_flow_minutes;
      CHECK(sum == doctest::Approx(net.free_flow_minutes(i, j)).epsilon(1e-12));
    }
}

TEST_CASE("transit departures match the enumerated timetable") {
  const auto& w = demo_world();
  const auto& x1 = *std::find_if(w.routes.begin(), w.routes.end(), [](const TransitRoute& r) { return r.id == "X1"; });
  CHECK(x1.headway == doctest::Approx(15.0));
  CHECK(x1.first_departure == doctest::Approx(300.0));
  // brute force: outbound arrivals at stop 1 (offset 10)
  for (double t : {0.0, 309.0, 310.0, 423.5, 1389.0, 1390.0, 1391.0}) {
    std::optional<double> brute;
    for (double dep = 300.0; dep <= 1380.0 + 1e-9; dep += 15.0)
      if (dep + 10.0 >= t) {
        brute = dep + 10.0;
        break;
      }
    auto got = x1.next_departure(1, 2, t, 1.0);
    REQUIRE(got.has_value() == brute.has_value());
    if (got) CHECK(*got == doctest::Approx(*brute));
  }
  // inbound from stop 2 (Z06) toward stop 0: offset 27 - 20 = 7
  CHECK(*x1.next_departure(2, 0, 300.0, 1.0) == doctest::Approx(307.0));
  CHECK(*x1.next_departure(2, 0, 308.0, 2.0) == doctest::Approx(337.0));
  CHECK(x1.in_vehicle_minutes(0, 3) == doctest::Approx(27.0));
}

TEST_CASE("levers validate and serialize") {
  PolicyLevers l;
  CHECK_NOTHROW(validate(l));
  l.congestion_price = -1;
  CHECK_THROWS_AS(validate(l), Error);
  try {
    validate(l);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidLeverValue);
  }
  l = {};
  l.transit_headway_multiplier = 0.0;
  CHECK_THROWS_AS(validate(l), Error);

  auto patched = levers_from_json({{"congestion_price", 5}}, PolicyLevers{});
  CHECK(patched.congestion_price == 5.0);
  CHECK(levers_from_json(to_json(patched), PolicyLevers{}) == patched);
  CHECK_THROWS_AS(levers_from_json({{"warp_drive", 1}}, PolicyLevers{}), Error);
  CHECK_THROWS_AS(levers_from_json({{"charger_ports_added", 1.5}}, PolicyLevers{}), Error);
}

TEST_CASE("simulation is deterministic and conserves trips, cars and sessions") {
  const auto& w = demo_world();
  auto levers = default_levers(w.config);
  auto r1 = simulate_day(w, levers, factors(), 7);
  auto r2 = simulate_day(w, levers, factors(), 7);
  auto r3 = simulate_day(w, levers, factors(), 7);
  CHECK(result_hash(r1) == result_hash(r2));
  CHECK(result_hash(r1) == result_hash(r3));
  CHECK(result_hash(r1) != result_hash(simulate_day(w, levers, factors(), 8)));

  CHECK(r1.trips_started > 0);
  CHECK(r1.trips_started == r1.trips_completed);
  CHECK(std::accumulate(r1.mode_shares.begin(), r1.mode_shares.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::accumulate(r1.mode_trips.begin(), r1.mode_trips.end(), std::uint64_t{0}) == r1.trips_started);
  CHECK(r1.final_tick == kMinutesPerDay);
  for (const auto& h : r1.hubs) {
    CHECK(h.parked_in == h.parked_out + static_cast<std::uint64_t>(h.occupancy));
    CHECK(h.parking_peak <= h.capacity);
    CHECK(h.sessions_started == h.sessions_completed + h.sessions_in_progress);
    CHECK(h.sessions_arrived == h.sessions_started + h.sessions_waiting + h.sessions_abandoned);
    CHECK(h.mean_wait_minutes >= 0.0);
    CHECK(h.max_wait_minutes >= h.mean_wait_minutes);
  }
  std::uint64_t sessions = 0;
  for (const auto& h : r1.hubs) sessions += h.sessions_arrived;
  CHECK(sessions > 0);
}

TEST_CASE("simulation emissions equal the inventory over its own VMT log") {
  const auto& w = demo_world();
  auto r = simulate_day(w, default_levers(w.config), factors(), 7);
  std::vector<std::string> zone_ids;
  for (const auto& z : w.zones) zone_ids.push_back(z.id);
  auto inv = build_baseline(r.vmt_log, factors(), w.config.factor_year, zone_ids);
  CHECK(inv.on_road_total() == r.total_mtco2e);
  CHECK(inv.total_vmt() == doctest::Approx(r.total_vmt).epsilon(1e-12));

  double gas_rate = 0.0;
  for (const auto& f : factors())
    if (f.vehicle_class == VehicleClass::PassengerCar && f.fuel == FuelType::Gasoline && f.year == w.config.factor_year)
      gas_rate = f.g_per_mile;
  double gas_vmt = 0.0;
  for (const auto& rec : r.vmt_log)
    if (rec.fuel == FuelType::Gasoline) gas_vmt += rec.vmt;
  CHECK(r.total_mtco2e == doctest::Approx(gas_vmt * gas_rate / 1e6).epsilon(1e-12));
  double mode_vmt = std::accumulate(r.mode_vmt.begin(), r.mode_vmt.end(), 0.0);
  CHECK(mode_vmt == doctest::Approx(r.total_vmt).epsilon(1e-12));

  // electric fleet: no tailpipe emissions whatever the mode mix
  auto agents = generate_population(w.zones, w.tracts, w.config.n_agents, 7, w.config);
  for (auto& a : agents) a.vehicle = Vehicle::EV;
  SimOptions opts;
  opts.agents = agents;
  SimulationRun run(std::make_shared<const World>(w), default_levers(w.config), factors(), 7, opts);
  run.run();
  auto ev = run.result();
  CHECK(ev.total_vmt > 0.0);
  CHECK(ev.total_mtco2e == 0.0);
  CHECK(ev.mode_trips[static_cast<std::size_t>(Mode::DriveGas)] == 0);
}

TEST_CASE("levers apply at the next tick boundary and respond monotonically") {
  auto world = std::make_shared<const World>(demo_world());
  auto base = default_levers(world->config);
  const int T = 7 * 60;

  SimulationRun control(world, base, factors(), 7);
  SimulationRun priced(world, base, factors(), 7);
  control.run_until(T);
  priced.run_until(T);
  auto up = base;
  up.congestion_price = 5.0;
  auto ack = priced.submit_levers(up);
  CHECK(ack.changed);
  auto again = priced.submit_levers(up);
  CHECK_FALSE(again.changed);
  CHECK(again.snapshot_id == ack.snapshot_id);
  CHECK(priced.levers() == base);  // not yet applied
  auto bad = up;
  bad.congestion_price = -5.0;
  CHECK_THROWS_AS(priced.submit_levers(bad), Error);

  control.run();
  priced.run();
  CHECK(priced.levers() == up);
  CHECK(priced.progress().lever_snapshot_id == ack.snapshot_id);
  CHECK(control.departures_between(0, T) == priced.departures_between(0, T));
  const double drive_control = share(control.departures_between(T, kMinutesPerDay), {Mode::DriveGas, Mode::DriveEV});
  const double drive_priced = share(priced.departures_between(T, kMinutesPerDay), {Mode::DriveGas, Mode::DriveEV});
  CHECK(drive_priced < drive_control);

  auto history = priced.result().lever_history;
  REQUIRE(history.size() == 2);
  CHECK(history[1].tick == T);
  CHECK(history[1].snapshot_id == ack.snapshot_id);

  // higher price never raises drive share; more ports never raise mean wait
  double last = 2.0;
  for (double price : {0.0, 1.0, 2.5, 5.0, 10.0}) {
    auto l = base;
    l.congestion_price = price;
    auto r = simulate_day(*world, l, factors(), 7);
    double drive = r.mode_shares[0] + r.mode_shares[1];
    CHECK(drive <= last);
    last = drive;
  }
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    auto r0 = simulate_day(*world, base, factors(), seed);
    auto more = base;
    more.charger_ports_added = 3;
    auto r1 = simulate_day(*world, more, factors(), seed);
    for (std::size_t h = 0; h < r0.hubs.size(); ++h)
      CHECK(r1.hubs[h].mean_wait_minutes <= r0.hubs[h].mean_wait_minutes);
  }
}

TEST_CASE("scenario4-mobility preset cuts VMT to 80 percent") {
  const auto& w = demo_world();
  auto base = default_levers(w.config);
  auto preset = load_lever_preset(demo_dir() / "presets" / "scenario4-mobility.json", base);
  CHECK(preset.target_vmt_ratio == 0.8);
  const auto seed = w.config.default_seed;
  auto none = simulate_day(w, base, factors(), seed);
  auto tuned = simulate_day(w, preset.levers, factors(), seed);
  CHECK(tuned.total_vmt == doctest::Approx(0.8 * none.total_vmt).epsilon(0.02));
  CHECK(tuned.total_mtco2e < none.total_mtco2e);
  REQUIRE(w.config.reference_daily_vmt.has_value());
  CHECK(*w.config.reference_daily_vmt == none.total_vmt);
}

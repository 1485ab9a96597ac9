#include "zevsim/inventory.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "test_data.hpp"
#include "zevsim/error.hpp"

using namespace zevsim;

namespace {

std::vector<EmissionFactor> simple_factors(int year = 2014) {
  std::vector<EmissionFactor> f;
  for (auto c : kVehicleClasses) {
    f.push_back({c, FuelType::Gasoline, year, 400.0, std::nullopt});
    f.push_back({c, FuelType::Diesel, year, 600.0, std::nullopt});
    f.push_back({c, FuelType::Electric, year, 0.0, std::nullopt});
  }
  return f;
}

std::vector<ActivityRecord> random_activity(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> cls(0, 6), fuel(0, 2), zone(0, 4), hour(0, 23);
  std::uniform_real_distribution<double> vmt(0.0, 1e6);
  std::vector<ActivityRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({kVehicleClasses[cls(rng)], kFuelTypes[fuel(rng)], "z" + std::to_string(zone(rng)), hour(rng), vmt(rng)});
  }
  return out;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

TEST_CASE("single record converts grams to metric tons") {
  const std::vector<ActivityRecord> activity{{VehicleClass::PassengerCar, FuelType::Gasoline, "z1", 8, 1'000'000.0}};
  const auto inv = build_baseline(activity, simple_factors(), 2014);
  CHECK(inv.on_road_total() == doctest::Approx(400.0).epsilon(1e-12));
  CHECK(inv.class_total(VehicleClass::PassengerCar) == doctest::Approx(400.0).epsilon(1e-12));
}

TEST_CASE("empty activity gives an all-zero inventory") {
  const auto inv = build_baseline({}, simple_factors(), 2014);
  CHECK(inv.on_road_total() == 0.0);
  CHECK(inv.cells().empty());
  CHECK_THROWS_AS(class_share_report(inv), Error);
}

TEST_CASE("missing factor and negative VMT are hard errors") {
  std::vector<EmissionFactor> factors{{VehicleClass::PassengerCar, FuelType::Gasoline, 2014, 400.0, std::nullopt}};
  const std::vector<ActivityRecord> diesel{{VehicleClass::PassengerCar, FuelType::Diesel, "z1", 0, 10.0}};
  try {
    build_baseline(diesel, factors, 2014);
    FAIL("expected MissingFactor");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingFactor);
  }
  // factor for a different year does not count
  const std::vector<ActivityRecord> gas{{VehicleClass::PassengerCar, FuelType::Gasoline, "z1", 0, 10.0}};
  try {
    build_baseline(gas, factors, 2020);
    FAIL("expected MissingFactor");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingFactor);
  }
  const std::vector<ActivityRecord> negative{{VehicleClass::PassengerCar, FuelType::Gasoline, "z1", 0, -1.0}};
  try {
    build_baseline(negative, factors, 2014);
    FAIL("expected NegativeVmt");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NegativeVmt);
  }
}

TEST_CASE("factor table invariants are enforced") {
  auto factors = simple_factors();
  factors.push_back(factors.front());
  CHECK_THROWS_AS(build_baseline({}, factors, 2014), Error);

  std::vector<EmissionFactor> electric{{VehicleClass::PassengerCar, FuelType::Electric, 2014, 12.0, std::nullopt}};
  CHECK_THROWS_AS(build_baseline({}, electric, 2014), Error);
}

TEST_CASE("zone registry rejects unknown zones") {
  const std::vector<std::string> registry{"z1", "z2"};
  const std::vector<ActivityRecord> activity{{VehicleClass::PassengerCar, FuelType::Gasoline, "z9", 0, 10.0}};
  try {
    build_baseline(activity, simple_factors(), 2014, registry);
    FAIL("expected UnknownZone");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownZone);
  }
}

TEST_CASE("conservation, linearity and electric nullity hold on random activity") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    auto activity = random_activity(rng, 200);
    const auto inv = build_baseline(activity, simple_factors(), 2014);

    double cells = 0.0;
    for (const auto& [k, c] : inv.cells()) {
      CHECK(c.mtco2e >= 0.0);
      cells += c.mtco2e;
    }
    double classes = 0.0;
    for (auto c : kVehicleClasses) classes += inv.class_total(c);
    CHECK(rel_diff(cells, inv.on_road_total()) < 1e-6);
    CHECK(rel_diff(classes, inv.on_road_total()) < 1e-6);

    for (auto& a : activity) a.vmt *= 2.0;
    const auto doubled = build_baseline(activity, simple_factors(), 2014);
    CHECK(rel_diff(doubled.on_road_total(), 2.0 * inv.on_road_total()) < 1e-12);
    for (const auto& [k, c] : inv.cells()) CHECK(rel_diff(doubled.cells().at(k).mtco2e, 2.0 * c.mtco2e) < 1e-12);

    for (auto& a : activity) a.fuel = FuelType::Electric;
    CHECK(build_baseline(activity, simple_factors(), 2014).on_road_total() == 0.0);
  }
}

TEST_CASE("sector shares") {
  SUBCASE("symmetric") {
    const auto s = sector_shares(std::map<std::string, double>{{"a", 5.0}, {"b", 5.0}});
    CHECK(s.at("a") == 0.5);
    CHECK(s.at("b") == 0.5);
  }
  SUBCASE("community inventory split") {
    const auto s = sector_shares(
        std::map<std::string, double>{{"stationary", 16'454'686.0}, {"transport", 16'140'987.0}, {"waste", 818'344.0}});
    CHECK(std::round(s.at("stationary") * 100) == 49);
    CHECK(std::round(s.at("transport") * 100) == 48);
    CHECK(std::round(s.at("waste") * 100) == 2);
    CHECK(15'932'882.0 / 16'140'987.0 == doctest::Approx(0.987).epsilon(1e-3));
  }
  SUBCASE("sums to one and is permutation invariant") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> v(0.0, 1e7);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<std::pair<std::string, double>> in;
      for (int i = 0; i < 6; ++i) in.emplace_back("s" + std::to_string(i), v(rng));
      const auto a = sector_shares(std::span<const std::pair<std::string, double>>(in));
      std::shuffle(in.begin(), in.end(), rng);
      const auto b = sector_shares(std::span<const std::pair<std::string, double>>(in));
      double sum = 0.0;
      for (const auto& [k, f] : a) sum += f;
      CHECK(std::abs(sum - 1.0) <= 1e-9);
      CHECK(a == b);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(sector_shares(std::map<std::string, double>{}), Error);
    CHECK_THROWS_AS(sector_shares(std::map<std::string, double>{{"a", 0.0}}), Error);
  }
}

TEST_CASE("emissions map") {
  SUBCASE("one zone reproduces hourly totals") {
    std::vector<ActivityRecord> activity;
    for (int h = 0; h < 24; ++h) activity.push_back({VehicleClass::PassengerCar, FuelType::Gasoline, "only", h, 1000.0 * (h + 1)});
    const auto inv = build_baseline(activity, simple_factors(), 2014);
    const auto grid = emissions_map(inv);
    REQUIRE(grid.zones.size() == 1);
    for (int h = 0; h < 24; ++h) CHECK(grid.by_zone_hour[0][h] == doctest::Approx(0.4 * (h + 1)));
    CHECK(grid.by_zone_hour[0] == grid.hour_totals);
  }
  SUBCASE("uniform activity over four zones") {
    std::vector<ActivityRecord> activity;
    for (const char* z : {"a", "b", "c", "d"})
      for (int h = 0; h < 24; ++h) activity.push_back({VehicleClass::LightTruck, FuelType::Diesel, z, h, 500.0});
    const auto grid = emissions_map(build_baseline(activity, simple_factors(), 2014));
    REQUIRE(grid.zone_totals.size() == 4);
    for (double t : grid.zone_totals) CHECK(t == grid.zone_totals[0]);
  }
  SUBCASE("GeoJSON export carries hour columns") {
    const std::vector<ActivityRecord> activity{{VehicleClass::PassengerCar, FuelType::Gasoline, "z1", 7, 1e6}};
    const auto fc = to_geojson(emissions_map(build_baseline(activity, simple_factors(), 2014)));
    CHECK(fc["type"] == "FeatureCollection");
    const auto& props = fc["features"][0]["properties"];
    CHECK(props["hour_07"].get<double>() == doctest::Approx(400.0));
    CHECK(props["hour_00"].get<double>() == 0.0);
    CHECK(props["total_mtco2e"].get<double>() == doctest::Approx(400.0));
  }
}

TEST_CASE("class share report") {
  SUBCASE("single class") {
    const std::vector<ActivityRecord> activity{{VehicleClass::LongHaulTruck, FuelType::Diesel, "z", 3, 1e5}};
    const auto shares = class_share_report(build_baseline(activity, simple_factors(), 2014));
    CHECK(shares.at(ClassGroup::LongHaul) == 1.0);
    CHECK(shares.at(ClassGroup::Personal) == 0.0);
  }
  SUBCASE("two groups with equal totals") {
    const std::vector<ActivityRecord> activity{{VehicleClass::PassengerCar, FuelType::Gasoline, "z", 3, 1e5},
                                               {VehicleClass::FleetVehicle, FuelType::Gasoline, "z", 3, 1e5}};
    const auto shares = class_share_report(build_baseline(activity, simple_factors(), 2014));
    CHECK(shares.at(ClassGroup::Personal) == doctest::Approx(0.5));
    CHECK(shares.at(ClassGroup::Fleet) == doctest::Approx(0.5));
  }
}

TEST_CASE("bundled houston-2014 dataset") {
  const auto ds = load_baseline_dataset(test::data_dir() / "inventory" / "houston-2014");
  const auto inv = build_baseline(ds);
  CHECK(inv.on_road_total() == doctest::Approx(15'932'882.0).epsilon(1e-3));

  const auto grid = emissions_map(inv);
  CHECK(rel_diff(grid.total, inv.on_road_total()) < 1e-6);
  CHECK(grid.zones.size() == 12);

  const auto groups = class_share_report(inv);
  CHECK(std::round(groups.at(ClassGroup::Personal) * 100) == 89);
  CHECK(std::round(groups.at(ClassGroup::ShortHaulCommercial) * 100) == 8);
  CHECK(std::round(groups.at(ClassGroup::LongHaul) * 100) == 3);
  CHECK(groups.at(ClassGroup::Fleet) < 0.01);

  const auto shares = sector_shares(sector_totals(inv, ds.other_sectors));
  CHECK(std::round(shares.at("stationary_energy") * 100) == 49);
  CHECK(std::round(shares.at("transport") * 100) == 48);
  CHECK(std::round(shares.at("waste") * 100) == 2);
  CHECK(inv.pm25_proxy_grams() > 0.0);
}

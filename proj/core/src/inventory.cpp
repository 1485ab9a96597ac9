#include "zevsim/inventory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "zevsim/error.hpp"
#include "zevsim/io.hpp"

namespace zevsim {

std::string_view to_string(VehicleClass c) noexcept {
  switch (c) {
    case VehicleClass::PassengerCar: return "PassengerCar";
    case VehicleClass::LightTruck: return "LightTruck";
    case VehicleClass::ShortHaulTruck: return "ShortHaulTruck";
    case VehicleClass::LongHaulTruck: return "LongHaulTruck";
    case VehicleClass::FleetVehicle: return "FleetVehicle";
    case VehicleClass::MotorcycleRV: return "MotorcycleRV";
    case VehicleClass::TransitBus: return "TransitBus";
  }
  return "?";
}

std::string_view to_string(FuelType f) noexcept {
  switch (f) {
    case FuelType::Gasoline: return "Gasoline";
    case FuelType::Diesel: return "Diesel";
    case FuelType::Electric: return "Electric";
  }
  return "?";
}

std::string_view to_string(ClassGroup g) noexcept {
  switch (g) {
    case ClassGroup::Personal: return "personal";
    case ClassGroup::ShortHaulCommercial: return "short_haul_commercial";
    case ClassGroup::LongHaul: return "long_haul";
    case ClassGroup::Fleet: return "fleet";
  }
  return "?";
}

VehicleClass parse_vehicle_class(std::string_view s) {
  for (auto c : kVehicleClasses)
    if (to_string(c) == s) return c;
  throw Error(Errc::ParseError, "unknown vehicle class '" + std::string(s) + "'");
}

FuelType parse_fuel_type(std::string_view s) {
  for (auto f : kFuelTypes)
    if (to_string(f) == s) return f;
  throw Error(Errc::ParseError, "unknown fuel type '" + std::string(s) + "'");
}

ClassGroup group_of(VehicleClass c) noexcept {
  switch (c) {
    case VehicleClass::PassengerCar:
    case VehicleClass::LightTruck:
    case VehicleClass::MotorcycleRV: return ClassGroup::Personal;
    case VehicleClass::ShortHaulTruck: return ClassGroup::ShortHaulCommercial;
    case VehicleClass::LongHaulTruck: return ClassGroup::LongHaul;
    case VehicleClass::FleetVehicle:
    case VehicleClass::TransitBus: return ClassGroup::Fleet;
  }
  return ClassGroup::Personal;
}

bool is_light_duty(VehicleClass c) noexcept {
  return c == VehicleClass::PassengerCar || c == VehicleClass::LightTruck || c == VehicleClass::FleetVehicle;
}

double EmissionInventory::class_fuel_vmt(VehicleClass c, FuelType f) const noexcept {
  return class_fuel_vmt_[index(c)][static_cast<std::size_t>(f)];
}

double EmissionInventory::class_combustion_rate(VehicleClass c) const noexcept {
  const double combustion_vmt = class_vmt(c) - class_fuel_vmt(c, FuelType::Electric);
  if (combustion_vmt <= 0.0) return 0.0;
  return class_total(c) * kGramsPerMetricTon / combustion_vmt;
}

double EmissionInventory::light_duty_ev_share() const noexcept {
  double ld = 0.0;
  double ev = 0.0;
  for (auto c : kVehicleClasses) {
    if (!is_light_duty(c)) continue;
    ld += class_vmt(c);
    ev += class_fuel_vmt(c, FuelType::Electric);
  }
  return ld > 0.0 ? ev / ld : 0.0;
}

namespace {

using FactorKey = std::pair<VehicleClass, FuelType>;

std::map<FactorKey, const EmissionFactor*> index_factors(std::span<const EmissionFactor> factors, int year) {
  std::map<FactorKey, const EmissionFactor*> out;
  std::set<std::tuple<VehicleClass, FuelType, int>> seen;
  for (const auto& f : factors) {
    if (!(f.g_per_mile >= 0.0) || !std::isfinite(f.g_per_mile)) {
      throw Error(Errc::InvalidArgument, "negative or non-finite factor for " + std::string(to_string(f.vehicle_class)));
    }
    if (f.fuel == FuelType::Electric && f.g_per_mile != 0.0) {
      throw Error(Errc::InvalidArgument, "Electric factor must carry a zero tailpipe rate");
    }
    if (!seen.emplace(f.vehicle_class, f.fuel, f.year).second) {
      throw Error(Errc::InvalidArgument, "duplicate factor row for " + std::string(to_string(f.vehicle_class)) + "/" +
                                             std::string(to_string(f.fuel)) + "/" + std::to_string(f.year));
    }
    if (f.year == year) out.emplace(FactorKey{f.vehicle_class, f.fuel}, &f);
  }
  return out;
}

}  // namespace

EmissionInventory build_baseline(std::span<const ActivityRecord> activity, std::span<const EmissionFactor> factors,
                                 int year, std::span<const std::string> zone_registry) {
  const auto factor_index = index_factors(factors, year);

  std::set<std::string> zone_set(zone_registry.begin(), zone_registry.end());
  const bool check_zones = !zone_registry.empty();
  for (const auto& rec : activity) {
    if (!(rec.vmt >= 0.0) || !std::isfinite(rec.vmt)) {
      throw Error(Errc::NegativeVmt, "zone " + rec.zone + " hour " + std::to_string(rec.hour));
    }
    if (rec.hour < 0 || rec.hour >= kHoursPerDay) {
      throw Error(Errc::InvalidArgument, "hour out of range: " + std::to_string(rec.hour));
    }
    if (check_zones && !zone_set.contains(rec.zone)) throw Error(Errc::UnknownZone, rec.zone);
    if (!factor_index.contains({rec.vehicle_class, rec.fuel})) {
      throw Error(Errc::MissingFactor, std::string(to_string(rec.vehicle_class)) + "/" +
                                           std::string(to_string(rec.fuel)) + "/" + std::to_string(year));
    }
    zone_set.insert(rec.zone);
  }

  EmissionInventory inv;
  inv.year_ = year;
  inv.zones_.assign(zone_set.begin(), zone_set.end());

  auto zone_index = [&](const std::string& zone) {
    return static_cast<std::size_t>(std::lower_bound(inv.zones_.begin(), inv.zones_.end(), zone) - inv.zones_.begin());
  };

  for (const auto& rec : activity) {
    auto& cell = inv.cells_[{rec.vehicle_class, rec.fuel, zone_index(rec.zone), rec.hour}];
    cell.vmt += rec.vmt;
  }
  for (auto& [key, cell] : inv.cells_) {
    const auto* factor = factor_index.at({key.vehicle_class, key.fuel});
    cell.mtco2e = cell.vmt * factor->g_per_mile / kGramsPerMetricTon;
    cell.pm25_grams = cell.vmt * factor->pm25_g_per_mile.value_or(0.0);

    const auto ci = EmissionInventory::index(key.vehicle_class);
    inv.class_mtco2e_[ci] += cell.mtco2e;
    inv.class_vmt_[ci] += cell.vmt;
    inv.class_fuel_vmt_[ci][static_cast<std::size_t>(key.fuel)] += cell.vmt;
    inv.on_road_total_ += cell.mtco2e;
    inv.total_vmt_ += cell.vmt;
    inv.pm25_total_ += cell.pm25_grams;
  }
  return inv;
}

std::map<std::string, double> sector_shares(std::span<const std::pair<std::string, double>> sectors) {
  std::vector<std::pair<std::string, double>> sorted(sectors.begin(), sectors.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (const auto& [name, value] : sorted) {
    if (!(value >= 0.0) || !std::isfinite(value)) throw Error(Errc::EmptyOrZeroTotal, "negative sector " + name);
    total += value;
  }
  if (sorted.empty() || !(total > 0.0)) throw Error(Errc::EmptyOrZeroTotal, "sector total must be positive");
  std::map<std::string, double> out;
  for (const auto& [name, value] : sorted) out[name] += value / total;
  return out;
}

std::map<std::string, double> sector_shares(const std::map<std::string, double>& sectors) {
  std::vector<std::pair<std::string, double>> v(sectors.begin(), sectors.end());
  return sector_shares(std::span<const std::pair<std::string, double>>(v));
}

EmissionsGrid emissions_map(const EmissionInventory& inventory) {
  EmissionsGrid grid;
  grid.zones = inventory.zones();
  grid.by_zone_hour.assign(grid.zones.size(), {});
  grid.zone_totals.assign(grid.zones.size(), 0.0);
  for (const auto& [key, cell] : inventory.cells()) {
    grid.by_zone_hour[key.zone][static_cast<std::size_t>(key.hour)] += cell.mtco2e;
  }
  for (std::size_t z = 0; z < grid.zones.size(); ++z) {
    for (int h = 0; h < kHoursPerDay; ++h) {
      const double v = grid.by_zone_hour[z][static_cast<std::size_t>(h)];
      grid.zone_totals[z] += v;
      grid.hour_totals[static_cast<std::size_t>(h)] += v;
    }
    grid.total += grid.zone_totals[z];
  }
  return grid;
}

nlohmann::json to_geojson(const EmissionsGrid& grid, const std::map<std::string, nlohmann::json>& geometry) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t z = 0; z < grid.zones.size(); ++z) {
    nlohmann::json props;
    props["zone_id"] = grid.zones[z];
    for (int h = 0; h < kHoursPerDay; ++h) {
      char name[16];
      std::snprintf(name, sizeof(name), "hour_%02d", h);
      props[name] = grid.by_zone_hour[z][static_cast<std::size_t>(h)];
    }
    props["total_mtco2e"] = grid.zone_totals[z];
    const auto it = geometry.find(grid.zones[z]);
    features.push_back({{"type", "Feature"},
                        {"id", grid.zones[z]},
                        {"geometry", it == geometry.end() ? nlohmann::json(nullptr) : it->second},
                        {"properties", std::move(props)}});
  }
  return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

std::map<ClassGroup, double> class_share_report(const EmissionInventory& inventory) {
  const double total = inventory.on_road_total();
  if (!(total > 0.0)) throw Error(Errc::EmptyInventory, "on-road total is zero");
  std::map<ClassGroup, double> out;
  for (auto g : kClassGroups) out[g] = 0.0;
  for (auto c : kVehicleClasses) out[group_of(c)] += inventory.class_total(c) / total;
  return out;
}

std::vector<ActivityRecord> parse_activity_csv(std::string_view text, std::string_view origin) {
  const auto table = io::CsvTable::parse(text, origin);
  const auto c_class = table.column("class");
  const auto c_fuel = table.column("fuel");
  const auto c_zone = table.column("zone");
  const auto c_hour = table.column("hour");
  const auto c_vmt = table.column("vmt");
  std::vector<ActivityRecord> out;
  out.reserve(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out.push_back({parse_vehicle_class(table.at(r, c_class)), parse_fuel_type(table.at(r, c_fuel)),
                   table.at(r, c_zone), static_cast<int>(table.integer(r, c_hour)), table.number(r, c_vmt)});
  }
  return out;
}

std::vector<EmissionFactor> parse_factors_csv(std::string_view text, std::string_view origin) {
  const auto table = io::CsvTable::parse(text, origin);
  const auto c_class = table.column("class");
  const auto c_fuel = table.column("fuel");
  const auto c_year = table.column("year");
  const auto c_rate = table.column("g_per_mile");
  const bool has_pm = table.has_column("pm25_proxy");
  const auto c_pm = has_pm ? table.column("pm25_proxy") : 0;
  std::vector<EmissionFactor> out;
  out.reserve(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    EmissionFactor f{parse_vehicle_class(table.at(r, c_class)), parse_fuel_type(table.at(r, c_fuel)),
                     static_cast<int>(table.integer(r, c_year)), table.number(r, c_rate), std::nullopt};
    if (has_pm && !table.at(r, c_pm).empty()) f.pm25_g_per_mile = table.number(r, c_pm);
    out.push_back(f);
  }
  return out;
}

std::map<std::string, double> sector_totals(const EmissionInventory& inventory, const OtherSectors& other) {
  return {{"stationary_energy", other.stationary_energy},
          {"transport", inventory.on_road_total() + other.offroad_rail_remainder},
          {"waste", other.waste}};
}

BaselineDataset load_baseline_dataset(const std::filesystem::path& dir) {
  BaselineDataset ds;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(io::read_text(dir / "dataset.json"));
    ds.name = meta.at("name").get<std::string>();
    ds.year = meta.at("year").get<int>();
    ds.base_population = meta.at("base_population").get<double>();
    const auto& other = meta.at("other_sectors");
    ds.other_sectors.stationary_energy = other.at("stationary_energy").get<double>();
    ds.other_sectors.waste = other.at("waste").get<double>();
    ds.other_sectors.offroad_rail_remainder = other.at("offroad_rail_remainder").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, (dir / "dataset.json").string() + ": " + e.what());
  }
  const auto activity_path = dir / "activity.csv";
  const auto factors_path = dir / "factors.csv";
  ds.activity = parse_activity_csv(io::read_text(activity_path), activity_path.string());
  ds.factors = parse_factors_csv(io::read_text(factors_path), factors_path.string());

  const auto zones_path = dir / "zones.geojson";
  if (std::filesystem::exists(zones_path)) {
    try {
      const auto fc = nlohmann::json::parse(io::read_text(zones_path));
      for (const auto& feature : fc.at("features")) {
        const auto id = feature.at("properties").at("zone_id").get<std::string>();
        ds.zones.push_back(id);
        ds.zone_geometry[id] = feature.at("geometry");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ParseError, zones_path.string() + ": " + e.what());
    }
  }
  return ds;
}

EmissionInventory build_baseline(const BaselineDataset& dataset) {
  return build_baseline(dataset.activity, dataset.factors, dataset.year, dataset.zones);
}

nlohmann::json baseline_report(const EmissionInventory& inventory, const OtherSectors& other) {
  nlohmann::json report;
  report["baseline_year"] = inventory.baseline_year();
  report["on_road_total_mtco2e"] = inventory.on_road_total();
  report["total_vmt"] = inventory.total_vmt();
  report["pm25_proxy_grams"] = inventory.pm25_proxy_grams();
  for (auto c : kVehicleClasses) report["class_totals_mtco2e"][std::string(to_string(c))] = inventory.class_total(c);
  for (const auto& [g, share] : class_share_report(inventory)) report["class_group_shares"][std::string(to_string(g))] = share;
  const auto totals = sector_totals(inventory, other);
  report["sector_totals_mtco2e"] = totals;
  report["sector_shares"] = sector_shares(totals);
  report["on_road_share_of_transport"] = inventory.on_road_total() / totals.at("transport");
  return report;
}

}  // namespace zevsim

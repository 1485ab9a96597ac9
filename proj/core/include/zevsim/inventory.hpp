#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace zevsim {

enum class VehicleClass { PassengerCar, LightTruck, ShortHaulTruck, LongHaulTruck, FleetVehicle, MotorcycleRV, TransitBus };
enum class FuelType { Gasoline, Diesel, Electric };

/// Reporting groups used by the fleet breakdown.
enum class ClassGroup { Personal, ShortHaulCommercial, LongHaul, Fleet };

inline constexpr std::array kVehicleClasses{VehicleClass::PassengerCar,   VehicleClass::LightTruck,
                                            VehicleClass::ShortHaulTruck, VehicleClass::LongHaulTruck,
                                            VehicleClass::FleetVehicle,   VehicleClass::MotorcycleRV,
                                            VehicleClass::TransitBus};
inline constexpr std::array kFuelTypes{FuelType::Gasoline, FuelType::Diesel, FuelType::Electric};
inline constexpr std::array kClassGroups{ClassGroup::Personal, ClassGroup::ShortHaulCommercial, ClassGroup::LongHaul,
                                         ClassGroup::Fleet};
inline constexpr std::size_t kVehicleClassCount = kVehicleClasses.size();
inline constexpr int kHoursPerDay = 24;
inline constexpr double kGramsPerMetricTon = 1e6;

std::string_view to_string(VehicleClass c) noexcept;
std::string_view to_string(FuelType f) noexcept;
std::string_view to_string(ClassGroup g) noexcept;
VehicleClass parse_vehicle_class(std::string_view s);
FuelType parse_fuel_type(std::string_view s);

ClassGroup group_of(VehicleClass c) noexcept;
/// Classes whose tailpipe VMT is displaced by EV fleet share.
bool is_light_duty(VehicleClass c) noexcept;

struct EmissionFactor {
  VehicleClass vehicle_class{};
  FuelType fuel{};
  int year = 0;
  double g_per_mile = 0.0;           // g CO2e per vehicle-mile
  std::optional<double> pm25_g_per_mile;
};

struct ActivityRecord {
  VehicleClass vehicle_class{};
  FuelType fuel{};
  std::string zone;
  int hour = 0;       // 0..23
  double vmt = 0.0;   // vehicle-miles
};

/// Immutable on-road ledger keyed by (class, fuel, zone, hour).
class EmissionInventory {
 public:
  struct CellKey {
    VehicleClass vehicle_class;
    FuelType fuel;
    std::size_t zone;  // index into zones()
    int hour;
    auto operator<=>(const CellKey&) const = default;
  };
  struct Cell {
    double vmt = 0.0;
    double mtco2e = 0.0;
    double pm25_grams = 0.0;
  };

  int baseline_year() const noexcept { return year_; }
  const std::vector<std::string>& zones() const noexcept { return zones_; }
  const std::map<CellKey, Cell>& cells() const noexcept { return cells_; }

  double on_road_total() const noexcept { return on_road_total_; }
  double total_vmt() const noexcept { return total_vmt_; }
  double pm25_proxy_grams() const noexcept { return pm25_total_; }
  double class_total(VehicleClass c) const noexcept { return class_mtco2e_[index(c)]; }
  double class_vmt(VehicleClass c) const noexcept { return class_vmt_[index(c)]; }
  double class_fuel_vmt(VehicleClass c, FuelType f) const noexcept;
  /// Tailpipe rate over combustion VMT, g CO2e/mile; 0 when the class has none.
  double class_combustion_rate(VehicleClass c) const noexcept;
  /// Electric share of light-duty VMT.
  double light_duty_ev_share() const noexcept;

 private:
  friend EmissionInventory build_baseline(std::span<const ActivityRecord>, std::span<const EmissionFactor>, int,
                                          std::span<const std::string>);
  static std::size_t index(VehicleClass c) noexcept { return static_cast<std::size_t>(c); }

  int year_ = 0;
  std::vector<std::string> zones_;
  std::map<CellKey, Cell> cells_;
  std::array<double, kVehicleClassCount> class_mtco2e_{};
  std::array<double, kVehicleClassCount> class_vmt_{};
  std::array<std::array<double, 3>, kVehicleClassCount> class_fuel_vmt_{};
  double on_road_total_ = 0.0;
  double total_vmt_ = 0.0;
  double pm25_total_ = 0.0;
};

/// Cell MTCO2e = vmt x rate x 1e-6. When `zone_registry` is non-empty every
/// activity zone must appear in it; the registry zones are also carried into
/// the inventory so zero-activity zones still show up in the emissions map.
EmissionInventory build_baseline(std::span<const ActivityRecord> activity, std::span<const EmissionFactor> factors,
                                 int year, std::span<const std::string> zone_registry = {});

std::map<std::string, double> sector_shares(std::span<const std::pair<std::string, double>> sectors);
std::map<std::string, double> sector_shares(const std::map<std::string, double>& sectors);

struct EmissionsGrid {
  std::vector<std::string> zones;
  std::vector<std::array<double, kHoursPerDay>> by_zone_hour;  // MTCO2e
  std::vector<double> zone_totals;
  std::array<double, kHoursPerDay> hour_totals{};
  double total = 0.0;
};

EmissionsGrid emissions_map(const EmissionInventory& inventory);

/// FeatureCollection, one feature per zone with hour_00..hour_23 and
/// total_mtco2e. Geometry is looked up by zone id; zones without geometry get
/// a null geometry.
nlohmann::json to_geojson(const EmissionsGrid& grid, const std::map<std::string, nlohmann::json>& geometry = {});

std::map<ClassGroup, double> class_share_report(const EmissionInventory& inventory);

// -- bundled dataset plumbing -------------------------------------------------

std::vector<ActivityRecord> parse_activity_csv(std::string_view text, std::string_view origin = "<activity>");
std::vector<EmissionFactor> parse_factors_csv(std::string_view text, std::string_view origin = "<factors>");

/// Non-road sectors reported next to the on-road ledger.
struct OtherSectors {
  double stationary_energy = 0.0;
  double waste = 0.0;
  double offroad_rail_remainder = 0.0;  // transport minus on-road
};

/// {stationary_energy, transport, waste}, transport = on-road + remainder.
std::map<std::string, double> sector_totals(const EmissionInventory& inventory, const OtherSectors& other);

struct BaselineDataset {
  std::string name;
  int year = 0;
  double base_population = 0.0;
  std::vector<std::string> zones;
  std::map<std::string, nlohmann::json> zone_geometry;
  std::vector<ActivityRecord> activity;
  std::vector<EmissionFactor> factors;
  OtherSectors other_sectors;
};

/// Directory with dataset.json, activity.csv, factors.csv and optionally zones.geojson.
BaselineDataset load_baseline_dataset(const std::filesystem::path& dir);

EmissionInventory build_baseline(const BaselineDataset& dataset);

nlohmann::json baseline_report(const EmissionInventory& inventory, const OtherSectors& other);

}  // namespace zevsim

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "zevsim/trajectory.hpp"

namespace zevsim {

struct TractProfile {
  std::string tract_id;
  double median_income = 0.0;           // USD/year
  double educational_attainment = 0.0;  // fraction with degree
  double poverty_rate = 0.0;
  double renter_rate = 0.0;
  double sub_two_car_rate = 0.0;        // households with fewer than two cars
  double charger_access = 0.0;          // public ports per 1,000 households
  double ev_cost_index = 0.0;           // local average EV price, USD
  double incentive_usd = 0.0;
};

/// Throws InvalidIndicator on out-of-range fields.
void validate(const TractProfile& tract);

enum class Direction { BarrierIncreasing, BarrierDecreasing };

struct NormalizedColumn {
  std::vector<double> values;  // in [0, 1], higher = greater barrier
  bool degenerate = false;     // every input equal; all values forced to 0.5
};

NormalizedColumn normalize_indicator(std::span<const double> values, Direction direction);

enum class Indicator {
  EducationalAttainment,
  PovertyRate,
  RenterRate,
  SubTwoCarRate,
  ChargerAccess,
  EvCost,
  Incentive,
};
inline constexpr std::array kInternalIndicators{Indicator::EducationalAttainment, Indicator::PovertyRate,
                                                Indicator::RenterRate, Indicator::SubTwoCarRate};
inline constexpr std::array kExternalIndicators{Indicator::ChargerAccess, Indicator::EvCost, Indicator::Incentive};

std::string_view to_string(Indicator i) noexcept;
Direction direction_of(Indicator i) noexcept;
double value_of(const TractProfile& t, Indicator i) noexcept;

struct EquityWeights {
  std::array<double, kInternalIndicators.size()> internal{1.0, 1.0, 1.0, 1.0};
  std::array<double, kExternalIndicators.size()> external{1.0, 1.0, 1.0};
  double internal_group = 0.5;
  double external_group = 0.5;
};

struct EquityScore {
  std::string tract_id;
  double internal = 0.0;
  double external = 0.0;
  double index = 0.0;  // higher = greater barriers to EV adoption
};

struct EquityIndex {
  std::vector<EquityScore> scores;
  std::vector<Indicator> degenerate_indicators;
};

EquityIndex compute_equity_index(std::span<const TractProfile> tracts, const EquityWeights& weights = {});

struct LoanTerms {
  double apr = 0.07;
  int term_months = 60;
  double down_payment_fraction = 0.0;
  double budget_fraction = 0.10;  // of household income, annual
};

/// Annual amortized payment on `principal`.
double annual_loan_payment(double principal, const LoanTerms& terms);

struct AffordabilityResult {
  double annual_payment = 0.0;
  double fraction_affording = 0.0;
  std::vector<bool> affords;  // per tract, input order
};

AffordabilityResult affordability_gap(std::span<const TractProfile> tracts, double ev_price, const LoanTerms& terms,
                                      double incentive_usd);

struct ChargerRatio {
  double per_charger = 0.0;  // EVs per public charger
  std::string label;         // "1:22.0"
};

ChargerRatio charger_ratio(double ev_count, double public_charger_count);

struct LogisticParams {
  double saturation = 1.0;
  double growth_rate = 0.0;  // per year
  double midpoint = 0.0;     // year of half saturation
  double operator()(double year) const;
};

struct AdoptionProjection {
  Trajectory trajectory;  // yearly anchors from the first anchor year to the horizon
  LogisticParams fit;
  double rmse = 0.0;      // over the anchors, share units
  bool degenerate = false;  // logistic unidentifiable; linear clamp used instead
  double fallback_intercept = 0.0;
  double fallback_slope = 0.0;
};

/// Least-squares logistic through (period, share) anchors with fixed
/// saturation, solved in logit space.
AdoptionProjection project_adoption(std::span<const std::pair<double, double>> anchors, int horizon_year,
                                    double saturation = 1.0);

// -- file formats -------------------------------------------------------------

std::vector<TractProfile> parse_tracts_csv(std::string_view text, std::string_view origin = "<tracts>");
std::vector<TractProfile> load_tracts(const std::filesystem::path& path);

/// tract_id,internal,external,index
std::string to_csv(const EquityIndex& index);
nlohmann::json to_geojson(const EquityIndex& index, const std::map<std::string, nlohmann::json>& geometry = {});
std::map<std::string, nlohmann::json> load_geometry(const std::filesystem::path& geojson, std::string_view id_property);

}  // namespace zevsim

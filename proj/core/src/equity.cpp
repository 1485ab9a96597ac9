#include "zevsim/equity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "zevsim/error.hpp"
#include "zevsim/io.hpp"

namespace zevsim {

namespace {

bool is_fraction(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void validate(const TractProfile& t) {
  const bool ok = t.median_income > 0.0 && std::isfinite(t.median_income) && is_fraction(t.educational_attainment) &&
                  is_fraction(t.poverty_rate) && is_fraction(t.renter_rate) && is_fraction(t.sub_two_car_rate) &&
                  t.charger_access >= 0.0 && std::isfinite(t.charger_access) && t.ev_cost_index >= 0.0 &&
                  std::isfinite(t.ev_cost_index) && t.incentive_usd >= 0.0 && std::isfinite(t.incentive_usd);
  if (!ok) throw Error(Errc::InvalidIndicator, "tract " + t.tract_id + " has an out-of-range indicator");
}

NormalizedColumn normalize_indicator(std::span<const double> values, Direction direction) {
  if (values.empty()) throw Error(Errc::InvalidIndicator, "indicator column is empty");
  double lo = values[0];
  double hi = values[0];
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(Errc::InvalidIndicator, "indicator column has a non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  NormalizedColumn out;
  if (!(hi > lo)) {
    out.degenerate = true;
    out.values.assign(values.size(), 0.5);
    return out;
  }
  const double range = hi - lo;
  out.values.reserve(values.size());
  for (double v : values) {
    const double n = (v - lo) / range;
    out.values.push_back(direction == Direction::BarrierDecreasing ? 1.0 - n : n);
  }
  return out;
}

std::string_view to_string(Indicator i) noexcept {
  switch (i) {
    case Indicator::EducationalAttainment: return "edu";
    case Indicator::PovertyRate: return "poverty";
    case Indicator::RenterRate: return "renter";
    case Indicator::SubTwoCarRate: return "sub_two_car";
    case Indicator::ChargerAccess: return "charger_access";
    case Indicator::EvCost: return "ev_cost";
    case Indicator::Incentive: return "incentive";
  }
  return "?";
}

Direction direction_of(Indicator i) noexcept {
  switch (i) {
    case Indicator::EducationalAttainment:
    case Indicator::ChargerAccess:
    case Indicator::Incentive: return Direction::BarrierDecreasing;
    default: return Direction::BarrierIncreasing;
  }
}

double value_of(const TractProfile& t, Indicator i) noexcept {
  switch (i) {
    case Indicator::EducationalAttainment: return t.educational_attainment;
    case Indicator::PovertyRate: return t.poverty_rate;
    case Indicator::RenterRate: return t.renter_rate;
    case Indicator::SubTwoCarRate: return t.sub_two_car_rate;
    case Indicator::ChargerAccess: return t.charger_access;
    case Indicator::EvCost: return t.ev_cost_index;
    case Indicator::Incentive: return t.incentive_usd;
  }
  return 0.0;
}

namespace {

template <std::size_t N>
double weight_sum(const std::array<double, N>& w) {
  double s = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(Errc::NegativeWeight, "indicator weights must be >= 0");
    s += v;
  }
  return s;
}

template <std::size_t N>
std::array<NormalizedColumn, N> normalize_group(std::span<const TractProfile> tracts,
                                                const std::array<Indicator, N>& indicators,
                                                std::vector<Indicator>& degenerate) {
  std::array<NormalizedColumn, N> out;
  std::vector<double> raw(tracts.size());
  for (std::size_t k = 0; k < N; ++k) {
    for (std::size_t t = 0; t < tracts.size(); ++t) raw[t] = value_of(tracts[t], indicators[k]);
    out[k] = normalize_indicator(raw, direction_of(indicators[k]));
    if (out[k].degenerate) degenerate.push_back(indicators[k]);
  }
  return out;
}

template <std::size_t N>
double group_score(const std::array<NormalizedColumn, N>& cols, const std::array<double, N>& w, double w_sum,
                   std::size_t tract) {
  if (!(w_sum > 0.0)) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < N; ++k) acc += w[k] * cols[k].values[tract];
  return std::clamp(acc / w_sum, 0.0, 1.0);
}

}  // namespace

EquityIndex compute_equity_index(std::span<const TractProfile> tracts, const EquityWeights& weights) {
  if (tracts.empty()) throw Error(Errc::EmptyTractSet, "no tracts supplied");
  for (const auto& t : tracts) validate(t);

  const double w_int = weight_sum(weights.internal);
  const double w_ext = weight_sum(weights.external);
  if (!(weights.internal_group >= 0.0) || !(weights.external_group >= 0.0)) {
    throw Error(Errc::NegativeWeight, "group weights must be >= 0");
  }
  const double w_group = weights.internal_group + weights.external_group;
  if (!(w_group > 0.0)) throw Error(Errc::InvalidArgument, "group weights must not both be zero");
  if ((weights.internal_group > 0.0 && !(w_int > 0.0)) || (weights.external_group > 0.0 && !(w_ext > 0.0))) {
    throw Error(Errc::InvalidArgument, "a weighted group has all-zero indicator weights");
  }

  EquityIndex out;
  const auto internal = normalize_group(tracts, kInternalIndicators, out.degenerate_indicators);
  const auto external = normalize_group(tracts, kExternalIndicators, out.degenerate_indicators);

  out.scores.reserve(tracts.size());
  for (std::size_t t = 0; t < tracts.size(); ++t) {
    EquityScore s;
    s.tract_id = tracts[t].tract_id;
    s.internal = group_score(internal, weights.internal, w_int, t);
    s.external = group_score(external, weights.external, w_ext, t);
    s.index = std::clamp((weights.internal_group * s.internal + weights.external_group * s.external) / w_group, 0.0, 1.0);
    out.scores.push_back(std::move(s));
  }
  return out;
}

double annual_loan_payment(double principal, const LoanTerms& terms) {
  if (principal <= 0.0) return 0.0;
  const double n = terms.term_months;
  const double r = terms.apr / 12.0;
  const double monthly = r == 0.0 ? principal / n : principal * r / (1.0 - std::pow(1.0 + r, -n));
  return 12.0 * monthly;
}

AffordabilityResult affordability_gap(std::span<const TractProfile> tracts, double ev_price, const LoanTerms& terms,
                                      double incentive_usd) {
  const bool terms_ok = terms.apr >= 0.0 && std::isfinite(terms.apr) && terms.term_months >= 1 &&
                        terms.down_payment_fraction >= 0.0 && terms.down_payment_fraction < 1.0 &&
                        terms.budget_fraction >= 0.0 && terms.budget_fraction < 1.0;
  if (!terms_ok) throw Error(Errc::InvalidTerms, "loan terms out of range");
  if (!(incentive_usd >= 0.0) || !(ev_price >= incentive_usd) || !std::isfinite(ev_price)) {
    throw Error(Errc::InvalidTerms, "require ev_price >= incentive >= 0");
  }

  AffordabilityResult out;
  const double financed = (ev_price - incentive_usd) * (1.0 - terms.down_payment_fraction);
  out.annual_payment = annual_loan_payment(financed, terms);
  out.affords.reserve(tracts.size());
  std::size_t count = 0;
  for (const auto& t : tracts) {
    const bool ok = out.annual_payment <= terms.budget_fraction * t.median_income;
    out.affords.push_back(ok);
    count += ok ? 1 : 0;
  }
  out.fraction_affording = tracts.empty() ? 0.0 : static_cast<double>(count) / static_cast<double>(tracts.size());
  return out;
}

ChargerRatio charger_ratio(double ev_count, double public_charger_count) {
  if (!(public_charger_count > 0.0)) throw Error(Errc::ZeroChargers, "public charger count must be positive");
  if (!(ev_count >= 0.0)) throw Error(Errc::InvalidArgument, "EV count must be >= 0");
  ChargerRatio out;
  out.per_charger = ev_count / public_charger_count;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "1:%.1f", out.per_charger);
  out.label = buf;
  return out;
}

double LogisticParams::operator()(double year) const {
  return saturation / (1.0 + std::exp(-growth_rate * (year - midpoint)));
}

AdoptionProjection project_adoption(std::span<const std::pair<double, double>> anchors, int horizon_year,
                                    double saturation) {
  if (anchors.size() < 2) throw Error(Errc::InsufficientAnchors, "need at least two adoption anchors");
  if (!(saturation > 0.0 && saturation <= 1.0)) throw Error(Errc::InvalidArgument, "saturation must lie in (0, 1]");
  for (const auto& [t, s] : anchors) {
    if (!std::isfinite(t) || !(s >= 0.0 && s <= 1.0)) {
      throw Error(Errc::InvalidArgument, "adoption shares must lie in [0, 1]");
    }
  }

  const auto n = static_cast<double>(anchors.size());
  double t_mean = 0.0;
  for (const auto& a : anchors) t_mean += a.first;
  t_mean /= n;
  double stt = 0.0;
  for (const auto& a : anchors) stt += (a.first - t_mean) * (a.first - t_mean);

  AdoptionProjection out;
  out.fit.saturation = saturation;

  const bool logit_defined = std::all_of(anchors.begin(), anchors.end(),
                                         [&](const auto& a) { return a.second > 0.0 && a.second < saturation; });
  if (stt > 0.0 && logit_defined) {
    double y_mean = 0.0;
    std::vector<double> y;
    for (const auto& a : anchors) {
      y.push_back(std::log(a.second / (saturation - a.second)));
      y_mean += y.back();
    }
    y_mean /= n;
    double sty = 0.0;
    for (std::size_t i = 0; i < anchors.size(); ++i) sty += (anchors[i].first - t_mean) * (y[i] - y_mean);
    const double slope = sty / stt;
    if (std::abs(slope) > 1e-12) {
      out.fit.growth_rate = slope;
      // y = k (t - t0)  =>  t0 = t_mean - y_mean / k
      out.fit.midpoint = t_mean - y_mean / slope;
    } else {
      out.degenerate = true;
    }
  } else {
    out.degenerate = true;
  }

  if (out.degenerate) {
    double s_mean = 0.0;
    for (const auto& a : anchors) s_mean += a.second;
    s_mean /= n;
    double sts = 0.0;
    for (const auto& a : anchors) sts += (a.first - t_mean) * (a.second - s_mean);
    out.fallback_slope = stt > 0.0 ? sts / stt : 0.0;
    out.fallback_intercept = s_mean - out.fallback_slope * t_mean;
  }

  auto share_at = [&](double year) {
    if (!out.degenerate) return out.fit(year);
    return std::clamp(out.fallback_intercept + out.fallback_slope * year, 0.0, 1.0);
  };

  double sse = 0.0;
  for (const auto& [t, s] : anchors) sse += (share_at(t) - s) * (share_at(t) - s);
  out.rmse = std::sqrt(sse / n);

  double first = anchors[0].first;
  for (const auto& a : anchors) first = std::min(first, a.first);
  const int start = static_cast<int>(std::floor(first));
  std::vector<Trajectory::Anchor> points;
  for (int year = start; year <= std::max(start, horizon_year); ++year) points.emplace_back(year, share_at(year));
  out.trajectory = Trajectory(std::move(points));
  return out;
}

std::vector<TractProfile> parse_tracts_csv(std::string_view text, std::string_view origin) {
  const auto table = io::CsvTable::parse(text, origin);
  const auto c_id = table.column("tract_id");
  const auto c_income = table.column("median_income");
  const auto c_edu = table.column("edu");
  const auto c_poverty = table.column("poverty");
  const auto c_renter = table.column("renter");
  const auto c_cars = table.column("sub_two_car");
  const auto c_charger = table.column("charger_access");
  const auto c_cost = table.column("ev_cost");
  const auto c_incentive = table.column("incentive");
  std::vector<TractProfile> out;
  out.reserve(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    TractProfile t{table.at(r, c_id),          table.number(r, c_income),  table.number(r, c_edu),
                   table.number(r, c_poverty), table.number(r, c_renter),  table.number(r, c_cars),
                   table.number(r, c_charger), table.number(r, c_cost),    table.number(r, c_incentive)};
    validate(t);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<TractProfile> load_tracts(const std::filesystem::path& path) {
  return parse_tracts_csv(io::read_text(path), path.string());
}

std::string to_csv(const EquityIndex& index) {
  std::ostringstream out;
  out << "tract_id,internal,external,index\n";
  for (const auto& s : index.scores) {
    out << s.tract_id << ',' << io::format_double(s.internal) << ',' << io::format_double(s.external) << ','
        << io::format_double(s.index) << '\n';
  }
  return out.str();
}

nlohmann::json to_geojson(const EquityIndex& index, const std::map<std::string, nlohmann::json>& geometry) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& s : index.scores) {
    const auto it = geometry.find(s.tract_id);
    features.push_back({{"type", "Feature"},
                        {"id", s.tract_id},
                        {"geometry", it == geometry.end() ? nlohmann::json(nullptr) : it->second},
                        {"properties",
                         {{"tract_id", s.tract_id}, {"internal", s.internal}, {"external", s.external}, {"index", s.index}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

std::map<std::string, nlohmann::json> load_geometry(const std::filesystem::path& geojson, std::string_view id_property) {
  std::map<std::string, nlohmann::json> out;
  try {
    const auto fc = nlohmann::json::parse(io::read_text(geojson));
    for (const auto& f : fc.at("features")) {
      out[f.at("properties").at(std::string(id_property)).get<std::string>()] = f.at("geometry");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, geojson.string() + ": " + e.what());
  }
  return out;
}

}  // namespace zevsim

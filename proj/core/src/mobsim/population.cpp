#include "zevsim/mobsim/population.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "zevsim/error.hpp"
#include "zevsim/io.hpp"

namespace zevsim::mobsim {

namespace {
constexpr double kFallbackMedianIncome = 60'000.0;
}

std::string_view to_string(IncomeBand band) noexcept {
  switch (band) {
    case IncomeBand::Low: return "low";
    case IncomeBand::Middle: return "middle";
    case IncomeBand::High: return "high";
  }
  return "?";
}

std::string_view to_string(Vehicle vehicle) noexcept {
  switch (vehicle) {
    case Vehicle::GasolineCar: return "gasoline";
    case Vehicle::EV: return "ev";
    case Vehicle::None: return "none";
  }
  return "?";
}

std::vector<Agent> generate_population(std::span<const Zone> zones, const std::map<std::string, TractProfile>& tracts,
                                       std::size_t n_agents, std::uint64_t seed, const WorldConfig& config) {
  if (zones.empty()) throw Error(Errc::EmptyZones, "no zones to place agents in");
  if (n_agents == 0) throw Error(Errc::InvalidArgument, "n_agents must be > 0");
  std::vector<double> pop, emp;
  double pop_sum = 0.0, emp_sum = 0.0;
  for (const auto& z : zones) {
    pop.push_back(z.population);
    emp.push_back(z.employment);
    pop_sum += z.population;
    emp_sum += z.employment;
  }
  if (!(pop_sum > 0.0)) throw Error(Errc::EmptyZones, "zone populations sum to zero");
  if (!(emp_sum > 0.0)) emp = pop;

  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> home_dist(pop.begin(), pop.end());
  std::discrete_distribution<std::size_t> work_dist(emp.begin(), emp.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double sigma = config.income_sigma;
  std::lognormal_distribution<double> income_noise(-0.5 * sigma * sigma, sigma);
  const auto& w = config.windows;
  std::uniform_int_distribution<int> am(w.am_start_hour * 60, w.am_end_hour * 60 - 1);
  std::uniform_int_distribution<int> pm(w.pm_start_hour * 60, w.pm_end_hour * 60 - 1);

  std::vector<Agent> agents;
  agents.reserve(n_agents);
  for (std::size_t i = 0; i < n_agents; ++i) {
    Agent a;
    a.id = static_cast<std::uint32_t>(i);
    a.home = home_dist(rng);
    a.work = work_dist(rng);
    a.employed = unit(rng) < config.employment_rate;

    const TractProfile* tract = nullptr;
    if (auto it = tracts.find(zones[a.home].tract_id); it != tracts.end()) tract = &it->second;
    double median = tract ? tract->median_income : kFallbackMedianIncome;
    a.income = median * income_noise(rng);
    a.band = a.income < config.low_income_below   ? IncomeBand::Low
             : a.income >= config.high_income_from ? IncomeBand::High
                                                   : IncomeBand::Middle;
    a.value_of_time = std::max(1.0, config.vot_wage_fraction * a.income / config.work_hours_per_year);

    auto band = static_cast<std::size_t>(a.band);
    double sub_two = tract ? tract->sub_two_car_rate : 0.3;
    double p_none = std::clamp(sub_two * config.no_vehicle_propensity[band], 0.0, 1.0);
    double p_ev = std::clamp(config.ev_base_share * config.ev_band_multiplier[band], 0.0, 1.0);
    double u_own = unit(rng), u_ev = unit(rng);
    a.vehicle = u_own < p_none ? Vehicle::None : (u_ev < p_ev ? Vehicle::EV : Vehicle::GasolineCar);

    a.am_departure = am(rng);
    a.pm_departure = pm(rng);
    agents.push_back(a);
  }
  return agents;
}

std::string agents_to_csv(std::span<const Agent> agents) {
  std::ostringstream out;
  out << "id,home,work,band,vehicle,income,value_of_time,employed,am_departure,pm_departure\n";
  for (const auto& a : agents)
    out << a.id << ',' << a.home << ',' << a.work << ',' << to_string(a.band) << ',' << to_string(a.vehicle) << ','
        << io::format_double(a.income) << ',' << io::format_double(a.value_of_time) << ',' << (a.employed ? 1 : 0)
        << ',' << a.am_departure << ',' << a.pm_departure << '\n';
  return out.str();
}

std::uint32_t ODMatrix::at(std::size_t origin, std::size_t dest, int hour) const {
  return trips_.at((origin * zones_ + dest) * kHours + static_cast<std::size_t>(hour));
}

void ODMatrix::add(std::size_t origin, std::size_t dest, int hour, std::uint32_t trips) {
  if (origin >= zones_ || dest >= zones_ || hour < 0 || hour >= kHours)
    throw Error(Errc::InvalidArgument, "OD cell out of range");
  trips_[(origin * zones_ + dest) * kHours + static_cast<std::size_t>(hour)] += trips;
}

std::uint64_t ODMatrix::total() const {
  std::uint64_t s = 0;
  for (auto v : trips_) s += v;
  return s;
}

std::uint64_t ODMatrix::origin_total(std::size_t origin, int hour_from, int hour_to) const {
  std::uint64_t s = 0;
  for (std::size_t d = 0; d < zones_; ++d) s += window_total(origin, d, hour_from, hour_to);
  return s;
}

std::uint64_t ODMatrix::destination_total(std::size_t dest, int hour_from, int hour_to) const {
  std::uint64_t s = 0;
  for (std::size_t o = 0; o < zones_; ++o) s += window_total(o, dest, hour_from, hour_to);
  return s;
}

std::uint64_t ODMatrix::window_total(std::size_t origin, std::size_t dest, int hour_from, int hour_to) const {
  std::uint64_t s = 0;
  for (int h = std::max(0, hour_from); h < std::min(kHours, hour_to); ++h) s += at(origin, dest, h);
  return s;
}

ODMatrix build_od(std::span<const Agent> agents, std::size_t zone_count, const TripWindows& hours) {
  ODMatrix od(zone_count);
  auto clamp_hour = [](int minute, int lo, int hi) { return std::clamp(minute / 60, lo, hi - 1); };
  for (const auto& a : agents) {
    if (!a.employed) continue;
    od.add(a.home, a.work, clamp_hour(a.am_departure, hours.am_start_hour, hours.am_end_hour));
    od.add(a.work, a.home, clamp_hour(a.pm_departure, hours.pm_start_hour, hours.pm_end_hour));
  }
  return od;
}

}  // namespace zevsim::mobsim

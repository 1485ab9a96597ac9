#include "zevsim/mobsim/choice.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace zevsim::mobsim {

std::string_view to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::DriveGas: return "drive_gas";
    case Mode::DriveEV: return "drive_ev";
    case Mode::ParkAndRide: return "park_and_ride";
    case Mode::TransitDirect: return "transit_direct";
    case Mode::Active: return "active";
  }
  return "?";
}

std::array<ModeCost, kModeCount> mode_costs(const Agent& agent, const TripContext& trip, const PolicyLevers& levers,
                                            const WorldConfig& cfg) {
  std::array<ModeCost, kModeCount> c{};
  const double incentive_per_trip =
      cfg.incentive_amortization_trips > 0.0 ? levers.ev_incentive_usd / cfg.incentive_amortization_trips : 0.0;
  const double hw = levers.transit_headway_multiplier;
  const bool gas = agent.vehicle == Vehicle::GasolineCar, ev = agent.vehicle == Vehicle::EV;
  const double per_mile = ev ? cfg.ev_cost_per_mile : cfg.gas_cost_per_mile;

  auto drive = [&](double per_mile_cost, double rebate) {
    ModeCost m;
    m.feasible = true;
    m.minutes = trip.drive_minutes + levers.parking_search_minutes;
    m.money = trip.drive_miles * per_mile_cost + cfg.parking_cost - rebate;
    if (trip.drive_priced) m.money += levers.congestion_price;
    return m;
  };
  if (gas) c[static_cast<std::size_t>(Mode::DriveGas)] = drive(cfg.gas_cost_per_mile, 0.0);
  if (ev) c[static_cast<std::size_t>(Mode::DriveEV)] = drive(cfg.ev_cost_per_mile, incentive_per_trip);

  if ((gas || ev) && trip.park_and_ride) {
    const auto& p = *trip.park_and_ride;
    ModeCost& m = c[static_cast<std::size_t>(Mode::ParkAndRide)];
    m.feasible = true;
    m.minutes = p.drive_minutes + levers.parking_search_minutes + cfg.hub_transfer_minutes + 0.5 * p.headway * hw +
                p.in_vehicle_minutes;
    m.money = p.drive_miles * per_mile + cfg.hub_parking_cost + cfg.transit_fare - (ev ? incentive_per_trip : 0.0);
    if (p.priced) m.money += levers.congestion_price;
  }
  if (trip.transit) {
    ModeCost& m = c[static_cast<std::size_t>(Mode::TransitDirect)];
    m.feasible = true;
    m.minutes = cfg.transit_access_minutes + 0.5 * trip.transit->headway * hw + trip.transit->in_vehicle_minutes;
    m.money = cfg.transit_fare;
  }
  c[static_cast<std::size_t>(Mode::Active)] = {true, trip.active_minutes, 0.0};
  return c;
}

std::array<double, kModeCount> choice_probabilities(const Agent& agent, const std::array<ModeCost, kModeCount>& costs,
                                                    double scale) {
  constexpr double ninf = -std::numeric_limits<double>::infinity();
  std::array<double, kModeCount> u{};
  double best = ninf;
  for (std::size_t i = 0; i < kModeCount; ++i) {
    u[i] = costs[i].feasible ? -(costs[i].minutes / 60.0 * agent.value_of_time + costs[i].money) / scale : ninf;
    if (std::isnan(u[i])) u[i] = ninf;
    best = std::max(best, u[i]);
  }
  std::array<double, kModeCount> p{};
  if (best == ninf) return p;
  double sum = 0.0;
  for (std::size_t i = 0; i < kModeCount; ++i) {
    p[i] = u[i] == ninf ? 0.0 : std::exp(u[i] - best);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

ModeChoice choose_mode(const Agent& agent, const TripContext& trip, const PolicyLevers& levers,
                       const WorldConfig& config, double uniform) {
  ModeChoice out;
  out.probabilities = choice_probabilities(agent, mode_costs(agent, trip, levers, config), config.logit_scale_usd);
  double cum = 0.0;
  std::size_t last_feasible = kModeCount;
  for (std::size_t i = 0; i < kModeCount; ++i) {
    if (out.probabilities[i] <= 0.0) continue;
    last_feasible = i;
    cum += out.probabilities[i];
    if (uniform < cum) {
      out.mode = kModes[i];
      return out;
    }
  }
  assert(last_feasible < kModeCount && "Active is always feasible");
  out.mode = kModes[last_feasible];
  return out;
}

}  // namespace zevsim::mobsim

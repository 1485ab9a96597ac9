#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "zevsim/mobsim/world.hpp"

namespace zevsim::mobsim {

enum class IncomeBand { Low, Middle, High };
enum class Vehicle { GasolineCar, EV, None };

std::string_view to_string(IncomeBand band) noexcept;
std::string_view to_string(Vehicle vehicle) noexcept;

struct Agent {
  std::uint32_t id = 0;
  std::size_t home = 0;
  std::size_t work = 0;
  IncomeBand band = IncomeBand::Middle;
  Vehicle vehicle = Vehicle::GasolineCar;
  double income = 0.0;
  double value_of_time = 0.0;  // USD per hour
  bool employed = true;
  int am_departure = 0;        // minute of day
  int pm_departure = 0;

  bool operator==(const Agent&) const = default;
};

/// Homes are drawn in proportion to zone population, workplaces in proportion
/// to employment. Tract sub-two-car rate and income band drive ownership.
std::vector<Agent> generate_population(std::span<const Zone> zones, const std::map<std::string, TractProfile>& tracts,
                                       std::size_t n_agents, std::uint64_t seed, const WorldConfig& config = {});

std::string agents_to_csv(std::span<const Agent> agents);

class ODMatrix {
 public:
  static constexpr int kHours = 24;

  explicit ODMatrix(std::size_t zones = 0) : zones_(zones), trips_(zones * zones * kHours, 0) {}

  std::size_t zones() const noexcept { return zones_; }
  std::uint32_t at(std::size_t origin, std::size_t dest, int hour) const;
  void add(std::size_t origin, std::size_t dest, int hour, std::uint32_t trips = 1);

  std::uint64_t total() const;
  std::uint64_t origin_total(std::size_t origin, int hour_from = 0, int hour_to = kHours) const;
  std::uint64_t destination_total(std::size_t dest, int hour_from = 0, int hour_to = kHours) const;
  std::uint64_t window_total(std::size_t origin, std::size_t dest, int hour_from, int hour_to) const;

 private:
  std::size_t zones_;
  std::vector<std::uint32_t> trips_;
};

/// One home-to-work trip in the AM window and one return in the PM window per
/// employed agent, binned by departure hour.
ODMatrix build_od(std::span<const Agent> agents, std::size_t zone_count, const TripWindows& hours = {});

}  // namespace zevsim::mobsim

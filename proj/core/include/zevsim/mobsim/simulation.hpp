#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zevsim/inventory.hpp"
#include "zevsim/mobsim/choice.hpp"
#include "zevsim/mobsim/hub.hpp"
#include "zevsim/mobsim/levers.hpp"
#include "zevsim/mobsim/population.hpp"
#include "zevsim/mobsim/world.hpp"

namespace zevsim::mobsim {

struct SimOptions {
  int horizon_ticks = kMinutesPerDay;
  /// Replaces the generated population (tests, what-if fleets).
  std::optional<std::vector<Agent>> agents;
  IntermodalMatrix matrix = IntermodalMatrix::standard();
};

struct HubStats {
  std::string hub_id;
  int capacity = 0;
  int charger_ports = 0;
  std::uint64_t transfers = 0;
  std::uint64_t reroutes = 0;
  int parking_peak = 0;
  int occupancy = 0;
  std::uint64_t parked_in = 0;
  std::uint64_t parked_out = 0;
  std::uint64_t sessions_arrived = 0;
  std::uint64_t sessions_started = 0;
  std::uint64_t sessions_completed = 0;
  std::uint64_t sessions_in_progress = 0;
  std::uint64_t sessions_waiting = 0;
  std::uint64_t sessions_abandoned = 0;
  double mean_wait_minutes = 0.0;
  double max_wait_minutes = 0.0;
};

struct LeverChange {
  int tick = 0;
  std::uint64_t snapshot_id = 0;
  PolicyLevers levers;
};

struct LeverAck {
  std::uint64_t snapshot_id = 0;
  PolicyLevers levers;
  bool changed = false;
};

struct SimResult {
  std::string world;
  std::uint64_t seed = 0;
  std::size_t agents = 0;
  int final_tick = 0;
  std::uint64_t trips_started = 0;
  std::uint64_t trips_completed = 0;
  std::array<std::uint64_t, kModeCount> mode_trips{};
  std::array<double, kModeCount> mode_shares{};
  std::array<double, kModeCount> mode_vmt{};
  double total_vmt = 0.0;
  double vmt_per_capita = 0.0;  // per agent
  double total_mtco2e = 0.0;
  std::vector<HubStats> hubs;
  EmissionsGrid grid;
  std::vector<ActivityRecord> vmt_log;
  std::vector<LeverChange> lever_history;
};

struct Progress {
  int tick = 0;
  bool finished = false;
  std::uint64_t trips_started = 0;
  std::uint64_t trips_completed = 0;
  std::array<std::uint64_t, kModeCount> mode_trips{};
  std::array<double, kModeCount> mode_shares{};
  double cumulative_vmt = 0.0;
  double cumulative_mtco2e = 0.0;
  std::vector<HubStats> hubs;
  std::uint64_t lever_snapshot_id = 0;
  PolicyLevers levers;
};

/// One simulated day advanced in one-minute ticks. Single writer; only
/// submit_levers may be called from other threads.
class SimulationRun {
 public:
  SimulationRun(std::shared_ptr<const World> world, const PolicyLevers& levers,
                std::vector<EmissionFactor> factors, std::uint64_t seed, SimOptions options = {});
  ~SimulationRun();
  SimulationRun(const SimulationRun&) = delete;
  SimulationRun& operator=(const SimulationRun&) = delete;

  int tick() const noexcept;
  bool finished() const noexcept;
  /// Advances one tick; levers submitted before the call take effect first.
  void step();
  void run_until(int tick);
  void run();

  /// Validates and queues levers for the next tick boundary. Resubmitting the
  /// latest levers returns the existing snapshot id.
  LeverAck submit_levers(const PolicyLevers& levers, const LeverBounds& bounds = {});
  PolicyLevers levers() const;

  Progress progress() const;
  /// Throws IllegalTransition until the run has finished.
  SimResult result() const;

  /// Departures per chosen mode for ticks in [from, to).
  std::array<std::uint64_t, kModeCount> departures_between(int from, int to) const;
  const std::vector<Agent>& agents() const noexcept;
  const World& world() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SimResult simulate_day(const World& world, const PolicyLevers& levers, std::span<const EmissionFactor> factors,
                       std::uint64_t seed);

nlohmann::json to_json(const HubStats& hub);
nlohmann::json to_json(const SimResult& result);
/// FNV-1a over the canonical JSON dump, hex.
std::string result_hash(const SimResult& result);
std::string modes_csv(const SimResult& result);
std::string hubs_csv(const SimResult& result);

}  // namespace zevsim::mobsim

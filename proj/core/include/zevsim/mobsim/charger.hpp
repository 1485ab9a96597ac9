#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

namespace zevsim::mobsim {

struct ChargerArrival {
  double time = 0.0;
  double service_minutes = 0.0;
  std::uint64_t session = 0;
};

/// Vehicle leaves the hub: a waiting session is abandoned, a session in
/// service ends early.
struct ChargerDeparture {
  double time = 0.0;
  std::uint64_t session = 0;
};

struct ChargingSession {
  std::uint64_t session = 0;
  double arrival = 0.0;
  double start = 0.0;
  double end = 0.0;
  bool operator==(const ChargingSession&) const = default;
};

struct WaitingSession {
  std::uint64_t session = 0;
  double arrival = 0.0;
  double service_minutes = 0.0;
  bool operator==(const WaitingSession&) const = default;
};

/// FIFO multi-server queue advanced in fixed ticks with exact event times
/// inside each tick.
struct ChargerQueueState {
  int ports = 0;
  double clock = 0.0;
  std::vector<ChargingSession> in_service;
  std::deque<WaitingSession> waiting;

  std::uint64_t arrived = 0;
  std::uint64_t started = 0;
  std::uint64_t completed = 0;
  std::uint64_t abandoned = 0;
  double total_wait = 0.0;  // started sessions, plus abandoned ones up to departure
  double max_wait = 0.0;
  double queue_area = 0.0;  // integral of waiting count over time
  double busy_area = 0.0;   // integral of busy ports over time

  double mean_wait() const noexcept {
    auto n = started + abandoned;
    return n ? total_wait / static_cast<double>(n) : 0.0;
  }
  bool operator==(const ChargerQueueState&) const = default;
};

struct QueueStepStats {
  std::vector<double> waits;  // sessions that started service this step
  std::uint64_t completed = 0;
  std::uint64_t abandoned = 0;
};

struct QueueStep {
  ChargerQueueState state;
  QueueStepStats stats;
};

/// Advances [clock, clock + tick_minutes). Events at the same instant resolve
/// completion, then departure, then arrival. Arrivals must fall in the window.
QueueStep charger_queue_step(const ChargerQueueState& state, std::span<const ChargerArrival> arrivals,
                             double tick_minutes, std::span<const ChargerDeparture> departures = {});

}  // namespace zevsim::mobsim

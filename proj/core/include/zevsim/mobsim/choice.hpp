#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "zevsim/mobsim/levers.hpp"
#include "zevsim/mobsim/population.hpp"

namespace zevsim::mobsim {

enum class Mode { DriveGas, DriveEV, ParkAndRide, TransitDirect, Active };
inline constexpr std::array<Mode, 5> kModes{Mode::DriveGas, Mode::DriveEV, Mode::ParkAndRide, Mode::TransitDirect,
                                            Mode::Active};
inline constexpr std::size_t kModeCount = kModes.size();

std::string_view to_string(Mode mode) noexcept;
inline bool is_drive(Mode m) noexcept { return m == Mode::DriveGas || m == Mode::DriveEV; }

struct ParkAndRideLeg {
  std::size_t hub = 0;
  double drive_minutes = 0.0;
  double drive_miles = 0.0;
  bool priced = false;
  double headway = 0.0;  // before the headway lever
  double in_vehicle_minutes = 0.0;
};

struct TransitLeg {
  double headway = 0.0;
  double in_vehicle_minutes = 0.0;
};

/// Level-of-service attributes of one trip before levers are applied.
struct TripContext {
  double drive_minutes = 0.0;
  double drive_miles = 0.0;
  bool drive_priced = false;
  std::optional<ParkAndRideLeg> park_and_ride;  // present only when a hub with free space is on the way
  std::optional<TransitLeg> transit;
  double active_minutes = 0.0;
};

struct ModeCost {
  bool feasible = false;
  double minutes = 0.0;
  double money = 0.0;
};

std::array<ModeCost, kModeCount> mode_costs(const Agent& agent, const TripContext& trip, const PolicyLevers& levers,
                                            const WorldConfig& config);

/// U = -(minutes / 60 * value_of_time + money) / scale, then multinomial logit
/// over the feasible modes.
std::array<double, kModeCount> choice_probabilities(const Agent& agent, const std::array<ModeCost, kModeCount>& costs,
                                                    double scale);

struct ModeChoice {
  Mode mode = Mode::Active;
  std::array<double, kModeCount> probabilities{};
};

/// `uniform` in [0, 1) selects by inverse CDF over kModes order.
ModeChoice choose_mode(const Agent& agent, const TripContext& trip, const PolicyLevers& levers,
                       const WorldConfig& config, double uniform);

}  // namespace zevsim::mobsim

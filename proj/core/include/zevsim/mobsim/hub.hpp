#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zevsim/mobsim/charger.hpp"

namespace zevsim::mobsim {

enum class AccessMode { EvBrt, EvBus, EvShuttle, EvAuto, EvCarShare, EvRideshare, EBike, EScooter, Other };
enum class HubService {
  InterCityBus,
  MetroXpress,
  MetroLocal,
  PassengerDropOff,
  RideshareServices,
  ParkNRide,
  RideshareShortTerm,
  PrivateBike,
  RentalBikeScooter,
  OnsitePedestrian,
  OffsitePedestrian,
};
enum class Pairing { Primary, Supporting };

inline constexpr std::array<AccessMode, 9> kAccessModes{
    AccessMode::EvBrt,       AccessMode::EvBus, AccessMode::EvShuttle, AccessMode::EvAuto, AccessMode::EvCarShare,
    AccessMode::EvRideshare, AccessMode::EBike, AccessMode::EScooter,  AccessMode::Other};
inline constexpr std::array<HubService, 11> kHubServices{
    HubService::InterCityBus,      HubService::MetroXpress,       HubService::MetroLocal,
    HubService::PassengerDropOff,  HubService::RideshareServices, HubService::ParkNRide,
    HubService::RideshareShortTerm, HubService::PrivateBike,      HubService::RentalBikeScooter,
    HubService::OnsitePedestrian,  HubService::OffsitePedestrian};

std::string_view to_string(AccessMode m) noexcept;
std::string_view to_string(HubService s) noexcept;
std::string_view to_string(Pairing p) noexcept;
AccessMode parse_access_mode(std::string_view text);
HubService parse_hub_service(std::string_view text);

class IntermodalMatrix {
 public:
  /// The 11 x 9 hub pairing table bundled with the library.
  static IntermodalMatrix standard();
  /// Rows are services, columns access modes, cells Primary or Supporting.
  static IntermodalMatrix parse_csv(std::string_view text);
  static IntermodalMatrix load(const std::filesystem::path& path);

  /// Throws UnknownPairing.
  Pairing pairing(HubService service, AccessMode mode) const;
  bool contains(HubService service, AccessMode mode) const;
  std::size_t size() const noexcept { return cells_.size(); }
  std::string to_csv() const;

  bool operator==(const IntermodalMatrix&) const = default;

 private:
  std::map<std::pair<HubService, AccessMode>, Pairing> cells_;
};

struct HubState {
  std::string hub_id;
  int capacity = 0;
  int occupied = 0;
  int peak = 0;
  std::uint64_t parked_in = 0;
  std::uint64_t parked_out = 0;
  std::uint64_t transfers = 0;
  std::uint64_t reroutes = 0;
  ChargerQueueState charger;
};

struct HubArrival {
  std::uint64_t agent = 0;
  AccessMode mode = AccessMode::EvAuto;
  HubService service = HubService::ParkNRide;
  double time = 0.0;
  bool wants_charge = false;
  std::string route;
  std::optional<double> next_departure;  // on `route`, after the transfer walk
};

struct TransferOutcome {
  std::uint64_t agent = 0;
  Pairing pairing = Pairing::Primary;
  bool parked = false;
  bool charging = false;
  bool rerouted = false;  // parking denied
  std::optional<std::string> boarded_route;
  double wait_minutes = 0.0;
};

/// Allocates one tick's arrivals: Primary pairings before Supporting, then
/// arrival time, then input order. Outcomes are returned in input order.
std::vector<TransferOutcome> hub_transfer(HubState& hub, std::span<const HubArrival> arrivals,
                                          const IntermodalMatrix& matrix);

/// Car leaves the lot.
void release_parking(HubState& hub);

}  // namespace zevsim::mobsim

#include "zevsim/mobsim/hub.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "zevsim/error.hpp"
#include "zevsim/io.hpp"

namespace zevsim::mobsim {

namespace {

struct Names {
  std::string_view id;
  std::string_view label;
};

constexpr std::array<Names, 9> kAccessNames{{{"ev_brt", "EV BRT"},
                                             {"ev_bus", "EV Bus"},
                                             {"ev_shuttle", "EV Shuttle"},
                                             {"ev_auto", "EV Auto (ownership)"},
                                             {"ev_car_share", "EV Car Share"},
                                             {"ev_rideshare", "EV Rideshare"},
                                             {"e_bike", "E-Bike"},
                                             {"e_scooter", "E-Scooter"},
                                             {"other", "Other"}}};

constexpr std::array<Names, 11> kServiceNames{{{"inter_city_bus", "Inter-City Bus"},
                                               {"metro_xpress", "METRO X-press"},
                                               {"metro_local", "METRO Local"},
                                               {"passenger_drop_off", "Passenger Drop-Off"},
                                               {"rideshare_services", "Rideshare Services"},
                                               {"park_n_ride", "Park n Ride"},
                                               {"rideshare_short_term", "Rideshare (short term)"},
                                               {"private_bike", "Private Bike"},
                                               {"rental_bike_scooter", "Rental Bike/Scooter"},
                                               {"onsite_pedestrian", "On-site Pedestrian"},
                                               {"offsite_pedestrian", "Off-site Pedestrian"}}};

// P = primary, s = supporting; columns follow kAccessModes
constexpr std::array<std::string_view, 11> kStandardRows{
    "PPsssssss",  // Inter-City Bus
    "PPsssssss",  // METRO X-press
    "sPPssssss",  // METRO Local
    "sssPPPsss",  // Passenger Drop-Off
    "sssPPPsss",  // Rideshare Services
    "sssPPssss",  // Park n Ride
    "sssssPsss",  // Rideshare (short term)
    "ssssssPss",  // Private Bike
    "sssssssPs",  // Rental Bike/Scooter
    "ssssssssP",  // On-site Pedestrian
    "ssssssssP",  // Off-site Pedestrian
};

template <typename E, std::size_t N>
E parse_named(std::string_view text, const std::array<Names, N>& names, const char* what) {
  auto t = io::trim(text);
  for (std::size_t i = 0; i < N; ++i)
    if (t == names[i].id || t == names[i].label) return static_cast<E>(i);
  throw Error(Errc::ParseError, std::string("unknown ") + what + " '" + std::string(t) + "'");
}

}  // namespace

std::string_view to_string(AccessMode m) noexcept { return kAccessNames[static_cast<std::size_t>(m)].id; }
std::string_view to_string(HubService s) noexcept { return kServiceNames[static_cast<std::size_t>(s)].id; }
std::string_view to_string(Pairing p) noexcept { return p == Pairing::Primary ? "primary" : "supporting"; }

AccessMode parse_access_mode(std::string_view text) {
  return parse_named<AccessMode>(text, kAccessNames, "access mode");
}
HubService parse_hub_service(std::string_view text) {
  return parse_named<HubService>(text, kServiceNames, "hub service");
}

IntermodalMatrix IntermodalMatrix::standard() {
  IntermodalMatrix m;
  for (std::size_t r = 0; r < kHubServices.size(); ++r)
    for (std::size_t c = 0; c < kAccessModes.size(); ++c)
      m.cells_[{kHubServices[r], kAccessModes[c]}] = kStandardRows[r][c] == 'P' ? Pairing::Primary : Pairing::Supporting;
  return m;
}

IntermodalMatrix IntermodalMatrix::parse_csv(std::string_view text) {
  auto table = io::CsvTable::parse(text, "<intermodal matrix>");
  if (table.header().empty()) throw Error(Errc::ParseError, "intermodal matrix has no header");
  std::vector<AccessMode> cols;
  for (std::size_t c = 1; c < table.header().size(); ++c) cols.push_back(parse_access_mode(table.header()[c]));
  IntermodalMatrix m;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    auto service = parse_hub_service(table.at(r, 0));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      auto cell = io::trim(table.at(r, c + 1));
      Pairing p;
      if (cell == "Primary" || cell == "primary") p = Pairing::Primary;
      else if (cell == "Supporting" || cell == "supporting") p = Pairing::Supporting;
      else throw Error(Errc::ParseError, "bad pairing '" + std::string(cell) + "'");
      m.cells_[{service, cols[c]}] = p;
    }
  }
  return m;
}

IntermodalMatrix IntermodalMatrix::load(const std::filesystem::path& path) { return parse_csv(io::read_text(path)); }

Pairing IntermodalMatrix::pairing(HubService service, AccessMode mode) const {
  auto it = cells_.find({service, mode});
  if (it == cells_.end())
    throw Error(Errc::UnknownPairing,
                "no pairing for " + std::string(to_string(mode)) + " at " + std::string(to_string(service)));
  return it->second;
}

bool IntermodalMatrix::contains(HubService service, AccessMode mode) const {
  return cells_.count({service, mode}) != 0;
}

std::string IntermodalMatrix::to_csv() const {
  std::ostringstream out;
  out << "service";
  for (auto m : kAccessModes) out << ',' << kAccessNames[static_cast<std::size_t>(m)].label;
  out << '\n';
  for (auto s : kHubServices) {
    bool any = false;
    for (auto m : kAccessModes) any = any || contains(s, m);
    if (!any) continue;
    out << kServiceNames[static_cast<std::size_t>(s)].label;
    for (auto m : kAccessModes) out << ',' << (pairing(s, m) == Pairing::Primary ? "Primary" : "Supporting");
    out << '\n';
  }
  return out.str();
}

std::vector<TransferOutcome> hub_transfer(HubState& hub, std::span<const HubArrival> arrivals,
                                          const IntermodalMatrix& matrix) {
  std::vector<TransferOutcome> out(arrivals.size());
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    out[i].agent = arrivals[i].agent;
    out[i].pairing = matrix.pairing(arrivals[i].service, arrivals[i].mode);
  }
  std::vector<std::size_t> order(arrivals.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (out[a].pairing != out[b].pairing) return out[a].pairing == Pairing::Primary;
    return arrivals[a].time < arrivals[b].time;
  });

  const bool chargers = hub.charger.ports > 0;
  for (auto i : order) {
    const auto& a = arrivals[i];
    auto& o = out[i];
    if (a.service == HubService::ParkNRide) {
      if (hub.occupied >= hub.capacity) {
        o.rerouted = true;
        ++hub.reroutes;
        continue;
      }
      o.parked = true;
      ++hub.occupied;
      ++hub.parked_in;
      hub.peak = std::max(hub.peak, hub.occupied);
      o.charging = a.wants_charge && a.mode == AccessMode::EvAuto && chargers;
    }
    ++hub.transfers;
    if (a.next_departure) {
      o.boarded_route = a.route;
      o.wait_minutes = std::max(0.0, *a.next_departure - a.time);
    }
  }
  return out;
}

void release_parking(HubState& hub) {
  if (hub.occupied <= 0) throw Error(Errc::IllegalTransition, "hub " + hub.hub_id + " has no parked vehicle");
  --hub.occupied;
  ++hub.parked_out;
}

}  // namespace zevsim::mobsim

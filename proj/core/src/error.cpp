#include "zevsim/error.hpp"

namespace zevsim {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MissingFactor: return "MissingFactor";
    case Errc::NegativeVmt: return "NegativeVmt";
    case Errc::UnknownZone: return "UnknownZone";
    case Errc::EmptyOrZeroTotal: return "EmptyOrZeroTotal";
    case Errc::EmptyInventory: return "EmptyInventory";
    case Errc::NonPositivePopulation: return "NonPositivePopulation";
    case Errc::InvalidTrajectory: return "InvalidTrajectory";
    case Errc::MilestoneOutsideSeries: return "MilestoneOutsideSeries";
    case Errc::NonPositivePlanParameter: return "NonPositivePlanParameter";
    case Errc::EmptyTractSet: return "EmptyTractSet";
    case Errc::NegativeWeight: return "NegativeWeight";
    case Errc::InvalidTerms: return "InvalidTerms";
    case Errc::ZeroChargers: return "ZeroChargers";
    case Errc::InsufficientAnchors: return "InsufficientAnchors";
    case Errc::InvalidIndicator: return "InvalidIndicator";
    case Errc::EmptyZones: return "EmptyZones";
    case Errc::ValidationFailure: return "ValidationFailure";
    case Errc::UnknownPairing: return "UnknownPairing";
    case Errc::UnknownRun: return "UnknownRun";
    case Errc::InvalidLeverValue: return "InvalidLeverValue";
    case Errc::IllegalTransition: return "IllegalTransition";
    case Errc::StorageFull: return "StorageFull";
    case Errc::EmptyWindow: return "EmptyWindow";
    case Errc::NotEnrolled: return "NotEnrolled";
    case Errc::ConsentRevoked: return "ConsentRevoked";
    case Errc::UnknownPrincipal: return "UnknownPrincipal";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace zevsim

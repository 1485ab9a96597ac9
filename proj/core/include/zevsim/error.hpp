#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace zevsim {

enum class Errc {
  // inventory
  MissingFactor,
  NegativeVmt,
  UnknownZone,
  EmptyOrZeroTotal,
  EmptyInventory,
  // scenario
  NonPositivePopulation,
  InvalidTrajectory,
  MilestoneOutsideSeries,
  NonPositivePlanParameter,
  // equity
  EmptyTractSet,
  NegativeWeight,
  InvalidTerms,
  ZeroChargers,
  InsufficientAnchors,
  InvalidIndicator,
  // mobsim
  EmptyZones,
  ValidationFailure,
  UnknownPairing,
  UnknownRun,
  InvalidLeverValue,
  IllegalTransition,
  // hubpipe
  StorageFull,
  EmptyWindow,
  NotEnrolled,
  ConsentRevoked,
  UnknownPrincipal,
  // plumbing
  ParseError,
  IoError,
  InvalidArgument,
};

std::string_view to_string(Errc code) noexcept;

/// Domain error carrying a stable machine-readable code.
///
/// Everything except IoError is a validation-class failure; the CLI maps
/// the two classes to different exit codes.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }
  bool is_io() const noexcept { return code_ == Errc::IoError; }

 private:
  Errc code_;
};

}  // namespace zevsim

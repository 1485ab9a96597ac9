#pragma once

#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace zevsim {

/// Piecewise-linear curve through (year, value) anchors, flat beyond the ends.
class Trajectory {
 public:
  using Anchor = std::pair<double, double>;

  Trajectory() = default;
  /// Throws InvalidTrajectory when empty or years are not strictly increasing.
  explicit Trajectory(std::vector<Anchor> anchors);
  static Trajectory constant(double value) { return Trajectory({{0.0, value}}); }

  double operator()(double year) const;
  const std::vector<Anchor>& anchors() const noexcept { return anchors_; }
  bool empty() const noexcept { return anchors_.empty(); }
  double min_value() const;
  double max_value() const;

  bool operator==(const Trajectory&) const = default;

 private:
  std::vector<Anchor> anchors_;
};

/// [[year, value], ...]
Trajectory trajectory_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Trajectory& t);

}  // namespace zevsim

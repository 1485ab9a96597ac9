#include "zevsim/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "zevsim/error.hpp"

namespace zevsim {

Trajectory::Trajectory(std::vector<Anchor> anchors) : anchors_(std::move(anchors)) {
  if (anchors_.empty()) throw Error(Errc::InvalidTrajectory, "trajectory needs at least one anchor");
  for (std::size_t i = 0; i < anchors_.size(); ++i) {
    if (!std::isfinite(anchors_[i].first) || !std::isfinite(anchors_[i].second)) {
      throw Error(Errc::InvalidTrajectory, "non-finite anchor");
    }
    if (i > 0 && !(anchors_[i].first > anchors_[i - 1].first)) {
      throw Error(Errc::InvalidTrajectory, "anchor years must be strictly increasing");
    }
  }
}

double Trajectory::operator()(double year) const {
  if (anchors_.empty()) throw Error(Errc::InvalidTrajectory, "evaluating an empty trajectory");
  if (year <= anchors_.front().first) return anchors_.front().second;
  if (year >= anchors_.back().first) return anchors_.back().second;
  const auto hi = std::upper_bound(anchors_.begin(), anchors_.end(), year,
                                   [](double y, const Anchor& a) { return y < a.first; });
  const auto lo = hi - 1;
  if (year == lo->first) return lo->second;
  const double t = (year - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

double Trajectory::min_value() const {
  double m = anchors_.at(0).second;
  for (const auto& a : anchors_) m = std::min(m, a.second);
  return m;
}

double Trajectory::max_value() const {
  double m = anchors_.at(0).second;
  for (const auto& a : anchors_) m = std::max(m, a.second);
  return m;
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  if (j.is_number()) return Trajectory::constant(j.get<double>());
  if (!j.is_array()) throw Error(Errc::InvalidTrajectory, "trajectory must be [[year, value], ...]");
  std::vector<Trajectory::Anchor> anchors;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      throw Error(Errc::InvalidTrajectory, "anchor must be [year, value]");
    }
    anchors.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
  return Trajectory(std::move(anchors));
}

nlohmann::json to_json(const Trajectory& t) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [year, value] : t.anchors()) out.push_back({year, value});
  return out;
}

}  // namespace zevsim

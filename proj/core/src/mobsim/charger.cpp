#include "zevsim/mobsim/charger.hpp"

#include <algorithm>
#include <limits>

namespace zevsim::mobsim {

QueueStep charger_queue_step(const ChargerQueueState& in, std::span<const ChargerArrival> arrivals,
                             double tick_minutes, std::span<const ChargerDeparture> departures) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  QueueStep out{in, {}};
  auto& s = out.state;
  const double t_end = s.clock + tick_minutes;

  std::vector<ChargerArrival> arr(arrivals.begin(), arrivals.end());
  std::stable_sort(arr.begin(), arr.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  std::vector<ChargerDeparture> dep(departures.begin(), departures.end());
  std::stable_sort(dep.begin(), dep.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  std::size_t ai = 0, di = 0;
  double now = s.clock;

  auto advance = [&](double t) {
    if (t > now) {
      s.queue_area += static_cast<double>(s.waiting.size()) * (t - now);
      s.busy_area += static_cast<double>(s.in_service.size()) * (t - now);
      now = t;
    }
  };
  auto start_waiting = [&] {
    while (!s.waiting.empty() && static_cast<int>(s.in_service.size()) < s.ports) {
      auto w = s.waiting.front();
      s.waiting.pop_front();
      double wait = now - w.arrival;
      s.in_service.push_back({w.session, w.arrival, now, now + w.service_minutes});
      ++s.started;
      s.total_wait += wait;
      s.max_wait = std::max(s.max_wait, wait);
      out.stats.waits.push_back(wait);
    }
  };
  auto finish = [&](std::size_t idx) {
    s.in_service.erase(s.in_service.begin() + static_cast<std::ptrdiff_t>(idx));
    ++s.completed;
    ++out.stats.completed;
  };

  start_waiting();
  for (;;) {
    std::size_t next_done = s.in_service.size();
    double t_done = inf;
    for (std::size_t i = 0; i < s.in_service.size(); ++i)
      if (s.in_service[i].end < t_done) {
        t_done = s.in_service[i].end;
        next_done = i;
      }
    double t_dep = di < dep.size() ? dep[di].time : inf;
    double t_arr = ai < arr.size() ? arr[ai].time : inf;
    double t = std::min({t_done, t_dep, t_arr});
    if (!(t < t_end)) break;
    advance(t);
    if (t_done == t) {
      finish(next_done);
    } else if (t_dep == t) {
      auto id = dep[di++].session;
      auto w = std::find_if(s.waiting.begin(), s.waiting.end(), [&](const auto& x) { return x.session == id; });
      if (w != s.waiting.end()) {
        double waited = now - w->arrival;
        s.total_wait += waited;
        s.max_wait = std::max(s.max_wait, waited);
        s.waiting.erase(w);
        ++s.abandoned;
        ++out.stats.abandoned;
      } else {
        auto b = std::find_if(s.in_service.begin(), s.in_service.end(), [&](const auto& x) { return x.session == id; });
        if (b != s.in_service.end()) finish(static_cast<std::size_t>(b - s.in_service.begin()));
      }
    } else {
      const auto& a = arr[ai++];
      s.waiting.push_back({a.session, a.time, a.service_minutes});
      ++s.arrived;
    }
    start_waiting();
  }
  advance(t_end);
  s.clock = t_end;
  return out;
}

}  // namespace zevsim::mobsim

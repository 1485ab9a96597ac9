#include "zevsim/gateway/runs.hpp"

#include <condition_variable>
#include <cstdio>
#include <thread>

#include "zevsim/error.hpp"

namespace zevsim::gateway {

using nlohmann::json;

std::string_view to_string(RunState s) noexcept {
  switch (s) {
    case RunState::Created: return "Created";
    case RunState::Running: return "Running";
    case RunState::Paused: return "Paused";
    case RunState::Completed: return "Completed";
    case RunState::Failed: return "Failed";
  }
  return "?";
}

bool is_terminal(RunState s) noexcept { return s == RunState::Completed || s == RunState::Failed; }

std::string_view to_string(RunAction a) noexcept {
  switch (a) {
    case RunAction::Start: return "start";
    case RunAction::Pause: return "pause";
    case RunAction::Complete: return "complete";
    case RunAction::Fail: return "fail";
  }
  return "?";
}

std::optional<RunState> next_state(RunState from, RunAction action) noexcept {
  switch (from) {
    case RunState::Created:
      if (action == RunAction::Start) return RunState::Running;
      break;
    case RunState::Running:
      if (action == RunAction::Pause) return RunState::Paused;
      if (action == RunAction::Complete) return RunState::Completed;
      if (action == RunAction::Fail) return RunState::Failed;
      break;
    case RunState::Paused:
      if (action == RunAction::Start) return RunState::Running;
      if (action == RunAction::Fail) return RunState::Failed;
      break;
    case RunState::Completed:
    case RunState::Failed: break;
  }
  return std::nullopt;
}

json to_json(const Snapshot& s) {
  const auto& p = s.progress;
  json trips = json::object(), shares = json::object();
  for (std::size_t i = 0; i < mobsim::kModeCount; ++i) {
    std::string mode(mobsim::to_string(mobsim::kModes[i]));
    trips[mode] = p.mode_trips[i];
    shares[mode] = p.mode_shares[i];
  }
  json hubs = json::array();
  for (const auto& h : p.hubs) hubs.push_back(mobsim::to_json(h));
  json gauge = nullptr;
  if (s.gauge)
    gauge = {{"metric", "vmt_reduction"},
             {"goal_year", s.gauge->goal_year},
             {"required", s.gauge->required},
             {"reference_vmt", s.gauge->reference_vmt},
             {"achieved", s.gauge->achieved},
             {"on_track", s.gauge->on_track}};
  return {{"type", "snapshot"},
          {"run_id", s.run_id},
          {"seq", s.seq},
          {"tick", s.tick},
          {"state", to_string(s.state)},
          {"final", s.final},
          {"trips_started", p.trips_started},
          {"trips_completed", p.trips_completed},
          {"mode_trips", trips},
          {"mode_shares", shares},
          {"cumulative_vmt", p.cumulative_vmt},
          {"cumulative_mtco2e", p.cumulative_mtco2e},
          {"hubs", hubs},
          {"lever_snapshot_id", p.lever_snapshot_id},
          {"levers", mobsim::to_json(p.levers)},
          {"milestone", gauge}};
}

json to_json(const RunInfo& r) {
  json history = json::array();
  for (const auto& c : r.lever_history)
    history.push_back({{"tick", c.tick}, {"snapshot_id", c.snapshot_id}, {"levers", mobsim::to_json(c.levers)}});
  json j = {{"id", r.id},
            {"state", to_string(r.state)},
            {"world", r.world},
            {"seed", r.seed},
            {"tick", r.tick},
            {"cadence_ticks", r.cadence_ticks},
            {"snapshots", r.snapshots},
            {"lever_history", history}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

struct RunManager::Run {
  std::string id;
  RunSpec spec;
  std::uint64_t seed = 0;
  std::shared_ptr<const mobsim::World> world;
  std::unique_ptr<mobsim::SimulationRun> sim;
  std::optional<std::pair<int, double>> goal;  // year, required VMT reduction
  mobsim::LeverBounds bounds;

  mutable std::mutex mu;
  mutable std::condition_variable cv;
  RunState state = RunState::Created;
  bool stop = false;
  std::string error;
  int tick = 0;
  mobsim::PolicyLevers latest;
  std::vector<mobsim::LeverChange> history;
  std::vector<std::shared_ptr<const Snapshot>> snapshots;
  std::optional<mobsim::SimResult> result;
  std::thread worker;

  RunInfo info_locked() const {
    return {id, state, world->name, seed, tick, spec.cadence_ticks, snapshots.size(), history, error};
  }

  std::optional<MilestoneGauge> gauge(int at_tick, double vmt) const {
    const auto& ref = world->config.reference_cumulative_vmt;
    if (!goal || ref.empty()) return std::nullopt;
    const double hours = static_cast<double>(at_tick) / 60.0;
    const auto last = static_cast<double>(ref.size());
    double reference;
    if (hours >= last) {
      reference = ref.back();
    } else {
      auto h = static_cast<std::size_t>(hours);
      double before = h == 0 ? 0.0 : ref[h - 1];
      reference = before + (ref[h] - before) * (hours - static_cast<double>(h));
    }
    MilestoneGauge g;
    g.goal_year = goal->first;
    g.required = goal->second;
    g.reference_vmt = reference;
    g.achieved = reference > 0.0 ? 1.0 - vmt / reference : 0.0;
    g.on_track = reference > 0.0 && g.achieved >= g.required;
    return g;
  }

  void publish_locked(mobsim::Progress progress, RunState as, bool final) {
    auto s = std::make_shared<Snapshot>();
    s->run_id = id;
    s->seq = snapshots.size();
    s->tick = progress.tick;
    s->state = as;
    s->final = final;
    s->gauge = gauge(progress.tick, progress.cumulative_vmt);
    s->progress = std::move(progress);
    snapshots.push_back(std::move(s));
  }

  void work() {
    try {
      {
        std::lock_guard lock(mu);
        publish_locked(sim->progress(), RunState::Running, false);
      }
      cv.notify_all();
      for (;;) {
        {
          std::unique_lock lock(mu);
          cv.wait(lock, [&] { return state != RunState::Paused || stop; });
          if (stop || is_terminal(state)) return;
        }
        if (spec.tick_interval.count() > 0) std::this_thread::sleep_for(spec.tick_interval);
        sim->step();
        const int t = sim->tick();
        if (sim->finished()) {
          auto res = sim->result();
          auto p = sim->progress();
          p.mode_trips = res.mode_trips;
          p.mode_shares = res.mode_shares;
          p.cumulative_vmt = res.total_vmt;
          p.cumulative_mtco2e = res.total_mtco2e;
          p.hubs = res.hubs;
          {
            std::lock_guard lock(mu);
            tick = t;
            history = res.lever_history;
            publish_locked(std::move(p), RunState::Completed, true);
            result = std::move(res);
            state = RunState::Completed;
          }
          cv.notify_all();
          return;
        }
        bool due = t % spec.cadence_ticks == 0;
        auto p = due ? std::optional(sim->progress()) : std::nullopt;
        {
          std::lock_guard lock(mu);
          tick = t;
          if (p) publish_locked(std::move(*p), RunState::Running, false);
        }
        if (due) cv.notify_all();
      }
    } catch (const std::exception& e) {
      {
        std::lock_guard lock(mu);
        if (!is_terminal(state)) {
          state = RunState::Failed;
          error = e.what();
        }
      }
      cv.notify_all();
    }
  }
};

RunManager::RunManager(std::shared_ptr<Catalog> catalog, ServiceConfig config)
    : catalog_(std::move(catalog)), config_(std::move(config)) {}

RunManager::~RunManager() {
  std::vector<std::shared_ptr<Run>> runs;
  {
    std::lock_guard lock(mu_);
    for (auto& [id, r] : runs_) runs.push_back(r);
  }
  for (auto& r : runs) {
    {
      std::lock_guard lock(r->mu);
      r->stop = true;
      if (auto s = next_state(r->state, RunAction::Fail)) {
        r->state = *s;
        r->error = "service stopped";
      }
    }
    r->cv.notify_all();
    if (r->worker.joinable()) r->worker.join();
  }
}

std::shared_ptr<RunManager::Run> RunManager::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = runs_.find(id);
  if (it == runs_.end()) throw Error(Errc::UnknownRun, "no run '" + id + "'");
  return it->second;
}

RunInfo RunManager::create(const RunSpec& spec) {
  if (spec.cadence_ticks <= 0) throw Error(Errc::InvalidArgument, "cadence_ticks must be positive");
  if (spec.horizon_ticks <= 0) throw Error(Errc::InvalidArgument, "horizon_ticks must be positive");
  mobsim::validate(spec.levers, config_.lever_bounds);

  auto run = std::make_shared<Run>();
  run->spec = spec;
  run->bounds = config_.lever_bounds;
  run->world = catalog_->world(spec.world);
  run->seed = spec.seed ? spec.seed : run->world->config.default_seed;
  auto dataset = catalog_->baseline(config_.baseline);
  try {
    auto goals = catalog_->goals();
    if (!goals.vmt_per_capita_reduction.empty()) run->goal = *goals.vmt_per_capita_reduction.rbegin();
  } catch (const Error&) {
  }
  mobsim::SimOptions options;
  options.horizon_ticks = spec.horizon_ticks;
  run->sim = std::make_unique<mobsim::SimulationRun>(run->world, spec.levers, dataset->factors, run->seed,
                                                     std::move(options));
  run->latest = spec.levers;
  run->history.push_back({0, run->sim->progress().lever_snapshot_id, spec.levers});

  std::lock_guard lock(mu_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "run-%06llu", static_cast<unsigned long long>(next_id_++));
  run->id = buf;
  runs_.emplace(run->id, run);
  return run->info_locked();
}

RunInfo RunManager::info(const std::string& id) const {
  auto r = find(id);
  std::lock_guard lock(r->mu);
  return r->info_locked();
}

std::vector<RunInfo> RunManager::list() const {
  std::vector<std::shared_ptr<Run>> runs;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, r] : runs_) runs.push_back(r);
  }
  std::vector<RunInfo> out;
  for (const auto& r : runs) {
    std::lock_guard lock(r->mu);
    out.push_back(r->info_locked());
  }
  return out;
}

namespace {

Error illegal(const std::string& id, RunState from, RunAction action) {
  return Error(Errc::IllegalTransition, "run " + id + " is " + std::string(to_string(from)) + "; cannot " +
                                            std::string(to_string(action)));
}

}  // namespace

RunInfo RunManager::start(const std::string& id) {
  auto r = find(id);
  std::lock_guard lock(r->mu);
  auto to = next_state(r->state, RunAction::Start);
  if (!to) throw illegal(id, r->state, RunAction::Start);
  bool spawn = r->state == RunState::Created;
  r->state = *to;
  if (spawn) r->worker = std::thread([run = r.get()] { run->work(); });
  r->cv.notify_all();
  return r->info_locked();
}

RunInfo RunManager::pause(const std::string& id) {
  auto r = find(id);
  std::lock_guard lock(r->mu);
  auto to = next_state(r->state, RunAction::Pause);
  if (!to) throw illegal(id, r->state, RunAction::Pause);
  r->state = *to;
  r->cv.notify_all();
  return r->info_locked();
}

RunInfo RunManager::fail(const std::string& id, const std::string& reason) {
  auto r = find(id);
  RunInfo info;
  {
    std::lock_guard lock(r->mu);
    auto to = next_state(r->state, RunAction::Fail);
    if (!to) throw illegal(id, r->state, RunAction::Fail);
    r->state = *to;
    r->error = reason;
    r->stop = true;
    info = r->info_locked();
  }
  r->cv.notify_all();
  return info;
}

mobsim::LeverAck RunManager::apply_levers(const std::string& id, const json& patch) {
  auto r = find(id);
  std::lock_guard lock(r->mu);
  if (is_terminal(r->state))
    throw Error(Errc::IllegalTransition, "run " + id + " is " + std::string(to_string(r->state)) + "; levers are frozen");
  auto levers = mobsim::levers_from_json(patch, r->latest);
  auto ack = r->sim->submit_levers(levers, r->bounds);
  if (ack.changed) {
    r->latest = ack.levers;
    r->history.push_back({r->tick, ack.snapshot_id, ack.levers});
  }
  return ack;
}

SnapshotBatch RunManager::snapshots_from(const std::string& id, std::uint64_t from_seq,
                                         std::chrono::milliseconds timeout) const {
  auto r = find(id);
  std::unique_lock lock(r->mu);
  auto ended = [&] { return is_terminal(r->state); };
  if (timeout.count() > 0)
    r->cv.wait_for(lock, timeout, [&] { return r->snapshots.size() > from_seq || ended(); });
  SnapshotBatch batch;
  for (auto i = from_seq; i < r->snapshots.size(); ++i) batch.snapshots.push_back(r->snapshots[i]);
  batch.state = r->state;
  batch.ended = ended();
  batch.error = r->error;
  return batch;
}

SnapshotBatch RunManager::snapshots_after_tick(const std::string& id, int since,
                                               std::chrono::milliseconds timeout) const {
  auto r = find(id);
  std::unique_lock lock(r->mu);
  auto ended = [&] { return is_terminal(r->state); };
  auto fresh = [&] { return !r->snapshots.empty() && r->snapshots.back()->tick > since; };
  if (timeout.count() > 0) r->cv.wait_for(lock, timeout, [&] { return fresh() || ended(); });
  SnapshotBatch batch;
  for (const auto& s : r->snapshots)
    if (s->tick > since) batch.snapshots.push_back(s);
  batch.state = r->state;
  batch.ended = ended();
  batch.error = r->error;
  return batch;
}

std::uint64_t RunManager::seq_after_tick(const std::string& id, int since) const {
  auto r = find(id);
  std::lock_guard lock(r->mu);
  std::uint64_t seq = 0;
  while (seq < r->snapshots.size() && r->snapshots[seq]->tick <= since) ++seq;
  return seq;
}

std::optional<std::uint64_t> RunManager::latest_seq(const std::string& id) const {
  auto r = find(id);
  std::lock_guard lock(r->mu);
  if (r->snapshots.empty()) return std::nullopt;
  return r->snapshots.size() - 1;
}

RunInfo RunManager::wait(const std::string& id, std::chrono::milliseconds timeout) const {
  auto r = find(id);
  std::unique_lock lock(r->mu);
  r->cv.wait_for(lock, timeout, [&] { return is_terminal(r->state); });
  return r->info_locked();
}

mobsim::SimResult RunManager::result(const std::string& id) const {
  auto r = find(id);
  std::lock_guard lock(r->mu);
  if (r->state != RunState::Completed || !r->result)
    throw Error(Errc::IllegalTransition, "run " + id + " is " + std::string(to_string(r->state)) + "; no result yet");
  return *r->result;
}

}  // namespace zevsim::gateway

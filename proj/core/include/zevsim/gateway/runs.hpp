#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zevsim/gateway/catalog.hpp"
#include "zevsim/mobsim/simulation.hpp"

namespace zevsim::gateway {

enum class RunState { Created, Running, Paused, Completed, Failed };
inline constexpr std::array<RunState, 5> kRunStates{RunState::Created, RunState::Running, RunState::Paused,
                                                    RunState::Completed, RunState::Failed};
std::string_view to_string(RunState s) noexcept;
bool is_terminal(RunState s) noexcept;

enum class RunAction { Start, Pause, Complete, Fail };
inline constexpr std::array<RunAction, 4> kRunActions{RunAction::Start, RunAction::Pause, RunAction::Complete,
                                                      RunAction::Fail};
std::string_view to_string(RunAction a) noexcept;

/// Target state of `action` from `from`; nullopt when the edge does not exist.
std::optional<RunState> next_state(RunState from, RunAction action) noexcept;

/// Progress against the VMT reduction milestone, measured against the
/// world's no-lever reference profile up to the same tick.
struct MilestoneGauge {
  int goal_year = 0;
  double required = 0.0;
  double reference_vmt = 0.0;
  double achieved = 0.0;
  bool on_track = false;
};

struct Snapshot {
  std::string run_id;
  std::uint64_t seq = 0;
  int tick = 0;
  RunState state = RunState::Running;
  bool final = false;
  mobsim::Progress progress;
  std::optional<MilestoneGauge> gauge;
};

nlohmann::json to_json(const Snapshot& s);

struct RunSpec {
  std::string world = "demo";
  std::uint64_t seed = 0;  // 0: world default
  mobsim::PolicyLevers levers;
  int cadence_ticks = 60;
  int horizon_ticks = mobsim::kMinutesPerDay;
  std::chrono::microseconds tick_interval{0};  // wall-clock pacing
};

struct RunInfo {
  std::string id;
  RunState state = RunState::Created;
  std::string world;
  std::uint64_t seed = 0;
  int tick = 0;
  int cadence_ticks = 0;
  std::uint64_t snapshots = 0;
  std::vector<mobsim::LeverChange> lever_history;
  std::string error;
};

nlohmann::json to_json(const RunInfo& info);

/// Published snapshots of a run from a sequence number on, plus whether the
/// stream has ended.
struct SnapshotBatch {
  std::vector<std::shared_ptr<const Snapshot>> snapshots;
  RunState state = RunState::Created;
  bool ended = false;
  std::string error;
};

/// Owns simulation runs. Each started run advances on its own worker thread;
/// snapshots are immutable and shared by every reader.
class RunManager {
 public:
  RunManager(std::shared_ptr<Catalog> catalog, ServiceConfig config);
  ~RunManager();
  RunManager(const RunManager&) = delete;
  RunManager& operator=(const RunManager&) = delete;

  /// Throws InvalidLeverValue, ValidationFailure, IoError.
  RunInfo create(const RunSpec& spec);
  RunInfo info(const std::string& id) const;
  std::vector<RunInfo> list() const;

  /// Throw UnknownRun or IllegalTransition.
  RunInfo start(const std::string& id);
  RunInfo pause(const std::string& id);
  RunInfo fail(const std::string& id, const std::string& reason);

  /// Throws IllegalTransition on terminal runs, InvalidLeverValue on bad input.
  mobsim::LeverAck apply_levers(const std::string& id, const nlohmann::json& patch);

  /// Snapshots with seq >= from_seq. Waits up to `timeout` when none exist yet
  /// and the run has not ended.
  SnapshotBatch snapshots_from(const std::string& id, std::uint64_t from_seq,
                               std::chrono::milliseconds timeout = std::chrono::milliseconds{0}) const;
  /// Snapshots with tick > since. Waits up to `timeout` when none exist yet
  /// and the run has not ended.
  SnapshotBatch snapshots_after_tick(const std::string& id, int since,
                                     std::chrono::milliseconds timeout = std::chrono::milliseconds{0}) const;
  /// Sequence number of the first snapshot with tick > since.
  std::uint64_t seq_after_tick(const std::string& id, int since) const;
  /// Latest published snapshot sequence, if any.
  std::optional<std::uint64_t> latest_seq(const std::string& id) const;

  /// Blocks until the run reaches a terminal state or the timeout elapses.
  RunInfo wait(const std::string& id, std::chrono::milliseconds timeout) const;
  /// Throws IllegalTransition unless Completed.
  mobsim::SimResult result(const std::string& id) const;

  const mobsim::LeverBounds& bounds() const noexcept { return config_.lever_bounds; }
  Catalog& catalog() noexcept { return *catalog_; }

 private:
  struct Run;
  std::shared_ptr<Run> find(const std::string& id) const;

  std::shared_ptr<Catalog> catalog_;
  ServiceConfig config_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Run>> runs_;
  std::uint64_t next_id_ = 1;
};

}  // namespace zevsim::gateway

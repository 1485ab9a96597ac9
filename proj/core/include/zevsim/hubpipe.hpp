#pragma once

#include <array>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace zevsim::hubpipe {

enum class Source { BusFleet, ChargerPort, RiderApp, ParkingSensor };
enum class FieldCategory { Location, Occupancy, Energy, Media };
inline constexpr std::array<FieldCategory, 4> kFieldCategories{FieldCategory::Location, FieldCategory::Occupancy,
                                                               FieldCategory::Energy, FieldCategory::Media};

std::string_view to_string(Source s) noexcept;
std::string_view to_string(FieldCategory c) noexcept;
Source parse_source(std::string_view text);
FieldCategory parse_field_category(std::string_view text);

struct Payload {
  std::optional<int> occupancy;         // people or vehicles counted
  std::optional<bool> occupied;         // charger port status
  std::optional<double> kwh;
  std::optional<std::string> image_ref; // opaque media reference
  bool operator==(const Payload&) const = default;
};

using ConsentFlags = std::map<FieldCategory, bool>;

struct TelemetryRecord {
  Source source = Source::BusFleet;
  std::string device_id;
  std::optional<std::int64_t> timestamp;  // epoch seconds
  std::optional<double> lat;
  std::optional<double> lon;
  std::string hub_id;
  std::optional<std::string> user_id;
  Payload payload;
  std::optional<ConsentFlags> consent;
};

TelemetryRecord record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TelemetryRecord& r);

struct ZoneCentroid {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
};

struct ValidatedRecord {
  Source source = Source::BusFleet;
  std::string device_token;
  std::int64_t timestamp = 0;
  std::string hub_id;
  std::optional<std::string> zone_id;
  std::optional<double> lat;  // precise fix, Operator visibility only
  std::optional<double> lon;
  std::optional<std::string> user_token;
  Payload payload;
  std::vector<FieldCategory> dropped;  // consent-denied categories
  bool operator==(const ValidatedRecord&) const = default;
};

enum class Role { Rider, Operator, Analyst };
std::string_view to_string(Role r) noexcept;
std::optional<Role> parse_role(std::string_view text) noexcept;

/// Non-Operator views carry the zone only.
nlohmann::json to_json(const ValidatedRecord& r, Role viewer);

enum class RejectReason { MissingField, TimestampRegression, AllFieldsDenied, Malformed };
std::string_view to_string(RejectReason r) noexcept;

struct Rejection {
  RejectReason reason = RejectReason::MissingField;
  std::string detail;
};

/// Hex HMAC-SHA256 of `value` under `key`.
std::string keyed_token(std::string_view value, std::string_view key);

/// Acquisition layer: validation, consent filtering, tokenization and zone
/// snapping. Tracks per-(source, device) timestamp order.
class Acquirer {
 public:
  Acquirer(std::string key, std::vector<ZoneCentroid> zones);

  std::variant<ValidatedRecord, Rejection> acquire(const TelemetryRecord& record);
  std::optional<std::string> nearest_zone(double lat, double lon) const;

 private:
  std::string key_;
  std::vector<ZoneCentroid> zones_;
  std::map<std::pair<Source, std::string>, std::int64_t> last_seen_;
};

/// Storage layer: bounded append-only log.
class Storage {
 public:
  explicit Storage(std::size_t capacity = 1'000'000) : capacity_(capacity) {}

  /// Throws StorageFull.
  std::uint64_t store(ValidatedRecord record);
  std::size_t size() const;
  std::size_t capacity() const noexcept { return capacity_; }
  /// Copy of the committed prefix [from, size()).
  std::vector<ValidatedRecord> read(std::uint64_t from = 0) const;

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::vector<ValidatedRecord> log_;
};

struct Window {
  std::int64_t start = 0;  // inclusive, epoch seconds
  std::int64_t end = 0;    // exclusive
  bool operator==(const Window&) const = default;
};

struct Aggregates {
  Window window;
  std::uint64_t records = 0;
  std::uint64_t deduplicated = 0;
  std::map<std::string, std::uint64_t> by_source;
  double charger_utilization = 0.0;
  std::map<std::string, double> utilization_by_hub;
  std::map<std::string, std::map<int, double>> occupancy_by_hub_hour;  // mean parking occupancy, UTC hour
  bool operator==(const Aggregates&) const = default;
};

nlohmann::json to_json(const Aggregates& a);

/// Processing layer as a fold: feed records in log order, then read the
/// aggregates for a window. Exact duplicates (token, timestamp, payload) are
/// counted once.
class Aggregator {
 public:
  void add(const ValidatedRecord& record);
  /// Throws EmptyWindow when no record falls in the window.
  Aggregates result(const Window& window) const;

 private:
  std::vector<ValidatedRecord> unique_;
  std::vector<std::int64_t> all_timestamps_;
  std::set<std::string> seen_;
};

Aggregates process(std::span<const ValidatedRecord> records, const Window& window);

enum class IncentiveEvent { HubChargeSession, SyncedTransitTrip };
std::string_view to_string(IncentiveEvent e) noexcept;

struct IncentiveRules {
  int charge_points = 10;
  int synced_bonus = 5;
  int sync_window_minutes = 120;  // inclusive
};

struct IncentiveContext {
  std::string hub_id;
  std::int64_t timestamp = 0;  // epoch seconds
};

struct LedgerEntry {
  std::uint64_t seq = 0;
  std::string user_token;
  IncentiveEvent event = IncentiveEvent::HubChargeSession;
  int points = 0;
  std::int64_t timestamp = 0;
  std::string hub_id;
};

/// Thread-safe points ledger. A transit boarding earns the bonus once per
/// charge session that started at the same hub within the window before it.
class IncentiveLedger {
 public:
  explicit IncentiveLedger(IncentiveRules rules = {}) : rules_(rules) {}

  void enroll(const std::string& user_token);
  void revoke_consent(const std::string& user_token);

  /// Throws NotEnrolled or ConsentRevoked. Returns the appended entries.
  std::vector<LedgerEntry> award_points(const std::string& user_token, IncentiveEvent event,
                                        const IncentiveContext& context);

  int balance(const std::string& user_token) const;
  std::vector<LedgerEntry> log() const;
  const IncentiveRules& rules() const noexcept { return rules_; }

 private:
  struct Charge {
    std::string hub;
    std::int64_t start;
    bool bonus_paid;
  };
  struct Account {
    bool consent = true;
    int balance = 0;
    std::vector<Charge> charges;
  };
  IncentiveRules rules_;
  mutable std::mutex mu_;
  std::map<std::string, Account> accounts_;
  std::vector<LedgerEntry> log_;
};

enum class Granularity { Raw, Zone, Aggregate };
std::string_view to_string(Granularity g) noexcept;

enum class DenyReason { None, NotPermitted, GranularityPolicy, UnknownPrincipal, ConsentRequired };
std::string_view to_string(DenyReason r) noexcept;

struct RecordScope {
  Granularity granularity = Granularity::Aggregate;
  bool own_record = false;     // the principal is the data subject
  bool consent_given = false;  // subject consented to this category
};

struct Decision {
  bool allow = false;
  DenyReason reason = DenyReason::None;
};

struct PolicyRule {
  std::set<FieldCategory> categories;
  Granularity finest = Granularity::Aggregate;  // finest granularity allowed
  bool own_records_only = false;
  bool consent_required = false;
};

struct AuditEntry {
  std::uint64_t seq = 0;
  std::string principal;
  FieldCategory category = FieldCategory::Location;
  Granularity granularity = Granularity::Aggregate;
  Decision decision;
};

/// Deny-by-default access control with an append-only audit log.
class AccessPolicy {
 public:
  AccessPolicy() = default;
  AccessPolicy(AccessPolicy&& other) noexcept : rules_(std::move(other.rules_)), audit_(std::move(other.audit_)) {}

  static AccessPolicy standard();
  static AccessPolicy from_json(const nlohmann::json& j);

  Decision authorize(std::string_view principal, FieldCategory category, const RecordScope& scope);
  std::vector<AuditEntry> audit_log() const;
  std::string audit_jsonl() const;

 private:
  std::map<Role, PolicyRule> rules_;
  mutable std::mutex mu_;
  std::vector<AuditEntry> audit_;
};

struct IngestReport {
  std::uint64_t input = 0;
  std::uint64_t stored = 0;
  std::uint64_t rejected = 0;
};

struct RejectionLogEntry {
  std::uint64_t offset = 0;  // input position
  RejectReason reason = RejectReason::MissingField;
  std::string detail;
};

struct PipelineConfig {
  std::string key;
  std::size_t storage_capacity = 1'000'000;
};

/// Collection -> acquisition -> storage -> processing. Records can be pushed
/// synchronously with ingest() or from many producers with submit() while a
/// consumer thread runs between start() and close().
class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::vector<ZoneCentroid> zones);
  ~Pipeline();
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  IngestReport ingest(std::span<const TelemetryRecord> records);
  /// One JSON record per line; blank lines are skipped, unparsable lines are
  /// rejected as Malformed.
  IngestReport ingest_jsonl(std::string_view text);

  void start();
  void submit(TelemetryRecord record);
  /// Stops accepting, drains the queue and joins the consumer.
  void close();

  IngestReport report() const;
  const Storage& storage() const noexcept { return storage_; }
  std::vector<RejectionLogEntry> rejections() const;
  std::string rejections_csv() const;

  /// Aggregates maintained as records were stored.
  Aggregates live(const Window& window) const;
  /// Aggregates recomputed from the stored log.
  Aggregates replay(const Window& window) const;

 private:
  void accept(const TelemetryRecord& record);
  void reject(RejectReason reason, std::string detail);

  Acquirer acquirer_;
  Storage storage_;
  Aggregator live_;
  mutable std::mutex mu_;  // guards acquirer_, live_, counters, rejections_
  IngestReport report_;
  std::vector<RejectionLogEntry> rejections_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<TelemetryRecord> queue_;
  bool closing_ = false;
  std::thread consumer_;
};

}  // namespace zevsim::hubpipe

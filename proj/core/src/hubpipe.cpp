#include "zevsim/hubpipe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include "zevsim/error.hpp"
#include "zevsim/io.hpp"

namespace zevsim::hubpipe {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kSourceNames{"bus_fleet", "charger_port", "rider_app", "parking_sensor"};
constexpr std::array<std::string_view, 4> kCategoryNames{"location", "occupancy", "energy", "media"};

bool default_consent(FieldCategory c) { return c != FieldCategory::Media; }

std::set<FieldCategory> carried(const TelemetryRecord& r) {
  std::set<FieldCategory> out;
  if (r.lat && r.lon) out.insert(FieldCategory::Location);
  if (r.payload.occupancy || r.payload.occupied) out.insert(FieldCategory::Occupancy);
  if (r.payload.kwh) out.insert(FieldCategory::Energy);
  if (r.payload.image_ref) out.insert(FieldCategory::Media);
  return out;
}

json payload_json(const Payload& p) {
  json j = json::object();
  if (p.occupancy) j["occupancy"] = *p.occupancy;
  if (p.occupied) j["occupied"] = *p.occupied;
  if (p.kwh) j["kwh"] = *p.kwh;
  if (p.image_ref) j["image_ref"] = *p.image_ref;
  return j;
}

std::string dedup_key(const ValidatedRecord& r) {
  return r.device_token + '|' + std::to_string(r.timestamp) + '|' + payload_json(r.payload).dump();
}

bool in_window(std::int64_t ts, const Window& w) { return ts >= w.start && ts < w.end; }

int granularity_rank(Granularity g) { return static_cast<int>(g); }  // Raw finest

}  // namespace

std::string_view to_string(Source s) noexcept { return kSourceNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(FieldCategory c) noexcept { return kCategoryNames[static_cast<std::size_t>(c)]; }

Source parse_source(std::string_view text) {
  for (std::size_t i = 0; i < kSourceNames.size(); ++i)
    if (kSourceNames[i] == text) return static_cast<Source>(i);
  throw Error(Errc::ParseError, "unknown source '" + std::string(text) + "'");
}

FieldCategory parse_field_category(std::string_view text) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i)
    if (kCategoryNames[i] == text) return static_cast<FieldCategory>(i);
  throw Error(Errc::ParseError, "unknown field category '" + std::string(text) + "'");
}

std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::Rider: return "rider";
    case Role::Operator: return "operator";
    case Role::Analyst: return "analyst";
  }
  return "?";
}

std::optional<Role> parse_role(std::string_view text) noexcept {
  for (auto r : {Role::Rider, Role::Operator, Role::Analyst})
    if (to_string(r) == text) return r;
  return std::nullopt;
}

std::string_view to_string(RejectReason r) noexcept {
  switch (r) {
    case RejectReason::MissingField: return "MissingField";
    case RejectReason::TimestampRegression: return "TimestampRegression";
    case RejectReason::AllFieldsDenied: return "AllFieldsDenied";
    case RejectReason::Malformed: return "Malformed";
  }
  return "?";
}

std::string_view to_string(IncentiveEvent e) noexcept {
  return e == IncentiveEvent::HubChargeSession ? "HubChargeSession" : "SyncedTransitTrip";
}

std::string_view to_string(Granularity g) noexcept {
  switch (g) {
    case Granularity::Raw: return "raw";
    case Granularity::Zone: return "zone";
    case Granularity::Aggregate: return "aggregate";
  }
  return "?";
}

std::string_view to_string(DenyReason r) noexcept {
  switch (r) {
    case DenyReason::None: return "None";
    case DenyReason::NotPermitted: return "NotPermitted";
    case DenyReason::GranularityPolicy: return "GranularityPolicy";
    case DenyReason::UnknownPrincipal: return "UnknownPrincipal";
    case DenyReason::ConsentRequired: return "ConsentRequired";
  }
  return "?";
}

TelemetryRecord record_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::ParseError, "record must be a JSON object");
  TelemetryRecord r;
  r.source = parse_source(j.at("source").get<std::string>());
  r.device_id = j.value("device_id", std::string());
  if (j.contains("timestamp") && !j["timestamp"].is_null()) r.timestamp = j["timestamp"].get<std::int64_t>();
  if (j.contains("lat") && !j["lat"].is_null()) r.lat = j["lat"].get<double>();
  if (j.contains("lon") && !j["lon"].is_null()) r.lon = j["lon"].get<double>();
  r.hub_id = j.value("hub_id", std::string());
  if (j.contains("user_id") && !j["user_id"].is_null()) r.user_id = j["user_id"].get<std::string>();
  if (j.contains("payload")) {
    const auto& p = j["payload"];
    if (p.contains("occupancy")) r.payload.occupancy = p["occupancy"].get<int>();
    if (p.contains("occupied")) r.payload.occupied = p["occupied"].get<bool>();
    if (p.contains("kwh")) r.payload.kwh = p["kwh"].get<double>();
    if (p.contains("image_ref")) r.payload.image_ref = p["image_ref"].get<std::string>();
  }
  if (j.contains("consent") && j["consent"].is_object()) {
    ConsentFlags flags;
    for (const auto& [k, v] : j["consent"].items()) flags[parse_field_category(k)] = v.get<bool>();
    r.consent = std::move(flags);
  }
  return r;
}

json to_json(const TelemetryRecord& r) {
  json j = {{"source", to_string(r.source)}, {"device_id", r.device_id}};
  if (r.timestamp) j["timestamp"] = *r.timestamp;
  if (r.lat) j["lat"] = *r.lat;
  if (r.lon) j["lon"] = *r.lon;
  if (!r.hub_id.empty()) j["hub_id"] = r.hub_id;
  if (r.user_id) j["user_id"] = *r.user_id;
  j["payload"] = payload_json(r.payload);
  if (r.consent) {
    json c = json::object();
    for (const auto& [k, v] : *r.consent) c[std::string(to_string(k))] = v;
    j["consent"] = c;
  }
  return j;
}

json to_json(const ValidatedRecord& r, Role viewer) {
  json j = {{"source", to_string(r.source)},
            {"device_token", r.device_token},
            {"timestamp", r.timestamp},
            {"hub_id", r.hub_id},
            {"payload", payload_json(r.payload)}};
  j["zone_id"] = r.zone_id ? json(*r.zone_id) : json(nullptr);
  if (r.user_token) j["user_token"] = *r.user_token;
  if (viewer == Role::Operator && r.lat && r.lon) {
    j["lat"] = *r.lat;
    j["lon"] = *r.lon;
  }
  json dropped = json::array();
  for (auto c : r.dropped) dropped.push_back(to_string(c));
  j["dropped"] = dropped;
  return j;
}

std::string keyed_token(std::string_view value, std::string_view key) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), reinterpret_cast<const unsigned char*>(value.data()),
       value.size(), digest, &len);
  std::string hex;
  hex.reserve(len * 2);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

Acquirer::Acquirer(std::string key, std::vector<ZoneCentroid> zones) : key_(std::move(key)), zones_(std::move(zones)) {
  if (key_.empty()) throw Error(Errc::InvalidArgument, "tokenization key must be configured");
}

std::optional<std::string> Acquirer::nearest_zone(double lat, double lon) const {
  std::optional<std::string> best;
  double best_d = 0.0;
  for (const auto& z : zones_) {
    double dx = (lon - z.lon) * std::cos(z.lat * M_PI / 180.0), dy = lat - z.lat;
    double d = dx * dx + dy * dy;
    if (!best || d < best_d) {
      best = z.id;
      best_d = d;
    }
  }
  return best;
}

std::variant<ValidatedRecord, Rejection> Acquirer::acquire(const TelemetryRecord& r) {
  if (r.device_id.empty()) return Rejection{RejectReason::MissingField, "device_id"};
  if (!r.timestamp) return Rejection{RejectReason::MissingField, "timestamp"};
  if ((r.source == Source::ChargerPort || r.source == Source::ParkingSensor) && r.hub_id.empty())
    return Rejection{RejectReason::MissingField, "hub_id"};
  if (r.source == Source::RiderApp && !r.consent) return Rejection{RejectReason::MissingField, "consent"};
  if (r.lat.has_value() != r.lon.has_value()) return Rejection{RejectReason::MissingField, "lat/lon"};

  auto stream = std::make_pair(r.source, r.device_id);
  if (auto it = last_seen_.find(stream); it != last_seen_.end() && *r.timestamp < it->second)
    return Rejection{RejectReason::TimestampRegression, "timestamp"};

  auto present = carried(r);
  if (present.empty()) return Rejection{RejectReason::MissingField, "payload"};
  auto granted = [&](FieldCategory c) {
    if (!r.consent) return default_consent(c);
    auto it = r.consent->find(c);
    if (it != r.consent->end()) return it->second;
    return r.source == Source::RiderApp ? false : default_consent(c);
  };

  ValidatedRecord v;
  v.source = r.source;
  v.device_token = keyed_token(r.device_id, key_);
  v.timestamp = *r.timestamp;
  v.hub_id = r.hub_id;
  std::size_t kept = 0;
  for (auto c : present) {
    if (!granted(c)) {
      v.dropped.push_back(c);
      continue;
    }
    ++kept;
    switch (c) {
      case FieldCategory::Location:
        v.lat = r.lat;
        v.lon = r.lon;
        v.zone_id = nearest_zone(*r.lat, *r.lon);
        break;
      case FieldCategory::Occupancy:
        v.payload.occupancy = r.payload.occupancy;
        v.payload.occupied = r.payload.occupied;
        break;
      case FieldCategory::Energy: v.payload.kwh = r.payload.kwh; break;
      case FieldCategory::Media: v.payload.image_ref = r.payload.image_ref; break;
    }
  }
  if (kept == 0) return Rejection{RejectReason::AllFieldsDenied, "consent"};
  if (r.user_id) v.user_token = keyed_token("user:" + *r.user_id, key_);
  last_seen_[stream] = *r.timestamp;
  return v;
}

std::uint64_t Storage::store(ValidatedRecord record) {
  std::lock_guard lock(mu_);
  if (log_.size() >= capacity_)
    throw Error(Errc::StorageFull, "log holds " + std::to_string(capacity_) + " records");
  log_.push_back(std::move(record));
  return log_.size() - 1;
}

std::size_t Storage::size() const {
  std::lock_guard lock(mu_);
  return log_.size();
}

std::vector<ValidatedRecord> Storage::read(std::uint64_t from) const {
  std::lock_guard lock(mu_);
  if (from >= log_.size()) return {};
  return {log_.begin() + static_cast<std::ptrdiff_t>(from), log_.end()};
}

json to_json(const Aggregates& a) {
  json occ = json::object();
  for (const auto& [hub, hours] : a.occupancy_by_hub_hour) {
    json h = json::object();
    for (const auto& [hour, mean] : hours) {
      char key[4];
      std::snprintf(key, sizeof key, "%02d", hour);
      h[key] = mean;
    }
    occ[hub] = h;
  }
  return {{"window", {{"start", a.window.start}, {"end", a.window.end}}},
          {"records", a.records},
          {"deduplicated", a.deduplicated},
          {"by_source", a.by_source},
          {"charger_utilization", a.charger_utilization},
          {"utilization_by_hub", a.utilization_by_hub},
          {"occupancy_by_hub_hour", occ}};
}

void Aggregator::add(const ValidatedRecord& record) {
  all_timestamps_.push_back(record.timestamp);
  if (seen_.insert(dedup_key(record)).second) unique_.push_back(record);
}

Aggregates Aggregator::result(const Window& w) const {
  Aggregates a;
  a.window = w;
  a.records = static_cast<std::uint64_t>(
      std::count_if(all_timestamps_.begin(), all_timestamps_.end(), [&](std::int64_t t) { return in_window(t, w); }));
  if (a.records == 0 || w.end <= w.start)
    throw Error(Errc::EmptyWindow, "no stored records in [" + std::to_string(w.start) + ", " + std::to_string(w.end) + ")");

  struct Port {
    std::string hub;
    std::vector<std::pair<std::int64_t, bool>> samples;
  };
  std::map<std::string, Port> ports;
  std::map<std::string, std::map<int, std::pair<double, int>>> occ;
  for (const auto& r : unique_) {
    if (!in_window(r.timestamp, w)) continue;
    ++a.deduplicated;
    ++a.by_source[std::string(to_string(r.source))];
    if (r.source == Source::ChargerPort && r.payload.occupied) {
      auto& p = ports[r.device_token];
      p.hub = r.hub_id;
      p.samples.emplace_back(r.timestamp, *r.payload.occupied);
    }
    if (r.source == Source::ParkingSensor && r.payload.occupancy) {
      int hour = static_cast<int>((r.timestamp / 3600) % 24);
      auto& cell = occ[r.hub_id][hour];
      cell.first += *r.payload.occupancy;
      cell.second += 1;
    }
  }
  const double span_min = static_cast<double>(w.end - w.start) / 60.0;
  std::map<std::string, std::pair<double, double>> hub_minutes;  // occupied, available
  double occupied_total = 0.0, available_total = 0.0;
  for (auto& [token, port] : ports) {
    std::stable_sort(port.samples.begin(), port.samples.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    double occupied = 0.0;
    for (std::size_t i = 0; i < port.samples.size(); ++i) {
      if (!port.samples[i].second) continue;
      std::int64_t until = i + 1 < port.samples.size() ? port.samples[i + 1].first : w.end;
      occupied += static_cast<double>(until - port.samples[i].first) / 60.0;
    }
    hub_minutes[port.hub].first += occupied;
    hub_minutes[port.hub].second += span_min;
    occupied_total += occupied;
    available_total += span_min;
  }
  a.charger_utilization = available_total > 0.0 ? occupied_total / available_total : 0.0;
  for (const auto& [hub, m] : hub_minutes) a.utilization_by_hub[hub] = m.first / m.second;
  for (const auto& [hub, hours] : occ)
    for (const auto& [hour, cell] : hours) a.occupancy_by_hub_hour[hub][hour] = cell.first / cell.second;
  return a;
}

Aggregates process(std::span<const ValidatedRecord> records, const Window& window) {
  Aggregator fold;
  for (const auto& r : records) fold.add(r);
  return fold.result(window);
}

void IncentiveLedger::enroll(const std::string& user) {
  std::lock_guard lock(mu_);
  accounts_[user].consent = true;
}

void IncentiveLedger::revoke_consent(const std::string& user) {
  std::lock_guard lock(mu_);
  auto it = accounts_.find(user);
  if (it == accounts_.end()) throw Error(Errc::NotEnrolled, "user is not enrolled");
  it->second.consent = false;
}

std::vector<LedgerEntry> IncentiveLedger::award_points(const std::string& user, IncentiveEvent event,
                                                       const IncentiveContext& ctx) {
  std::lock_guard lock(mu_);
  auto it = accounts_.find(user);
  if (it == accounts_.end()) throw Error(Errc::NotEnrolled, "user is not enrolled");
  auto& acct = it->second;
  if (!acct.consent) throw Error(Errc::ConsentRevoked, "user revoked consent");

  std::vector<LedgerEntry> delta;
  auto append = [&](int points) {
    LedgerEntry e{log_.size(), user, event, points, ctx.timestamp, ctx.hub_id};
    log_.push_back(e);
    acct.balance += points;
    delta.push_back(std::move(e));
  };
  if (event == IncentiveEvent::HubChargeSession) {
    acct.charges.push_back({ctx.hub_id, ctx.timestamp, false});
    append(rules_.charge_points);
    return delta;
  }
  const std::int64_t window = static_cast<std::int64_t>(rules_.sync_window_minutes) * 60;
  Charge* match = nullptr;
  for (auto& c : acct.charges) {
    auto gap = ctx.timestamp - c.start;
    if (c.bonus_paid || c.hub != ctx.hub_id || gap < 0 || gap > window) continue;
    if (!match || c.start > match->start) match = &c;
  }
  if (match) {
    match->bonus_paid = true;
    append(rules_.synced_bonus);
  }
  return delta;
}

int IncentiveLedger::balance(const std::string& user) const {
  std::lock_guard lock(mu_);
  auto it = accounts_.find(user);
  if (it == accounts_.end()) throw Error(Errc::NotEnrolled, "user is not enrolled");
  return it->second.balance;
}

std::vector<LedgerEntry> IncentiveLedger::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

AccessPolicy AccessPolicy::standard() {
  AccessPolicy p;
  p.rules_[Role::Operator] = {{FieldCategory::Location, FieldCategory::Occupancy, FieldCategory::Energy,
                               FieldCategory::Media},
                              Granularity::Raw, false, false};
  p.rules_[Role::Analyst] = {{FieldCategory::Location, FieldCategory::Occupancy, FieldCategory::Energy},
                             Granularity::Zone, false, false};
  p.rules_[Role::Rider] = {{FieldCategory::Location, FieldCategory::Occupancy, FieldCategory::Energy},
                           Granularity::Raw, true, true};
  return p;
}

AccessPolicy AccessPolicy::from_json(const json& j) {
  AccessPolicy p;
  for (const auto& [name, spec] : j.items()) {
    auto role = parse_role(name);
    if (!role) throw Error(Errc::ParseError, "unknown role '" + name + "' in policy table");
    PolicyRule rule;
    for (const auto& c : spec.value("categories", std::vector<std::string>{}))
      rule.categories.insert(parse_field_category(c));
    std::string finest = spec.value("finest", std::string("aggregate"));
    if (finest == "raw") rule.finest = Granularity::Raw;
    else if (finest == "zone") rule.finest = Granularity::Zone;
    else if (finest == "aggregate") rule.finest = Granularity::Aggregate;
    else throw Error(Errc::ParseError, "unknown granularity '" + finest + "'");
    rule.own_records_only = spec.value("own_records_only", false);
    rule.consent_required = spec.value("consent_required", false);
    p.rules_[*role] = std::move(rule);
  }
  return p;
}

Decision AccessPolicy::authorize(std::string_view principal, FieldCategory category, const RecordScope& scope) {
  Decision d{false, DenyReason::NotPermitted};
  auto role = parse_role(principal);
  if (!role) {
    d.reason = DenyReason::UnknownPrincipal;
  } else if (*role == Role::Analyst && category == FieldCategory::Location && scope.granularity == Granularity::Raw) {
    d.reason = DenyReason::GranularityPolicy;  // holds whatever the table says
  } else if (auto it = rules_.find(*role); it != rules_.end()) {
    const auto& rule = it->second;
    if (!rule.categories.count(category)) d.reason = DenyReason::NotPermitted;
    else if (granularity_rank(scope.granularity) < granularity_rank(rule.finest)) d.reason = DenyReason::GranularityPolicy;
    else if (rule.own_records_only && !scope.own_record) d.reason = DenyReason::NotPermitted;
    else if (rule.consent_required && !scope.consent_given) d.reason = DenyReason::ConsentRequired;
    else d = {true, DenyReason::None};
  }
  std::lock_guard lock(mu_);
  audit_.push_back({audit_.size(), std::string(principal), category, scope.granularity, d});
  return d;
}

std::vector<AuditEntry> AccessPolicy::audit_log() const {
  std::lock_guard lock(mu_);
  return audit_;
}

std::string AccessPolicy::audit_jsonl() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& e : audit_) {
    json j = {{"seq", e.seq},
              {"principal", e.principal},
              {"category", to_string(e.category)},
              {"granularity", to_string(e.granularity)},
              {"decision", e.decision.allow ? "allow" : "deny"},
              {"reason", to_string(e.decision.reason)}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

Pipeline::Pipeline(PipelineConfig config, std::vector<ZoneCentroid> zones)
    : acquirer_(std::move(config.key), std::move(zones)), storage_(config.storage_capacity) {}

Pipeline::~Pipeline() {
  if (consumer_.joinable()) close();
}

void Pipeline::reject(RejectReason reason, std::string detail) {
  rejections_.push_back({report_.input - 1, reason, std::move(detail)});
  ++report_.rejected;
}

void Pipeline::accept(const TelemetryRecord& record) {
  std::lock_guard lock(mu_);
  if (storage_.size() >= storage_.capacity())
    throw Error(Errc::StorageFull, "log holds " + std::to_string(storage_.capacity()) + " records");
  ++report_.input;
  auto result = acquirer_.acquire(record);
  if (auto* r = std::get_if<Rejection>(&result)) {
    reject(r->reason, r->detail);
    return;
  }
  auto& v = std::get<ValidatedRecord>(result);
  live_.add(v);
  storage_.store(std::move(v));
  ++report_.stored;
}

IngestReport Pipeline::ingest(std::span<const TelemetryRecord> records) {
  auto before = report();
  for (const auto& r : records) accept(r);
  auto after = report();
  return {after.input - before.input, after.stored - before.stored, after.rejected - before.rejected};
}

IngestReport Pipeline::ingest_jsonl(std::string_view text) {
  auto before = report();
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = io::trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (line.empty()) continue;
    std::optional<TelemetryRecord> rec;
    std::string why;
    try {
      rec = record_from_json(json::parse(line));
    } catch (const json::exception& e) {
      why = e.what();
    } catch (const Error& e) {
      if (e.code() != Errc::ParseError) throw;
      why = e.what();
    }
    if (rec) {
      accept(*rec);
    } else {
      std::lock_guard lock(mu_);
      ++report_.input;
      reject(RejectReason::Malformed, "unparsable record");
    }
  }
  auto after = report();
  return {after.input - before.input, after.stored - before.stored, after.rejected - before.rejected};
}

void Pipeline::start() {
  std::lock_guard lock(queue_mu_);
  if (consumer_.joinable()) throw Error(Errc::IllegalTransition, "pipeline already started");
  closing_ = false;
  consumer_ = std::thread([this] {
    for (;;) {
      std::unique_lock lk(queue_mu_);
      queue_cv_.wait(lk, [this] { return closing_ || !queue_.empty(); });
      if (queue_.empty()) return;
      auto rec = std::move(queue_.front());
      queue_.pop_front();
      lk.unlock();
      try {
        accept(rec);
      } catch (const Error&) {
        // storage full: record stays unaccounted, as in the synchronous path
      }
    }
  });
}

void Pipeline::submit(TelemetryRecord record) {
  {
    std::lock_guard lock(queue_mu_);
    if (!consumer_.joinable() || closing_) throw Error(Errc::IllegalTransition, "pipeline is not running");
    queue_.push_back(std::move(record));
  }
  queue_cv_.notify_one();
}

void Pipeline::close() {
  {
    std::lock_guard lock(queue_mu_);
    closing_ = true;
  }
  queue_cv_.notify_all();
  if (consumer_.joinable()) consumer_.join();
}

IngestReport Pipeline::report() const {
  std::lock_guard lock(mu_);
  return report_;
}

std::vector<RejectionLogEntry> Pipeline::rejections() const {
  std::lock_guard lock(mu_);
  return rejections_;
}

std::string Pipeline::rejections_csv() const {
  std::lock_guard lock(mu_);
  std::ostringstream out;
  out << "offset,reason\n";
  for (const auto& r : rejections_) out << r.offset << ',' << to_string(r.reason) << '\n';
  return out.str();
}

Aggregates Pipeline::live(const Window& window) const {
  std::lock_guard lock(mu_);
  return live_.result(window);
}

Aggregates Pipeline::replay(const Window& window) const {
  Aggregator fold;
  for (const auto& r : storage_.read()) fold.add(r);
  return fold.result(window);
}

}  // namespace zevsim::hubpipe

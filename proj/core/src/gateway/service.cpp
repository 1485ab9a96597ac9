#include "zevsim/gateway/service.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include <httplib.h>

#include "zevsim/error.hpp"
#include "zevsim/io.hpp"
#include "zevsim/mobsim/hub.hpp"

namespace zevsim::gateway {

using nlohmann::json;
using namespace std::chrono_literals;

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::UnknownRun:
    case Errc::IoError: return 404;
    case Errc::IllegalTransition: return 409;
    default: return 422;
  }
}

HttpResponse error_response(int status, std::string_view code, std::string_view message) {
  return {status, json{{"code", code}, {"message", message}}.dump(), "application/json"};
}

namespace {

HttpResponse ok(const json& body, int status = 200) { return {status, body.dump(), "application/json"}; }

std::vector<std::string> segments(std::string_view path) {
  std::vector<std::string> out;
  for (auto& s : io::split(path, '/'))
    if (!s.empty()) out.push_back(s);
  return out;
}

std::optional<std::string> query(const HttpRequest& r, const std::string& key) {
  auto it = r.query.find(key);
  if (it == r.query.end()) return std::nullopt;
  return it->second;
}

double query_number(const HttpRequest& r, const std::string& key, double fallback) {
  auto v = query(r, key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    double d = std::stod(*v, &used);
    if (used == v->size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(Errc::InvalidArgument, "query parameter '" + key + "' must be a number");
}

json body_json(const HttpRequest& r) {
  if (io::trim(r.body).empty()) return json::object();
  try {
    return json::parse(r.body);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, std::string("request body: ") + e.what());
  }
}

json world_zones_geojson(const mobsim::World& w) {
  json features = json::array();
  for (const auto& z : w.zones) {
    auto g = w.zone_geometry.find(z.id);
    features.push_back({{"type", "Feature"},
                        {"geometry", g != w.zone_geometry.end() ? g->second : json(nullptr)},
                        {"properties",
                         {{"zone_id", z.id},
                          {"population", z.population},
                          {"employment", z.employment},
                          {"centroid_lat", z.lat},
                          {"centroid_lon", z.lon}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

json world_summary(const mobsim::World& w) {
  json hubs = json::array();
  for (const auto& h : w.hubs) {
    json routes = json::array();
    for (auto r : h.routes) routes.push_back(w.routes[r].id);
    hubs.push_back({{"hub_id", h.id},
                    {"zone", w.zones[h.zone].id},
                    {"parking_spaces", h.parking_spaces},
                    {"charger_ports", h.charger_ports},
                    {"routes", routes}});
  }
  json routes = json::array();
  for (const auto& r : w.routes) routes.push_back({{"route_id", r.id}, {"name", r.name}, {"headway_minutes", r.headway}});
  return {{"name", w.name},
          {"zones", w.zones.size()},
          {"edges", w.edges.size()},
          {"agents", w.config.n_agents},
          {"default_seed", w.config.default_seed},
          {"hubs", hubs},
          {"routes", routes},
          {"default_levers", mobsim::to_json(mobsim::default_levers(w.config))},
          {"reference_daily_vmt", w.config.reference_daily_vmt ? json(*w.config.reference_daily_vmt) : json(nullptr)}};
}

RunSpec run_spec_from_json(const json& j, Catalog& catalog, const ServiceConfig& cfg) {
  if (!j.is_object()) throw Error(Errc::ParseError, "run request must be a JSON object");
  RunSpec spec;
  try {
    spec.world = j.value("world", cfg.world);
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.cadence_ticks = j.value("cadence_ticks", cfg.cadence_ticks);
    spec.horizon_ticks = j.value("horizon_ticks", mobsim::kMinutesPerDay);
    spec.tick_interval = std::chrono::microseconds(static_cast<long long>(j.value("tick_interval_ms", 0.0) * 1000.0));
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("run request: ") + e.what());
  }
  auto world = catalog.world(spec.world);
  spec.levers = j.contains("preset") ? catalog.preset(spec.world, j["preset"].get<std::string>()).levers
                                     : mobsim::default_levers(world->config);
  if (j.contains("levers")) spec.levers = mobsim::levers_from_json(j["levers"], spec.levers);
  return spec;
}

}  // namespace

Api::Api(ServiceConfig config)
    : config_(std::move(config)),
      catalog_(std::make_shared<Catalog>(config_.data_dir)),
      runs_(std::make_unique<RunManager>(catalog_, config_)) {}

HttpResponse Api::handle(const HttpRequest& request) {
  std::optional<std::string> key;
  if (request.method == "POST" || request.method == "PATCH") {
    for (const char* h : {"idempotency-key", "x-request-id"})
      if (auto it = request.headers.find(h); it != request.headers.end() && !it->second.empty()) key = it->second;
  }
  const std::string signature = request.method + ' ' + request.path + '\n' + request.body;
  if (key) {
    std::lock_guard lock(idem_mu_);
    if (auto it = idempotent_.find(*key); it != idempotent_.end()) {
      if (it->second.first != signature)
        return error_response(422, "IdempotencyKeyReused", "request id was used for a different request");
      return it->second.second;
    }
  }
  HttpResponse response;
  try {
    response = route(request);
  } catch (const Error& e) {
    response = error_response(http_status(e.code()), to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    response = error_response(422, "ParseError", e.what());
  } catch (const std::exception& e) {
    response = error_response(500, "Internal", e.what());
  }
  if (key && response.status < 500) {
    std::lock_guard lock(idem_mu_);
    auto [it, inserted] = idempotent_.emplace(*key, std::make_pair(signature, response));
    if (!inserted) return it->second.second;  // a concurrent retry won
  }
  return response;
}

HttpResponse Api::route(const HttpRequest& req) {
  auto seg = segments(req.path);
  if (seg.empty() || seg[0] != "v1") return error_response(404, "NotFound", "unknown path " + req.path);
  seg.erase(seg.begin());
  const auto& m = req.method;
  auto is = [&](std::initializer_list<std::string_view> parts) {
    if (parts.size() != seg.size()) return false;
    std::size_t i = 0;
    for (auto p : parts) {
      if (p != "*" && p != seg[i]) return false;
      ++i;
    }
    return true;
  };
  auto method_not_allowed = [&] { return error_response(405, "MethodNotAllowed", m + " not allowed on " + req.path); };

  if (is({"health"})) return ok({{"status", "ok"}});

  if (is({"levers", "bounds"})) {
    if (m != "GET") return method_not_allowed();
    return ok(mobsim::to_json(config_.lever_bounds));
  }

  if (is({"baseline"}) || is({"baseline", "map"})) {
    if (m != "GET") return method_not_allowed();
    auto dataset = catalog_->baseline(query(req, "dataset").value_or(config_.baseline));
    if (seg.size() == 1) return ok(baseline_summary(*dataset));
    return ok(to_geojson(emissions_map(build_baseline(*dataset)), dataset->zone_geometry));
  }

  if (is({"scenarios", "evaluate"})) {
    if (m != "POST") return method_not_allowed();
    auto body = body_json(req);
    auto dataset = catalog_->baseline(body.value("baseline", config_.baseline));
    auto goals = body.contains("goals") ? goals_from_json(body["goals"]) : catalog_->goals();
    auto plan = body.contains("offset_plan") ? offset_plan_from_json(body["offset_plan"]) : catalog_->offset_plan();
    auto spec_of = [&](const json& s) {
      return s.is_string() ? catalog_->scenario(s.get<std::string>()) : scenario_from_json(s);
    };
    if (body.contains("scenarios")) {
      if (!body["scenarios"].is_array() || body["scenarios"].empty())
        throw Error(Errc::InvalidArgument, "scenarios must be a non-empty array");
      json out = json::array();
      for (const auto& s : body["scenarios"]) out.push_back(evaluate_scenario(*dataset, spec_of(s), goals, plan));
      return ok({{"baseline", dataset->name}, {"results", out}});
    }
    if (!body.contains("scenario")) throw Error(Errc::InvalidArgument, "request needs 'scenario' or 'scenarios'");
    return ok(evaluate_scenario(*dataset, spec_of(body["scenario"]), goals, plan));
  }

  if (is({"equity", "tracts"})) {
    if (m != "GET") return method_not_allowed();
    auto tracts = catalog_->tracts(query(req, "tracts").value_or("houston-tracts"));
    if (query(req, "format").value_or("json") == "geojson")
      return ok(to_geojson(compute_equity_index(tracts), catalog_->tract_geometry()));
    EquityOptions opt;
    opt.new_ev_price = query_number(req, "new_price", opt.new_ev_price);
    opt.used_ev_price = query_number(req, "used_price", opt.used_ev_price);
    opt.used_incentive_usd = query_number(req, "incentive", opt.used_incentive_usd);
    if (query(req, "evs") && query(req, "chargers"))
      opt.charger_counts = std::pair{query_number(req, "evs", 0), query_number(req, "chargers", 0)};
    return ok(equity_summary(tracts, opt));
  }

  if (is({"hubs", "matrix"})) {
    if (m != "GET") return method_not_allowed();
    return {200, mobsim::IntermodalMatrix::standard().to_csv(), "text/csv"};
  }

  if (is({"worlds", "*"}) || is({"worlds", "*", "zones"})) {
    if (m != "GET") return method_not_allowed();
    auto w = catalog_->world(seg[1]);
    return ok(seg.size() == 2 ? world_summary(*w) : world_zones_geojson(*w));
  }

  if (is({"runs"})) {
    if (m == "GET") {
      json out = json::array();
      for (const auto& r : runs_->list()) out.push_back(to_json(r));
      return ok({{"runs", out}});
    }
    if (m != "POST") return method_not_allowed();
    auto body = body_json(req);
    auto info = runs_->create(run_spec_from_json(body, *catalog_, config_));
    if (body.value("start", false)) info = runs_->start(info.id);
    return ok(to_json(info), 201);
  }

  if (seg.size() >= 2 && seg[0] == "runs") {
    const auto& id = seg[1];
    if (seg.size() == 2) {
      if (m != "GET") return method_not_allowed();
      return ok(to_json(runs_->info(id)));
    }
    const auto& action = seg[2];
    if (seg.size() == 3 && (action == "start" || action == "pause")) {
      if (m != "POST") return method_not_allowed();
      return ok(to_json(action == "start" ? runs_->start(id) : runs_->pause(id)));
    }
    if (seg.size() == 3 && action == "levers") {
      if (m == "GET") {
        auto info = runs_->info(id);
        return ok({{"run_id", id}, {"levers", mobsim::to_json(info.lever_history.back().levers)},
                   {"snapshot_id", info.lever_history.back().snapshot_id}, {"bounds", mobsim::to_json(config_.lever_bounds)}});
      }
      if (m != "PATCH") return method_not_allowed();
      auto ack = runs_->apply_levers(id, body_json(req));
      return ok({{"run_id", id}, {"snapshot_id", ack.snapshot_id}, {"levers", mobsim::to_json(ack.levers)},
                 {"changed", ack.changed}});
    }
    if (seg.size() == 3 && action == "snapshots") {
      if (m != "GET") return method_not_allowed();
      int since = static_cast<int>(query_number(req, "since", -1));
      auto wait = std::chrono::milliseconds(static_cast<long long>(std::clamp(query_number(req, "wait_ms", 0), 0.0, 30000.0)));
      auto batch = runs_->snapshots_after_tick(id, since, wait);
      json snaps = json::array();
      for (const auto& s : batch.snapshots) snaps.push_back(to_json(*s));
      json out = {{"run_id", id}, {"state", to_string(batch.state)}, {"ended", batch.ended}, {"snapshots", snaps}};
      if (!batch.error.empty()) out["error"] = batch.error;
      return ok(out);
    }
    if (seg.size() == 3 && action == "result") {
      if (m != "GET") return method_not_allowed();
      auto result = runs_->result(id);
      json out = mobsim::to_json(result);
      out["hash"] = mobsim::result_hash(result);
      return ok(out);
    }
  }
  return error_response(404, "NotFound", "unknown path " + req.path);
}

void stream_snapshots(RunManager& runs, const std::string& id, std::optional<int> since,
                      const std::function<bool(const std::string&)>& sink, const std::function<bool()>& cancelled,
                      std::chrono::milliseconds poll) {
  std::uint64_t next;
  if (since) {
    next = runs.seq_after_tick(id, *since);
  } else {
    auto latest = runs.latest_seq(id);
    next = latest ? *latest : 0;
  }
  for (;;) {
    if (cancelled && cancelled()) return;
    auto batch = runs.snapshots_from(id, next, poll);
    for (const auto& s : batch.snapshots) {
      if (!sink(to_json(*s).dump() + "\n")) return;
      ++next;
      if (s->final) return;
    }
    if (batch.ended && batch.snapshots.empty()) {
      if (batch.state == RunState::Failed) {
        json frame = {{"type", "error"}, {"run_id", id}, {"code", "RunFailed"}, {"message", batch.error}};
        sink(frame.dump() + "\n");
      }
      return;
    }
  }
}

struct HttpServer::Impl {
  Api& api;
  httplib::Server server;
  std::thread thread;
  std::atomic<bool> stopping{false};

  explicit Impl(Api& a) : api(a) {
    auto adapt = [this](const httplib::Request& req, httplib::Response& res) {
      HttpRequest r;
      r.method = req.method;
      r.path = req.path;
      r.body = req.body;
      for (const auto& [k, v] : req.params) r.query[k] = v;
      for (const auto& [k, v] : req.headers) {
        std::string lower = k;
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
        r.headers[lower] = v;
      }
      if (is_stream(req)) return stream(req, res);
      auto out = api.handle(r);
      res.status = out.status;
      res.set_content(out.body, out.content_type);
    };
    const char* pattern = R"(/v1(/.*)?)";
    server.Get(pattern, adapt);
    server.Post(pattern, adapt);
    server.Patch(pattern, adapt);
    server.Put(pattern, adapt);
    server.Delete(pattern, adapt);
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      auto e = error_response(res.status, res.status == 404 ? "NotFound" : "HttpError", "unhandled " + req.path);
      res.set_content(e.body, e.content_type);
    });
  }

  static bool is_stream(const httplib::Request& req) {
    if (req.method != "GET" || !req.path.ends_with("/snapshots")) return false;
    if (req.has_param("stream") && req.get_param_value("stream") != "0") return true;
    return req.get_header_value("Accept").find("application/x-ndjson") != std::string::npos;
  }

  void stream(const httplib::Request& req, httplib::Response& res) {
    auto seg = segments(req.path);
    const std::string id = seg.size() == 4 ? seg[2] : "";
    std::optional<int> since;
    try {
      api.runs().info(id);
      if (req.has_param("since")) since = std::stoi(req.get_param_value("since"));
    } catch (const Error& e) {
      auto out = error_response(http_status(e.code()), to_string(e.code()), e.what());
      res.status = out.status;
      res.set_content(out.body, out.content_type);
      return;
    } catch (const std::exception&) {
      auto out = error_response(422, "InvalidArgument", "since must be an integer tick");
      res.status = out.status;
      res.set_content(out.body, out.content_type);
      return;
    }
    res.set_chunked_content_provider("application/x-ndjson", [this, id, since](std::size_t, httplib::DataSink& sink) {
      stream_snapshots(
          api.runs(), id, since,
          [&](const std::string& frame) { return sink.is_writable() && sink.write(frame.data(), frame.size()); },
          [this] { return stopping.load(); });
      sink.done();
      return true;
    });
  }
};

HttpServer::HttpServer(Api& api) : impl_(std::make_unique<Impl>(api)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::IoError, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  impl_->stopping = true;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace zevsim::gateway

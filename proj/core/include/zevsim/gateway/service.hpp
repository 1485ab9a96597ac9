#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "zevsim/error.hpp"
#include "zevsim/gateway/catalog.hpp"
#include "zevsim/gateway/runs.hpp"

namespace zevsim::gateway {

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Status for a domain error code.
int http_status(Errc code) noexcept;
HttpResponse error_response(int status, std::string_view code, std::string_view message);

/// The /v1 JSON API as a transport-free dispatcher. Mutating requests that
/// carry an Idempotency-Key header are answered once and replayed on retry.
class Api {
 public:
  explicit Api(ServiceConfig config);

  HttpResponse handle(const HttpRequest& request);

  RunManager& runs() noexcept { return *runs_; }
  Catalog& catalog() noexcept { return *catalog_; }
  const ServiceConfig& config() const noexcept { return config_; }

 private:
  HttpResponse route(const HttpRequest& request);

  ServiceConfig config_;
  std::shared_ptr<Catalog> catalog_;
  std::unique_ptr<RunManager> runs_;
  std::mutex idem_mu_;
  std::map<std::string, std::pair<std::string, HttpResponse>> idempotent_;
};

/// Writes a run's snapshots as NDJSON frames until the final snapshot, an
/// error frame for a failed run, or until `sink` returns false. Without
/// `since` the first frame is the latest published snapshot (catch-up);
/// with it, every snapshot whose tick is greater than `since`.
void stream_snapshots(RunManager& runs, const std::string& id, std::optional<int> since,
                      const std::function<bool(const std::string&)>& sink,
                      const std::function<bool()>& cancelled = {},
                      std::chrono::milliseconds poll = std::chrono::milliseconds{250});

/// cpp-httplib front end for an Api.
class HttpServer {
 public:
  explicit HttpServer(Api& api);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port; throws IoError.
  int bind(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void serve();
  /// Serves on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace zevsim::gateway

// Host-side HTTP facade over the event store and sync host.
//
//   POST /api/devices/{id}/sync     body: Hello line, then zero or more SyncBatch lines
//   GET  /api/presses               ?from&to&device_id
//   GET  /api/observations          ?from&to&device_id
//   GET  /api/reports/hourly        ?from&to&format=json|csv
//   GET  /api/reports/weekday       ?from&to&format=json|csv
//   GET  /api/reports/daily         ?from&to&format=json|csv
//   GET  /api/timeline              ?from&to
//   GET  /api/annotations           ?from&to&kind
//   POST /api/annotations           body: one annotation object
//
// Ranges are half-open epoch-ms. Every JSON response carries schema_version.

#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "selftrack/core.hpp"
#include "selftrack/store.hpp"
#include "selftrack/sync.hpp"

namespace selftrack {

inline constexpr int kSchemaVersion = 1;

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

class Service {
 public:
  using Clock = std::function<Millis()>;

  /// `clock` supplies host wall time for anchors and receipts; defaults to
  /// the system clock.
  Service(EventStore& store, DatasetConfig config, Clock clock = {});

  /// Thread-safe.
  HttpResponse handle(const HttpRequest& request);

 private:
  HttpResponse sync(const std::string& device_id, const HttpRequest& request);
  HttpResponse presses(const HttpRequest& request);
  HttpResponse observations(const HttpRequest& request);
  HttpResponse report(const std::string& which, const HttpRequest& request);
  HttpResponse timeline(const HttpRequest& request);
  HttpResponse list_annotations(const HttpRequest& request);
  HttpResponse post_annotation(const HttpRequest& request);

  EventStore& store_;
  SyncHost host_;
  DatasetConfig config_;
  Clock clock_;
  std::mutex annotation_mutex_;
};

/// Port from the flag, else the OBS_PORT environment variable, else
/// `fallback`.
int resolve_port(std::optional<int> flag, int fallback = 8080);

/// Blocks serving `service` over HTTP/1.1 until the process is stopped.
/// Returns false if the socket cannot be bound.
bool serve(Service& service, const std::string& host, int port);

}  // namespace selftrack

#include "selftrack/service.hpp"

#include <chrono>
#include <cstdlib>
#include <sstream>
#include <variant>

#include "json.hpp"
#include "selftrack/analytics.hpp"
#include "selftrack/decoder.hpp"
#include "selftrack/pipeline.hpp"

namespace selftrack {

namespace {

using ojson = nlohmann::ordered_json;

class BadRequest : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

ojson envelope() {
  ojson j;
  j["schema_version"] = kSchemaVersion;
  return j;
}

HttpResponse json_response(int status, const ojson& j) {
  return HttpResponse{status, "application/json", j.dump() + "\n"};
}

HttpResponse error_response(int status, const std::string& message) {
  auto j = envelope();
  j["error"] = message;
  return json_response(status, j);
}

HttpResponse csv_response(const std::string& body) { return HttpResponse{200, "text/csv", body}; }

std::optional<Millis> int_param(const HttpRequest& r, const std::string& name) {
  auto it = r.query.find(name);
  if (it == r.query.end()) return std::nullopt;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(name);
    return v;
  } catch (const std::logic_error&) {
    throw BadRequest("query parameter '" + name + "' must be an integer");
  }
}

TimeRange range_of(const HttpRequest& r) {
  TimeRange range;
  if (auto v = int_param(r, "from")) range.from = *v;
  if (auto v = int_param(r, "to")) range.to = *v;
  return range;
}

std::optional<std::string> str_param(const HttpRequest& r, const std::string& name) {
  auto it = r.query.find(name);
  if (it == r.query.end()) return std::nullopt;
  return it->second;
}

bool wants_csv(const HttpRequest& r) {
  auto f = str_param(r, "format");
  if (!f || *f == "json") return false;
  if (*f == "csv") return true;
  throw BadRequest("format must be json or csv");
}

ojson press_json(const RawPress& p) {
  ojson j;
  j["device_id"] = p.device_id;
  j["seq"] = p.seq;
  j["boot_id"] = p.boot_id;
  j["t_utc_ms"] = p.t_utc_ms;
  j["quality"] = std::string(to_string(p.quality));
  return j;
}

ojson observation_json(const Observation& o, const DatasetConfig& config) {
  ojson j;
  j["t_utc_ms"] = o.t_utc_ms;
  j["local_date"] = local_date_string(o.t_utc_ms, config);
  j["local_time"] = local_time_string(o.t_utc_ms, config);
  j["press_count"] = o.press_count;
  j["irregular"] = o.irregular;
  j["source_seqs"] = o.source_seqs;
  return j;
}

ojson band_json(const Band& b) {
  ojson j;
  j["kind"] = std::string(to_string(b.kind));
  j["start_utc_ms"] = b.start_utc_ms;
  j["end_utc_ms"] = b.end_utc_ms;
  j["first_day"] = b.first_day;
  j["last_day"] = b.last_day;
  j["label"] = b.label ? ojson(*b.label) : ojson(nullptr);
  return j;
}

ojson daily_json(const DailySeries& s) {
  ojson days = ojson::array();
  for (const auto& d : s.days) {
    ojson j;
    j["day_index"] = d.day_index;
    j["local_date"] = format_date(d.local_date);
    j["weekday"] = std::string(to_string(d.weekday));
    j["count"] = d.count ? ojson(*d.count) : ojson(nullptr);
    j["excluded"] = d.excluded;
    days.push_back(std::move(j));
  }
  ojson bands = ojson::array();
  for (const auto& b : s.bands) bands.push_back(band_json(b));
  ojson out;
  out["days"] = std::move(days);
  out["bands"] = std::move(bands);
  return out;
}

Millis system_now() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

}  // namespace

Service::Service(EventStore& store, DatasetConfig config, Clock clock)
    : store_(store), host_(store), config_(config), clock_(clock ? std::move(clock) : system_now) {
  config_.validate();
}

HttpResponse Service::handle(const HttpRequest& request) {
  try {
    const auto parts = split_path(request.path);
    const bool get = request.method == "GET";
    const bool post = request.method == "POST";
    if (parts.size() < 2 || parts[0] != "api") return error_response(404, "no such endpoint");

    if (parts.size() == 4 && parts[1] == "devices" && parts[3] == "sync") {
      if (!post) return error_response(405, "method not allowed");
      return sync(parts[2], request);
    }
    if (parts.size() == 2 && parts[1] == "annotations") {
      if (post) return post_annotation(request);
      if (get) return list_annotations(request);
      return error_response(405, "method not allowed");
    }
    if (!get) return error_response(405, "method not allowed");
    if (parts.size() == 2 && parts[1] == "presses") return presses(request);
    if (parts.size() == 2 && parts[1] == "observations") return observations(request);
    if (parts.size() == 2 && parts[1] == "timeline") return timeline(request);
    if (parts.size() == 3 && parts[1] == "reports") return report(parts[2], request);
    return error_response(404, "no such endpoint");
  } catch (const BadRequest& e) {
    return error_response(400, e.what());
  } catch (const NotFound& e) {
    return error_response(404, e.what());
  } catch (const ParseError& e) {
    return error_response(400, e.what());
  } catch (const MalformedBatch& e) {
    return error_response(400, e.what());
  } catch (const InvalidRecord& e) {
    return error_response(400, e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

HttpResponse Service::sync(const std::string& device_id, const HttpRequest& request) {
  const auto messages = decode_messages(request.body);
  if (messages.empty() || !std::holds_alternative<Hello>(messages.front()))
    throw BadRequest("sync body must start with a Hello line");
  const auto& hello = std::get<Hello>(messages.front());
  if (hello.device_id != device_id) throw BadRequest("hello device_id does not match the path");

  const Millis now = clock_();
  SyncAck ack = host_.on_hello(hello, now);
  std::size_t fresh = 0;
  ojson gaps = ojson::array();
  for (std::size_t i = 1; i < messages.size(); ++i) {
    const auto* batch = std::get_if<SyncBatch>(&messages[i]);
    if (!batch) throw BadRequest("only SyncBatch lines may follow the Hello");
    if (batch->device_id != device_id) throw BadRequest("batch device_id does not match the path");
    const auto result = host_.ingest(*batch, now);
    fresh += result.new_presses.size();
    for (const auto& g : result.gaps) {
      gaps.push_back({{"first_seq", g.first_seq}, {"last_seq", g.last_seq}});
    }
    ack = result.ack;
  }
  auto j = envelope();
  j["acked_through_seq"] = ack.acked_through_seq;
  j["new_presses"] = fresh;
  j["overflow_gaps"] = std::move(gaps);
  return json_response(200, j);
}

HttpResponse Service::presses(const HttpRequest& request) {
  const auto device = str_param(request, "device_id");
  if (device && !store_.has_device(*device)) throw NotFound("unknown device '" + *device + "'");
  auto j = envelope();
  j["presses"] = ojson::array();
  for (const auto& p : store_.presses(range_of(request), device)) j["presses"].push_back(press_json(p));
  return json_response(200, j);
}

HttpResponse Service::observations(const HttpRequest& request) {
  const auto device = str_param(request, "device_id");
  if (device && !store_.has_device(*device)) throw NotFound("unknown device '" + *device + "'");
  const auto range = range_of(request);
  const auto decoded = decode(store_.presses({}, device), config_.burst_gap_ms);
  auto j = envelope();
  j["observations"] = ojson::array();
  for (const auto& o : decoded.observations) {
    if (range.contains(o.t_utc_ms)) j["observations"].push_back(observation_json(o, config_));
  }
  j["false_positives"] = decoded.false_positives.size();
  return json_response(200, j);
}

HttpResponse Service::report(const std::string& which, const HttpRequest& request) {
  const auto range = range_of(request);
  const bool csv = wants_csv(request);
  std::vector<Observation> obs;
  for (auto& o : decode_store(store_, config_)) {
    if (range.contains(o.t_utc_ms)) obs.push_back(std::move(o));
  }
  const auto annotations = plain_annotations(store_.annotations());
  std::ostringstream out;
  auto j = envelope();
  if (which == "hourly") {
    const auto h = hourly(obs, config_);
    if (csv) {
      write_hourly_csv(out, h);
      return csv_response(out.str());
    }
    j["total"] = h.total();
    j["rows"] = ojson::array();
    for (int i = 0; i < 24; ++i) {
      j["rows"].push_back({{"hour", i}, {"count", h.counts[i]}, {"percentage", h.percentage(i)}});
    }
  } else if (which == "weekday") {
    const auto s = weekday_summary(obs, annotations, config_);
    if (csv) {
      write_weekday_csv(out, s);
      return csv_response(out.str());
    }
    j["rows"] = ojson::array();
    for (const auto& row : s.rows) {
      ojson r;
      r["weekday"] = std::string(to_string(row.weekday));
      r["sample"] = row.sample;
      if (row.stats) {
        const auto& b = *row.stats;
        r["min"] = b.min;
        r["q1"] = b.q1;
        r["median"] = b.median;
        r["q3"] = b.q3;
        r["max"] = b.max;
        r["whisker_low"] = b.whisker_low;
        r["whisker_high"] = b.whisker_high;
        r["outliers"] = b.outliers;
      }
      j["rows"].push_back(std::move(r));
    }
  } else if (which == "daily") {
    const auto s = daily_series(obs, annotations, config_);
    if (csv) {
      write_daily_csv(out, s);
      return csv_response(out.str());
    }
    j.update(daily_json(s));
  } else {
    return error_response(404, "no such report");
  }
  return json_response(200, j);
}

HttpResponse Service::timeline(const HttpRequest& request) {
  const auto range = range_of(request);
  std::vector<Observation> obs;
  for (auto& o : decode_store(store_, config_)) {
    if (range.contains(o.t_utc_ms)) obs.push_back(std::move(o));
  }
  const auto annotations = plain_annotations(store_.annotations());
  auto j = envelope();
  j["config"] = ojson::parse(config_to_json(config_));
  j["observations"] = ojson::array();
  for (const auto& o : obs) j["observations"].push_back(observation_json(o, config_));
  j.update(daily_json(daily_series(obs, annotations, config_)));
  return json_response(200, j);
}

HttpResponse Service::list_annotations(const HttpRequest& request) {
  std::optional<AnnotationKind> kind;
  if (auto k = str_param(request, "kind")) kind = parse_annotation_kind(*k);
  auto j = envelope();
  j["annotations"] = ojson::array();
  for (const auto& s : store_.annotations(range_of(request), kind)) {
    auto a = ojson::parse(annotation_to_json(s.annotation));
    a["id"] = s.id;
    j["annotations"].push_back(std::move(a));
  }
  return json_response(200, j);
}

HttpResponse Service::post_annotation(const HttpRequest& request) {
  const auto a = annotation_from_json(request.body);
  validate_annotation(a);
  std::lock_guard lock(annotation_mutex_);
  if (a.kind == AnnotationKind::gap) {
    const TimeRange span{a.start_utc_ms, a.end_utc_ms == a.start_utc_ms ? a.end_utc_ms + 1
                                                                        : a.end_utc_ms};
    if (!store_.annotations(span, AnnotationKind::gap).empty())
      return error_response(409, "gap annotation overlaps an existing gap");
  }
  auto j = envelope();
  j["id"] = store_.append_annotation(a);
  return json_response(201, j);
}

int resolve_port(std::optional<int> flag, int fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("OBS_PORT")) {
    try {
      return std::stoi(env);
    } catch (const std::logic_error&) {
      throw Error(std::string("OBS_PORT is not a number: ") + env);
    }
  }
  return fallback;
}

}  // namespace selftrack

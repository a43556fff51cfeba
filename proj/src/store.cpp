#include "selftrack/store.hpp"

#include <algorithm>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace selftrack {

namespace {

using ojson = nlohmann::ordered_json;

bool valid_device_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '-' || c == '_' || c == '.' || c == ':';
  });
}

void validate_press(const RawPress& p) {
  if (!valid_device_id(p.device_id))
    throw InvalidRecord("invalid device id '" + p.device_id + "'");
  if (p.uptime_ms < 0) throw InvalidRecord("negative uptime");
}

ojson press_fields(const RawPress& p) {
  ojson j;
  j["device_id"] = p.device_id;
  j["seq"] = p.seq;
  j["boot_id"] = p.boot_id;
  j["t_utc_ms"] = p.t_utc_ms;
  j["quality"] = std::string(to_string(p.quality));
  return j;
}

ojson annotation_fields(const Annotation& a) {
  ojson j;
  j["kind"] = std::string(to_string(a.kind));
  j["start_utc_ms"] = a.start_utc_ms;
  j["end_utc_ms"] = a.end_utc_ms;
  if (a.label) j["label"] = *a.label;
  if (a.location) j["location"] = {{"lat", a.location->lat}, {"lon", a.location->lon}};
  return j;
}

Annotation annotation_from(const ojson& j) {
  if (!j.is_object()) throw ParseError("annotation must be a JSON object");
  try {
    Annotation a;
    a.kind = parse_annotation_kind(j.at("kind").get<std::string>());
    a.start_utc_ms = j.at("start_utc_ms").get<Millis>();
    a.end_utc_ms = j.at("end_utc_ms").get<Millis>();
    if (j.contains("label") && !j["label"].is_null()) a.label = j["label"].get<std::string>();
    if (j.contains("location") && !j["location"].is_null()) {
      const auto& loc = j["location"];
      a.location = Location{loc.at("lat").get<double>(), loc.at("lon").get<double>()};
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed annotation: ") + e.what());
  }
}

RawPress press_from(const ojson& j) {
  try {
    RawPress p;
    p.device_id = j.at("device_id").get<std::string>();
    p.seq = j.at("seq").get<std::uint32_t>();
    p.boot_id = j.at("boot_id").get<std::uint64_t>();
    p.uptime_ms = j.value("uptime_ms", Millis{0});
    p.t_utc_ms = j.at("t_utc_ms").get<Millis>();
    p.quality = parse_quality(j.at("quality").get<std::string>());
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed press: ") + e.what());
  }
}

std::vector<const RawPress*> export_order(std::span<const RawPress> presses) {
  std::vector<const RawPress*> order;
  order.reserve(presses.size());
  for (const auto& p : presses) order.push_back(&p);
  std::sort(order.begin(), order.end(), [](const RawPress* a, const RawPress* b) {
    return std::tie(a->device_id, a->seq) < std::tie(b->device_id, b->seq);
  });
  return order;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename Int>
Int parse_int(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    if constexpr (std::is_unsigned_v<Int>) {
      if (v < 0) throw std::out_of_range(s);
    }
    return static_cast<Int>(v);
  } catch (const std::logic_error&) {
    throw ParseError(std::string("bad ") + what + " '" + s + "'");
  }
}

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// EventStore

EventStore::EventStore() = default;

EventStore::EventStore(const std::filesystem::path& path) {
  if (std::filesystem::exists(path)) {
    std::string content;
    {
      std::ifstream in(path, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      content = ss.str();
    }
    // A torn final write leaves a line without its newline; drop it.
    const auto last_nl = content.find_last_of('\n');
    const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
    if (keep != content.size()) {
      content.resize(keep);
      std::filesystem::resize_file(path, keep);
    }
    std::istringstream in(content);
    replay(in);
  }
  log_.emplace(path, std::ios::binary | std::ios::app);
  if (!*log_) throw Error("cannot open store log " + path.string());
}

void EventStore::replay(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw ParseError("store log line " + std::to_string(line_no) + " is not JSON");
    }
    const auto type = j.value("type", std::string{});
    const RecordId id = j.value("id", RecordId{0});
    if (type == "press") {
      auto p = press_from(j);
      presses_.emplace(std::pair{p.device_id, p.seq}, std::pair{id, std::move(p)});
    } else if (type == "annotation") {
      annotations_.push_back({id, annotation_from(j.at("annotation"))});
    } else if (type == "overflow_gap") {
      gaps_.push_back({j.at("device_id").get<std::string>(), j.at("first_seq").get<std::uint32_t>(),
                       j.at("last_seq").get<std::uint32_t>(), j.at("detected_utc_ms").get<Millis>()});
    } else {
      throw ParseError("store log line " + std::to_string(line_no) + " has unknown type");
    }
    next_id_ = std::max(next_id_, id + 1);
  }
}

void EventStore::write_line(const std::string& line) {
  if (!log_) return;
  *log_ << line << '\n';
}

std::vector<RecordId> EventStore::append_presses(std::span<const RawPress> presses) {
  for (const auto& p : presses) validate_press(p);
  std::unique_lock lock(mutex_);
  std::vector<RecordId> ids;
  ids.reserve(presses.size());
  for (const auto& p : presses) {
    auto key = std::pair{p.device_id, p.seq};
    if (auto it = presses_.find(key); it != presses_.end()) {
      ids.push_back(it->second.first);
      continue;
    }
    const RecordId id = next_id_++;
    ojson j;
    j["type"] = "press";
    j["id"] = id;
    j["device_id"] = p.device_id;
    j["seq"] = p.seq;
    j["boot_id"] = p.boot_id;
    j["uptime_ms"] = p.uptime_ms;
    j["t_utc_ms"] = p.t_utc_ms;
    j["quality"] = std::string(to_string(p.quality));
    write_line(j.dump());
    presses_.emplace(std::move(key), std::pair{id, p});
    ids.push_back(id);
  }
  if (log_) log_->flush();
  return ids;
}

RecordId EventStore::append_annotation(const Annotation& a) {
  validate_annotation(a);
  std::unique_lock lock(mutex_);
  const RecordId id = next_id_++;
  ojson j;
  j["type"] = "annotation";
  j["id"] = id;
  j["annotation"] = annotation_fields(a);
  write_line(j.dump());
  if (log_) log_->flush();
  annotations_.push_back({id, a});
  return id;
}

RecordId EventStore::append_gap(const OverflowGap& gap) {
  if (!valid_device_id(gap.device_id) || gap.first_seq > gap.last_seq)
    throw InvalidRecord("invalid overflow gap");
  std::unique_lock lock(mutex_);
  const RecordId id = next_id_++;
  ojson j;
  j["type"] = "overflow_gap";
  j["id"] = id;
  j["device_id"] = gap.device_id;
  j["first_seq"] = gap.first_seq;
  j["last_seq"] = gap.last_seq;
  j["detected_utc_ms"] = gap.detected_utc_ms;
  write_line(j.dump());
  if (log_) log_->flush();
  gaps_.push_back(gap);
  return id;
}

std::vector<RawPress> EventStore::presses(TimeRange range,
                                          const std::optional<std::string>& device_id) const {
  std::shared_lock lock(mutex_);
  std::vector<RawPress> out;
  if (range.empty()) return out;
  for (const auto& [key, entry] : presses_) {
    const auto& p = entry.second;
    if (device_id && p.device_id != *device_id) continue;
    if (range.contains(p.t_utc_ms)) out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const RawPress& a, const RawPress& b) {
    return std::tie(a.t_utc_ms, a.seq, a.device_id) < std::tie(b.t_utc_ms, b.seq, b.device_id);
  });
  return out;
}

std::vector<StoredAnnotation> EventStore::annotations(TimeRange range,
                                                      std::optional<AnnotationKind> kind) const {
  std::shared_lock lock(mutex_);
  std::vector<StoredAnnotation> out;
  for (const auto& s : annotations_) {
    if (kind && s.annotation.kind != *kind) continue;
    if (range.overlaps(s.annotation.start_utc_ms, s.annotation.end_utc_ms)) out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const StoredAnnotation& a, const StoredAnnotation& b) {
    return std::tie(a.annotation.start_utc_ms, a.annotation.end_utc_ms, a.id) <
           std::tie(b.annotation.start_utc_ms, b.annotation.end_utc_ms, b.id);
  });
  return out;
}

std::vector<OverflowGap> EventStore::overflow_gaps() const {
  std::shared_lock lock(mutex_);
  return gaps_;
}

std::vector<std::string> EventStore::devices() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [key, entry] : presses_) {
    if (out.empty() || out.back() != key.first) out.push_back(key.first);
  }
  return out;
}

bool EventStore::has_device(const std::string& device_id) const {
  std::shared_lock lock(mutex_);
  auto it = presses_.lower_bound({device_id, 0});
  return it != presses_.end() && it->first.first == device_id;
}

std::int64_t EventStore::max_seq(const std::string& device_id) const {
  std::shared_lock lock(mutex_);
  std::int64_t best = -1;
  auto it = presses_.upper_bound({device_id, std::numeric_limits<std::uint32_t>::max()});
  if (it != presses_.begin()) {
    --it;
    if (it->first.first == device_id) best = it->first.second;
  }
  for (const auto& g : gaps_) {
    if (g.device_id == device_id) best = std::max<std::int64_t>(best, g.last_seq);
  }
  return best;
}

std::size_t EventStore::press_count() const {
  std::shared_lock lock(mutex_);
  return presses_.size();
}

// ---------------------------------------------------------------------------
// Files

void write_presses_csv(std::ostream& out, std::span<const RawPress> presses) {
  out << "device_id,seq,boot_id,t_utc_ms,quality\n";
  for (const auto* p : export_order(presses)) {
    out << p->device_id << ',' << p->seq << ',' << p->boot_id << ',' << p->t_utc_ms << ','
        << to_string(p->quality) << '\n';
  }
}

void write_presses_jsonl(std::ostream& out, std::span<const RawPress> presses) {
  for (const auto* p : export_order(presses)) out << press_fields(*p).dump() << '\n';
}

std::vector<RawPress> read_presses_csv(std::istream& in) {
  std::vector<RawPress> out;
  std::string line;
  if (!read_line(in, line)) return out;
  if (line != "device_id,seq,boot_id,t_utc_ms,quality")
    throw ParseError("unexpected press CSV header '" + line + "'");
  while (read_line(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 5) throw ParseError("press row needs 5 cells: '" + line + "'");
    RawPress p;
    p.device_id = cells[0];
    p.seq = parse_int<std::uint32_t>(cells[1], "seq");
    p.boot_id = parse_int<std::uint64_t>(cells[2], "boot_id");
    p.t_utc_ms = parse_int<Millis>(cells[3], "t_utc_ms");
    p.quality = parse_quality(cells[4]);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<RawPress> read_presses_jsonl(std::istream& in) {
  std::vector<RawPress> out;
  std::string line;
  while (read_line(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(press_from(ojson::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid press JSON: ") + e.what());
    }
  }
  return out;
}

void write_observations_csv(std::ostream& out, std::span<const Observation> observations,
                            const DatasetConfig& config) {
  out << "t_utc_ms,local_date,local_time,press_count,irregular\n";
  for (const auto& o : observations) {
    out << o.t_utc_ms << ',' << local_date_string(o.t_utc_ms, config) << ','
        << local_time_string(o.t_utc_ms, config) << ',' << o.press_count << ','
        << (o.irregular ? 1 : 0) << '\n';
  }
}

std::vector<Observation> read_observations_csv(std::istream& in) {
  std::vector<Observation> out;
  std::string line;
  if (!read_line(in, line)) return out;
  if (line != "t_utc_ms,local_date,local_time,press_count,irregular")
    throw ParseError("unexpected observation CSV header '" + line + "'");
  while (read_line(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 5) throw ParseError("observation row needs 5 cells: '" + line + "'");
    Observation o;
    o.t_utc_ms = parse_int<Millis>(cells[0], "t_utc_ms");
    o.press_count = parse_int<int>(cells[3], "press_count");
    o.irregular = parse_int<int>(cells[4], "irregular") != 0;
    if (o.press_count < 2 || o.irregular != (o.press_count > 2))
      throw ParseError("inconsistent observation row '" + line + "'");
    out.push_back(std::move(o));
  }
  return out;
}

void write_annotations_jsonl(std::ostream& out, std::span<const Annotation> annotations) {
  for (const auto& a : annotations) out << annotation_fields(a).dump() << '\n';
}

std::vector<Annotation> read_annotations_jsonl(std::istream& in) {
  std::vector<Annotation> out;
  std::string line;
  while (read_line(in, line)) {
    if (line.empty()) continue;
    out.push_back(annotation_from_json(line));
  }
  return out;
}

std::string annotation_to_json(const Annotation& a) { return annotation_fields(a).dump(); }

Annotation annotation_from_json(std::string_view text) {
  try {
    return annotation_from(ojson::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid annotation JSON: ") + e.what());
  }
}

}  // namespace selftrack

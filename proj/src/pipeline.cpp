#include "selftrack/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "selftrack/decoder.hpp"
#include "selftrack/device.hpp"

namespace selftrack {

std::string config_to_json(const DatasetConfig& config) {
  nlohmann::ordered_json j;
  j["start_date"] = format_date(config.start_date);
  j["utc_offset_minutes"] = config.utc_offset_minutes;
  j["burst_gap_ms"] = config.burst_gap_ms;
  j["day_count"] = config.day_count;
  return j.dump(2);
}

DatasetConfig config_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    DatasetConfig c;
    c.start_date = parse_date(j.at("start_date").get<std::string>());
    c.utc_offset_minutes = j.value("utc_offset_minutes", 0);
    c.burst_gap_ms = j.value("burst_gap_ms", Millis{2000});
    c.day_count = j.value("day_count", 100);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid config: ") + e.what());
  }
}

void write_config(const std::filesystem::path& path, const DatasetConfig& config) {
  std::ofstream out(path, std::ios::binary);
  out << config_to_json(config) << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

DatasetConfig read_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return DatasetConfig{};
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

SimulateResult simulate_pn(const SimulateOptions& options, EventStore& store) {
  SimulateResult result;
  result.scenario = generate_pn(options.seed, options.config);
  const auto& times = result.scenario.press_times;

  const Millis boot = day_start_utc(1, options.config) - kMillisPerHour;
  const Millis end = times.empty() ? day_start_utc(options.config.day_count + 1, options.config)
                                   : times.back() + kMillisPerHour;
  const auto link = LinkSchedule::random_hourly(options.seed ^ 0xa5a5a5a5ULL, boot, end,
                                                options.p_disconnect, options.drop_probability);

  ButtonDevice device(options.device_id, options.drift_ppm, boot, options.buffer_capacity);
  SyncHost host(store);
  SessionOptions session;
  session.record_messages = options.record_messages;
  result.transcript = run_session(device, host, link, DeviceScript{times, {}},
                                  end + kMillisPerHour, session);
  result.evicted = device.evicted();

  for (const auto& a : result.scenario.annotations) store.append_annotation(a);
  return result;
}

std::vector<Observation> decode_store(const EventStore& store, const DatasetConfig& config) {
  const auto presses = store.presses();
  return decode(presses, config.burst_gap_ms).observations;
}

std::vector<Annotation> plain_annotations(const std::vector<StoredAnnotation>& stored) {
  std::vector<Annotation> out;
  out.reserve(stored.size());
  for (const auto& s : stored) out.push_back(s.annotation);
  return out;
}

}  // namespace selftrack

#include "selftrack/core.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <utility>

namespace selftrack {

namespace {

constexpr Millis floor_div(Millis a, Millis b) {
  Millis q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

constexpr Millis floor_mod(Millis a, Millis b) { return a - floor_div(a, b) * b; }

Millis local_ms(Millis t_utc_ms, const DatasetConfig& config) {
  return t_utc_ms + static_cast<Millis>(config.utc_offset_minutes) * 60'000;
}

Millis start_day_number(const DatasetConfig& config) {
  return std::chrono::sys_days{config.start_date}.time_since_epoch().count();
}

Weekday weekday_of_day_number(Millis day_number) {
  const std::chrono::weekday wd{std::chrono::sys_days{std::chrono::days{day_number}}};
  return static_cast<Weekday>(wd.iso_encoding() - 1);
}

}  // namespace

std::string_view to_string(Quality q) {
  return q == Quality::anchored ? "anchored" : "receipt";
}

Quality parse_quality(std::string_view s) {
  if (s == "anchored") return Quality::anchored;
  if (s == "receipt") return Quality::receipt;
  throw ParseError("unknown quality '" + std::string(s) + "'");
}

std::string_view to_string(AnnotationKind k) {
  switch (k) {
    case AnnotationKind::session: return "session";
    case AnnotationKind::phone_consultation: return "phone_consultation";
    case AnnotationKind::gap: return "gap";
    case AnnotationKind::weekend: return "weekend";
    case AnnotationKind::note: return "note";
  }
  return "note";
}

AnnotationKind parse_annotation_kind(std::string_view s) {
  for (auto k : {AnnotationKind::session, AnnotationKind::phone_consultation, AnnotationKind::gap,
                 AnnotationKind::weekend, AnnotationKind::note}) {
    if (to_string(k) == s) return k;
  }
  throw ParseError("unknown annotation kind '" + std::string(s) + "'");
}

void validate_annotation(const Annotation& a) {
  if (a.start_utc_ms > a.end_utc_ms) throw InvalidRecord("annotation start is after end");
  // Weekend bands are derived from the calendar.
  if (a.kind == AnnotationKind::weekend) throw InvalidRecord("weekend annotations are derived");
  if (a.location) {
    const auto& loc = *a.location;
    if (!std::isfinite(loc.lat) || !std::isfinite(loc.lon) || std::abs(loc.lat) > 90.0 ||
        std::abs(loc.lon) > 180.0) {
      throw InvalidRecord("location out of range");
    }
  }
}

std::string_view to_string(Weekday d) {
  static constexpr std::array<std::string_view, 7> names{"Mon", "Tue", "Wed", "Thu",
                                                          "Fri", "Sat", "Sun"};
  return names[static_cast<std::size_t>(d)];
}

void DatasetConfig::validate() const {
  if (!start_date.ok()) throw Error("invalid start date");
  if (utc_offset_minutes < -14 * 60 || utc_offset_minutes > 14 * 60)
    throw Error("utc offset must be within +/-14h");
  if (burst_gap_ms <= 0) throw Error("burst gap must be positive");
  if (day_count <= 0) throw Error("day count must be positive");
}

DatasetConfig pn_config() {
  using namespace std::chrono;
  DatasetConfig c;
  c.start_date = year_month_day{year{2016}, February, day{1}};
  c.utc_offset_minutes = 60;
  c.burst_gap_ms = 2000;
  c.day_count = 100;
  return c;
}

std::chrono::year_month_day parse_date(std::string_view iso) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  const std::string s(iso);
  if (std::sscanf(s.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3)
    throw ParseError("expected YYYY-MM-DD, got '" + s + "'");
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                  std::chrono::day{d}};
  if (!ymd.ok()) throw ParseError("invalid calendar date '" + s + "'");
  return ymd;
}

std::string format_date(std::chrono::year_month_day d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

LocalParts local_parts(Millis t_utc_ms, const DatasetConfig& config) {
  const Millis local = local_ms(t_utc_ms, config);
  const Millis day_number = floor_div(local, kMillisPerDay);
  const Millis index = day_number - start_day_number(config) + 1;
  if (index < 1) throw TimeBeforeStart("instant precedes day 1 of the dataset");
  return LocalParts{static_cast<int>(index), weekday_of_day_number(day_number),
                    static_cast<int>(floor_mod(local, kMillisPerDay) / kMillisPerHour)};
}

int local_hour(Millis t_utc_ms, const DatasetConfig& config) {
  return static_cast<int>(floor_mod(local_ms(t_utc_ms, config), kMillisPerDay) / kMillisPerHour);
}

Millis day_start_utc(int day_index, const DatasetConfig& config) {
  const Millis day_number = start_day_number(config) + day_index - 1;
  return day_number * kMillisPerDay - static_cast<Millis>(config.utc_offset_minutes) * 60'000;
}

Weekday weekday_of_day(int day_index, const DatasetConfig& config) {
  return weekday_of_day_number(start_day_number(config) + day_index - 1);
}

std::chrono::year_month_day local_date_of_day(int day_index, const DatasetConfig& config) {
  return std::chrono::year_month_day{
      std::chrono::sys_days{std::chrono::days{start_day_number(config) + day_index - 1}}};
}

std::string local_date_string(Millis t_utc_ms, const DatasetConfig& config) {
  const Millis day_number = floor_div(local_ms(t_utc_ms, config), kMillisPerDay);
  return format_date(
      std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{day_number}}});
}

std::string local_time_string(Millis t_utc_ms, const DatasetConfig& config) {
  const Millis in_day = floor_mod(local_ms(t_utc_ms, config), kMillisPerDay) / 1000;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d:%02d:%02d", static_cast<int>(in_day / 3600),
                static_cast<int>(in_day / 60 % 60), static_cast<int>(in_day % 60));
  return buf;
}

std::vector<Violation> validate_press_stream(std::span<const RawPress> presses) {
  std::vector<Violation> out;
  std::map<std::pair<std::string, std::uint32_t>, const RawPress*> by_key;
  for (const auto& p : presses) {
    const bool inserted = by_key.emplace(std::pair{p.device_id, p.seq}, &p).second;
    if (!inserted) {
      out.push_back({Violation::Kind::duplicate_seq, p.device_id, p.seq, "duplicate seq"});
    }
  }
  // Within each (device, boot), walk in seq order and require uptime to rise.
  std::map<std::pair<std::string, std::uint64_t>, const RawPress*> last_in_boot;
  for (const auto& [key, p] : by_key) {
    auto& prev = last_in_boot[{p->device_id, p->boot_id}];
    if (prev && p->uptime_ms <= prev->uptime_ms) {
      out.push_back({Violation::Kind::non_monotone_uptime, p->device_id, p->seq,
                     "uptime " + std::to_string(p->uptime_ms) + " after seq " +
                         std::to_string(prev->seq) + " at uptime " +
                         std::to_string(prev->uptime_ms)});
    }
    prev = p;
  }
  return out;
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return lo;
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = span == 0 ? 0 : (~std::uint64_t{0} - span + 1) % span;
  std::uint64_t x = engine_();
  while (x < limit) x = engine_();
  return lo + static_cast<std::int64_t>(x % span);
}

}  // namespace selftrack

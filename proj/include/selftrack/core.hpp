// Shared domain types and local-time arithmetic for the one-button
// self-tracking pipeline.

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace selftrack {

/// Milliseconds, either since the Unix epoch or since device boot depending
/// on the field.
using Millis = std::int64_t;

constexpr Millis kMillisPerHour = 3'600'000;
constexpr Millis kMillisPerDay = 86'400'000;

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TimeBeforeStart : public Error {
 public:
  using Error::Error;
};

class MalformedBatch : public Error {
 public:
  using Error::Error;
};

class UnsortedInput : public Error {
 public:
  using Error::Error;
};

class InvalidRecord : public Error {
 public:
  using Error::Error;
};

class EmptyPeriod : public Error {
 public:
  using Error::Error;
};

class InfeasibleConstraints : public Error {
 public:
  using Error::Error;
};

/// Raised when a file or wire payload cannot be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Records

enum class Quality { anchored, receipt };

std::string_view to_string(Quality q);
Quality parse_quality(std::string_view s);

/// One button interaction as stored on the host.
struct RawPress {
  std::string device_id;
  std::uint64_t boot_id = 0;
  std::uint32_t seq = 0;
  Millis uptime_ms = 0;
  Millis t_utc_ms = 0;
  Quality quality = Quality::anchored;

  friend bool operator==(const RawPress&, const RawPress&) = default;
};

/// A decoded occurrence of the tracked phenomenon.
struct Observation {
  Millis t_utc_ms = 0;
  int press_count = 0;
  bool irregular = false;
  std::vector<std::uint32_t> source_seqs;

  friend bool operator==(const Observation&, const Observation&) = default;
};

enum class AnnotationKind { session, phone_consultation, gap, weekend, note };

std::string_view to_string(AnnotationKind k);
AnnotationKind parse_annotation_kind(std::string_view s);

struct Location {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const Location&, const Location&) = default;
};

/// Labeled half-open time range [start_utc_ms, end_utc_ms). A zero-length
/// annotation marks a single instant.
struct Annotation {
  AnnotationKind kind = AnnotationKind::note;
  Millis start_utc_ms = 0;
  Millis end_utc_ms = 0;
  std::optional<std::string> label;
  std::optional<Location> location;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// Throws InvalidRecord when the annotation cannot be stored.
void validate_annotation(const Annotation& a);

// ---------------------------------------------------------------------------
// Dataset configuration and local time

enum class Weekday { Mon, Tue, Wed, Thu, Fri, Sat, Sun };

std::string_view to_string(Weekday d);
constexpr bool is_weekend(Weekday d) { return d == Weekday::Sat || d == Weekday::Sun; }

struct DatasetConfig {
  std::chrono::year_month_day start_date{std::chrono::year{1970}, std::chrono::January,
                                         std::chrono::day{1}};
  int utc_offset_minutes = 0;
  Millis burst_gap_ms = 2000;
  int day_count = 100;

  /// Throws Error when the offset or gap are out of range.
  void validate() const;
};

/// The configuration the PN case fixture is generated against: 100 days
/// starting on a Monday, fixed CET offset.
DatasetConfig pn_config();

std::chrono::year_month_day parse_date(std::string_view iso);
std::string format_date(std::chrono::year_month_day d);

struct LocalParts {
  int day_index = 1;
  Weekday weekday = Weekday::Mon;
  int hour = 0;

  friend bool operator==(const LocalParts&, const LocalParts&) = default;
};

/// Day index (1-based from start_date), weekday and hour of `t_utc_ms` in
/// the dataset's fixed local offset. Throws TimeBeforeStart before day 1.
LocalParts local_parts(Millis t_utc_ms, const DatasetConfig& config);

/// Local hour; defined for every instant.
int local_hour(Millis t_utc_ms, const DatasetConfig& config);

/// UTC instant of local midnight opening `day_index`. Day 1 opens at local
/// midnight of start_date.
Millis day_start_utc(int day_index, const DatasetConfig& config);

Weekday weekday_of_day(int day_index, const DatasetConfig& config);
std::chrono::year_month_day local_date_of_day(int day_index, const DatasetConfig& config);

/// Local calendar date and clock time ("YYYY-MM-DD", "HH:MM:SS").
std::string local_date_string(Millis t_utc_ms, const DatasetConfig& config);
std::string local_time_string(Millis t_utc_ms, const DatasetConfig& config);

// ---------------------------------------------------------------------------
// Press stream validation

struct Violation {
  enum class Kind { duplicate_seq, non_monotone_uptime };
  Kind kind;
  std::string device_id;
  std::uint32_t seq = 0;
  std::string detail;
};

/// Every duplicate (device_id, seq) and every place where uptime fails to
/// strictly increase with seq inside one boot. Empty means ok.
std::vector<Violation> validate_press_stream(std::span<const RawPress> presses);

// ---------------------------------------------------------------------------
// Deterministic randomness. The engine is fully specified by the standard;
// the mappings below avoid the implementation-defined distributions so that
// seeded output is identical across standard libraries.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace selftrack

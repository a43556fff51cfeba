// Reports over decoded observations: hour-of-day distribution, per-weekday
// box statistics, the daily series with its overlay bands, and period
// comparison.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "selftrack/core.hpp"
#include "selftrack/store.hpp"

namespace selftrack {

// ---------------------------------------------------------------------------
// Hour of day

struct HourlyHistogram {
  std::array<std::int64_t, 24> counts{};
  /// Percentage of the total in tenths of a percent (104 means 10.4).
  std::array<int, 24> percent_tenths{};

  std::int64_t total() const;
  double percentage(int hour) const { return percent_tenths[hour] / 10.0; }
};

/// round_half_away_from_zero(1000 * count / total), exact in integers.
/// Zero when total is zero.
int percent_tenths(std::int64_t count, std::int64_t total);

/// Counts by local hour for observations in `range`.
HourlyHistogram hourly(std::span<const Observation> observations, const DatasetConfig& config,
                       TimeRange range = {});

// ---------------------------------------------------------------------------
// Five-number summaries

enum class QuartileMethod {
  tukey_hinges,  // medians of the halves, median shared when n is odd
  linear,        // linear interpolation between order statistics
};

struct BoxStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double whisker_low = 0, whisker_high = 0;
  std::vector<double> outliers;
};

/// Whiskers reach the most extreme points within 1.5 * IQR of the hinges.
/// Empty input yields nullopt.
std::optional<BoxStats> box_stats(std::vector<double> sample,
                                  QuartileMethod method = QuartileMethod::tukey_hinges);

struct WeekdayRow {
  Weekday weekday = Weekday::Mon;
  /// Observation counts of the weekday's non-excluded days, by day index.
  std::vector<std::int64_t> sample;
  std::optional<BoxStats> stats;
};

struct WeekdaySummary {
  std::array<WeekdayRow, 7> rows;  // Mon..Sun
};

WeekdaySummary weekday_summary(std::span<const Observation> observations,
                               std::span<const Annotation> annotations,
                               const DatasetConfig& config,
                               QuartileMethod method = QuartileMethod::tukey_hinges);

// ---------------------------------------------------------------------------
// Daily series

struct Band {
  AnnotationKind kind = AnnotationKind::note;
  Millis start_utc_ms = 0;
  Millis end_utc_ms = 0;
  int first_day = 1;
  int last_day = 1;
  std::optional<std::string> label;
};

struct DayPoint {
  int day_index = 1;
  std::chrono::year_month_day local_date;
  Weekday weekday = Weekday::Mon;
  /// nullopt on excluded days.
  std::optional<std::int64_t> count;
  bool excluded = false;
};

struct DailySeries {
  std::vector<DayPoint> days;
  std::vector<Band> bands;  // weekend bands first, then annotation bands by start
};

/// True when a gap annotation overlaps the local day.
bool day_excluded(int day_index, std::span<const Annotation> annotations,
                  const DatasetConfig& config);

DailySeries daily_series(std::span<const Observation> observations,
                         std::span<const Annotation> annotations, const DatasetConfig& config);

// ---------------------------------------------------------------------------
// Period comparison

/// Inclusive day-index range.
struct DayPeriod {
  int first_day = 1;
  int last_day = 1;
};

struct PeriodComparison {
  double mean_a = 0;
  double mean_b = 0;
  int days_a = 0;
  int days_b = 0;
  /// mean_b / mean_a; nullopt when mean_a is zero.
  std::optional<double> ratio;
};

/// Mean observations per non-excluded day in each period. Throws
/// EmptyPeriod when a period is inverted or has no countable day.
PeriodComparison period_compare(std::span<const Observation> observations,
                                std::span<const Annotation> annotations,
                                const DatasetConfig& config, DayPeriod a, DayPeriod b);

// ---------------------------------------------------------------------------
// CSV and text renderings

void write_hourly_csv(std::ostream& out, const HourlyHistogram& h);
/// Aligned table with a bar per hour.
void write_hourly_table(std::ostream& out, const HourlyHistogram& h);
void write_weekday_csv(std::ostream& out, const WeekdaySummary& s);
void write_weekday_table(std::ostream& out, const WeekdaySummary& s);
void write_daily_csv(std::ostream& out, const DailySeries& s);
void write_daily_table(std::ostream& out, const DailySeries& s);
void write_compare_csv(std::ostream& out, const PeriodComparison& c, DayPeriod a, DayPeriod b);
void write_compare_table(std::ostream& out, const PeriodComparison& c, DayPeriod a, DayPeriod b);

/// Fixed-point decimal with `decimals` places; deterministic across locales.
std::string format_fixed(double value, int decimals);

}  // namespace selftrack

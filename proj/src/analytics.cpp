#include "selftrack/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace selftrack {

namespace {

std::string tenths_string(int tenths) {
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

double median_of(std::span<const double> sorted) {
  const auto n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
}

double linear_quantile(std::span<const double> sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Observation counts per day index 1..day_count; index 0 unused.
std::vector<std::int64_t> counts_by_day(std::span<const Observation> observations,
                                        const DatasetConfig& config) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(config.day_count) + 1, 0);
  const Millis first = day_start_utc(1, config);
  const Millis past_last = day_start_utc(config.day_count + 1, config);
  for (const auto& o : observations) {
    if (o.t_utc_ms < first || o.t_utc_ms >= past_last) continue;
    ++counts[static_cast<std::size_t>(local_parts(o.t_utc_ms, config).day_index)];
  }
  return counts;
}

std::vector<bool> excluded_days(std::span<const Annotation> annotations,
                                const DatasetConfig& config) {
  std::vector<bool> out(static_cast<std::size_t>(config.day_count) + 1, false);
  for (int d = 1; d <= config.day_count; ++d) out[d] = day_excluded(d, annotations, config);
  return out;
}

int clamp_day(Millis t, const DatasetConfig& config) {
  if (t < day_start_utc(1, config)) return 1;
  return std::min(local_parts(t, config).day_index, config.day_count);
}

}  // namespace

// ---------------------------------------------------------------------------

std::int64_t HourlyHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

int percent_tenths(std::int64_t count, std::int64_t total) {
  if (total <= 0) return 0;
  // floor(1000c/t + 1/2) == floor((2000c + t) / 2t) for non-negative c.
  return static_cast<int>((2000 * count + total) / (2 * total));
}

HourlyHistogram hourly(std::span<const Observation> observations, const DatasetConfig& config,
                       TimeRange range) {
  HourlyHistogram h;
  for (const auto& o : observations) {
    if (range.contains(o.t_utc_ms)) ++h.counts[static_cast<std::size_t>(local_hour(o.t_utc_ms, config))];
  }
  const auto total = h.total();
  for (std::size_t i = 0; i < 24; ++i) h.percent_tenths[i] = percent_tenths(h.counts[i], total);
  return h;
}

std::optional<BoxStats> box_stats(std::vector<double> sample, QuartileMethod method) {
  if (sample.empty()) return std::nullopt;
  std::sort(sample.begin(), sample.end());
  const auto n = sample.size();
  const std::span<const double> all(sample);

  BoxStats s;
  s.min = sample.front();
  s.max = sample.back();
  s.median = median_of(all);
  if (method == QuartileMethod::tukey_hinges) {
    const auto half = (n + 1) / 2;
    s.q1 = median_of(all.first(half));
    s.q3 = median_of(all.last(half));
  } else {
    s.q1 = linear_quantile(all, 0.25);
    s.q3 = linear_quantile(all, 0.75);
  }
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_low = s.q1;
  s.whisker_high = s.q3;
  for (double v : sample) {
    if (v < lo_fence || v > hi_fence) {
      s.outliers.push_back(v);
    } else {
      s.whisker_low = std::min(s.whisker_low, v);
      s.whisker_high = std::max(s.whisker_high, v);
    }
  }
  return s;
}

WeekdaySummary weekday_summary(std::span<const Observation> observations,
                               std::span<const Annotation> annotations,
                               const DatasetConfig& config, QuartileMethod method) {
  WeekdaySummary out;
  for (int w = 0; w < 7; ++w) out.rows[w].weekday = static_cast<Weekday>(w);
  const auto counts = counts_by_day(observations, config);
  const auto excluded = excluded_days(annotations, config);
  for (int d = 1; d <= config.day_count; ++d) {
    if (excluded[d]) continue;
    out.rows[static_cast<std::size_t>(weekday_of_day(d, config))].sample.push_back(counts[d]);
  }
  for (auto& row : out.rows) {
    row.stats = box_stats(std::vector<double>(row.sample.begin(), row.sample.end()), method);
  }
  return out;
}

bool day_excluded(int day_index, std::span<const Annotation> annotations,
                  const DatasetConfig& config) {
  const TimeRange day{day_start_utc(day_index, config), day_start_utc(day_index + 1, config)};
  return std::any_of(annotations.begin(), annotations.end(), [&](const Annotation& a) {
    return a.kind == AnnotationKind::gap && day.overlaps(a.start_utc_ms, a.end_utc_ms);
  });
}

DailySeries daily_series(std::span<const Observation> observations,
                         std::span<const Annotation> annotations, const DatasetConfig& config) {
  DailySeries s;
  const auto counts = counts_by_day(observations, config);
  const auto excluded = excluded_days(annotations, config);
  for (int d = 1; d <= config.day_count; ++d) {
    DayPoint p;
    p.day_index = d;
    p.local_date = local_date_of_day(d, config);
    p.weekday = weekday_of_day(d, config);
    p.excluded = excluded[d];
    if (!p.excluded) p.count = counts[d];
    s.days.push_back(p);
  }

  for (int d = 1; d <= config.day_count; ++d) {
    if (!is_weekend(weekday_of_day(d, config))) continue;
    if (!s.bands.empty() && s.bands.back().last_day == d - 1) {
      s.bands.back().last_day = d;
      s.bands.back().end_utc_ms = day_start_utc(d + 1, config);
    } else {
      s.bands.push_back({AnnotationKind::weekend, day_start_utc(d, config),
                         day_start_utc(d + 1, config), d, d, std::nullopt});
    }
  }

  const TimeRange span{day_start_utc(1, config), day_start_utc(config.day_count + 1, config)};
  std::vector<Band> copied;
  for (const auto& a : annotations) {
    if (a.kind == AnnotationKind::weekend || !span.overlaps(a.start_utc_ms, a.end_utc_ms)) continue;
    const Millis last_instant = std::max(a.start_utc_ms, a.end_utc_ms - 1);
    copied.push_back({a.kind, a.start_utc_ms, a.end_utc_ms, clamp_day(a.start_utc_ms, config),
                      clamp_day(last_instant, config), a.label});
  }
  std::stable_sort(copied.begin(), copied.end(), [](const Band& x, const Band& y) {
    return x.start_utc_ms < y.start_utc_ms;
  });
  s.bands.insert(s.bands.end(), copied.begin(), copied.end());
  return s;
}

PeriodComparison period_compare(std::span<const Observation> observations,
                                std::span<const Annotation> annotations,
                                const DatasetConfig& config, DayPeriod a, DayPeriod b) {
  const auto counts = counts_by_day(observations, config);
  const auto excluded = excluded_days(annotations, config);
  auto mean_of = [&](DayPeriod p, int& days) {
    if (p.first_day < 1 || p.last_day > config.day_count || p.first_day > p.last_day)
      throw EmptyPeriod("period " + std::to_string(p.first_day) + ":" +
                        std::to_string(p.last_day) + " is outside the dataset or inverted");
    std::int64_t sum = 0;
    days = 0;
    for (int d = p.first_day; d <= p.last_day; ++d) {
      if (excluded[d]) continue;
      sum += counts[d];
      ++days;
    }
    if (days == 0) throw EmptyPeriod("period has no countable days");
    return static_cast<double>(sum) / days;
  };
  PeriodComparison c;
  c.mean_a = mean_of(a, c.days_a);
  c.mean_b = mean_of(b, c.days_b);
  if (c.mean_a > 0) c.ratio = c.mean_b / c.mean_a;
  return c;
}

// ---------------------------------------------------------------------------
// Renderings

std::string format_fixed(double value, int decimals) {
  // Rounds half away from zero and never prints "-0".
  long long scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  const long long q = std::llround(value * static_cast<double>(scale));
  const unsigned long long mag = q < 0 ? 0ULL - static_cast<unsigned long long>(q) : q;
  std::string s = q < 0 ? "-" : "";
  s += std::to_string(mag / scale);
  if (decimals > 0) {
    std::string frac = std::to_string(mag % scale);
    s += '.' + std::string(decimals - frac.size(), '0') + frac;
  }
  return s;
}

void write_hourly_csv(std::ostream& out, const HourlyHistogram& h) {
  out << "hour,count,percentage\n";
  for (int i = 0; i < 24; ++i)
    out << i << ',' << h.counts[i] << ',' << tenths_string(h.percent_tenths[i]) << '\n';
}

void write_hourly_table(std::ostream& out, const HourlyHistogram& h) {
  constexpr int kBarWidth = 50;
  const auto peak = std::max<std::int64_t>(1, *std::max_element(h.counts.begin(), h.counts.end()));
  char line[160];
  std::snprintf(line, sizeof(line), "%4s %6s %6s\n", "hour", "count", "pct");
  out << line;
  for (int i = 0; i < 24; ++i) {
    const auto bar = static_cast<int>((h.counts[i] * kBarWidth + peak / 2) / peak);
    std::snprintf(line, sizeof(line), "%4d %6lld %6s ", i, static_cast<long long>(h.counts[i]),
                  tenths_string(h.percent_tenths[i]).c_str());
    out << line << std::string(static_cast<std::size_t>(bar), '#') << '\n';
  }
  std::snprintf(line, sizeof(line), "%4s %6lld\n", "all", static_cast<long long>(h.total()));
  out << line;
}

void write_weekday_csv(std::ostream& out, const WeekdaySummary& s) {
  out << "weekday,days,min,q1,median,q3,max,whisker_low,whisker_high,outliers\n";
  for (const auto& row : s.rows) {
    out << to_string(row.weekday) << ',' << row.sample.size();
    if (row.stats) {
      const auto& b = *row.stats;
      for (double v : {b.min, b.q1, b.median, b.q3, b.max, b.whisker_low, b.whisker_high})
        out << ',' << format_fixed(v, 2);
      out << ',';
      for (std::size_t i = 0; i < b.outliers.size(); ++i)
        out << (i ? ";" : "") << format_fixed(b.outliers[i], 0);
    } else {
      out << ",,,,,,,,";
    }
    out << '\n';
  }
}

void write_weekday_table(std::ostream& out, const WeekdaySummary& s) {
  char line[160];
  std::snprintf(line, sizeof(line), "%-4s %4s %6s %6s %6s %6s %6s %6s %6s  %s\n", "day", "n",
                "min", "q1", "median", "q3", "max", "wlo", "whi", "outliers");
  out << line;
  for (const auto& row : s.rows) {
    if (!row.stats) {
      std::snprintf(line, sizeof(line), "%-4s %4zu\n", std::string(to_string(row.weekday)).c_str(),
                    row.sample.size());
      out << line;
      continue;
    }
    const auto& b = *row.stats;
    std::snprintf(line, sizeof(line), "%-4s %4zu %6.1f %6.1f %6.1f %6.1f %6.1f %6.1f %6.1f  ",
                  std::string(to_string(row.weekday)).c_str(), row.sample.size(), b.min, b.q1,
                  b.median, b.q3, b.max, b.whisker_low, b.whisker_high);
    out << line;
    for (std::size_t i = 0; i < b.outliers.size(); ++i)
      out << (i ? " " : "") << format_fixed(b.outliers[i], 0);
    out << '\n';
  }
}

void write_daily_csv(std::ostream& out, const DailySeries& s) {
  out << "day_index,local_date,count,excluded\n";
  for (const auto& d : s.days) {
    out << d.day_index << ',' << format_date(d.local_date) << ','
        << (d.count ? std::to_string(*d.count) : std::string{}) << ',' << (d.excluded ? 1 : 0)
        << '\n';
  }
}

void write_daily_table(std::ostream& out, const DailySeries& s) {
  auto marker = [&s](int day) {
    std::string m;
    for (const auto& b : s.bands) {
      if (day < b.first_day || day > b.last_day) continue;
      switch (b.kind) {
        case AnnotationKind::weekend: m += 'W'; break;
        case AnnotationKind::session: m += 'S'; break;
        case AnnotationKind::phone_consultation: m += 'P'; break;
        case AnnotationKind::gap: m += 'G'; break;
        case AnnotationKind::note: m += 'N'; break;
      }
    }
    return m;
  };
  char line[64];
  for (const auto& d : s.days) {
    std::snprintf(line, sizeof(line), "%3d %s %s %-4s ", d.day_index,
                  format_date(d.local_date).c_str(), std::string(to_string(d.weekday)).c_str(),
                  marker(d.day_index).c_str());
    out << line;
    if (d.excluded) {
      out << "(excluded)";
    } else {
      out << std::string(static_cast<std::size_t>(*d.count), '#') << ' ' << *d.count;
    }
    out << '\n';
  }
  out << "bands: W weekend, S session, P phone consultation, G gap, N note\n";
}

void write_compare_csv(std::ostream& out, const PeriodComparison& c, DayPeriod a, DayPeriod b) {
  out << "period_a,period_b,days_a,days_b,mean_a,mean_b,ratio\n";
  out << a.first_day << ':' << a.last_day << ',' << b.first_day << ':' << b.last_day << ','
      << c.days_a << ',' << c.days_b << ',' << format_fixed(c.mean_a, 4) << ','
      << format_fixed(c.mean_b, 4) << ',' << (c.ratio ? format_fixed(*c.ratio, 4) : "undefined")
      << '\n';
}

void write_compare_table(std::ostream& out, const PeriodComparison& c, DayPeriod a, DayPeriod b) {
  out << "period A days " << a.first_day << "-" << a.last_day << ": " << c.days_a
      << " counted days, " << format_fixed(c.mean_a, 2) << " obs/day\n";
  out << "period B days " << b.first_day << "-" << b.last_day << ": " << c.days_b
      << " counted days, " << format_fixed(c.mean_b, 2) << " obs/day\n";
  out << "ratio B/A: " << (c.ratio ? format_fixed(*c.ratio, 3) : "undefined") << '\n';
}

}  // namespace selftrack

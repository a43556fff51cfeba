// Independent reference implementations used only by tests. None of these
// share code paths with the library routines they check.

#pragma once

#include <algorithm>
#include <cmath>
#include <ctime>
#include <vector>

#include "selftrack/core.hpp"

namespace selftrack::oracle {

/// Quadratic enumeration of every maximal run with all consecutive gaps
/// <= gap. Returns [first, last] index pairs in order.
inline std::vector<std::pair<std::size_t, std::size_t>> maximal_runs(
    const std::vector<Millis>& times, Millis gap) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  const auto n = times.size();
  auto close = [&](std::size_t a) { return times[a + 1] - times[a] <= gap; };
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && close(i - 1)) continue;  // not maximal on the left
    for (std::size_t j = i; j < n; ++j) {
      bool chained = true;
      for (std::size_t k = i; k < j && chained; ++k) chained = close(k);
      if (!chained) break;
      const bool right_maximal = (j + 1 == n) || !close(j);
      if (right_maximal) runs.emplace_back(i, j);
    }
  }
  return runs;
}

/// Tukey hinges through Tukey's depth rule: the hinge sits at depth
/// (floor((n + 1) / 2) + 1) / 2 from either end.
struct Hinges {
  double lower, median, upper;
};

inline Hinges tukey_hinges(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  auto at_depth_from_low = [&](double depth) {
    const auto lo = static_cast<std::size_t>(std::floor(depth)) - 1;
    const auto hi = static_cast<std::size_t>(std::ceil(depth)) - 1;
    return (x[lo] + x[hi]) / 2.0;
  };
  auto at_depth_from_high = [&](double depth) {
    const auto lo = x.size() - static_cast<std::size_t>(std::floor(depth));
    const auto hi = x.size() - static_cast<std::size_t>(std::ceil(depth));
    return (x[lo] + x[hi]) / 2.0;
  };
  const double median_depth = (n + 1.0) / 2.0;
  const double hinge_depth = (std::floor(median_depth) + 1.0) / 2.0;
  return {at_depth_from_low(hinge_depth), at_depth_from_low(median_depth),
          at_depth_from_high(hinge_depth)};
}

/// Calendar fields of a local instant through the C library's gmtime.
struct CivilParts {
  int year, month, day, weekday_mon0, hour;
  long long day_number;  // days since 1970-01-01
};

inline CivilParts civil(Millis t_utc_ms, int offset_minutes) {
  const Millis local_ms = t_utc_ms + static_cast<Millis>(offset_minutes) * 60'000;
  Millis secs = local_ms / 1000;
  if (local_ms % 1000 < 0) --secs;
  const std::time_t tt = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  const long long day_number = (secs - (secs % 86400 + 86400) % 86400) / 86400;
  return {tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, (tm.tm_wday + 6) % 7, tm.tm_hour,
          day_number};
}

inline long long day_number_of(int year, int month, int day) {
  std::tm tm{};
  tm.tm_year = year - 1900;
  tm.tm_mon = month - 1;
  tm.tm_mday = day;
  return static_cast<long long>(timegm(&tm)) / 86400;
}

}  // namespace selftrack::oracle

#include "selftrack/scenario.hpp"

#include <algorithm>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>
#include <set>

#include "selftrack/decoder.hpp"

namespace selftrack {

namespace {

constexpr double kWeekdayWeight = 2.5;
constexpr double kWeekendWeight = 1.0;
constexpr double kCrisisFactor = 1.2;
constexpr int kAttempts = 64;
constexpr int kPlacementTries = 200;

int week_of(int day_index) { return (day_index - 1) / 7 + 1; }

bool gap_day(int day) { return day >= kPnGapFirstDay && day <= kPnGapLastDay; }

bool session_week(int week) {
  return (week >= 1 && week < kPnPhoneFirstWeek) || (week > kPnPhoneLastWeek && week <= 14);
}

/// Press instants with the separation rule that keeps decode groups apart.
class Timeline {
 public:
  explicit Timeline(Millis gap) : gap_(gap) {}

  /// True when [first, last] can be added with every existing press more
  /// than the burst gap away.
  bool fits(Millis first, Millis last) const {
    auto it = presses_.lower_bound(first - gap_);
    return it == presses_.end() || *it > last + gap_;
  }
  void add(Millis t) { presses_.insert(t); }
  std::vector<Millis> sorted() const { return {presses_.begin(), presses_.end()}; }

 private:
  Millis gap_;
  std::multiset<Millis> presses_;
};

class WeightedDays {
 public:
  WeightedDays(std::vector<int> days, const std::vector<double>& weights) : days_(std::move(days)) {
    cumulative_.resize(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cumulative_.begin());
  }
  int draw(Rng& rng) const {
    const double u = rng.uniform01() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return days_[static_cast<std::size_t>(it - cumulative_.begin())];
  }

 private:
  std::vector<int> days_;
  std::vector<double> cumulative_;
};

std::optional<PnScenario> attempt(Rng& rng, const DatasetConfig& config) {
  const Millis gap = config.burst_gap_ms;
  std::vector<int> days;
  std::vector<double> weights;
  for (int d = 1; d <= kPnDays; ++d) {
    if (gap_day(d)) continue;
    double w = is_weekend(weekday_of_day(d, config)) ? kWeekendWeight : kWeekdayWeight;
    if (d >= kPnCrisisFirstDay && d <= kPnCrisisLastDay) w *= kCrisisFactor;
    days.push_back(d);
    weights.push_back(w);
  }
  const WeightedDays weighted(days, weights);
  const WeightedDays uniform(days, std::vector<double>(days.size(), 1.0));

  Timeline timeline(gap);
  auto place = [&](int day, int hour, bool pair) {
    const Millis base = day_start_utc(day, config) + hour * kMillisPerHour;
    for (int i = 0; i < kPlacementTries; ++i) {
      const Millis first = base + rng.uniform_int(0, kMillisPerHour - 1);
      const Millis second = pair ? first + rng.uniform_int(kPnPairGapMinMs, kPnPairGapMaxMs) : first;
      if (!timeline.fits(first, second)) continue;
      timeline.add(first);
      if (pair) timeline.add(second);
      return true;
    }
    return false;
  };

  for (int hour = 0; hour < 24; ++hour) {
    for (int k = 0; k < kPnHourlyCounts[hour]; ++k) {
      if (!place(weighted.draw(rng), hour, true)) return std::nullopt;
    }
  }
  for (int k = 0; k < kPnSinglePresses; ++k) {
    if (!place(uniform.draw(rng), static_cast<int>(rng.uniform_int(0, 23)), false))
      return std::nullopt;
  }

  PnScenario s;
  s.config = config;
  s.press_times = timeline.sorted();

  s.annotations.push_back({AnnotationKind::gap, day_start_utc(kPnGapFirstDay, config),
                           day_start_utc(kPnGapLastDay + 1, config),
                           std::string("no data collected (technical issue)"), std::nullopt});

  // 25 sessions over the nine session weeks: seven weeks of three, two of two.
  std::vector<int> weeks;
  for (int w = 1; w <= 14; ++w) {
    if (session_week(w)) weeks.push_back(w);
  }
  std::vector<int> per_week(weeks.size(), 3);
  int surplus = static_cast<int>(weeks.size()) * 3 - kPnSessions;
  while (surplus > 0) {
    auto& n = per_week[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(weeks.size()) - 1))];
    if (n == 3) {
      n = 2;
      --surplus;
    }
  }

  auto weekdays_of_week = [&](int week) {
    std::vector<int> out;
    for (int d = 7 * (week - 1) + 1; d <= 7 * week; ++d) {
      if (!is_weekend(weekday_of_day(d, config))) out.push_back(d);
    }
    return out;
  };
  auto pick_days = [&](std::vector<int> pool, int n) {
    std::vector<int> out;
    for (int i = 0; i < n && !pool.empty(); ++i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1));
      out.push_back(pool[j]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
    std::sort(out.begin(), out.end());
    return out;
  };

  int session_no = 0;
  for (std::size_t i = 0; i < weeks.size(); ++i) {
    for (int d : pick_days(weekdays_of_week(weeks[i]), per_week[i])) {
      const Millis start = day_start_utc(d, config) + rng.uniform_int(13, 15) * kMillisPerHour;
      s.annotations.push_back({AnnotationKind::session, start, start + kMillisPerHour,
                               "session " + std::to_string(++session_no), std::nullopt});
    }
  }
  int call_no = 0;
  for (int w = kPnPhoneFirstWeek; w <= kPnPhoneLastWeek; ++w) {
    const int n = static_cast<int>(rng.uniform_int(1, 2));
    for (int d : pick_days(weekdays_of_week(w), n)) {
      const Millis start = day_start_utc(d, config) + rng.uniform_int(10, 16) * kMillisPerHour;
      s.annotations.push_back({AnnotationKind::phone_consultation, start,
                               start + kMillisPerHour / 2,
                               "phone consultation " + std::to_string(++call_no), std::nullopt});
    }
  }
  std::stable_sort(s.annotations.begin(), s.annotations.end(),
                   [](const Annotation& a, const Annotation& b) {
                     return a.start_utc_ms < b.start_utc_ms;
                   });
  return s;
}

}  // namespace

PnScenario generate_pn(std::uint64_t seed, const DatasetConfig& config) {
  config.validate();
  if (config.day_count != kPnDays)
    throw InfeasibleConstraints("the PN scenario covers exactly 100 days");
  if (config.burst_gap_ms < kPnPairGapMaxMs)
    throw InfeasibleConstraints("burst gap shorter than the 1200 ms press pair");
  if (config.burst_gap_ms > 10 * 60 * 1000)
    throw InfeasibleConstraints("burst gap too wide to keep observations apart");

  for (int i = 0; i < kAttempts; ++i) {
    Rng rng(seed + static_cast<std::uint64_t>(i) * 0x9E3779B97F4A7C15ULL);
    auto s = attempt(rng, config);
    if (!s) continue;
    const auto presses = ideal_capture(s->press_times, "pn");
    if (check_pn_constraints(presses, s->annotations, config).empty()) return std::move(*s);
  }
  throw InfeasibleConstraints("no attempt satisfied the PN constraints");
}

std::vector<RawPress> ideal_capture(std::span<const Millis> press_times,
                                    const std::string& device_id) {
  std::vector<RawPress> out;
  out.reserve(press_times.size());
  const Millis boot = press_times.empty() ? 0 : press_times.front() - kMillisPerHour;
  std::uint32_t seq = 0;
  for (Millis t : press_times) {
    out.push_back({device_id, 0, seq++, t - boot, t, Quality::anchored});
  }
  return out;
}

std::vector<std::string> check_pn_constraints(std::span<const RawPress> presses,
                                              std::span<const Annotation> annotations,
                                              const DatasetConfig& config) {
  std::vector<std::string> failures;
  auto fail = [&failures](std::string msg) { failures.push_back(std::move(msg)); };

  const auto sorted = sorted_for_decode(presses);
  const auto decoded = decode(sorted, config.burst_gap_ms);
  const auto& obs = decoded.observations;

  if (static_cast<int>(obs.size()) != kPnObservations)
    fail("observation total " + std::to_string(obs.size()) + " != 647");

  std::array<int, 24> hours{};
  std::map<int, int> per_day;
  for (const auto& o : obs) {
    ++hours[static_cast<std::size_t>(local_hour(o.t_utc_ms, config))];
    if (o.t_utc_ms < day_start_utc(1, config) || o.t_utc_ms >= day_start_utc(kPnDays + 1, config)) {
      fail("observation outside days 1-100");
      continue;
    }
    ++per_day[local_parts(o.t_utc_ms, config).day_index];
  }
  if (hours != kPnHourlyCounts) fail("hourly counts differ from the case table");

  // Pair shape: exactly two presses, 300-1200 ms apart.
  std::map<std::uint32_t, Millis> time_of_seq;
  for (const auto& p : presses) time_of_seq[p.seq] = p.t_utc_ms;
  for (const auto& o : obs) {
    if (o.press_count != 2 || o.source_seqs.size() != 2) {
      fail("observation with " + std::to_string(o.press_count) + " presses");
      continue;
    }
    const Millis d = time_of_seq[o.source_seqs[1]] - time_of_seq[o.source_seqs[0]];
    if (d < kPnPairGapMinMs || d > kPnPairGapMaxMs)
      fail("press pair " + std::to_string(d) + " ms apart");
  }
  if (static_cast<int>(decoded.false_positives.size()) != kPnSinglePresses)
    fail("single presses " + std::to_string(decoded.false_positives.size()) + " != 32");

  // Gap week.
  for (int d = kPnGapFirstDay; d <= kPnGapLastDay; ++d) {
    if (per_day.count(d)) fail("observations on gap day " + std::to_string(d));
  }
  const auto gap_ok = std::any_of(annotations.begin(), annotations.end(), [&](const Annotation& a) {
    return a.kind == AnnotationKind::gap &&
           a.start_utc_ms == day_start_utc(kPnGapFirstDay, config) &&
           a.end_utc_ms == day_start_utc(kPnGapLastDay + 1, config);
  });
  if (!gap_ok) fail("missing gap annotation over days 8-14");

  // Weekday vs weekend, and crisis vs baseline, over non-gap days.
  auto mean_over = [&](int first, int last, auto keep) {
    int days = 0, total = 0;
    for (int d = first; d <= last; ++d) {
      if (gap_day(d) || !keep(d)) continue;
      ++days;
      total += per_day.count(d) ? per_day.at(d) : 0;
    }
    return days ? static_cast<double>(total) / days : 0.0;
  };
  const double weekday_mean =
      mean_over(1, kPnDays, [&](int d) { return !is_weekend(weekday_of_day(d, config)); });
  const double weekend_mean =
      mean_over(1, kPnDays, [&](int d) { return is_weekend(weekday_of_day(d, config)); });
  if (weekday_mean < 2.0 * weekend_mean) fail("weekday mean below twice the weekend mean");
  const double baseline = mean_over(kPnBaselineFirstDay, kPnBaselineLastDay, [](int) { return true; });
  const double crisis = mean_over(kPnCrisisFirstDay, kPnCrisisLastDay, [](int) { return true; });
  if (!(crisis > baseline && crisis <= 1.5 * baseline))
    fail("crisis/baseline ratio outside (1.0, 1.5]");

  // Sessions and phone consultations.
  std::map<int, int> sessions_per_week;
  int sessions = 0, calls = 0;
  for (const auto& a : annotations) {
    if (a.kind != AnnotationKind::session && a.kind != AnnotationKind::phone_consultation) continue;
    if (a.start_utc_ms < day_start_utc(1, config) ||
        a.start_utc_ms >= day_start_utc(kPnDays + 1, config)) {
      fail("annotation outside days 1-100");
      continue;
    }
    const auto parts = local_parts(a.start_utc_ms, config);
    const int week = week_of(parts.day_index);
    if (a.kind == AnnotationKind::session) {
      ++sessions;
      ++sessions_per_week[week];
      if (is_weekend(parts.weekday) || parts.hour < 12 || parts.hour > 17)
        fail("session outside weekday afternoons");
    } else {
      ++calls;
      if (week < kPnPhoneFirstWeek || week > kPnPhoneLastWeek)
        fail("phone consultation outside weeks 7-11");
    }
  }
  if (sessions != kPnSessions) fail("session count " + std::to_string(sessions) + " != 25");
  if (calls == 0) fail("no phone consultations");
  for (int w = 1; w <= 15; ++w) {
    const int n = sessions_per_week.count(w) ? sessions_per_week.at(w) : 0;
    if (session_week(w) ? (n < 2 || n > 3) : n != 0)
      fail("week " + std::to_string(w) + " has " + std::to_string(n) + " sessions");
  }
  return failures;
}

}  // namespace selftrack

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"
#include "selftrack/analytics.hpp"
#include "selftrack/decoder.hpp"
#include "selftrack/pipeline.hpp"
#include "selftrack/scenario.hpp"
#include "selftrack/store.hpp"
#include "selftrack/sync.hpp"

using namespace selftrack;
namespace fs = std::filesystem;

namespace {

// Reference hourly percentages for the pn counts, in tenths.
constexpr std::array<int, 24> kExpectedTenths{17, 5,  0,  11, 3,  12, 25, 22, 49, 46, 31, 62,
                                               104, 51, 82, 46, 94, 68, 37, 83, 56, 23, 59, 14};

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("selftrack_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "selftrack");
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::fprintf(stderr, "selftrack %s: %s\n", args[1].c_str(), e.str().c_str());
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// 1. simulate -> decode -> hourly reproduces the reference hourly table.
Outcome hourly_table() {
  Outcome o;
  const auto dir = scratch("c1");
  const auto start = std::chrono::steady_clock::now();
  o.require(cli({"simulate", "--scenario", "pn", "--seed", "42", "--out", dir.string()}) == 0,
            "simulate failed");
  o.require(cli({"decode", "--in", (dir / "presses.csv").string(), "--data", dir.string(), "--out",
                 (dir / "obs.csv").string()}) == 0,
            "decode failed");
  std::string csv;
  o.require(cli({"report", "hourly", "--observations", (dir / "obs.csv").string(), "--data",
                 dir.string(), "--format", "csv"},
                &csv) == 0,
            "report failed");
  const double elapsed = seconds_since(start);

  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  o.require(line == "hour,count,percentage", "unexpected header");
  int total = 0;
  for (int h = 0; h < 24 && o.pass; ++h) {
    std::getline(in, line);
    char expected[64];
    std::snprintf(expected, sizeof expected, "%d,%d,%d.%d", h, kPnHourlyCounts[h],
                  kExpectedTenths[h] / 10, kExpectedTenths[h] % 10);
    o.require(line == expected, "hour " + std::to_string(h) + ": got '" + line + "'");
    total += kPnHourlyCounts[h];
  }
  o.require(total == 647, "total is not 647");
  o.require(elapsed < 5.0, "took " + format_fixed(elapsed, 2) + " s");
  if (o.pass) o.detail = "24/24 hours, 647 observations, " + format_fixed(elapsed, 2) + " s";
  fs::remove_all(dir);
  return o;
}

// 2. Exactly-once delivery over 1000 seeded link schedules.
Outcome exactly_once() {
  Outcome o;
  const auto config = pn_config();
  const auto scenario = generate_pn(42, config);
  const auto& times = scenario.press_times;
  const Millis boot = day_start_utc(1, config) - kMillisPerHour;
  const Millis end = times.back() + kMillisPerHour;
  const auto start = std::chrono::steady_clock::now();
  std::size_t with_loss = 0;
  for (std::uint64_t seed = 1; seed <= 1000 && o.pass; ++seed) {
    Rng knobs(seed);
    const double p_disconnect = 0.1 + 0.6 * knobs.uniform01();
    const double drop = 0.3 * knobs.uniform01();
    // Every fourth run uses a small buffer so evictions actually happen.
    const std::size_t capacity = seed % 4 == 0 ? 16 : 4096;
    const auto link = LinkSchedule::random_hourly(seed, boot, end, p_disconnect, drop);

    EventStore store;
    SyncHost host(store);
    ButtonDevice device("pn-button", static_cast<int>(knobs.uniform_int(-200, 200)), boot,
                        capacity);
    const auto tr = run_session(device, host, link, DeviceScript{times, {}}, end + kMillisPerHour);

    std::set<std::uint32_t> lost;
    for (auto s : device.evicted())
      if (!tr.delivered_seqs.count(s)) lost.insert(s);
    with_loss += !lost.empty();

    std::set<std::uint32_t> stored;
    bool unique = true;
    for (const auto& p : store.presses()) unique &= stored.insert(p.seq).second;
    const std::string tag = "seed " + std::to_string(seed) + ": ";
    o.require(unique, tag + "duplicate seq in store");
    o.require(stored.size() == times.size() - lost.size(),
              tag + std::to_string(stored.size()) + " stored, expected " +
                  std::to_string(times.size() - lost.size()));
    for (auto s : lost) o.require(!stored.count(s), tag + "lost seq was stored");
    std::set<std::uint32_t> gap_seqs;
    for (const auto& g : store.overflow_gaps())
      for (auto s = g.first_seq; s <= g.last_seq; ++s) gap_seqs.insert(s);
    o.require(gap_seqs == lost, tag + "overflow gaps do not match lost presses");
  }
  const double elapsed = seconds_since(start);
  o.require(elapsed < 60.0, "took " + format_fixed(elapsed, 2) + " s");
  if (o.pass)
    o.detail = "1000 schedules, " + std::to_string(with_loss) + " with evictions, " +
               format_fixed(elapsed, 2) + " s";
  return o;
}

// 3. Anchored timestamps stay within the drift bound.
Outcome clock_bound() {
  Outcome o;
  Rng rng(3);
  std::size_t checked = 0;
  Millis worst = 0;
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    const int drift = static_cast<int>(rng.uniform_int(-200, 200));
    const Millis boot = rng.uniform_int(0, kMillisPerDay);
    const Millis handshake = boot + 7 * kMillisPerDay;
    ButtonDevice device("d", drift, boot);
    std::vector<Millis> truth;
    for (int i = 0; i < 10; ++i) truth.push_back(rng.uniform_int(boot, handshake));
    std::sort(truth.begin(), truth.end());
    for (auto t : truth) device.press(t);

    EventStore store;
    SyncHost host(store);
    host.on_hello(device.hello(handshake), handshake);
    host.ingest(device.drain_batch(64), handshake);
    for (const auto& p : store.presses()) {
      const Millis t_true = truth[p.seq];
      const Millis age = handshake - t_true;
      const Millis err = p.t_utc_ms - t_true;
      // |err| <= |drift| * age / 1e6 + 1, exact in integers. With |drift| <=
      // 200 this implies the 200 ppm bound.
      const Millis lhs = 1'000'000 * std::abs(err);
      const Millis rhs = static_cast<Millis>(std::abs(drift)) * age + 1'000'000;
      o.require(p.quality == Quality::anchored, "press not anchored");
      o.require(lhs <= rhs, "drift " + std::to_string(drift) + " age " + std::to_string(age) +
                                " error " + std::to_string(err) + " ms");
      worst = std::max(worst, std::abs(err));
      ++checked;
    }
  }
  o.require(checked == 10'000, "checked " + std::to_string(checked) + " presses");
  if (o.pass)
    o.detail = "10000 presses, drift +-200 ppm, age <= 7 d, worst error " + std::to_string(worst) +
               " ms";
  return o;
}

// 4. The decoder matches a brute-force oracle and partitions its input.
Outcome decoder_oracle() {
  Outcome o;
  Rng rng(4);
  for (int i = 0; i < 10'000 && o.pass; ++i) {
    const Millis gap = rng.uniform_int(1, 5000);
    std::vector<RawPress> stream;
    std::vector<Millis> times;
    Millis t = rng.uniform_int(0, 1'000'000'000);
    const auto n = rng.uniform_int(0, 200);
    for (std::uint32_t k = 0; k < n; ++k) {
      t += rng.bernoulli(0.5) ? rng.uniform_int(0, gap) : rng.uniform_int(gap - 1, 3 * gap);
      stream.push_back({"d", 0, k, 0, t, Quality::anchored});
      times.push_back(t);
    }
    const auto r = decode(stream, gap);
    const auto runs = oracle::maximal_runs(times, gap);
    std::vector<std::uint32_t> seen;
    std::size_t obs_i = 0, fp_i = 0;
    for (auto [a, b] : runs) {
      if (a == b) {
        o.require(fp_i < r.false_positives.size() && r.false_positives[fp_i].seq == a,
                  "stream " + std::to_string(i) + ": false positive mismatch");
        ++fp_i;
        continue;
      }
      if (obs_i >= r.observations.size()) {
        o.require(false, "stream " + std::to_string(i) + ": missing observation");
        break;
      }
      const auto& ob = r.observations[obs_i++];
      const int size = static_cast<int>(b - a + 1);
      o.require(ob.t_utc_ms == times[a] && ob.press_count == size && ob.irregular == (size > 2),
                "stream " + std::to_string(i) + ": observation mismatch");
    }
    o.require(obs_i == r.observations.size() && fp_i == r.false_positives.size(),
              "stream " + std::to_string(i) + ": extra output");
    for (const auto& ob : r.observations) seen.insert(seen.end(), ob.source_seqs.begin(), ob.source_seqs.end());
    for (const auto& fp : r.false_positives) seen.push_back(fp.seq);
    std::sort(seen.begin(), seen.end());
    std::vector<std::uint32_t> all(stream.size());
    for (std::uint32_t k = 0; k < all.size(); ++k) all[k] = k;
    o.require(seen == all, "stream " + std::to_string(i) + ": not a partition");
  }
  if (o.pass) o.detail = "10000 streams agree with the oracle, every press used once";
  return o;
}

struct PnData {
  DatasetConfig config;
  std::vector<Observation> observations;
  std::vector<Annotation> annotations;
};

PnData simulated_pn() {
  EventStore store;
  SimulateOptions options;
  simulate_pn(options, store);
  return {options.config, decode_store(store, options.config), plain_annotations(store.annotations())};
}

// 5. The gap week is excluded everywhere.
Outcome gap_exclusion(const PnData& pn) {
  Outcome o;
  const auto series = daily_series(pn.observations, pn.annotations, pn.config);
  const auto summary = weekday_summary(pn.observations, pn.annotations, pn.config);
  for (const auto& d : series.days) {
    const bool in_gap = d.day_index >= kPnGapFirstDay && d.day_index <= kPnGapLastDay;
    o.require(d.excluded == in_gap, "day " + std::to_string(d.day_index) + " exclusion wrong");
    o.require(d.count.has_value() != in_gap, "day " + std::to_string(d.day_index) + " count wrong");
  }
  // Each weekday sample must be exactly the counts of that weekday's
  // non-gap days, in day order.
  for (const auto& row : summary.rows) {
    std::vector<std::int64_t> expected;
    for (const auto& d : series.days)
      if (d.weekday == row.weekday && !d.excluded) expected.push_back(*d.count);
    o.require(row.sample == expected, std::string(to_string(row.weekday)) + " sample mismatch");
  }
  if (o.pass) o.detail = "days 8-14 excluded from the series and all 7 weekday samples";
  return o;
}

// 6. Hinges match the depth rule; weekends sit below weekdays.
Outcome box_plot(const PnData& pn) {
  Outcome o;
  Rng rng(6);
  for (int i = 0; i < 10'000 && o.pass; ++i) {
    std::vector<double> x(static_cast<std::size_t>(rng.uniform_int(1, 40)));
    for (auto& v : x) v = static_cast<double>(rng.uniform_int(0, 25));
    const auto s = box_stats(x);
    const auto ref = oracle::tukey_hinges(x);
    o.require(s && s->q1 == ref.lower && s->median == ref.median && s->q3 == ref.upper,
              "sample " + std::to_string(i) + ": hinge mismatch");
    if (!s) break;
    o.require(s->min <= s->whisker_low && s->whisker_low <= s->q1 && s->q1 <= s->median &&
                  s->median <= s->q3 && s->q3 <= s->whisker_high && s->whisker_high <= s->max,
              "sample " + std::to_string(i) + ": ordering violated");
  }
  const auto summary = weekday_summary(pn.observations, pn.annotations, pn.config);
  double weekday_min = 1e300, weekend_max = -1;
  for (const auto& row : summary.rows) {
    o.require(row.stats.has_value(), "empty weekday row");
    if (!row.stats) continue;
    if (is_weekend(row.weekday))
      weekend_max = std::max(weekend_max, row.stats->median);
    else
      weekday_min = std::min(weekday_min, row.stats->median);
  }
  o.require(weekend_max < weekday_min, "weekend median " + format_fixed(weekend_max, 1) +
                                           " not below weekday median " +
                                           format_fixed(weekday_min, 1));
  if (o.pass)
    o.detail = "10000 samples match; weekend medians <= " + format_fixed(weekend_max, 1) +
               " < weekday medians >= " + format_fixed(weekday_min, 1);
  return o;
}

// 7. Two runs with the same seed produce byte-identical files.
Outcome determinism() {
  Outcome o;
  std::vector<fs::path> dirs{scratch("c7a"), scratch("c7b")};
  for (const auto& dir : dirs) {
    o.require(cli({"simulate", "--seed", "42", "--out", dir.string(), "--transcript"}) == 0,
              "simulate failed");
    o.require(cli({"decode", "--in", (dir / "presses.csv").string(), "--data", dir.string(),
                   "--out", (dir / "observations.csv").string()}) == 0,
              "decode failed");
    for (std::string what : {"presses", "observations", "annotations"}) {
      for (std::string fmt : {"csv", "jsonl"}) {
        if (what == "observations" && fmt == "jsonl") continue;
        if (what == "annotations" && fmt == "csv") continue;
        o.require(cli({"export", "--data", dir.string(), "--what", what, "--format", fmt, "--out",
                       (dir / ("export_" + what + "." + fmt)).string()}) == 0,
                  "export " + what + " failed");
      }
    }
    for (std::string kind : {"hourly", "weekday", "daily"}) {
      o.require(cli({"report", kind, "--data", dir.string(), "--format", "csv", "--out",
                     (dir / ("report_" + kind + ".csv")).string()}) == 0,
                "report " + kind + " failed");
    }
  }
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    const auto name = entry.path().filename();
    const auto other = dirs[1] / name;
    o.require(fs::exists(other), name.string() + " missing in second run");
    o.require(slurp(entry.path()) == slurp(other), name.string() + " differs");
    ++files;
  }
  std::size_t files_b = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(dirs[1])) ++files_b;
  o.require(files == files_b, "runs produced different file sets");
  o.require(files >= 10, "only " + std::to_string(files) + " files compared");
  if (o.pass) o.detail = std::to_string(files) + " files byte-identical across two runs";
  for (const auto& dir : dirs) fs::remove_all(dir);
  return o;
}

}  // namespace

int main() {
  const PnData pn = simulated_pn();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"hourly table reproduced end to end", hourly_table},
      {"exactly-once delivery under faults", exactly_once},
      {"clock mapping within drift bound", clock_bound},
      {"decoder matches brute-force oracle", decoder_oracle},
      {"gap days excluded from reports", [&] { return gap_exclusion(pn); }},
      {"box statistics and weekday contrast", [&] { return box_plot(pn); }},
      {"byte-identical reruns", determinism},
  };
  int failures = 0;
  int index = 1;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d %s: %s (%s)\n", index++, outcome.pass ? "PASS" : "FAIL",
                name.c_str(), outcome.detail.c_str());
    failures += !outcome.pass;
  }
  std::fflush(stdout);
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}

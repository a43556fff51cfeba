#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "selftrack/analytics.hpp"
#include "selftrack/core.hpp"
#include "selftrack/decoder.hpp"
#include "selftrack/pipeline.hpp"
#include "selftrack/service.hpp"
#include "selftrack/store.hpp"

namespace selftrack::cli {

namespace fs = std::filesystem;

namespace {

/// Problems with the data or files, as opposed to the command line.
class DataError : public Error {
 public:
  using Error::Error;
};

struct ConfigFlags {
  std::optional<std::string> start_date;
  std::optional<int> utc_offset;
  std::optional<Millis> burst_gap_ms;

  void add_to(CLI::App* app) {
    app->add_option("--start-date", start_date, "Local date of day 1 (YYYY-MM-DD)");
    app->add_option("--utc-offset", utc_offset, "Fixed local offset in minutes")
        ->check(CLI::Range(-14 * 60, 14 * 60));
    app->add_option("--burst-gap-ms", burst_gap_ms, "Maximum gap inside one press burst")
        ->check(CLI::PositiveNumber);
  }

  DatasetConfig apply(DatasetConfig base) const {
    if (start_date) base.start_date = parse_date(*start_date);
    if (utc_offset) base.utc_offset_minutes = *utc_offset;
    if (burst_gap_ms) base.burst_gap_ms = *burst_gap_ms;
    base.validate();
    return base;
  }
};

struct RangeFlags {
  std::optional<Millis> from;
  std::optional<Millis> to;

  void add_to(CLI::App* app) {
    app->add_option("--from", from, "Range start, epoch ms (inclusive)");
    app->add_option("--to", to, "Range end, epoch ms (exclusive)");
  }
  TimeRange range() const {
    TimeRange r;
    if (from) r.from = *from;
    if (to) r.to = *to;
    return r;
  }
};

bool is_jsonl(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".jsonl" || ext == ".json" || ext == ".ndjson";
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  return in;
}

/// Writes to `path`, or to `out` when path is empty or "-".
void emit(const std::string& path, std::ostream& out, const std::string& content) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << content;
}

std::vector<RawPress> read_presses_file(const fs::path& p) {
  auto in = open_in(p);
  return is_jsonl(p) ? read_presses_jsonl(in) : read_presses_csv(in);
}

DayPeriod parse_period(const std::string& s) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(s);
    return DayPeriod{std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
  } catch (const std::logic_error&) {
    throw CLI::ValidationError("period", "expected FIRST:LAST day indices, got '" + s + "'");
  }
}

void remove_if_exists(const fs::path& p) {
  std::error_code ec;
  fs::remove(p, ec);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"One-button self-tracking pipeline: capture simulation, sync, decoding, reports"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate a scenario and sync it into a store");
  std::string scenario = "pn";
  std::uint64_t seed = 42;
  std::string sim_out;
  int drift_ppm = 0;
  double p_disconnect = 0.3;
  double drop_probability = 0.1;
  std::size_t capacity = 4096;
  bool transcript = false;
  ConfigFlags sim_config;
  simulate->add_option("--scenario", scenario, "Scenario name")->check(CLI::IsMember({"pn"}));
  simulate->add_option("--seed", seed, "Random seed");
  simulate->add_option("--out", sim_out, "Output data directory")->required();
  simulate->add_option("--drift-ppm", drift_ppm, "Device clock drift")->check(CLI::Range(-1000, 1000));
  simulate->add_option("--disconnect-prob", p_disconnect, "Per-hour disconnect probability")
      ->check(CLI::Range(0.0, 0.99));
  simulate->add_option("--drop-prob", drop_probability, "Per-message drop probability")
      ->check(CLI::Range(0.0, 0.9));
  simulate->add_option("--capacity", capacity, "Device buffer capacity")->check(CLI::PositiveNumber);
  simulate->add_flag("--transcript", transcript, "Write every protocol message to transcript.log");
  sim_config.add_to(simulate);

  // decode
  auto* decode_cmd = app.add_subcommand("decode", "Decode a press file into observations");
  std::string decode_in, decode_out, decode_data;
  ConfigFlags decode_config;
  decode_cmd->add_option("--in", decode_in, "Press file (.csv or .jsonl)")->required();
  decode_cmd->add_option("--out", decode_out, "Observation CSV (default stdout)");
  decode_cmd->add_option("--data", decode_data, "Data directory supplying config.json");
  decode_config.add_to(decode_cmd);

  // report
  auto* report = app.add_subcommand("report", "Hourly, weekday, daily or period reports");
  std::string report_kind;
  std::string report_data, report_obs, report_ann, report_format = "csv", report_out;
  std::string period_a, period_b;
  ConfigFlags report_config;
  RangeFlags report_range;
  report->add_option("kind", report_kind, "hourly|weekday|daily|compare")
      ->required()
      ->check(CLI::IsMember({"hourly", "weekday", "daily", "compare"}));
  report->add_option("--data", report_data, "Data directory");
  report->add_option("--observations", report_obs, "Observation CSV instead of decoding the store");
  report->add_option("--annotations", report_ann, "Annotation JSONL instead of the store's");
  report->add_option("--format", report_format, "csv or table")->check(CLI::IsMember({"csv", "table"}));
  report->add_option("--out", report_out, "Output file (default stdout)");
  report->add_option("--a", period_a, "First period FIRST:LAST (compare)");
  report->add_option("--b", period_b, "Second period FIRST:LAST (compare)");
  report_config.add_to(report);
  report_range.add_to(report);

  // export
  auto* export_cmd = app.add_subcommand("export", "Export store contents");
  std::string export_data, export_what = "presses", export_format = "csv", export_out;
  RangeFlags export_range;
  export_cmd->add_option("--data", export_data, "Data directory")->required();
  export_cmd->add_option("--what", export_what, "presses|observations|annotations")
      ->check(CLI::IsMember({"presses", "observations", "annotations"}));
  export_cmd->add_option("--format", export_format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  export_cmd->add_option("--out", export_out, "Output file (default stdout)");
  export_range.add_to(export_cmd);

  // import
  auto* import_cmd = app.add_subcommand("import", "Import presses or annotations into a store");
  std::string import_data, import_in, import_what = "presses";
  import_cmd->add_option("--data", import_data, "Data directory")->required();
  import_cmd->add_option("--in", import_in, "Input file")->required();
  import_cmd->add_option("--what", import_what, "presses|annotations")
      ->check(CLI::IsMember({"presses", "annotations"}));

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API over a data directory");
  std::string serve_data, serve_host = "127.0.0.1";
  std::optional<int> serve_port;
  serve_cmd->add_option("--data", serve_data, "Data directory")->required();
  serve_cmd->add_option("--host", serve_host, "Listen address");
  serve_cmd->add_option("--port", serve_port, "Listen port (default $OBS_PORT or 8080)")
      ->check(CLI::Range(1, 65535));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      const DataDir dir{sim_out};
      fs::create_directories(dir.root);
      SimulateOptions options;
      options.seed = seed;
      options.config = sim_config.apply(pn_config());
      options.drift_ppm = drift_ppm;
      options.p_disconnect = p_disconnect;
      options.drop_probability = drop_probability;
      options.buffer_capacity = capacity;
      options.record_messages = transcript;
      for (const auto& p : {dir.store_log(), dir.presses_csv(), dir.annotations(), dir.transcript()})
        remove_if_exists(p);

      write_config(dir.config(), options.config);
      EventStore store(dir.store_log());
      const auto result = simulate_pn(options, store);

      const auto presses = store.presses();
      {
        std::ofstream f(dir.presses_csv(), std::ios::binary);
        write_presses_csv(f, presses);
      }
      {
        std::ofstream f(dir.annotations(), std::ios::binary);
        write_annotations_jsonl(f, plain_annotations(store.annotations()));
      }
      if (transcript) {
        std::ofstream f(dir.transcript(), std::ios::binary);
        for (const auto& line : result.transcript.messages) f << line << '\n';
      }
      const auto& t = result.transcript;
      out << "pressed " << result.scenario.press_times.size() << ", stored " << presses.size()
          << ", evicted " << result.evicted.size() << "\n"
          << "connections " << t.connections << ", batches " << t.batches_sent << " sent / "
          << t.batches_delivered << " delivered, messages dropped " << t.messages_dropped << "\n"
          << "annotations " << result.scenario.annotations.size() << "\n";
      return kExitOk;
    }

    if (decode_cmd->parsed()) {
      DatasetConfig base;
      if (!decode_data.empty()) base = read_config(DataDir{decode_data}.config());
      const auto config = decode_config.apply(base);
      const auto presses = sorted_for_decode(read_presses_file(decode_in));
      const auto result = decode(presses, config.burst_gap_ms);
      std::ostringstream ss;
      write_observations_csv(ss, result.observations, config);
      emit(decode_out, out, ss.str());
      if (!decode_out.empty() && decode_out != "-") {
        out << "observations " << result.observations.size() << ", false positives "
            << result.false_positives.size() << "\n";
      }
      return kExitOk;
    }

    if (report->parsed()) {
      if (report_data.empty() && report_obs.empty())
        throw CLI::ValidationError("report", "needs --data or --observations");
      DatasetConfig base;
      std::optional<EventStore> store;
      if (!report_data.empty()) {
        const DataDir dir{report_data};
        if (!fs::exists(dir.root)) throw DataError("no data directory " + report_data);
        base = read_config(dir.config());
        store.emplace(dir.store_log());
      }
      const auto config = report_config.apply(base);

      std::vector<Observation> observations;
      if (!report_obs.empty()) {
        auto in = open_in(report_obs);
        observations = read_observations_csv(in);
      } else {
        observations = decode_store(*store, config);
      }
      const auto range = report_range.range();
      std::erase_if(observations, [&](const Observation& o) { return !range.contains(o.t_utc_ms); });

      std::vector<Annotation> annotations;
      if (!report_ann.empty()) {
        auto in = open_in(report_ann);
        annotations = read_annotations_jsonl(in);
      } else if (store) {
        annotations = plain_annotations(store->annotations());
      }

      const bool table = report_format == "table";
      std::ostringstream ss;
      if (report_kind == "hourly") {
        const auto h = hourly(observations, config);
        table ? write_hourly_table(ss, h) : write_hourly_csv(ss, h);
      } else if (report_kind == "weekday") {
        const auto s = weekday_summary(observations, annotations, config);
        table ? write_weekday_table(ss, s) : write_weekday_csv(ss, s);
      } else if (report_kind == "daily") {
        const auto s = daily_series(observations, annotations, config);
        table ? write_daily_table(ss, s) : write_daily_csv(ss, s);
      } else {
        if (period_a.empty() || period_b.empty())
          throw CLI::ValidationError("compare", "needs --a and --b");
        const auto a = parse_period(period_a);
        const auto b = parse_period(period_b);
        const auto c = period_compare(observations, annotations, config, a, b);
        table ? write_compare_table(ss, c, a, b) : write_compare_csv(ss, c, a, b);
      }
      emit(report_out, out, ss.str());
      return kExitOk;
    }

    if (export_cmd->parsed()) {
      const DataDir dir{export_data};
      if (!fs::exists(dir.store_log())) throw DataError("no store in " + export_data);
      const auto config = read_config(dir.config());
      EventStore store(dir.store_log());
      const auto range = export_range.range();
      std::ostringstream ss;
      if (export_what == "presses") {
        const auto presses = store.presses(range);
        export_format == "csv" ? write_presses_csv(ss, presses) : write_presses_jsonl(ss, presses);
      } else if (export_what == "observations") {
        if (export_format != "csv") throw CLI::ValidationError("export", "observations export as csv");
        auto obs = decode_store(store, config);
        std::erase_if(obs, [&](const Observation& o) { return !range.contains(o.t_utc_ms); });
        write_observations_csv(ss, obs, config);
      } else {
        if (export_format != "jsonl") throw CLI::ValidationError("export", "annotations export as jsonl");
        write_annotations_jsonl(ss, plain_annotations(store.annotations(range)));
      }
      emit(export_out, out, ss.str());
      return kExitOk;
    }

    if (import_cmd->parsed()) {
      const DataDir dir{import_data};
      fs::create_directories(dir.root);
      EventStore store(dir.store_log());
      if (import_what == "presses") {
        const auto presses = read_presses_file(import_in);
        const auto before = store.press_count();
        store.append_presses(presses);
        out << "imported " << store.press_count() - before << " of " << presses.size()
            << " presses\n";
      } else {
        auto in = open_in(import_in);
        const auto annotations = read_annotations_jsonl(in);
        for (const auto& a : annotations) store.append_annotation(a);
        out << "imported " << annotations.size() << " annotations\n";
      }
      return kExitOk;
    }

    if (serve_cmd->parsed()) {
      const DataDir dir{serve_data};
      fs::create_directories(dir.root);
      const auto config = read_config(dir.config());
      EventStore store(dir.store_log());
      Service service(store, config);
      const int port = resolve_port(serve_port);
      err << "listening on " << serve_host << ":" << port << "\n";
      if (!serve(service, serve_host, port)) throw DataError("cannot listen on port " + std::to_string(port));
      return kExitOk;
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace selftrack::cli

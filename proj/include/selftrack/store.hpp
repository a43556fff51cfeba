// Append-only event store and the export/import file formats.
//
// Backing storage is a single line-delimited JSON log; the full state is an
// in-memory index rebuilt by replaying the log on open.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "selftrack/core.hpp"

namespace selftrack {

using RecordId = std::uint64_t;

/// Presses a device evicted before delivering them; detected by the host
/// as a hole in the seq stream.
struct OverflowGap {
  std::string device_id;
  std::uint32_t first_seq = 0;
  std::uint32_t last_seq = 0;
  Millis detected_utc_ms = 0;

  friend bool operator==(const OverflowGap&, const OverflowGap&) = default;
};

/// Half-open [from, to).
struct TimeRange {
  Millis from = std::numeric_limits<Millis>::min();
  Millis to = std::numeric_limits<Millis>::max();

  bool empty() const { return from >= to; }
  bool contains(Millis t) const { return from <= t && t < to; }
  /// Overlap test for a half-open [start, end); a zero-length record
  /// overlaps when its instant is contained.
  bool overlaps(Millis start, Millis end) const {
    if (empty()) return false;
    if (start == end) return contains(start);
    return start < to && end > from;
  }
};

struct StoredAnnotation {
  RecordId id = 0;
  Annotation annotation;
};

class EventStore {
 public:
  /// Volatile store with no backing file.
  EventStore();
  /// Opens (creating if needed) the log at `path` and replays it.
  explicit EventStore(const std::filesystem::path& path);

  EventStore(const EventStore&) = delete;
  EventStore& operator=(const EventStore&) = delete;

  /// Ids of the stored rows, one per input. A press whose (device_id, seq)
  /// already exists is not stored again; its existing id is returned.
  std::vector<RecordId> append_presses(std::span<const RawPress> presses);
  RecordId append_annotation(const Annotation& a);
  RecordId append_gap(const OverflowGap& gap);

  /// Presses with t in range, ordered by (t_utc_ms, seq, device_id).
  std::vector<RawPress> presses(TimeRange range = {},
                                const std::optional<std::string>& device_id = {}) const;
  /// Annotations overlapping range, ordered by (start, end, id).
  std::vector<StoredAnnotation> annotations(TimeRange range = {},
                                            std::optional<AnnotationKind> kind = {}) const;
  std::vector<OverflowGap> overflow_gaps() const;

  std::vector<std::string> devices() const;
  bool has_device(const std::string& device_id) const;
  /// Highest stored seq for the device, or -1.
  std::int64_t max_seq(const std::string& device_id) const;
  std::size_t press_count() const;

 private:
  void replay(std::istream& in);
  void write_line(const std::string& line);

  mutable std::shared_mutex mutex_;
  std::optional<std::ofstream> log_;
  RecordId next_id_ = 1;
  std::map<std::pair<std::string, std::uint32_t>, std::pair<RecordId, RawPress>> presses_;
  std::vector<StoredAnnotation> annotations_;
  std::vector<OverflowGap> gaps_;
};

// ---------------------------------------------------------------------------
// Interchange formats. All writers emit '\n' line endings and decimal
// integer timestamps, and are byte-stable for identical inputs.

/// `device_id,seq,boot_id,t_utc_ms,quality`, ordered by (device_id, seq).
void write_presses_csv(std::ostream& out, std::span<const RawPress> presses);
/// Same rows as one JSON object per line.
void write_presses_jsonl(std::ostream& out, std::span<const RawPress> presses);
/// The files carry no uptime; imported presses have uptime_ms 0.
std::vector<RawPress> read_presses_csv(std::istream& in);
std::vector<RawPress> read_presses_jsonl(std::istream& in);

/// `t_utc_ms,local_date,local_time,press_count,irregular`; irregular is 0/1.
void write_observations_csv(std::ostream& out, std::span<const Observation> observations,
                            const DatasetConfig& config);
/// Source seqs are not part of the file and come back empty.
std::vector<Observation> read_observations_csv(std::istream& in);

void write_annotations_jsonl(std::ostream& out, std::span<const Annotation> annotations);
std::vector<Annotation> read_annotations_jsonl(std::istream& in);

std::string annotation_to_json(const Annotation& a);
/// Throws ParseError on malformed input (not on semantic problems; see
/// validate_annotation).
Annotation annotation_from_json(std::string_view text);

}  // namespace selftrack

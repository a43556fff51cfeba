// End-to-end plumbing shared by the CLI, the service and the tests: the
// on-disk data directory and the simulated PN capture run.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "selftrack/core.hpp"
#include "selftrack/scenario.hpp"
#include "selftrack/store.hpp"
#include "selftrack/sync.hpp"

namespace selftrack {

/// Layout of a dataset directory.
struct DataDir {
  std::filesystem::path root;

  std::filesystem::path store_log() const { return root / "store.log"; }
  std::filesystem::path config() const { return root / "config.json"; }
  std::filesystem::path presses_csv() const { return root / "presses.csv"; }
  std::filesystem::path annotations() const { return root / "annotations.jsonl"; }
  std::filesystem::path transcript() const { return root / "transcript.log"; }
};

std::string config_to_json(const DatasetConfig& config);
DatasetConfig config_from_json(std::string_view text);
void write_config(const std::filesystem::path& path, const DatasetConfig& config);
/// Defaults when the file is absent.
DatasetConfig read_config(const std::filesystem::path& path);

struct SimulateOptions {
  std::uint64_t seed = 42;
  DatasetConfig config = pn_config();
  std::string device_id = "pn-button";
  int drift_ppm = 0;
  std::size_t buffer_capacity = 4096;
  double p_disconnect = 0.3;
  double drop_probability = 0.1;
  bool record_messages = false;
};

struct SimulateResult {
  PnScenario scenario;
  Transcript transcript;
  std::vector<std::uint32_t> evicted;
};

/// Generates the PN scenario, replays its presses through a simulated
/// button over a seeded hourly link schedule into `store`, and appends the
/// scenario annotations.
SimulateResult simulate_pn(const SimulateOptions& options, EventStore& store);

/// Decodes every press in the store with the dataset's burst gap.
std::vector<Observation> decode_store(const EventStore& store, const DatasetConfig& config);

std::vector<Annotation> plain_annotations(const std::vector<StoredAnnotation>& stored);

}  // namespace selftrack

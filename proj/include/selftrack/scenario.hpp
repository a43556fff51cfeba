// Deterministic synthetic reconstruction of the PN case dataset.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "selftrack/core.hpp"

namespace selftrack {

/// Observations per local hour of day, 0..23, over the 100-day case.
inline constexpr std::array<int, 24> kPnHourlyCounts{11, 3,  0,  7,  2,  8,  16, 14,
                                                     32, 30, 20, 40, 67, 33, 53, 30,
                                                     61, 44, 24, 54, 36, 15, 38, 9};
inline constexpr int kPnObservations = 647;
inline constexpr int kPnSessions = 25;
inline constexpr int kPnDays = 100;
/// Days with no data (the second week).
inline constexpr int kPnGapFirstDay = 8;
inline constexpr int kPnGapLastDay = 14;
/// Acute crisis window and the stretch it is compared against.
inline constexpr int kPnCrisisFirstDay = 43;
inline constexpr int kPnCrisisLastDay = 72;
inline constexpr int kPnBaselineFirstDay = 15;
inline constexpr int kPnBaselineLastDay = 42;
/// Phone consultations ran from week 7 into week 11; no sessions then.
inline constexpr int kPnPhoneFirstWeek = 7;
inline constexpr int kPnPhoneLastWeek = 11;
inline constexpr Millis kPnPairGapMinMs = 300;
inline constexpr Millis kPnPairGapMaxMs = 1200;
/// round(5% of 647) stray single presses.
inline constexpr int kPnSinglePresses = 32;

struct PnScenario {
  DatasetConfig config;
  /// True press instants, ascending.
  std::vector<Millis> press_times;
  std::vector<Annotation> annotations;
};

/// Generates a press log and annotations satisfying every PN constraint
/// (see check_pn_constraints). Deterministic in (seed, config). Throws
/// InfeasibleConstraints unless config has 100 days and a burst gap that
/// keeps a 1200 ms pair together.
PnScenario generate_pn(std::uint64_t seed, const DatasetConfig& config);

/// The presses a perfectly synchronized device would deliver for
/// `press_times`: one boot, ascending seq, anchored exact times.
std::vector<RawPress> ideal_capture(std::span<const Millis> press_times,
                                    const std::string& device_id);

/// Failed constraints, empty when the dataset has the PN shape. Works from
/// the stored presses and annotations alone.
std::vector<std::string> check_pn_constraints(std::span<const RawPress> presses,
                                              std::span<const Annotation> annotations,
                                              const DatasetConfig& config);

}  // namespace selftrack

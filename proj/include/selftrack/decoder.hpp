// Press-pattern decoding: two (or more) presses in quick succession mark
// one occurrence; a lone press is a false positive.

#pragma once

#include <span>
#include <vector>

#include "selftrack/core.hpp"

namespace selftrack {

struct DecodeResult {
  std::vector<Observation> observations;
  std::vector<RawPress> false_positives;
};

/// Groups presses into maximal bursts whose consecutive gaps are all
/// <= burst_gap_ms. A burst of n >= 2 presses is one observation stamped at
/// its first press (irregular when n > 2); singletons are false positives.
///
/// Input must be ordered by (t_utc_ms, seq); throws UnsortedInput otherwise.
DecodeResult decode(std::span<const RawPress> presses, Millis burst_gap_ms);

/// Sorts a copy of `presses` into decode order.
std::vector<RawPress> sorted_for_decode(std::span<const RawPress> presses);

}  // namespace selftrack

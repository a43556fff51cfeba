#include "selftrack/decoder.hpp"

#include <algorithm>
#include <tuple>

namespace selftrack {

namespace {

bool decode_less(const RawPress& a, const RawPress& b) {
  return std::tie(a.t_utc_ms, a.seq) < std::tie(b.t_utc_ms, b.seq);
}

}  // namespace

DecodeResult decode(std::span<const RawPress> presses, Millis burst_gap_ms) {
  if (burst_gap_ms <= 0) throw Error("burst gap must be positive");
  for (std::size_t i = 1; i < presses.size(); ++i) {
    if (decode_less(presses[i], presses[i - 1]))
      throw UnsortedInput("presses are not ordered by (t_utc_ms, seq)");
  }

  DecodeResult out;
  std::size_t begin = 0;
  while (begin < presses.size()) {
    std::size_t end = begin + 1;
    while (end < presses.size() &&
           presses[end].t_utc_ms - presses[end - 1].t_utc_ms <= burst_gap_ms) {
      ++end;
    }
    const auto size = end - begin;
    if (size == 1) {
      out.false_positives.push_back(presses[begin]);
    } else {
      Observation o;
      o.t_utc_ms = presses[begin].t_utc_ms;
      o.press_count = static_cast<int>(size);
      o.irregular = size > 2;
      o.source_seqs.reserve(size);
      for (auto i = begin; i < end; ++i) o.source_seqs.push_back(presses[i].seq);
      out.observations.push_back(std::move(o));
    }
    begin = end;
  }
  return out;
}

std::vector<RawPress> sorted_for_decode(std::span<const RawPress> presses) {
  std::vector<RawPress> out(presses.begin(), presses.end());
  std::stable_sort(out.begin(), out.end(), decode_less);
  return out;
}

}  // namespace selftrack

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "apxpart/partition.hpp"
#include "apxpart/structdsl.hpp"

namespace apxpart {

// DDR3-1600J reference values.
inline constexpr double kSpecTrcdNs = 12.5;
inline constexpr double kSpecTrefMs = 64.0;
inline constexpr double kSpecTcasNs = 12.5;

struct TimingParams {
  double trcd_ns = kSpecTrcdNs;
  double tref_ms = kSpecTrefMs;
  double tcas_ns = kSpecTcasNs;
  // Aggregate time the device spends refreshing during one tREF period.
  double trfc_total_ms = 0.0;

  [[nodiscard]] double refresh_overhead() const { return trfc_total_ms / tref_ms; }
  [[nodiscard]] bool is_spec() const { return trcd_ns == kSpecTrcdNs && tref_ms == kSpecTrefMs; }
  // Throws InputError unless every value is positive (trfc_total >= 0) and
  // the refresh overhead fraction is below 1.
  void validate() const;

  bool operator==(const TimingParams&) const = default;
};

struct RegionConfig {
  std::string name;
  std::uint64_t base = 0;
  std::uint64_t size = 0;
  std::uint64_t row_size = 4096;
  TimingParams timing;
  double bit_error_rate = 0.0;

  // Throws InputError when base/size are not whole rows, the error rate is
  // outside [0, 1], a spec-timing region has a nonzero error rate, or the
  // timing is tighter than spec in the wrong direction (tRCD above spec or
  // tREF below it).
  void validate() const;

  bool operator==(const RegionConfig&) const = default;
};

// Region file, one region per line:
//   region NAME base 0x... size N row_size 4096 trcd 7.5 tref 128 tcas 12.5 trfc_total 0.5 ber 1e-6
// Keys may appear in any order; omitted keys keep their defaults. '#'
// starts a comment. Every region is validated.
[[nodiscard]] std::vector<RegionConfig> parse_regions(std::string_view text);

// First-order read latency: (tRCD + tCAS) / (1 - f), f = trfc_total / tREF.
[[nodiscard]] double effective_latency(const TimingParams& params);

// `params` with tRCD and tREF put back to their spec values; tCAS and the
// refresh busy time are kept, so the two differ only in the relaxed timings.
[[nodiscard]] TimingParams spec_counterpart(const TimingParams& params);

// 1 - latency(relaxed) / latency(reference).
[[nodiscard]] double latency_reduction(const TimingParams& reference, const TimingParams& relaxed);

struct BitFlip {
  std::uint64_t byte = 0;
  std::uint8_t bit = 0;  // 0 = least significant

  auto operator<=>(const BitFlip&) const = default;
};

struct InjectionResult {
  std::vector<std::uint8_t> data;
  std::vector<BitFlip> flips;  // ascending
};

// Flips each bit independently with probability region.bit_error_rate.
// Bits are visited byte by byte, least significant bit first; each consumes
// one draw of mt19937_64(seed) and flips when (draw >> 11) * 2^-53 < p.
// Throws InputError when data is larger than the region.
[[nodiscard]] InjectionResult inject_errors(std::span<const std::uint8_t> data, const RegionConfig& region,
                                            std::uint64_t seed);

enum class FlipClass { CriticalViolation, Approximate, Padding };

[[nodiscard]] std::string_view to_string(FlipClass c);

struct FlipFinding {
  BitFlip flip;
  FlipClass klass;
  std::uint64_t element = 0;
  std::string member;  // empty for padding
  bool untagged = false;  // approximate only because no tag said otherwise
};

struct CriticalityReport {
  std::vector<FlipFinding> findings;

  [[nodiscard]] std::size_t count(FlipClass c) const;
  [[nodiscard]] std::size_t violations() const { return count(FlipClass::CriticalViolation); }
};

// Maps each flip (byte offset from the start of an array of `layout`
// elements spaced `element_stride` apart) to its member. Flips in critical
// members are violations; flips in approximate or untagged members are
// benign; flips between members are padding.
[[nodiscard]] CriticalityReport criticality_check(std::span<const BitFlip> flips, const FlattenedLayout& layout,
                                                  std::uint64_t element_stride, const CriticalityTags& tags);

}  // namespace apxpart

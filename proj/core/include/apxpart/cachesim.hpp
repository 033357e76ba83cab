#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "apxpart/trace.hpp"

namespace apxpart {

// Single-level, write-allocate, LRU set-associative cache.
struct CacheConfig {
  std::uint64_t line_size = 64;
  std::uint64_t sets = 64;
  std::uint64_t ways = 8;

  [[nodiscard]] std::uint64_t capacity() const { return line_size * sets * ways; }
  // Throws InputError unless line_size and sets are powers of two and ways >= 1.
  void validate() const;

  bool operator==(const CacheConfig&) const = default;
};

struct TypeMisses {
  std::map<std::string, std::uint64_t> by_type;
  std::uint64_t unlabeled = 0;

  bool operator==(const TypeMisses&) const = default;
};

// Every line lookup counts as one access; an access that straddles k lines
// contributes k lookups (and up to k misses) to its instruction and label.
struct MissStats {
  std::uint64_t total_accesses = 0;
  std::uint64_t total_misses = 0;
  std::uint64_t read_accesses = 0;
  std::uint64_t read_misses = 0;
  std::map<InstrId, std::uint64_t> per_instr_misses;
  std::map<Label, std::uint64_t> per_label_misses;
  // Misses of each instruction broken down by label type.
  std::map<InstrId, TypeMisses> per_instr_type_misses;

  [[nodiscard]] double miss_rate() const {
    return total_accesses == 0 ? 0.0 : static_cast<double>(total_misses) / static_cast<double>(total_accesses);
  }
  [[nodiscard]] double read_miss_rate() const {
    return read_accesses == 0 ? 0.0 : static_cast<double>(read_misses) / static_cast<double>(read_accesses);
  }

  bool operator==(const MissStats&) const = default;
};

// Cold-start simulation; set index = (addr / line_size) mod sets.
[[nodiscard]] MissStats simulate(const Trace& trace, const CacheConfig& config);

struct TargetInstruction {
  InstrId id;
  std::uint64_t misses = 0;
  double share = 0.0;  // of total misses
};

// The instruction with the most misses, smallest id on ties. Throws
// AnalysisError when the trace produced no misses.
[[nodiscard]] TargetInstruction target_instruction(const MissStats& stats);

struct TargetType {
  // nullopt when most of the target instruction's misses carry no label.
  std::optional<std::string> type_name;
  double share = 0.0;  // of the target instruction's misses
  std::vector<std::string> notes;
};

// Majority label type among the target instruction's missing accesses (ties
// go to the lexicographically smallest name). Throws AnalysisError when the
// instruction has no misses or never appears in `trace`.
[[nodiscard]] TargetType target_data_type(const MissStats& stats, const Trace& trace);

// "33.7% (48.6%)": miss rate, then the top instruction's share of misses.
[[nodiscard]] std::string format_rate_share(double miss_rate, double share);
[[nodiscard]] std::string format_percent(double fraction);

}  // namespace apxpart

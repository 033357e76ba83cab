#include "apxpart/cachesim.hpp"

#include <algorithm>
#include <bit>

#include <fmt/format.h>

#include "apxpart/error.hpp"

namespace apxpart {

namespace {

constexpr const char* kModule = "cachesim";

// Per-set tag array kept in recency order (index 0 = most recently used).
class LruCache {
 public:
  explicit LruCache(const CacheConfig& config)
      : ways_(config.ways), sets_(config.sets), tags_(config.sets * config.ways), fill_(config.sets, 0) {}

  // Returns true on a hit. On a miss the line is inserted, evicting the LRU
  // way when the set is full.
  bool access(std::uint64_t line) {
    const std::uint64_t set = line % sets_;
    std::uint64_t* first = tags_.data() + set * ways_;
    std::uint64_t& fill = fill_[set];
    std::uint64_t* last = first + fill;
    std::uint64_t* hit = std::find(first, last, line);
    if (hit != last) {
      std::rotate(first, hit, hit + 1);
      return true;
    }
    if (fill < ways_) ++fill;
    std::copy_backward(first, first + fill - 1, first + fill);
    *first = line;
    return false;
  }

 private:
  std::uint64_t ways_;
  std::uint64_t sets_;
  std::vector<std::uint64_t> tags_;
  std::vector<std::uint64_t> fill_;
};

}  // namespace

void CacheConfig::validate() const {
  if (line_size == 0 || !std::has_single_bit(line_size)) {
    throw InputError(kModule, "line size must be a power of two, got " + std::to_string(line_size));
  }
  if (sets == 0 || !std::has_single_bit(sets)) {
    throw InputError(kModule, "set count must be a power of two, got " + std::to_string(sets));
  }
  if (ways == 0) throw InputError(kModule, "way count must be at least 1");
}

MissStats simulate(const Trace& trace, const CacheConfig& config) {
  config.validate();
  LruCache cache(config);
  MissStats stats;
  for (const auto& access : trace.accesses) {
    const std::uint64_t first_line = access.vaddr / config.line_size;
    const std::uint64_t last_line = (access.vaddr + access.size - 1) / config.line_size;
    const bool is_read = access.kind == AccessKind::Read;
    for (std::uint64_t line = first_line; line <= last_line; ++line) {
      ++stats.total_accesses;
      if (is_read) ++stats.read_accesses;
      if (cache.access(line)) continue;
      ++stats.total_misses;
      if (is_read) ++stats.read_misses;
      ++stats.per_instr_misses[access.instr];
      auto& by_type = stats.per_instr_type_misses[access.instr];
      if (access.label) {
        ++stats.per_label_misses[*access.label];
        ++by_type.by_type[access.label->type];
      } else {
        ++by_type.unlabeled;
      }
    }
  }
  return stats;
}

TargetInstruction target_instruction(const MissStats& stats) {
  if (stats.total_misses == 0) throw AnalysisError(kModule, "no cache misses, so there is no target instruction");
  TargetInstruction best;
  bool found = false;
  // std::map iterates in ascending id order, so strict '>' keeps the smallest id on ties.
  for (const auto& [id, misses] : stats.per_instr_misses) {
    if (!found || misses > best.misses) {
      best.id = id;
      best.misses = misses;
      found = true;
    }
  }
  best.share = static_cast<double>(best.misses) / static_cast<double>(stats.total_misses);
  return best;
}

TargetType target_data_type(const MissStats& stats, const Trace& trace) {
  const TargetInstruction target = target_instruction(stats);
  const bool present = std::any_of(trace.accesses.begin(), trace.accesses.end(),
                                   [&](const MemoryAccess& a) { return a.instr == target.id; });
  if (!present) {
    throw AnalysisError(kModule, "target instruction " + std::to_string(target.id.value) +
                                     " does not appear in the trace");
  }
  const auto it = stats.per_instr_type_misses.find(target.id);
  const TypeMisses breakdown = it == stats.per_instr_type_misses.end() ? TypeMisses{} : it->second;

  TargetType out;
  std::string best_type;
  std::uint64_t best = 0;
  for (const auto& [type, misses] : breakdown.by_type) {
    if (misses > best) {
      best = misses;
      best_type = type;
    }
  }
  const double total = static_cast<double>(target.misses);
  if (best == 0 || breakdown.unlabeled > best) {
    out.share = static_cast<double>(breakdown.unlabeled) / total;
    out.notes.push_back(fmt::format("{} of the target instruction's misses are unlabeled; type is unknown",
                                    format_percent(out.share)));
    return out;
  }
  out.type_name = best_type;
  out.share = static_cast<double>(best) / total;
  if (breakdown.by_type.size() > 1 || breakdown.unlabeled > 0) {
    std::string split;
    for (const auto& [type, misses] : breakdown.by_type) {
      if (!split.empty()) split += ", ";
      split += fmt::format("{} {}", type, format_percent(static_cast<double>(misses) / total));
    }
    if (breakdown.unlabeled > 0) {
      split += fmt::format(", unlabeled {}", format_percent(static_cast<double>(breakdown.unlabeled) / total));
    }
    out.notes.push_back("target instruction misses split across types: " + split);
  }
  return out;
}

std::string format_percent(double fraction) { return fmt::format("{:.1f}%", fraction * 100.0); }

std::string format_rate_share(double miss_rate, double share) {
  return format_percent(miss_rate) + " (" + format_percent(share) + ")";
}

}  // namespace apxpart

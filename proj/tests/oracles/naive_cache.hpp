#pragma once

// Reference LRU model written independently of the simulator: every set is a
// list of (line, last use time) pairs and eviction scans for the oldest.

#include <cstdint>
#include <vector>

#include "apxpart/trace.hpp"

namespace apxpart::oracle {

struct NaiveResult {
  std::uint64_t lookups = 0;
  std::uint64_t misses = 0;
  std::vector<bool> line_missed;  // one flag per lookup, in order
};

inline NaiveResult naive_lru(const Trace& trace, std::uint64_t line_size, std::uint64_t sets, std::uint64_t ways) {
  struct Slot {
    std::uint64_t line;
    std::uint64_t used;
  };
  std::vector<std::vector<Slot>> cache(sets);
  NaiveResult out;
  std::uint64_t clock = 0;
  for (const auto& a : trace.accesses) {
    for (std::uint64_t byte = a.vaddr; byte < a.vaddr + a.size; ++byte) {
      // One lookup per distinct line touched.
      if (byte != a.vaddr && byte % line_size != 0) continue;
      const std::uint64_t line = byte / line_size;
      auto& set = cache[line % sets];
      ++clock;
      ++out.lookups;
      bool hit = false;
      for (auto& slot : set) {
        if (slot.line == line) {
          slot.used = clock;
          hit = true;
        }
      }
      out.line_missed.push_back(!hit);
      if (hit) continue;
      ++out.misses;
      if (set.size() < ways) {
        set.push_back({line, clock});
        continue;
      }
      std::size_t oldest = 0;
      for (std::size_t i = 1; i < set.size(); ++i) {
        if (set[i].used < set[oldest].used) oldest = i;
      }
      set[oldest] = {line, clock};
    }
  }
  return out;
}

}  // namespace apxpart::oracle

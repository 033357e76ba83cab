#pragma once

// Brute-force affinity straight from the pair definition: examine every
// position pair and count the accesses between them.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "apxpart/trace.hpp"

namespace apxpart::oracle {

using PairCounts = std::map<std::pair<std::string, std::string>, std::uint64_t>;

inline PairCounts naive_affinity(const Trace& trace, const std::string& type, std::uint64_t threshold) {
  std::vector<std::string> seq;
  for (const auto& a : trace.accesses) {
    if (a.label && a.label->type == type) seq.push_back(a.label->member);
  }
  PairCounts counts;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    for (std::size_t j = i + 1; j < seq.size(); ++j) {
      if (seq[i] == seq[j]) continue;
      bool blocked = false;
      std::uint64_t others = 0;
      for (std::size_t k = i + 1; k < j; ++k) {
        if (seq[k] == seq[i] || seq[k] == seq[j]) {
          blocked = true;
          break;
        }
        ++others;
      }
      if (blocked || others >= threshold) continue;
      const auto key = std::minmax(seq[i], seq[j]);
      ++counts[{key.first, key.second}];
    }
  }
  return counts;
}

}  // namespace apxpart::oracle

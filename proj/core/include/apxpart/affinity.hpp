#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "apxpart/trace.hpp"

namespace apxpart {

// Symmetric pair counts between the members of one type. `members` is sorted
// lexicographically; counts is row-major members.size() x members.size().
class AffinityMatrix {
 public:
  AffinityMatrix() = default;
  explicit AffinityMatrix(std::vector<std::string> members);
  // Rebuilds a matrix from stored counts; throws InputError on a size mismatch.
  AffinityMatrix(std::vector<std::string> members, std::vector<std::uint64_t> counts);

  [[nodiscard]] const std::vector<std::string>& members() const noexcept { return members_; }
  [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
  [[nodiscard]] const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  [[nodiscard]] std::uint64_t at(std::size_t u, std::size_t v) const { return counts_[u * members_.size() + v]; }
  // Count for a pair of member paths; 0 when either is absent.
  [[nodiscard]] std::uint64_t count(std::string_view u, std::string_view v) const;
  [[nodiscard]] std::size_t index_of(std::string_view member) const;  // npos when absent

  void increment(std::size_t u, std::size_t v);

  bool operator==(const AffinityMatrix&) const = default;

 private:
  std::vector<std::string> members_;
  std::vector<std::uint64_t> counts_;
};

// Access affinity over the accesses labelled with `type_name` (others are
// skipped entirely and never count as interveners). A position pair (i, j),
// i < j, touching distinct members u and v adds one to (u, v) when no access
// to u or v lies strictly between them and fewer than `threshold` accesses to
// other members do. Throws InputError when the type has no accesses.
[[nodiscard]] AffinityMatrix compute_affinity(const Trace& trace, std::string_view type_name,
                                              std::uint64_t threshold);

// Aligned table for people.
[[nodiscard]] std::string render_affinity_table(const AffinityMatrix& matrix);
// One "affinity <u> <v> <count>" row per unordered pair with u < v.
[[nodiscard]] std::string render_affinity_rows(const AffinityMatrix& matrix);

}  // namespace apxpart

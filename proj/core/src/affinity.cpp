#include "apxpart/affinity.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "apxpart/error.hpp"

namespace apxpart {

namespace {
constexpr const char* kModule = "affinity";
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
}  // namespace

AffinityMatrix::AffinityMatrix(std::vector<std::string> members)
    : members_(std::move(members)), counts_(members_.size() * members_.size(), 0) {}

AffinityMatrix::AffinityMatrix(std::vector<std::string> members, std::vector<std::uint64_t> counts)
    : members_(std::move(members)), counts_(std::move(counts)) {
  if (counts_.size() != members_.size() * members_.size()) {
    throw InputError(kModule, "affinity counts do not form a square matrix over the members");
  }
}

std::size_t AffinityMatrix::index_of(std::string_view member) const {
  const auto it = std::lower_bound(members_.begin(), members_.end(), member);
  return it != members_.end() && *it == member ? static_cast<std::size_t>(it - members_.begin())
                                               : std::string::npos;
}

std::uint64_t AffinityMatrix::count(std::string_view u, std::string_view v) const {
  const auto i = index_of(u);
  const auto j = index_of(v);
  return i == std::string::npos || j == std::string::npos ? 0 : at(i, j);
}

void AffinityMatrix::increment(std::size_t u, std::size_t v) {
  ++counts_[u * members_.size() + v];
  ++counts_[v * members_.size() + u];
}

AffinityMatrix compute_affinity(const Trace& trace, std::string_view type_name, std::uint64_t threshold) {
  std::vector<std::string> names;
  for (const auto& a : trace.accesses) {
    if (a.label && a.label->type == type_name) names.push_back(a.label->member);
  }
  if (names.empty()) throw InputError(kModule, "no accesses labelled with type '" + std::string(type_name) + "'");

  std::vector<std::string> members = names;
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  AffinityMatrix matrix(members);
  if (threshold == 0) return matrix;

  // For a later position j on member v, the only closest-pair partner on
  // member u is the last u before j, and only if no v occurs after it. All
  // accesses between such a pair touch neither u nor v, so the intervener
  // count is just the distance minus one.
  const std::size_t m = members.size();
  std::vector<std::size_t> last(m, kNone);
  for (std::size_t j = 0; j < names.size(); ++j) {
    const std::size_t v = matrix.index_of(names[j]);
    const std::size_t last_v = last[v];
    for (std::size_t u = 0; u < m; ++u) {
      if (u == v || last[u] == kNone) continue;
      if (last_v != kNone && last_v > last[u]) continue;
      if (j - last[u] - 1 < threshold) matrix.increment(u, v);
    }
    last[v] = j;
  }
  return matrix;
}

std::string render_affinity_table(const AffinityMatrix& matrix) {
  std::size_t width = 1;
  for (const auto& name : matrix.members()) width = std::max(width, name.size());
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    for (std::size_t j = 0; j < matrix.size(); ++j) width = std::max(width, std::to_string(matrix.at(i, j)).size());
  }
  std::string out = fmt::format("{:<{}}", "", width);
  for (const auto& name : matrix.members()) out += fmt::format(" {:>{}}", name, width);
  out += '\n';
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    out += fmt::format("{:<{}}", matrix.members()[i], width);
    for (std::size_t j = 0; j < matrix.size(); ++j) out += fmt::format(" {:>{}}", matrix.at(i, j), width);
    out += '\n';
  }
  return out;
}

std::string render_affinity_rows(const AffinityMatrix& matrix) {
  std::string out;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    for (std::size_t j = i + 1; j < matrix.size(); ++j) {
      out += fmt::format("affinity {} {} {}\n", matrix.members()[i], matrix.members()[j], matrix.at(i, j));
    }
  }
  return out;
}

}  // namespace apxpart

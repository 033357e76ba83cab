#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apxpart/cachesim.hpp"
#include "apxpart/structdsl.hpp"
#include "apxpart/trace.hpp"

namespace apxpart {

inline constexpr std::uint64_t kDefaultRowSize = 4096;

enum class Criticality { Critical, Approximate, Unspecified };

[[nodiscard]] std::string_view to_string(Criticality c);
[[nodiscard]] std::optional<Criticality> criticality_from_name(std::string_view name);

// Explicit criticality overrides keyed by member selector. A selector names a
// leaf path exactly or a prefix of it ("pos" covers "pos.x", "mat" covers
// "mat[3]" and "mat[]"); the longest matching selector wins. Untagged
// pointer leaves default to critical, everything else to unspecified.
class CriticalityTags {
 public:
  void set(std::string selector, Criticality c) { overrides_[std::move(selector)] = c; }
  [[nodiscard]] Criticality of(std::string_view path, Category category) const;
  [[nodiscard]] const std::map<std::string, Criticality, std::less<>>& overrides() const noexcept {
    return overrides_;
  }

  bool operator==(const CriticalityTags&) const = default;

 private:
  std::map<std::string, Criticality, std::less<>> overrides_;
};

// True when `selector` names `path` or one of its ancestors.
[[nodiscard]] bool selector_matches(std::string_view selector, std::string_view path);

struct PlanGroup {
  std::string name;
  std::vector<std::string> members;  // selectors
  std::string region;

  bool operator==(const PlanGroup&) const = default;
};

struct PlanRegion {
  std::uint64_t base = 0;
  double error_rate = 0.0;
  std::optional<std::uint64_t> size;  // derived from the group footprint when absent

  bool operator==(const PlanRegion&) const = default;
};

struct PartitionPlan {
  std::optional<std::string> type_name;
  std::vector<PlanGroup> groups;
  std::map<std::string, PlanRegion, std::less<>> regions;
  CriticalityTags tags;

  bool operator==(const PartitionPlan&) const = default;
};

// Plan file:
//   type NAME                                        (optional)
//   group NAME region RNAME members a,b,c
//   region RNAME base 0xADDR error_rate 1e-6 [size N]
//   tag SELECTOR critical|approximate|unspecified    (optional)
// '#' starts a comment. Throws SyntaxError with the line number.
[[nodiscard]] PartitionPlan parse_plan(std::string_view text);
[[nodiscard]] std::string render_plan(const PartitionPlan& plan);

enum class ViolationKind {
  UnknownMember,
  UnknownRegion,
  SharedRegion,
  DuplicateMember,
  NotCovering,
  MixedCriticality,
  Misaligned,
  SizeNotRowMultiple,
  Overlap,
  RegionTooSmall,
  InvalidRowSize,
};

[[nodiscard]] std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct PlanValidation {
  std::vector<Violation> violations;
  std::vector<std::string> warnings;

  [[nodiscard]] bool ok() const { return violations.empty(); }
  [[nodiscard]] bool has(ViolationKind kind) const;
};

// Reports every violation of the plan invariants: groups must partition the
// flattened members, no group may mix critical and approximate members, and
// each region must start on a row boundary, span whole rows and not overlap
// another. With element_count > 0, regions without an explicit size are
// sized to their group's footprint rounded up to whole rows, and explicit
// sizes smaller than the footprint are flagged.
[[nodiscard]] PlanValidation validate_plan(const PartitionPlan& plan, const FlattenedLayout& layout,
                                           const CriticalityTags& tags, std::uint64_t row_size = kDefaultRowSize,
                                           std::uint64_t element_count = 0);

struct GroupMember {
  std::string path;  // layout entry path (may be a "[]" run)
  ScalarKind kind;
  std::size_t source_offset = 0;
  std::size_t source_stride = 0;
  std::size_t offset = 0;  // within the group element
  std::size_t size = 0;
  std::size_t count = 1;
  std::size_t stride = 0;
};

struct GroupGeometry {
  std::string name;
  std::string region;
  std::uint64_t base = 0;
  std::size_t stride = 0;  // padded group size
  std::size_t alignment = 1;
  std::vector<GroupMember> members;

  // The group viewed as a struct of its own (for criticality checks on a
  // split region).
  [[nodiscard]] FlattenedLayout as_layout(std::string type_name, const AbiProfile& abi) const;
};

struct SplitGeometry {
  std::vector<GroupGeometry> groups;
  std::uint64_t element_count = 0;
  // For each layout entry: (group index, member index within the group).
  std::vector<std::pair<std::size_t, std::size_t>> entry_home;

  // Split-geometry address of byte `offset` inside AoS element `element`.
  // nullopt when the offset is padding.
  [[nodiscard]] std::optional<std::uint64_t> address_of(const FlattenedLayout& layout, std::uint64_t element,
                                                        std::size_t offset) const;
};

// Per-group geometry. Members keep declaration order and are re-packed with
// the layout's ABI rules; a group holding every member keeps the original
// layout unchanged. Throws InputError when validate_plan (with the plan's own
// tags) reports violations.
[[nodiscard]] SplitGeometry split_layout(const FlattenedLayout& layout, const PartitionPlan& plan,
                                         std::uint64_t element_count, std::uint64_t row_size = kDefaultRowSize);

// Element count of the array holding `layout`-typed accesses: the length of
// the region containing them divided by the element size.
[[nodiscard]] std::uint64_t infer_element_count(const Trace& trace, const FlattenedLayout& layout);

// Rewrites each access labelled with layout.type_name to its split address;
// other accesses, labels and instruction ids are untouched. Group regions are
// added to the trace's region table unless an equally named region already
// covers them. element_count = 0 infers it. Throws InputError when an access
// cannot be expressed as base + i * stride + member offset.
[[nodiscard]] Trace remap_trace(const Trace& trace, const FlattenedLayout& layout, const PartitionPlan& plan,
                                std::uint64_t element_count = 0, std::uint64_t row_size = kDefaultRowSize);

struct PartitionComparison {
  std::uint64_t misses_before = 0;
  std::uint64_t misses_after = 0;
  double ratio = 1.0;
  std::vector<std::string> warnings;
};

[[nodiscard]] PartitionComparison compare_partitioning(const Trace& trace, const FlattenedLayout& layout,
                                                       const PartitionPlan& plan, const CacheConfig& config,
                                                       std::uint64_t element_count = 0,
                                                       std::uint64_t row_size = kDefaultRowSize);

// A single group holding every member, placed at `base`.
[[nodiscard]] PartitionPlan identity_plan(const FlattenedLayout& layout, std::uint64_t base,
                                          std::string region_name = "whole");

// Gives every group whose region is not yet defined its own region:
// consecutive, row-aligned, starting at or after `start`, with at least `gap`
// bytes between the end of one and the start of the next.
void place_regions(PartitionPlan& plan, const FlattenedLayout& layout, std::uint64_t element_count,
                   std::uint64_t start, std::uint64_t gap, std::uint64_t row_size = kDefaultRowSize);

}  // namespace apxpart

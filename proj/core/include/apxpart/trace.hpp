#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "apxpart/structdsl.hpp"

namespace apxpart {

// Identifies one static access site (the stand-in for an instruction address
// in a binary). Ordered numerically; ties in "largest miss count" resolve to
// the smallest id.
struct InstrId {
  std::uint64_t value = 0;
  auto operator<=>(const InstrId&) const = default;
};

enum class AccessKind { Read, Write };

// (type, member path). A bare scalar array is labelled with an empty member,
// e.g. "double".
struct Label {
  std::string type;
  std::string member;

  auto operator<=>(const Label&) const = default;
  [[nodiscard]] std::string str() const { return member.empty() ? type : type + "." + member; }
};

// Splits "arc.ident" at the first dot; "double" yields an empty member.
[[nodiscard]] Label parse_label(std::string_view text);

struct MemoryAccess {
  std::uint64_t seq = 0;
  InstrId instr;
  AccessKind kind = AccessKind::Read;
  std::uint64_t vaddr = 0;
  std::uint32_t size = 1;
  std::optional<Label> label;

  bool operator==(const MemoryAccess&) const = default;
};

struct Region {
  std::uint64_t base = 0;
  std::uint64_t length = 0;

  [[nodiscard]] bool contains(std::uint64_t addr, std::uint64_t size = 1) const {
    return addr >= base && addr - base < length && size <= length - (addr - base);
  }
  bool operator==(const Region&) const = default;
};

struct Trace {
  std::vector<MemoryAccess> accesses;
  std::map<std::string, Region, std::less<>> regions;

  // Name of the region containing [addr, addr+size), if any.
  [[nodiscard]] const std::pair<const std::string, Region>* region_of(std::uint64_t addr,
                                                                      std::uint64_t size = 1) const;

  bool operator==(const Trace&) const = default;
};

// Text format:
//   # region NAME 0xBASE LENGTH
//   A <instr_id> <R|W> 0xADDR <size> <type.member | ->
// Other lines starting with '#' and blank lines are ignored; a '#' after the
// fields of an access line starts a comment. When any region is declared,
// every labelled access must fall inside one of them.
// Throws SyntaxError naming the offending line.
[[nodiscard]] Trace parse_trace(std::string_view text);

// Inverse of parse_trace (regions first, then accesses in order).
[[nodiscard]] std::string render_trace(const Trace& trace);

// ---------------------------------------------------------------------------
// Synthetic trace generation
// ---------------------------------------------------------------------------

struct SequentialOrder {};
// A uniformly random permutation of the elements.
struct RandomOrder {
  std::uint64_t seed = 0;
};
// Follows `next` links of a single random cycle through all elements,
// starting at element 0.
struct PermutationChaseOrder {
  std::uint64_t seed = 0;
};
using ElementOrder = std::variant<SequentialOrder, RandomOrder, PermutationChaseOrder>;

struct PatternSpec {
  ElementOrder order = SequentialOrder{};
  std::vector<std::string> members;  // accessed per element, in this order
  std::uint64_t element_count = 0;
  // Missing members get the 1-based position in `members` as their id.
  std::map<std::string, InstrId, std::less<>> instr_ids;
  AccessKind kind = AccessKind::Read;
};

// The element visit order for `pattern` (deterministic for a given seed).
[[nodiscard]] std::vector<std::uint64_t> element_order(const ElementOrder& order, std::uint64_t element_count);

// One access per listed member per element, at
// base + element * layout.total_size + offset(member). The trace declares a
// single region named after the layout's type covering the whole array.
// Throws InputError for unknown member paths or a misaligned base.
[[nodiscard]] Trace gen_aos_trace(const FlattenedLayout& layout, const PatternSpec& pattern, std::uint64_t base);

}  // namespace apxpart

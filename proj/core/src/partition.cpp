#include "apxpart/partition.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "apxpart/error.hpp"
#include "text_util.hpp"

namespace apxpart {

namespace {

constexpr const char* kModule = "partition";

std::uint64_t round_up(std::uint64_t value, std::uint64_t align) {
  return align <= 1 ? value : (value + align - 1) / align * align;
}

// Groups' members in layout order, re-packed. `assignment[i]` is the group of
// layout entry i (or npos when uncovered/duplicated, which validation reports).
std::vector<GroupGeometry> build_groups(const FlattenedLayout& layout, const PartitionPlan& plan,
                                        const std::vector<std::size_t>& assignment) {
  std::vector<GroupGeometry> groups;
  groups.reserve(plan.groups.size());
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    GroupGeometry geo;
    geo.name = plan.groups[g].name;
    geo.region = plan.groups[g].region;
    if (const auto it = plan.regions.find(geo.region); it != plan.regions.end()) geo.base = it->second.base;

    std::vector<std::size_t> owned;
    for (std::size_t i = 0; i < layout.entries.size(); ++i) {
      if (assignment[i] == g) owned.push_back(i);
    }
    if (!layout.entries.empty() && owned.size() == layout.entries.size()) {
      // Identity: the group is the original element.
      for (const std::size_t i : owned) {
        const auto& e = layout.entries[i];
        geo.members.push_back({e.path, e.kind, e.offset, e.stride, e.offset, e.size, e.count, e.stride});
      }
      geo.stride = layout.total_size;
      geo.alignment = layout.alignment;
      groups.push_back(std::move(geo));
      continue;
    }
    std::size_t offset = 0;
    std::size_t max_align = 1;
    for (const std::size_t i : owned) {
      const auto& e = layout.entries[i];
      const std::size_t align = layout.abi.scalar(e.kind).align;
      offset = round_up(offset, align);
      max_align = std::max(max_align, align);
      geo.members.push_back({e.path, e.kind, e.offset, e.stride, offset, e.size, e.count, e.is_run() ? e.size : 0});
      offset += e.size * e.count;
    }
    geo.alignment = layout.abi.packed ? 1 : max_align;
    geo.stride = round_up(offset, geo.alignment);
    groups.push_back(std::move(geo));
  }
  return groups;
}

struct Assignment {
  std::vector<std::size_t> group_of;  // per layout entry, npos if none
  std::vector<Violation> violations;
};

Assignment assign_entries(const FlattenedLayout& layout, const PartitionPlan& plan) {
  constexpr auto npos = std::numeric_limits<std::size_t>::max();
  Assignment out;
  out.group_of.assign(layout.entries.size(), npos);
  std::vector<bool> duplicated(layout.entries.size(), false);
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    for (const auto& selector : plan.groups[g].members) {
      bool matched = false;
      for (std::size_t i = 0; i < layout.entries.size(); ++i) {
        if (!selector_matches(selector, layout.entries[i].path)) continue;
        matched = true;
        if (out.group_of[i] == npos) {
          out.group_of[i] = g;
        } else if (out.group_of[i] != g && !duplicated[i]) {
          duplicated[i] = true;
          out.violations.push_back({ViolationKind::DuplicateMember,
                                    fmt::format("member '{}' is in groups '{}' and '{}'", layout.entries[i].path,
                                                plan.groups[out.group_of[i]].name, plan.groups[g].name)});
        }
      }
      if (!matched) {
        out.violations.push_back({ViolationKind::UnknownMember,
                                  fmt::format("group '{}' names unknown member '{}' of type '{}'",
                                              plan.groups[g].name, selector, layout.type_name)});
      }
    }
  }
  for (std::size_t i = 0; i < layout.entries.size(); ++i) {
    if (out.group_of[i] == npos) {
      out.violations.push_back(
          {ViolationKind::NotCovering, fmt::format("member '{}' is not in any group", layout.entries[i].path)});
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tags and plan files
// ---------------------------------------------------------------------------

std::string_view to_string(Criticality c) {
  switch (c) {
    case Criticality::Critical: return "critical";
    case Criticality::Approximate: return "approximate";
    case Criticality::Unspecified: return "unspecified";
  }
  return "?";
}

std::optional<Criticality> criticality_from_name(std::string_view name) {
  if (name == "critical") return Criticality::Critical;
  if (name == "approximate") return Criticality::Approximate;
  if (name == "unspecified") return Criticality::Unspecified;
  return std::nullopt;
}

bool selector_matches(std::string_view selector, std::string_view path) {
  if (selector == path) return true;
  if (path.size() <= selector.size() || path.substr(0, selector.size()) != selector) return false;
  const char next = path[selector.size()];
  return next == '.' || next == '[';
}

Criticality CriticalityTags::of(std::string_view path, Category category) const {
  const std::string* best = nullptr;
  Criticality result = category == Category::Pointer ? Criticality::Critical : Criticality::Unspecified;
  for (const auto& [selector, c] : overrides_) {
    if (!selector_matches(selector, path)) continue;
    if (best == nullptr || selector.size() > best->size()) {
      best = &selector;
      result = c;
    }
  }
  return result;
}

PartitionPlan parse_plan(std::string_view text) {
  PartitionPlan plan;
  const auto lines = detail::split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::size_t line_no = n + 1;
    std::string_view line = lines[n];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto f = detail::split_ws(line);
    if (f.empty()) continue;
    const auto fail = [&](const std::string& msg) -> SyntaxError { return SyntaxError(kModule, line_no, 1, msg); };

    if (f[0] == "type") {
      if (f.size() != 2) throw fail("expected 'type NAME'");
      plan.type_name = std::string(f[1]);
    } else if (f[0] == "group") {
      if (f.size() != 6 || f[2] != "region" || f[4] != "members") {
        throw fail("expected 'group NAME region RNAME members a,b,c'");
      }
      PlanGroup group{std::string(f[1]), detail::split_csv(f[5]), std::string(f[3])};
      if (group.members.empty()) throw fail("group '" + group.name + "' has no members");
      for (const auto& g : plan.groups) {
        if (g.name == group.name) throw fail("duplicate group '" + group.name + "'");
      }
      plan.groups.push_back(std::move(group));
    } else if (f[0] == "region") {
      if (f.size() < 2 || (f.size() - 2) % 2 != 0) throw fail("expected 'region RNAME key value ...'");
      PlanRegion region;
      bool has_base = false;
      for (std::size_t k = 2; k < f.size(); k += 2) {
        if (f[k] == "base") {
          const auto v = detail::parse_u64(f[k + 1]);
          if (!v) throw fail("invalid base '" + std::string(f[k + 1]) + "'");
          region.base = *v;
          has_base = true;
        } else if (f[k] == "error_rate") {
          const auto v = detail::parse_double(f[k + 1]);
          if (!v || *v < 0.0 || *v > 1.0) throw fail("error_rate must be in [0, 1]");
          region.error_rate = *v;
        } else if (f[k] == "size") {
          const auto v = detail::parse_u64(f[k + 1]);
          if (!v) throw fail("invalid size '" + std::string(f[k + 1]) + "'");
          region.size = *v;
        } else {
          throw fail("unknown region key '" + std::string(f[k]) + "'");
        }
      }
      if (!has_base) throw fail("region needs a base address");
      if (!plan.regions.emplace(std::string(f[1]), region).second) {
        throw fail("duplicate region '" + std::string(f[1]) + "'");
      }
    } else if (f[0] == "tag") {
      if (f.size() != 3) throw fail("expected 'tag SELECTOR critical|approximate|unspecified'");
      const auto c = criticality_from_name(f[2]);
      if (!c) throw fail("unknown criticality '" + std::string(f[2]) + "'");
      plan.tags.set(std::string(f[1]), *c);
    } else {
      throw fail("unknown directive '" + std::string(f[0]) + "'");
    }
  }
  return plan;
}

std::string render_plan(const PartitionPlan& plan) {
  std::string out;
  if (plan.type_name) out += "type " + *plan.type_name + "\n";
  for (const auto& [name, region] : plan.regions) {
    out += fmt::format("region {} base 0x{:x} error_rate {}", name, region.base, region.error_rate);
    if (region.size) out += fmt::format(" size {}", *region.size);
    out += '\n';
  }
  for (const auto& g : plan.groups) {
    std::string members;
    for (const auto& m : g.members) members += (members.empty() ? "" : ",") + m;
    out += fmt::format("group {} region {} members {}\n", g.name, g.region, members);
  }
  for (const auto& [selector, c] : plan.tags.overrides()) out += fmt::format("tag {} {}\n", selector, to_string(c));
  return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::UnknownMember: return "unknown-member";
    case ViolationKind::UnknownRegion: return "unknown-region";
    case ViolationKind::SharedRegion: return "shared-region";
    case ViolationKind::DuplicateMember: return "duplicate-member";
    case ViolationKind::NotCovering: return "not-covering";
    case ViolationKind::MixedCriticality: return "mixed-criticality";
    case ViolationKind::Misaligned: return "misaligned";
    case ViolationKind::SizeNotRowMultiple: return "size-not-row-multiple";
    case ViolationKind::Overlap: return "overlap";
    case ViolationKind::RegionTooSmall: return "region-too-small";
    case ViolationKind::InvalidRowSize: return "invalid-row-size";
  }
  return "?";
}

bool PlanValidation::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; });
}

PlanValidation validate_plan(const PartitionPlan& plan, const FlattenedLayout& layout, const CriticalityTags& tags,
                             std::uint64_t row_size, std::uint64_t element_count) {
  PlanValidation out;
  if (row_size == 0) {
    out.violations.push_back({ViolationKind::InvalidRowSize, "row size must be positive"});
    return out;
  }

  Assignment assignment = assign_entries(layout, plan);
  out.violations = std::move(assignment.violations);
  const auto groups = build_groups(layout, plan, assignment.group_of);

  // Criticality per group.
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    std::vector<std::string> critical;
    std::vector<std::string> approximate;
    for (std::size_t i = 0; i < layout.entries.size(); ++i) {
      if (assignment.group_of[i] != g) continue;
      const auto& e = layout.entries[i];
      switch (tags.of(e.path, e.category())) {
        case Criticality::Critical: critical.push_back(e.path); break;
        case Criticality::Approximate: approximate.push_back(e.path); break;
        case Criticality::Unspecified:
          if (plan.groups.size() > 1) {
            out.warnings.push_back(fmt::format("member '{}' in group '{}' has unspecified criticality", e.path,
                                               plan.groups[g].name));
          }
          break;
      }
    }
    if (!critical.empty() && !approximate.empty()) {
      out.violations.push_back({ViolationKind::MixedCriticality,
                                fmt::format("group '{}' mixes critical '{}' with approximate '{}'",
                                            plan.groups[g].name, critical.front(), approximate.front())});
    }
  }

  // Regions: existence, exclusivity, granularity, overlap.
  struct Extent {
    std::string name;
    std::uint64_t base;
    std::uint64_t size;
  };
  std::vector<Extent> extents;
  std::map<std::string, std::string, std::less<>> owner;
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    const auto& group = plan.groups[g];
    const auto it = plan.regions.find(group.region);
    if (it == plan.regions.end()) {
      out.violations.push_back({ViolationKind::UnknownRegion,
                                fmt::format("group '{}' uses undefined region '{}'", group.name, group.region)});
      continue;
    }
    if (const auto [o, inserted] = owner.emplace(group.region, group.name); !inserted) {
      out.violations.push_back({ViolationKind::SharedRegion,
                                fmt::format("region '{}' is used by groups '{}' and '{}'", group.region,
                                            o->second, group.name)});
      continue;
    }
    const PlanRegion& region = it->second;
    const std::uint64_t footprint = element_count * groups[g].stride;
    if (region.base % row_size != 0) {
      out.violations.push_back({ViolationKind::Misaligned,
                                fmt::format("region '{}' base 0x{:x} is not a multiple of the row size {}",
                                            group.region, region.base, row_size)});
    }
    std::uint64_t size = 0;
    if (region.size) {
      size = *region.size;
      if (size == 0 || size % row_size != 0) {
        out.violations.push_back({ViolationKind::SizeNotRowMultiple,
                                  fmt::format("region '{}' size {} is not a positive multiple of the row size {}",
                                              group.region, size, row_size)});
      }
      if (element_count > 0 && size < footprint) {
        out.violations.push_back({ViolationKind::RegionTooSmall,
                                  fmt::format("region '{}' holds {} bytes but group '{}' needs {}", group.region,
                                              size, group.name, footprint)});
      }
    } else {
      size = std::max<std::uint64_t>(row_size, round_up(footprint, row_size));
    }
    extents.push_back({group.region, region.base, size});
  }
  for (std::size_t a = 0; a < extents.size(); ++a) {
    for (std::size_t b = a + 1; b < extents.size(); ++b) {
      const auto& x = extents[a];
      const auto& y = extents[b];
      if (x.base < y.base + y.size && y.base < x.base + x.size) {
        out.violations.push_back(
            {ViolationKind::Overlap, fmt::format("regions '{}' and '{}' overlap", x.name, y.name)});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

FlattenedLayout GroupGeometry::as_layout(std::string type_name, const AbiProfile& abi) const {
  FlattenedLayout out;
  out.type_name = std::move(type_name);
  out.abi = abi;
  out.total_size = stride;
  out.alignment = alignment;
  for (const auto& m : members) out.entries.push_back({m.path, m.kind, m.offset, m.size, m.count, m.stride});
  std::sort(out.entries.begin(), out.entries.end(),
            [](const LayoutEntry& a, const LayoutEntry& b) { return a.offset < b.offset; });
  return out;
}

std::optional<std::uint64_t> SplitGeometry::address_of(const FlattenedLayout& layout, std::uint64_t element,
                                                       std::size_t offset) const {
  const auto leaf = layout.locate(offset);
  if (!leaf) return std::nullopt;
  const auto [g, m] = entry_home[leaf->entry_index];
  const GroupGeometry& group = groups[g];
  const GroupMember& member = group.members[m];
  return group.base + element * group.stride + member.offset + leaf->element * member.stride +
         (offset - leaf->offset);
}

SplitGeometry split_layout(const FlattenedLayout& layout, const PartitionPlan& plan, std::uint64_t element_count,
                           std::uint64_t row_size) {
  const PlanValidation validation = validate_plan(plan, layout, plan.tags, row_size, element_count);
  if (!validation.ok()) {
    std::string message = "invalid partition plan:";
    for (const auto& v : validation.violations) message += fmt::format(" [{}] {};", to_string(v.kind), v.message);
    throw InputError(kModule, message);
  }
  const Assignment assignment = assign_entries(layout, plan);
  SplitGeometry out;
  out.element_count = element_count;
  out.groups = build_groups(layout, plan, assignment.group_of);
  out.entry_home.resize(layout.entries.size());
  for (std::size_t g = 0; g < out.groups.size(); ++g) {
    for (std::size_t m = 0; m < out.groups[g].members.size(); ++m) {
      const auto& path = out.groups[g].members[m].path;
      for (std::size_t i = 0; i < layout.entries.size(); ++i) {
        if (layout.entries[i].path == path) out.entry_home[i] = {g, m};
      }
    }
  }
  return out;
}

std::uint64_t infer_element_count(const Trace& trace, const FlattenedLayout& layout) {
  if (layout.total_size == 0) throw InputError(kModule, "type '" + layout.type_name + "' has size 0");
  const Region* found = nullptr;
  for (const auto& a : trace.accesses) {
    if (!a.label || a.label->type != layout.type_name) continue;
    const auto* region = trace.region_of(a.vaddr, a.size);
    if (region == nullptr) {
      throw InputError(kModule, fmt::format("access #{} to '{}' lies outside every trace region", a.seq,
                                            layout.type_name));
    }
    if (found != nullptr && !(*found == region->second)) {
      throw InputError(kModule, "accesses to '" + layout.type_name + "' span more than one region");
    }
    found = &region->second;
  }
  if (found == nullptr) throw InputError(kModule, "trace has no accesses labelled '" + layout.type_name + "'");
  return found->length / layout.total_size;
}

Trace remap_trace(const Trace& trace, const FlattenedLayout& layout, const PartitionPlan& plan,
                  std::uint64_t element_count, std::uint64_t row_size) {
  if (element_count == 0) element_count = infer_element_count(trace, layout);
  const SplitGeometry geometry = split_layout(layout, plan, element_count, row_size);

  Trace out;
  out.regions = trace.regions;
  out.accesses.reserve(trace.accesses.size());
  for (const auto& access : trace.accesses) {
    MemoryAccess a = access;
    if (a.label && a.label->type == layout.type_name) {
      const auto* region = trace.region_of(a.vaddr, a.size);
      if (region == nullptr) {
        throw InputError(kModule, fmt::format("access #{} at 0x{:x} lies outside every trace region", a.seq,
                                              a.vaddr));
      }
      const std::uint64_t rel = a.vaddr - region->second.base;
      const std::uint64_t element = rel / layout.total_size;
      const std::size_t within = rel % layout.total_size;
      if (element >= element_count) {
        throw InputError(kModule, fmt::format("access #{} at 0x{:x} is element {}, beyond the {} elements", a.seq,
                                              a.vaddr, element, element_count));
      }
      const auto leaf = layout.locate(within);
      if (!leaf) {
        throw InputError(kModule, fmt::format("access #{} at 0x{:x} (offset {}) falls in padding of '{}'", a.seq,
                                              a.vaddr, within, layout.type_name));
      }
      if (within - leaf->offset + a.size > leaf->size) {
        throw InputError(kModule, fmt::format("access #{} at 0x{:x} spans beyond member '{}'", a.seq, a.vaddr,
                                              leaf->path));
      }
      if (!a.label->member.empty() && a.label->member != leaf->path) {
        const auto named = layout.resolve(a.label->member);
        if (!named || named->offset != leaf->offset) {
          throw InputError(kModule, fmt::format("access #{} is labelled '{}' but its address is member '{}'",
                                                a.seq, a.label->str(), leaf->path));
        }
      }
      a.vaddr = *geometry.address_of(layout, element, within);
    }
    out.accesses.push_back(std::move(a));
  }

  for (const auto& group : geometry.groups) {
    const Region extent{group.base, element_count * group.stride};
    const auto it = out.regions.find(group.region);
    if (it != out.regions.end() && it->second.contains(extent.base, extent.length)) continue;
    out.regions[group.region] = extent;
  }
  return out;
}

PartitionComparison compare_partitioning(const Trace& trace, const FlattenedLayout& layout,
                                         const PartitionPlan& plan, const CacheConfig& config,
                                         std::uint64_t element_count, std::uint64_t row_size) {
  if (element_count == 0) element_count = infer_element_count(trace, layout);
  PartitionComparison out;
  out.warnings = validate_plan(plan, layout, plan.tags, row_size, element_count).warnings;
  const Trace remapped = remap_trace(trace, layout, plan, element_count, row_size);
  out.misses_before = simulate(trace, config).total_misses;
  out.misses_after = simulate(remapped, config).total_misses;
  if (out.misses_before == 0) {
    out.ratio = out.misses_after == 0 ? 1.0 : std::numeric_limits<double>::infinity();
  } else {
    out.ratio = static_cast<double>(out.misses_after) / static_cast<double>(out.misses_before);
  }
  return out;
}

PartitionPlan identity_plan(const FlattenedLayout& layout, std::uint64_t base, std::string region_name) {
  PartitionPlan plan;
  plan.type_name = layout.type_name;
  PlanGroup group{"all", {}, region_name};
  for (const auto& e : layout.entries) group.members.push_back(e.path);
  plan.groups.push_back(std::move(group));
  plan.regions.emplace(std::move(region_name), PlanRegion{base, 0.0, std::nullopt});
  return plan;
}

void place_regions(PartitionPlan& plan, const FlattenedLayout& layout, std::uint64_t element_count,
                   std::uint64_t start, std::uint64_t gap, std::uint64_t row_size) {
  const Assignment assignment = assign_entries(layout, plan);
  const auto groups = build_groups(layout, plan, assignment.group_of);
  std::uint64_t cursor = start;
  for (const auto& [name, region] : plan.regions) {
    const std::uint64_t end = region.base + region.size.value_or(row_size);
    cursor = std::max(cursor, end + gap);
  }
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    if (plan.regions.contains(plan.groups[g].region)) continue;
    const std::uint64_t size = std::max<std::uint64_t>(row_size, round_up(element_count * groups[g].stride, row_size));
    const std::uint64_t base = round_up(cursor, row_size);
    plan.regions.emplace(plan.groups[g].region, PlanRegion{base, 0.0, size});
    cursor = base + size + gap;
  }
}

}  // namespace apxpart

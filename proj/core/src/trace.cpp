#include "apxpart/trace.hpp"

#include <sstream>

#include "apxpart/error.hpp"
#include "apxpart/rng.hpp"
#include "text_util.hpp"

namespace apxpart {

namespace {
constexpr const char* kModule = "trace";
}

Label parse_label(std::string_view text) {
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) return {std::string(text), {}};
  return {std::string(text.substr(0, dot)), std::string(text.substr(dot + 1))};
}

const std::pair<const std::string, Region>* Trace::region_of(std::uint64_t addr, std::uint64_t size) const {
  for (const auto& entry : regions) {
    if (entry.second.contains(addr, size)) return &entry;
  }
  return nullptr;
}

Trace parse_trace(std::string_view text) {
  Trace trace;
  const auto lines = detail::split_lines(text);
  struct Pending {
    std::size_t line;
    std::uint64_t addr;
    std::uint32_t size;
  };
  std::vector<Pending> labelled;

  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::size_t line_no = n + 1;
    std::string_view line = lines[n];
    auto fields = detail::split_ws(line);
    if (fields.empty()) continue;

    if (fields[0].front() == '#') {
      // "# region ..." may also be written "#region".
      std::size_t k = fields[0] == "#" ? 1 : 0;
      std::string_view keyword = k == 1 ? (fields.size() > 1 ? fields[1] : std::string_view{}) : fields[0].substr(1);
      if (keyword != "region") continue;
      const std::size_t first = k + 1;
      if (fields.size() != first + 3) {
        throw SyntaxError(kModule, line_no, 1, "region header needs NAME 0xBASE LENGTH");
      }
      const auto base = detail::parse_u64(fields[first + 1]);
      const auto length = detail::parse_u64(fields[first + 2]);
      if (!base || !length) throw SyntaxError(kModule, line_no, 1, "invalid region base or length");
      if (!trace.regions.emplace(std::string(fields[first]), Region{*base, *length}).second) {
        throw SyntaxError(kModule, line_no, 1, "duplicate region '" + std::string(fields[first]) + "'");
      }
      continue;
    }

    // Drop a trailing comment.
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i].front() == '#') {
        fields.resize(i);
        break;
      }
    }
    if (fields.size() != 6 || fields[0] != "A") {
      throw SyntaxError(kModule, line_no, 1, "expected 'A <instr> <R|W> 0xADDR <size> <label|->'");
    }
    MemoryAccess access;
    access.seq = trace.accesses.size();
    const auto instr = detail::parse_u64(fields[1]);
    if (!instr) throw SyntaxError(kModule, line_no, 1, "invalid instruction id '" + std::string(fields[1]) + "'");
    access.instr = InstrId{*instr};
    if (fields[2] == "R") {
      access.kind = AccessKind::Read;
    } else if (fields[2] == "W") {
      access.kind = AccessKind::Write;
    } else {
      throw SyntaxError(kModule, line_no, 1, "access kind must be R or W");
    }
    if (fields[3].substr(0, 2) != "0x" && fields[3].substr(0, 2) != "0X") {
      throw SyntaxError(kModule, line_no, 1, "address must be hexadecimal with a 0x prefix");
    }
    const auto addr = detail::parse_u64(fields[3]);
    if (!addr) throw SyntaxError(kModule, line_no, 1, "invalid address '" + std::string(fields[3]) + "'");
    access.vaddr = *addr;
    const auto size = detail::parse_u64(fields[4]);
    if (!size || *size < 1 || *size > 64) {
      throw SyntaxError(kModule, line_no, 1, "access size must be 1..64");
    }
    access.size = static_cast<std::uint32_t>(*size);
    if (fields[5] != "-") {
      access.label = parse_label(fields[5]);
      if (access.label->type.empty()) throw SyntaxError(kModule, line_no, 1, "empty label type");
      labelled.push_back({line_no, access.vaddr, access.size});
    }
    trace.accesses.push_back(std::move(access));
  }

  if (!trace.regions.empty()) {
    for (const auto& p : labelled) {
      if (trace.region_of(p.addr, p.size) == nullptr) {
        throw SyntaxError(kModule, p.line, 1, "labelled access lies outside every declared region");
      }
    }
  }
  return trace;
}

std::string render_trace(const Trace& trace) {
  std::ostringstream out;
  for (const auto& [name, region] : trace.regions) {
    out << "# region " << name << " 0x" << std::hex << region.base << std::dec << ' ' << region.length << '\n';
  }
  for (const auto& a : trace.accesses) {
    out << "A " << a.instr.value << ' ' << (a.kind == AccessKind::Read ? 'R' : 'W') << " 0x" << std::hex
        << a.vaddr << std::dec << ' ' << a.size << ' ' << (a.label ? a.label->str() : "-") << '\n';
  }
  return out.str();
}

std::vector<std::uint64_t> element_order(const ElementOrder& order, std::uint64_t element_count) {
  if (const auto* r = std::get_if<RandomOrder>(&order)) return random_permutation(element_count, r->seed);
  if (const auto* c = std::get_if<PermutationChaseOrder>(&order)) return chase_order(element_count, c->seed);
  std::vector<std::uint64_t> seq(element_count);
  for (std::uint64_t i = 0; i < element_count; ++i) seq[i] = i;
  return seq;
}

Trace gen_aos_trace(const FlattenedLayout& layout, const PatternSpec& pattern, std::uint64_t base) {
  if (layout.alignment > 1 && base % layout.alignment != 0) {
    throw InputError(kModule, "base address is not aligned to the layout alignment (" +
                                  std::to_string(layout.alignment) + ")");
  }
  struct Site {
    std::size_t offset;
    std::uint32_t size;
    InstrId instr;
    Label label;
  };
  std::vector<Site> sites;
  for (std::size_t i = 0; i < pattern.members.size(); ++i) {
    const auto& path = pattern.members[i];
    const auto member = layout.resolve(path);
    if (!member) throw InputError(kModule, "unknown member path '" + path + "' in type '" + layout.type_name + "'");
    const auto id = pattern.instr_ids.find(path);
    sites.push_back({member->offset, static_cast<std::uint32_t>(member->size),
                     id != pattern.instr_ids.end() ? id->second : InstrId{i + 1}, Label{layout.type_name, path}});
  }

  Trace trace;
  trace.regions.emplace(layout.type_name, Region{base, pattern.element_count * layout.total_size});
  trace.accesses.reserve(pattern.element_count * sites.size());
  for (const std::uint64_t element : element_order(pattern.order, pattern.element_count)) {
    const std::uint64_t element_base = base + element * layout.total_size;
    for (const auto& site : sites) {
      MemoryAccess a;
      a.seq = trace.accesses.size();
      a.instr = site.instr;
      a.kind = pattern.kind;
      a.vaddr = element_base + site.offset;
      a.size = site.size;
      a.label = site.label;
      trace.accesses.push_back(std::move(a));
    }
  }
  return trace;
}

}  // namespace apxpart

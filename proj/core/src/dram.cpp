#include "apxpart/dram.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "apxpart/error.hpp"
#include "apxpart/rng.hpp"
#include "text_util.hpp"

namespace apxpart {

namespace {
constexpr const char* kModule = "dram";
}

void TimingParams::validate() const {
  if (!(trcd_ns > 0.0) || !(tref_ms > 0.0) || !(tcas_ns > 0.0) || !(trfc_total_ms >= 0.0)) {
    throw InputError(kModule, "timing values must be positive (trfc_total may be zero)");
  }
  if (refresh_overhead() >= 1.0) {
    throw InputError(kModule, fmt::format("refresh overhead {} / {} ms leaves no time for accesses", trfc_total_ms,
                                          tref_ms));
  }
}

void RegionConfig::validate() const {
  timing.validate();
  if (row_size == 0) throw InputError(kModule, "region '" + name + "': row size must be positive");
  if (base % row_size != 0 || size % row_size != 0 || size == 0) {
    throw InputError(kModule, fmt::format("region '{}': base 0x{:x} and size {} must be whole rows of {} bytes", name,
                                          base, size, row_size));
  }
  if (!(bit_error_rate >= 0.0 && bit_error_rate <= 1.0)) {
    throw InputError(kModule, "region '" + name + "': bit error rate must be in [0, 1]");
  }
  if (timing.trcd_ns > kSpecTrcdNs || timing.tref_ms < kSpecTrefMs) {
    throw InputError(kModule, "region '" + name + "': tRCD above spec or tREF below spec is not a relaxation");
  }
  if (timing.is_spec() && bit_error_rate != 0.0) {
    throw InputError(kModule, "region '" + name + "': spec-timing regions must have a zero bit error rate");
  }
}

std::vector<RegionConfig> parse_regions(std::string_view text) {
  std::vector<RegionConfig> regions;
  const auto lines = detail::split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string_view line = lines[n];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto f = detail::split_ws(line);
    if (f.empty()) continue;
    const auto fail = [&](const std::string& msg) { return SyntaxError(kModule, n + 1, 1, msg); };
    if (f[0] != "region" || f.size() < 2 || f.size() % 2 != 0) throw fail("expected 'region NAME key value ...'");
    RegionConfig r;
    r.name = std::string(f[1]);
    for (std::size_t k = 2; k < f.size(); k += 2) {
      const auto key = f[k];
      const auto value = f[k + 1];
      const auto as_u64 = [&] {
        const auto v = detail::parse_u64(value);
        if (!v) throw fail("invalid integer '" + std::string(value) + "' for " + std::string(key));
        return *v;
      };
      const auto as_double = [&] {
        const auto v = detail::parse_double(value);
        if (!v) throw fail("invalid number '" + std::string(value) + "' for " + std::string(key));
        return *v;
      };
      if (key == "base") {
        r.base = as_u64();
      } else if (key == "size") {
        r.size = as_u64();
      } else if (key == "row_size") {
        r.row_size = as_u64();
      } else if (key == "trcd") {
        r.timing.trcd_ns = as_double();
      } else if (key == "tref") {
        r.timing.tref_ms = as_double();
      } else if (key == "tcas") {
        r.timing.tcas_ns = as_double();
      } else if (key == "trfc_total") {
        r.timing.trfc_total_ms = as_double();
      } else if (key == "ber") {
        r.bit_error_rate = as_double();
      } else {
        throw fail("unknown region key '" + std::string(key) + "'");
      }
    }
    for (const auto& existing : regions) {
      if (existing.name == r.name) throw fail("duplicate region '" + r.name + "'");
    }
    r.validate();
    regions.push_back(std::move(r));
  }
  return regions;
}

double effective_latency(const TimingParams& params) {
  params.validate();
  return (params.trcd_ns + params.tcas_ns) / (1.0 - params.refresh_overhead());
}

TimingParams spec_counterpart(const TimingParams& params) {
  TimingParams spec = params;
  spec.trcd_ns = kSpecTrcdNs;
  spec.tref_ms = kSpecTrefMs;
  return spec;
}

double latency_reduction(const TimingParams& reference, const TimingParams& relaxed) {
  return 1.0 - effective_latency(relaxed) / effective_latency(reference);
}

InjectionResult inject_errors(std::span<const std::uint8_t> data, const RegionConfig& region, std::uint64_t seed) {
  if (data.size() > region.size) {
    throw InputError(kModule, fmt::format("{} bytes do not fit in region '{}' of {} bytes", data.size(), region.name,
                                          region.size));
  }
  InjectionResult out;
  out.data.assign(data.begin(), data.end());
  const double p = region.bit_error_rate;
  if (p <= 0.0) return out;
  Rng rng(seed);
  for (std::size_t byte = 0; byte < out.data.size(); ++byte) {
    for (std::uint8_t bit = 0; bit < 8; ++bit) {
      if (rng.unit() < p) {
        out.data[byte] ^= static_cast<std::uint8_t>(1u << bit);
        out.flips.push_back({byte, bit});
      }
    }
  }
  return out;
}

std::string_view to_string(FlipClass c) {
  switch (c) {
    case FlipClass::CriticalViolation: return "critical";
    case FlipClass::Approximate: return "approximate";
    case FlipClass::Padding: return "padding";
  }
  return "?";
}

std::size_t CriticalityReport::count(FlipClass c) const {
  return static_cast<std::size_t>(
      std::count_if(findings.begin(), findings.end(), [&](const FlipFinding& f) { return f.klass == c; }));
}

CriticalityReport criticality_check(std::span<const BitFlip> flips, const FlattenedLayout& layout,
                                    std::uint64_t element_stride, const CriticalityTags& tags) {
  if (!flips.empty() && element_stride == 0) throw InputError(kModule, "element stride must be positive");
  CriticalityReport report;
  report.findings.reserve(flips.size());
  for (const auto& flip : flips) {
    FlipFinding finding{flip, FlipClass::Padding, flip.byte / element_stride, {}, false};
    const auto within = static_cast<std::size_t>(flip.byte % element_stride);
    if (const auto leaf = layout.locate(within)) {
      finding.member = leaf->path;
      switch (tags.of(leaf->path, category_of(leaf->kind))) {
        case Criticality::Critical: finding.klass = FlipClass::CriticalViolation; break;
        case Criticality::Approximate: finding.klass = FlipClass::Approximate; break;
        case Criticality::Unspecified:
          finding.klass = FlipClass::Approximate;
          finding.untagged = true;
          break;
      }
    }
    report.findings.push_back(std::move(finding));
  }
  return report;
}

}  // namespace apxpart

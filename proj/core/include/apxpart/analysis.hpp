#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apxpart/affinity.hpp"
#include "apxpart/cachesim.hpp"
#include "apxpart/structdsl.hpp"

namespace apxpart {

// One warning, tagged with the module that raised it.
struct ReportWarning {
  std::string module;
  std::string message;

  bool operator==(const ReportWarning&) const = default;
};

struct TopInstructionSummary {
  std::uint64_t id = 0;
  std::uint64_t misses = 0;
  double share = 0.0;

  bool operator==(const TopInstructionSummary&) const = default;
};

struct AffinitySection {
  std::string type_name;
  std::uint64_t threshold = 0;
  AffinityMatrix matrix;

  bool operator==(const AffinitySection&) const = default;
};

struct GroupSummary {
  std::string name;
  std::string region;
  std::uint64_t base = 0;
  std::uint64_t stride = 0;

  bool operator==(const GroupSummary&) const = default;
};

struct PartitionSection {
  std::uint64_t misses_before = 0;
  std::uint64_t misses_after = 0;
  double ratio = 1.0;
  std::vector<GroupSummary> groups;

  bool operator==(const PartitionSection&) const = default;
};

struct InjectionSummary {
  std::string group;
  std::string region;
  std::uint64_t flips = 0;
  std::uint64_t critical = 0;
  std::uint64_t approximate = 0;
  std::uint64_t padding = 0;

  bool operator==(const InjectionSummary&) const = default;
};

struct DramRegionEstimate {
  std::string name;
  double latency_ns = 0.0;
  double reduction = 0.0;  // vs the same region at spec tRCD/tREF
  double bit_error_rate = 0.0;

  bool operator==(const DramRegionEstimate&) const = default;
};

struct DramSection {
  double spec_latency_ns = 0.0;
  std::uint64_t seed = 0;
  std::vector<DramRegionEstimate> regions;
  std::vector<InjectionSummary> injections;

  bool operator==(const DramSection&) const = default;
};

struct AnalysisReport {
  std::uint64_t total_accesses = 0;
  std::uint64_t total_misses = 0;
  double miss_rate = 0.0;
  double read_miss_rate = 0.0;
  TopInstructionSummary top_instruction;
  std::optional<std::string> target_type;          // label spelling
  std::optional<std::string> target_display_name;  // "arc_t (struct arc)"
  double target_type_share = 0.0;
  std::optional<CriteriaResult> criteria;
  std::vector<std::string> notes;
  std::optional<AffinitySection> affinity;
  std::optional<PartitionSection> partition;
  std::optional<DramSection> dram;
  std::vector<ReportWarning> warnings;

  bool operator==(const AnalysisReport&) const = default;
};

struct AnalysisInputs {
  std::string decls_text;
  std::string trace_text;
  CacheConfig cache;
  std::optional<std::uint64_t> threshold;
  std::optional<std::string> plan_text;
  std::optional<std::string> regions_text;
  std::uint64_t seed = 0;
  AbiProfile abi = AbiProfile::lp64();
  std::uint64_t row_size = 4096;
};

// Cache simulation, target instruction, target data type and criteria, then
// the optional affinity, partition and DRAM sections. Throws InputError for
// unusable inputs and AnalysisError when no target can be determined.
[[nodiscard]] AnalysisReport analyze(const AnalysisInputs& inputs);

enum class ReportFormat { Text, Json };

// Text mode leads with a one-line summary, e.g.
//   miss_rate 33.7% (48.6%) target arc_t (struct arc) C1 Y C2 Y C3 N
// and omits absent sections. Json mode is the stable machine-readable schema
// (keys sorted, schema version "apxpart-report/1").
[[nodiscard]] std::string render_report(const AnalysisReport& report, ReportFormat format);

// Parses render_report(..., Json) output. Throws InputError on schema errors.
[[nodiscard]] AnalysisReport parse_report_json(std::string_view text);

}  // namespace apxpart

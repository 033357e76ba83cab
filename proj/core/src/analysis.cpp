#include "apxpart/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "apxpart/dram.hpp"
#include "apxpart/error.hpp"
#include "apxpart/partition.hpp"
#include "apxpart/trace.hpp"

namespace apxpart {

namespace {

constexpr const char* kModule = "cli";
constexpr const char* kSchema = "apxpart-report/1";

using nlohmann::json;

PartitionSection run_partition(const AnalysisInputs& inputs, const ResolvedType& target, const std::string& label_type,
                               const Trace& trace, AnalysisReport& report) {
  PartitionPlan plan = parse_plan(*inputs.plan_text);
  if (plan.type_name && *plan.type_name != label_type && *plan.type_name != target.name) {
    report.warnings.push_back({"partition", fmt::format("plan is written for type '{}' but the target type is '{}'",
                                                        *plan.type_name, label_type)});
  }
  FlattenedLayout layout = target.layout;
  layout.type_name = label_type;
  const std::uint64_t elements = infer_element_count(trace, layout);

  // Groups without an explicit region go after every trace region, a cache
  // capacity apart.
  std::uint64_t start = 0;
  for (const auto& [name, region] : trace.regions) start = std::max(start, region.base + region.length);
  place_regions(plan, layout, elements, start + inputs.cache.capacity(), inputs.cache.capacity(), inputs.row_size);

  const PartitionComparison cmp = compare_partitioning(trace, layout, plan, inputs.cache, elements, inputs.row_size);
  for (const auto& w : cmp.warnings) report.warnings.push_back({"partition", w});

  PartitionSection section;
  section.misses_before = cmp.misses_before;
  section.misses_after = cmp.misses_after;
  section.ratio = cmp.ratio;
  const SplitGeometry geometry = split_layout(layout, plan, elements, inputs.row_size);
  for (const auto& g : geometry.groups) section.groups.push_back({g.name, g.region, g.base, g.stride});

  if (inputs.regions_text) {
    // Injection per group whose region is also described in the region file.
    const auto regions = parse_regions(*inputs.regions_text);
    for (std::size_t i = 0; i < geometry.groups.size(); ++i) {
      const auto& g = geometry.groups[i];
      const auto it = std::find_if(regions.begin(), regions.end(),
                                   [&](const RegionConfig& r) { return r.name == g.region; });
      if (it == regions.end()) continue;
      const std::uint64_t bytes = std::min<std::uint64_t>(elements * g.stride, it->size);
      const std::vector<std::uint8_t> zeros(bytes, 0);
      const auto injected = inject_errors(zeros, *it, inputs.seed + i);
      const auto check =
          criticality_check(injected.flips, g.as_layout(label_type, layout.abi), g.stride, plan.tags);
      report.dram->injections.push_back({g.name, g.region, injected.flips.size(),
                                         check.count(FlipClass::CriticalViolation),
                                         check.count(FlipClass::Approximate), check.count(FlipClass::Padding)});
      if (check.violations() > 0) {
        report.warnings.push_back({"dram", fmt::format("{} bit flips hit critical members of group '{}'",
                                                       check.violations(), g.name)});
      }
    }
  }
  return section;
}

}  // namespace

AnalysisReport analyze(const AnalysisInputs& inputs) {
  const DeclSet decls = parse_decls(inputs.decls_text);
  const Trace trace = parse_trace(inputs.trace_text);
  inputs.cache.validate();

  AnalysisReport report;
  const MissStats stats = simulate(trace, inputs.cache);
  report.total_accesses = stats.total_accesses;
  report.total_misses = stats.total_misses;
  report.miss_rate = stats.miss_rate();
  report.read_miss_rate = stats.read_miss_rate();
  if (stats.read_accesses != stats.total_accesses) {
    report.warnings.push_back(
        {"cachesim", fmt::format("trace contains writes; miss counts include them (read-only miss rate {})",
                                 format_percent(stats.read_miss_rate()))});
  }

  const TargetInstruction top = target_instruction(stats);
  report.top_instruction = {top.id.value, top.misses, top.share};

  const TargetType target = target_data_type(stats, trace);
  report.notes = target.notes;
  report.target_type_share = target.share;
  std::optional<ResolvedType> resolved;
  if (target.type_name) {
    report.target_type = target.type_name;
    resolved = resolve_type(*target.type_name, decls, inputs.abi);
    if (resolved) {
      report.target_display_name = resolved->display_name;
      report.criteria = classify(resolved->layout, resolved->is_composite);
      if (!resolved->is_composite) {
        report.notes.push_back("target data type is not a struct: no data partitioning is needed");
      }
    } else {
      report.warnings.push_back(
          {"structdsl", "target data type '" + *target.type_name + "' is not declared; criteria not evaluated"});
    }
  } else {
    report.warnings.push_back({"cachesim", "target data type could not be determined from trace labels"});
  }

  if (inputs.threshold) {
    if (!report.target_type) throw AnalysisError("affinity", "affinity needs a labelled target data type");
    report.affinity = AffinitySection{*report.target_type, *inputs.threshold,
                                      compute_affinity(trace, *report.target_type, *inputs.threshold)};
  }

  if (inputs.regions_text) {
    DramSection dram;
    dram.seed = inputs.seed;
    dram.spec_latency_ns = effective_latency(TimingParams{});
    for (const auto& r : parse_regions(*inputs.regions_text)) {
      dram.regions.push_back(
          {r.name, effective_latency(r.timing), latency_reduction(spec_counterpart(r.timing), r.timing), r.bit_error_rate});
    }
    report.dram = std::move(dram);
  }

  if (inputs.plan_text) {
    if (!resolved || !resolved->is_composite) {
      throw AnalysisError("partition", "partition comparison needs a declared struct as the target data type");
    }
    report.partition = run_partition(inputs, *resolved, *report.target_type, trace, report);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

std::string render_text(const AnalysisReport& r) {
  std::string out = "miss_rate " + format_rate_share(r.miss_rate, r.top_instruction.share);
  if (r.target_type) {
    out += " target " + r.target_display_name.value_or(*r.target_type);
  } else {
    out += " target unknown";
  }
  if (r.criteria) {
    out += fmt::format(" C1 {} C2 {} C3 {}", to_string(r.criteria->c1), to_string(r.criteria->c2),
                       to_string(r.criteria->c3));
  }
  out += '\n';
  out += fmt::format("accesses {} misses {} read_miss_rate {}\n", r.total_accesses, r.total_misses,
                     format_percent(r.read_miss_rate));
  out += fmt::format("top_instruction {} misses {} share {}\n", r.top_instruction.id, r.top_instruction.misses,
                     format_percent(r.top_instruction.share));
  if (r.target_type) out += fmt::format("target_type_share {}\n", format_percent(r.target_type_share));
  for (const auto& note : r.notes) out += "note: " + note + '\n';
  if (r.affinity) {
    out += fmt::format("affinity type {} threshold {}\n", r.affinity->type_name, r.affinity->threshold);
    out += render_affinity_table(r.affinity->matrix);
  }
  if (r.partition) {
    out += fmt::format("partition misses_before {} misses_after {} ratio {:.3f}\n", r.partition->misses_before,
                       r.partition->misses_after, r.partition->ratio);
    for (const auto& g : r.partition->groups) {
      out += fmt::format("  group {} region {} base 0x{:x} stride {}\n", g.name, g.region, g.base, g.stride);
    }
  }
  if (r.dram) {
    out += fmt::format("dram spec_latency {:.2f} ns seed {}\n", r.dram->spec_latency_ns, r.dram->seed);
    for (const auto& region : r.dram->regions) {
      out += fmt::format("  region {} latency {:.2f} ns reduction {} ber {:g}\n", region.name, region.latency_ns,
                         format_percent(region.reduction), region.bit_error_rate);
    }
    for (const auto& inj : r.dram->injections) {
      out += fmt::format("  injection group {} region {} flips {} critical {} approximate {} padding {}\n",
                         inj.group, inj.region, inj.flips, inj.critical, inj.approximate, inj.padding);
    }
  }
  for (const auto& w : r.warnings) out += fmt::format("warning [{}] {}\n", w.module, w.message);
  return out;
}

json verdicts_to_json(const CriteriaResult& c) {
  return {{"c1", std::string(to_string(c.c1))}, {"c2", std::string(to_string(c.c2))},
          {"c3", std::string(to_string(c.c3))}};
}

Verdict verdict_from(const std::string& s) {
  if (s == "Y") return Verdict::Yes;
  if (s == "N") return Verdict::No;
  if (s == "-") return Verdict::NotApplicable;
  throw InputError(kModule, "invalid criteria verdict '" + s + "'");
}

json ratio_to_json(double ratio) { return std::isfinite(ratio) ? json(ratio) : json(nullptr); }

std::string render_json(const AnalysisReport& r) {
  json j;
  j["schema"] = kSchema;
  j["total_accesses"] = r.total_accesses;
  j["total_misses"] = r.total_misses;
  j["miss_rate"] = r.miss_rate;
  j["read_miss_rate"] = r.read_miss_rate;
  j["summary"] = format_rate_share(r.miss_rate, r.top_instruction.share);
  j["top_instruction"] = {{"id", r.top_instruction.id},
                          {"misses", r.top_instruction.misses},
                          {"share", r.top_instruction.share}};
  if (r.target_type) {
    j["target"] = {{"type", *r.target_type}, {"share", r.target_type_share}};
    if (r.target_display_name) j["target"]["display_name"] = *r.target_display_name;
  }
  if (r.criteria) j["criteria"] = verdicts_to_json(*r.criteria);
  if (!r.notes.empty()) j["notes"] = r.notes;
  if (r.affinity) {
    j["affinity"] = {{"type", r.affinity->type_name},
                     {"threshold", r.affinity->threshold},
                     {"members", r.affinity->matrix.members()},
                     {"counts", r.affinity->matrix.counts()}};
  }
  if (r.partition) {
    json groups = json::array();
    for (const auto& g : r.partition->groups) {
      groups.push_back({{"name", g.name}, {"region", g.region}, {"base", g.base}, {"stride", g.stride}});
    }
    j["partition"] = {{"misses_before", r.partition->misses_before},
                      {"misses_after", r.partition->misses_after},
                      {"ratio", ratio_to_json(r.partition->ratio)},
                      {"groups", groups}};
  }
  if (r.dram) {
    json regions = json::array();
    for (const auto& region : r.dram->regions) {
      regions.push_back({{"name", region.name},
                         {"latency_ns", region.latency_ns},
                         {"reduction", region.reduction},
                         {"bit_error_rate", region.bit_error_rate}});
    }
    json injections = json::array();
    for (const auto& inj : r.dram->injections) {
      injections.push_back({{"group", inj.group},
                            {"region", inj.region},
                            {"flips", inj.flips},
                            {"critical", inj.critical},
                            {"approximate", inj.approximate},
                            {"padding", inj.padding}});
    }
    j["dram"] = {{"spec_latency_ns", r.dram->spec_latency_ns},
                 {"seed", r.dram->seed},
                 {"regions", regions},
                 {"injections", injections}};
  }
  if (!r.warnings.empty()) {
    json warnings = json::array();
    for (const auto& w : r.warnings) warnings.push_back({{"module", w.module}, {"message", w.message}});
    j["warnings"] = warnings;
  }
  return j.dump(2) + "\n";
}

}  // namespace

std::string render_report(const AnalysisReport& report, ReportFormat format) {
  return format == ReportFormat::Json ? render_json(report) : render_text(report);
}

AnalysisReport parse_report_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(kModule, std::string("report is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("schema").get<std::string>() != kSchema) {
      throw InputError(kModule, "unsupported report schema '" + j.at("schema").get<std::string>() + "'");
    }
    AnalysisReport r;
    r.total_accesses = j.at("total_accesses").get<std::uint64_t>();
    r.total_misses = j.at("total_misses").get<std::uint64_t>();
    r.miss_rate = j.at("miss_rate").get<double>();
    r.read_miss_rate = j.at("read_miss_rate").get<double>();
    const auto& top = j.at("top_instruction");
    r.top_instruction = {top.at("id").get<std::uint64_t>(), top.at("misses").get<std::uint64_t>(),
                         top.at("share").get<double>()};
    if (j.contains("target")) {
      const auto& t = j["target"];
      r.target_type = t.at("type").get<std::string>();
      r.target_type_share = t.at("share").get<double>();
      if (t.contains("display_name")) r.target_display_name = t["display_name"].get<std::string>();
    }
    if (j.contains("criteria")) {
      const auto& c = j["criteria"];
      r.criteria = CriteriaResult{verdict_from(c.at("c1").get<std::string>()),
                                  verdict_from(c.at("c2").get<std::string>()),
                                  verdict_from(c.at("c3").get<std::string>())};
    }
    if (j.contains("notes")) r.notes = j["notes"].get<std::vector<std::string>>();
    if (j.contains("affinity")) {
      const auto& a = j["affinity"];
      r.affinity = AffinitySection{a.at("type").get<std::string>(), a.at("threshold").get<std::uint64_t>(),
                                   AffinityMatrix(a.at("members").get<std::vector<std::string>>(),
                                                  a.at("counts").get<std::vector<std::uint64_t>>())};
    }
    if (j.contains("partition")) {
      const auto& p = j["partition"];
      PartitionSection section;
      section.misses_before = p.at("misses_before").get<std::uint64_t>();
      section.misses_after = p.at("misses_after").get<std::uint64_t>();
      section.ratio =
          p.at("ratio").is_null() ? std::numeric_limits<double>::infinity() : p.at("ratio").get<double>();
      for (const auto& g : p.at("groups")) {
        section.groups.push_back({g.at("name").get<std::string>(), g.at("region").get<std::string>(),
                                  g.at("base").get<std::uint64_t>(), g.at("stride").get<std::uint64_t>()});
      }
      r.partition = std::move(section);
    }
    if (j.contains("dram")) {
      const auto& d = j["dram"];
      DramSection section;
      section.spec_latency_ns = d.at("spec_latency_ns").get<double>();
      section.seed = d.at("seed").get<std::uint64_t>();
      for (const auto& region : d.at("regions")) {
        section.regions.push_back({region.at("name").get<std::string>(), region.at("latency_ns").get<double>(),
                                   region.at("reduction").get<double>(), region.at("bit_error_rate").get<double>()});
      }
      for (const auto& inj : d.at("injections")) {
        section.injections.push_back({inj.at("group").get<std::string>(), inj.at("region").get<std::string>(),
                                      inj.at("flips").get<std::uint64_t>(), inj.at("critical").get<std::uint64_t>(),
                                      inj.at("approximate").get<std::uint64_t>(),
                                      inj.at("padding").get<std::uint64_t>()});
      }
      r.dram = std::move(section);
    }
    if (j.contains("warnings")) {
      for (const auto& w : j["warnings"]) {
        r.warnings.push_back({w.at("module").get<std::string>(), w.at("message").get<std::string>()});
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw InputError(kModule, std::string("malformed report: ") + e.what());
  }
}

}  // namespace apxpart

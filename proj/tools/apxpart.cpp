// apxpart: command-line front end for the analysis library.
//
// Exit codes: 0 success, 2 input error, 3 analysis error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "apxpart/affinity.hpp"
#include "apxpart/analysis.hpp"
#include "apxpart/cachesim.hpp"
#include "apxpart/dram.hpp"
#include "apxpart/error.hpp"
#include "apxpart/partition.hpp"
#include "apxpart/structdsl.hpp"
#include "apxpart/trace.hpp"

namespace {

using namespace apxpart;
using nlohmann::json;

constexpr int kExitInput = 2;
constexpr int kExitAnalysis = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cli", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cli", "cannot write '" + path + "'");
  out << text;
}

struct CacheFlags {
  std::uint64_t line_size = 64;
  std::uint64_t sets = 16384;
  std::uint64_t ways = 11;

  void attach(CLI::App& cmd) {
    cmd.add_option("--line-size", line_size, "Cache line size in bytes (power of two)")->capture_default_str();
    cmd.add_option("--sets", sets, "Number of cache sets (power of two)")->capture_default_str();
    cmd.add_option("--ways", ways, "Associativity")->capture_default_str();
  }
  [[nodiscard]] CacheConfig config() const { return {line_size, sets, ways}; }
};

ReportFormat parse_format(const std::string& f) { return f == "json" ? ReportFormat::Json : ReportFormat::Text; }

AbiProfile abi_from(bool packed, bool ilp32) {
  AbiProfile abi = ilp32 ? AbiProfile::ilp32() : AbiProfile::lp64();
  abi.packed = packed;
  return abi;
}

json layout_to_json(const ResolvedType& t, const CriteriaResult& c) {
  json entries = json::array();
  for (const auto& e : t.layout.entries) {
    json entry = {{"path", e.path},
                  {"kind", std::string(to_string(e.kind))},
                  {"offset", e.offset},
                  {"size", e.size}};
    if (e.is_run()) {
      entry["count"] = e.count;
      entry["stride"] = e.stride;
    }
    entries.push_back(entry);
  }
  return {{"type", t.name},
          {"display_name", t.display_name},
          {"composite", t.is_composite},
          {"total_size", t.layout.total_size},
          {"entries", entries},
          {"criteria",
           {{"c1", std::string(to_string(c.c1))},
            {"c2", std::string(to_string(c.c2))},
            {"c3", std::string(to_string(c.c3))}}}};
}

std::string layout_to_text(const ResolvedType& t, const CriteriaResult& c) {
  std::string out = fmt::format("{} size {} C1 {} C2 {} C3 {}\n", t.display_name, t.layout.total_size,
                                to_string(c.c1), to_string(c.c2), to_string(c.c3));
  for (const auto& e : t.layout.entries) {
    out += fmt::format("  0x{:04x} {:<8} {:>3} {}", e.offset, to_string(e.kind), e.size, e.path.empty() ? "-" : e.path);
    if (e.is_run()) out += fmt::format(" x{} stride {}", e.count, e.stride);
    out += '\n';
  }
  return out;
}

ElementOrder order_from(const std::string& name, std::uint64_t seed) {
  if (name == "sequential") return SequentialOrder{};
  if (name == "random") return RandomOrder{seed};
  if (name == "chase") return PermutationChaseOrder{seed};
  throw InputError("cli", "unknown element order '" + name + "' (sequential, random, chase)");
}

ResolvedType require_type(const DeclSet& decls, const std::string& name, const AbiProfile& abi) {
  auto t = resolve_type(name, decls, abi);
  if (!t) throw InputError("structdsl", "unknown type '" + name + "'");
  return *t;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interleaved-criticality analysis for approximate memory partitioning"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with default option values")->envname("APXPART_CONFIG");

  std::string format = "text";
  std::uint64_t seed = 0;
  std::uint64_t row_size = kDefaultRowSize;
  bool packed = false;
  bool ilp32 = false;

  // analyze ------------------------------------------------------------------
  auto* analyze_cmd = app.add_subcommand("analyze", "Run the full analysis pipeline");
  std::string decls_path;
  std::string trace_path;
  std::string plan_path;
  std::string regions_path;
  std::uint64_t threshold = 0;
  CacheFlags cache_flags;
  analyze_cmd->add_option("--decls", decls_path, "Struct declaration file")->required();
  analyze_cmd->add_option("--trace", trace_path, "Labelled memory trace")->required();
  cache_flags.attach(*analyze_cmd);
  auto* threshold_opt = analyze_cmd->add_option("--threshold", threshold, "Compute access affinity with this threshold");
  analyze_cmd->add_option("--plan", plan_path, "Partition plan to evaluate");
  analyze_cmd->add_option("--regions", regions_path, "Approximate DRAM region file");
  analyze_cmd->add_option("--seed", seed, "Seed for error injection")->capture_default_str();
  analyze_cmd->add_option("--row-size", row_size, "Approximation granularity in bytes")->capture_default_str();
  analyze_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
  analyze_cmd->add_flag("--packed", packed, "Use packed layout (no padding)");

  // classify -----------------------------------------------------------------
  auto* classify_cmd = app.add_subcommand("classify", "Show flattened layouts and C1/C2/C3 verdicts");
  std::string type_name;
  classify_cmd->add_option("--decls", decls_path, "Struct declaration file")->required();
  classify_cmd->add_option("--type", type_name, "Only this type (struct, typedef or scalar)");
  classify_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
  classify_cmd->add_flag("--packed", packed, "Use packed layout (no padding)");
  classify_cmd->add_flag("--ilp32", ilp32, "Use 4-byte longs and pointers");

  // affinity -----------------------------------------------------------------
  auto* affinity_cmd = app.add_subcommand("affinity", "Access affinity between members of one type");
  affinity_cmd->add_option("--trace", trace_path, "Labelled memory trace")->required();
  affinity_cmd->add_option("--type", type_name, "Type label to analyse")->required();
  affinity_cmd->add_option("--threshold", threshold, "Max other-member accesses in between (exclusive)")->required();
  affinity_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));

  // partition-sim ------------------------------------------------------------
  auto* partition_cmd = app.add_subcommand("partition-sim", "Cache misses before and after splitting a type");
  partition_cmd->add_option("--decls", decls_path, "Struct declaration file")->required();
  partition_cmd->add_option("--trace", trace_path, "Labelled memory trace")->required();
  partition_cmd->add_option("--plan", plan_path, "Partition plan")->required();
  partition_cmd->add_option("--type", type_name, "Type label (defaults to the plan's 'type' line)");
  partition_cmd->add_option("--row-size", row_size, "Approximation granularity in bytes")->capture_default_str();
  partition_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
  partition_cmd->add_flag("--packed", packed, "Use packed layout (no padding)");
  CacheFlags partition_cache;
  partition_cache.attach(*partition_cmd);

  // dram-sim -----------------------------------------------------------------
  auto* dram_cmd = app.add_subcommand("dram-sim", "Latency estimate and error injection for DRAM regions");
  std::string region_name;
  std::uint64_t elements = 0;
  dram_cmd->add_option("--regions", regions_path, "Approximate DRAM region file")->required();
  dram_cmd->add_option("--decls", decls_path, "Struct declaration file");
  dram_cmd->add_option("--type", type_name, "Type stored in the region");
  dram_cmd->add_option("--elements", elements, "Number of array elements (default: as many as fit)");
  dram_cmd->add_option("--region", region_name, "Region holding the whole array");
  dram_cmd->add_option("--plan", plan_path, "Partition plan (tags, and per-group regions)");
  dram_cmd->add_option("--seed", seed, "Seed for error injection")->capture_default_str();
  dram_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));

  // gen-trace ----------------------------------------------------------------
  auto* gen_cmd = app.add_subcommand("gen-trace", "Synthesise a trace over an array of structs");
  std::vector<std::string> members;
  std::vector<std::string> instr_specs;
  std::uint64_t count = 0;
  std::string order = "sequential";
  std::string base_text = "0x10000000";
  std::string out_path;
  bool writes = false;
  gen_cmd->add_option("--decls", decls_path, "Struct declaration file")->required();
  gen_cmd->add_option("--type", type_name, "Element type")->required();
  gen_cmd->add_option("--members", members, "Members accessed per element, in order")->required()->delimiter(',');
  gen_cmd->add_option("--count", count, "Number of elements")->required();
  gen_cmd->add_option("--order", order, "sequential | random | chase")->capture_default_str();
  gen_cmd->add_option("--seed", seed, "Seed for random orders")->capture_default_str();
  gen_cmd->add_option("--base", base_text, "Array base address")->capture_default_str();
  gen_cmd->add_option("--instr", instr_specs, "member=id pairs for access-site ids")->delimiter(',');
  gen_cmd->add_flag("--write", writes, "Emit writes instead of reads");
  gen_cmd->add_option("--out", out_path, "Output file (default stdout)");
  gen_cmd->add_flag("--packed", packed, "Use packed layout (no padding)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    const ReportFormat fmt_kind = parse_format(format);

    if (analyze_cmd->parsed()) {
      AnalysisInputs in;
      in.decls_text = read_file(decls_path);
      in.trace_text = read_file(trace_path);
      in.cache = cache_flags.config();
      if (threshold_opt->count() > 0) in.threshold = threshold;
      if (!plan_path.empty()) in.plan_text = read_file(plan_path);
      if (!regions_path.empty()) in.regions_text = read_file(regions_path);
      in.seed = seed;
      in.abi = abi_from(packed, false);
      in.row_size = row_size;
      std::cout << render_report(analyze(in), fmt_kind);
      return 0;
    }

    if (classify_cmd->parsed()) {
      const DeclSet decls = parse_decls(read_file(decls_path));
      const AbiProfile abi = abi_from(packed, ilp32);
      std::vector<ResolvedType> types;
      if (!type_name.empty()) {
        types.push_back(require_type(decls, type_name, abi));
      } else {
        for (const auto& d : decls.decls()) types.push_back(require_type(decls, d.name, abi));
      }
      json all = json::array();
      for (const auto& t : types) {
        const CriteriaResult c = classify(t.layout, t.is_composite);
        if (fmt_kind == ReportFormat::Json) {
          all.push_back(layout_to_json(t, c));
        } else {
          std::cout << layout_to_text(t, c);
        }
      }
      if (fmt_kind == ReportFormat::Json) std::cout << all.dump(2) << '\n';
      return 0;
    }

    if (affinity_cmd->parsed()) {
      const Trace trace = parse_trace(read_file(trace_path));
      const AffinityMatrix m = compute_affinity(trace, type_name, threshold);
      if (fmt_kind == ReportFormat::Json) {
        std::cout << json{{"type", type_name}, {"threshold", threshold}, {"members", m.members()},
                          {"counts", m.counts()}}
                         .dump(2)
                  << '\n';
      } else {
        std::cout << render_affinity_table(m) << render_affinity_rows(m);
      }
      return 0;
    }

    if (partition_cmd->parsed()) {
      const DeclSet decls = parse_decls(read_file(decls_path));
      const Trace trace = parse_trace(read_file(trace_path));
      PartitionPlan plan = parse_plan(read_file(plan_path));
      if (type_name.empty()) {
        if (!plan.type_name) throw InputError("cli", "give --type or a 'type' line in the plan");
        type_name = *plan.type_name;
      }
      const ResolvedType target = require_type(decls, type_name, abi_from(packed, false));
      FlattenedLayout layout = target.layout;
      layout.type_name = type_name;
      const CacheConfig cache = partition_cache.config();
      cache.validate();
      const std::uint64_t n = infer_element_count(trace, layout);
      std::uint64_t start = 0;
      for (const auto& [name, region] : trace.regions) start = std::max(start, region.base + region.length);
      place_regions(plan, layout, n, start + cache.capacity(), cache.capacity(), row_size);

      const PlanValidation validation = validate_plan(plan, layout, plan.tags, row_size, n);
      if (!validation.ok()) {
        for (const auto& v : validation.violations) {
          std::cerr << "violation [" << to_string(v.kind) << "] " << v.message << '\n';
        }
        return kExitInput;
      }
      const PartitionComparison cmp = compare_partitioning(trace, layout, plan, cache, n, row_size);
      const SplitGeometry geometry = split_layout(layout, plan, n, row_size);
      if (fmt_kind == ReportFormat::Json) {
        json groups = json::array();
        for (const auto& g : geometry.groups) {
          groups.push_back({{"name", g.name}, {"region", g.region}, {"base", g.base}, {"stride", g.stride}});
        }
        std::cout << json{{"type", type_name},
                          {"elements", n},
                          {"misses_before", cmp.misses_before},
                          {"misses_after", cmp.misses_after},
                          {"ratio", cmp.ratio},
                          {"groups", groups},
                          {"warnings", cmp.warnings}}
                         .dump(2)
                  << '\n';
      } else {
        std::cout << fmt::format("partition type {} elements {} misses_before {} misses_after {} ratio {:.3f}\n",
                                 type_name, n, cmp.misses_before, cmp.misses_after, cmp.ratio);
        for (const auto& g : geometry.groups) {
          std::cout << fmt::format("  group {} region {} base 0x{:x} stride {}\n", g.name, g.region, g.base,
                                   g.stride);
        }
        for (const auto& w : cmp.warnings) std::cout << "warning [partition] " << w << '\n';
      }
      return 0;
    }

    if (dram_cmd->parsed()) {
      const auto regions = parse_regions(read_file(regions_path));
      json out = {{"spec_latency_ns", effective_latency(TimingParams{})}, {"seed", seed}};
      json region_rows = json::array();
      std::string text = fmt::format("dram spec_latency {:.2f} ns seed {}\n", effective_latency(TimingParams{}), seed);
      for (const auto& r : regions) {
        const double latency = effective_latency(r.timing);
        const double reduction = latency_reduction(spec_counterpart(r.timing), r.timing);
        region_rows.push_back({{"name", r.name}, {"latency_ns", latency}, {"reduction", reduction},
                               {"bit_error_rate", r.bit_error_rate}});
        text += fmt::format("  region {} latency {:.2f} ns reduction {} ber {:g}\n", r.name, latency,
                            format_percent(reduction), r.bit_error_rate);
      }
      out["regions"] = region_rows;

      if (!type_name.empty()) {
        if (decls_path.empty()) throw InputError("cli", "--type needs --decls");
        const DeclSet decls = parse_decls(read_file(decls_path));
        const ResolvedType target = require_type(decls, type_name, AbiProfile::lp64());
        std::optional<PartitionPlan> plan;
        if (!plan_path.empty()) plan = parse_plan(read_file(plan_path));
        const CriticalityTags tags = plan ? plan->tags : CriticalityTags{};
        const auto find_region = [&](const std::string& name) -> const RegionConfig& {
          for (const auto& r : regions) {
            if (r.name == name) return r;
          }
          throw InputError("cli", "region '" + name + "' is not in the region file");
        };
        struct Placement {
          std::string label;
          const RegionConfig* region;
          FlattenedLayout layout;
        };
        std::vector<Placement> placements;
        if (!region_name.empty()) {
          placements.push_back({"aos", &find_region(region_name), target.layout});
        } else if (plan) {
          const RegionConfig& first = find_region(plan->groups.empty() ? "" : plan->groups.front().region);
          const std::uint64_t n = elements > 0 ? elements : first.size / std::max<std::uint64_t>(1, target.layout.total_size);
          const SplitGeometry geometry = split_layout(target.layout, *plan, n, row_size);
          for (const auto& g : geometry.groups) {
            placements.push_back({g.name, &find_region(g.region), g.as_layout(target.name, target.layout.abi)});
          }
        } else {
          throw InputError("cli", "--type needs --region or --plan");
        }
        json injections = json::array();
        for (std::size_t i = 0; i < placements.size(); ++i) {
          const auto& p = placements[i];
          const std::uint64_t stride = std::max<std::uint64_t>(1, p.layout.total_size);
          const std::uint64_t n = elements > 0 ? elements : p.region->size / stride;
          const std::vector<std::uint8_t> zeros(std::min<std::uint64_t>(n * stride, p.region->size), 0);
          const auto injected = inject_errors(zeros, *p.region, seed + i);
          const auto report = criticality_check(injected.flips, p.layout, stride, tags);
          injections.push_back({{"group", p.label},
                                {"region", p.region->name},
                                {"flips", injected.flips.size()},
                                {"critical", report.count(FlipClass::CriticalViolation)},
                                {"approximate", report.count(FlipClass::Approximate)},
                                {"padding", report.count(FlipClass::Padding)}});
          text += fmt::format("  injection group {} region {} flips {} critical {} approximate {} padding {}\n",
                              p.label, p.region->name, injected.flips.size(),
                              report.count(FlipClass::CriticalViolation), report.count(FlipClass::Approximate),
                              report.count(FlipClass::Padding));
        }
        out["injections"] = injections;
      }
      std::cout << (fmt_kind == ReportFormat::Json ? out.dump(2) + "\n" : text);
      return 0;
    }

    if (gen_cmd->parsed()) {
      const DeclSet decls = parse_decls(read_file(decls_path));
      const ResolvedType target = require_type(decls, type_name, abi_from(packed, false));
      FlattenedLayout layout = target.layout;
      layout.type_name = type_name;
      PatternSpec pattern;
      pattern.order = order_from(order, seed);
      pattern.members = members;
      pattern.element_count = count;
      pattern.kind = writes ? AccessKind::Write : AccessKind::Read;
      for (const auto& spec : instr_specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw InputError("cli", "--instr expects member=id, got '" + spec + "'");
        pattern.instr_ids[spec.substr(0, eq)] = InstrId{std::stoull(spec.substr(eq + 1), nullptr, 0)};
      }
      const std::uint64_t base = std::stoull(base_text, nullptr, 0);
      write_output(out_path, render_trace(gen_aos_trace(layout, pattern, base)));
      return 0;
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const AnalysisError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitAnalysis;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: [cli] invalid number: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitAnalysis;
  }
  return 0;
}

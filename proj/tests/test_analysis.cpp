#include <doctest.h>

#include <cmath>
#include <limits>

#include "apxpart/analysis.hpp"
#include "apxpart/error.hpp"
#include "apxpart/trace.hpp"
#include "test_support.hpp"

using namespace apxpart;

namespace {

std::string tree_trace_text(std::uint64_t n = 4096, std::vector<std::string> members = {"id", "score"}) {
  const DeclSet decls = parse_decls(test::read_fixture("tree_node.h"));
  PatternSpec p;
  p.members = std::move(members);
  p.element_count = n;
  p.order = RandomOrder{1};
  return render_trace(gen_aos_trace(layout(*decls.find("tree_node"), decls), p, 0x10000000));
}

AnalysisInputs tree_inputs() {
  AnalysisInputs in;
  in.decls_text = test::read_fixture("tree_node.h");
  in.trace_text = tree_trace_text();
  in.cache = {64, 64, 8};
  return in;
}

AnalysisReport mcf_like_report() {
  AnalysisReport r;
  r.total_accesses = 104;
  r.total_misses = 35;
  r.miss_rate = 35.0 / 104.0;
  r.read_miss_rate = r.miss_rate;
  r.top_instruction = {10, 17, 17.0 / 35.0};
  r.target_type = "arc";
  r.target_display_name = "arc_t (struct arc)";
  r.target_type_share = 1.0;
  r.criteria = CriteriaResult{Verdict::Yes, Verdict::Yes, Verdict::No};
  return r;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_SUITE("analyze") {
  TEST_CASE("tree_node co-fetch trace") {
    const auto r = analyze(tree_inputs());
    CHECK(r.target_type == "tree_node");
    CHECK(r.target_display_name == "struct tree_node");
    REQUIRE(r.criteria.has_value());
    CHECK(*r.criteria == CriteriaResult{Verdict::Yes, Verdict::Yes, Verdict::Yes});
    CHECK(r.total_accesses == 8192);
    CHECK(r.top_instruction.id == 1);
    CHECK_FALSE(r.affinity.has_value());
    CHECK_FALSE(r.partition.has_value());
    CHECK_FALSE(r.dram.has_value());
    CHECK(r.warnings.empty());
  }

  TEST_CASE("bare double array") {
    AnalysisInputs in;
    in.trace_text = "A 1 R 0x1000 8 double\nA 1 R 0x1040 8 double\nA 2 R 0x1008 8 double\n";
    const auto r = analyze(in);
    CHECK(r.target_type == "double");
    CHECK(r.target_display_name == "double");
    CHECK(*r.criteria == CriteriaResult{Verdict::No, Verdict::NotApplicable, Verdict::NotApplicable});
    REQUIRE_FALSE(r.notes.empty());
    CHECK(r.notes.back().find("no data partitioning is needed") != std::string::npos);
    CHECK(first_line(render_report(r, ReportFormat::Text)) == "miss_rate 66.7% (100.0%) target double C1 N C2 - C3 -");
  }

  TEST_CASE("zero misses is an analysis error") {
    AnalysisInputs in;
    in.trace_text = "# nothing was recorded\n";
    CHECK_THROWS_AS((void)analyze(in), AnalysisError);
  }

  TEST_CASE("input errors carry their module") {
    AnalysisInputs in;
    in.decls_text = "struct a { int x };";
    in.trace_text = "A 1 R 0x0 4 -\n";
    try {
      (void)analyze(in);
      FAIL("expected an input error");
    } catch (const InputError& e) {
      CHECK(e.module() == "structdsl");
    }
    in.decls_text.clear();
    in.trace_text = "A 1 R 0xZZ 4 -\n";
    CHECK_THROWS_WITH_AS((void)analyze(in), doctest::Contains("[trace]"), InputError);
    in.trace_text = "A 1 R 0x0 4 -\n";
    in.cache.ways = 0;
    CHECK_THROWS_WITH_AS((void)analyze(in), doctest::Contains("[cachesim]"), InputError);
  }

  TEST_CASE("undeclared target type and unknown target type become warnings") {
    AnalysisInputs in;
    in.trace_text = "A 1 R 0x0 4 mystery.x\n";
    auto r = analyze(in);
    CHECK(r.target_type == "mystery");
    CHECK_FALSE(r.criteria.has_value());
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].module == "structdsl");
    CHECK(first_line(render_report(r, ReportFormat::Text)) == "miss_rate 100.0% (100.0%) target mystery");

    in.trace_text = "A 1 W 0x0 4 -\n";
    r = analyze(in);
    CHECK_FALSE(r.target_type.has_value());
    CHECK(first_line(render_report(r, ReportFormat::Text)) == "miss_rate 100.0% (100.0%) target unknown");
    for (const auto& w : r.warnings) CHECK_FALSE(w.module.empty());
    CHECK(r.warnings.size() == 2);  // writes present, type unknown
  }

  TEST_CASE("affinity, partition and dram sections") {
    AnalysisInputs in = tree_inputs();
    in.threshold = 2;
    in.plan_text = test::read_fixture("tree_node_split.plan");
    in.regions_text = test::read_fixture("regions.cfg");
    in.seed = 17;
    const auto r = analyze(in);
    REQUIRE(r.affinity.has_value());
    CHECK(r.affinity->matrix.count("id", "score") == 2 * 4096 - 1);
    REQUIRE(r.partition.has_value());
    CHECK(r.partition->groups.size() == 2);
    CHECK(r.partition->groups[0].stride == 24);
    CHECK(r.partition->ratio > 1.0);
    REQUIRE(r.dram.has_value());
    CHECK(r.dram->spec_latency_ns == doctest::Approx(25.0));
    REQUIRE(r.dram->regions.size() == 2);
    CHECK(r.dram->regions[1].latency_ns == doctest::Approx(20.0 / (1 - 0.5 / 128)));
    REQUIRE(r.dram->injections.size() == 2);
    CHECK(r.dram->injections[0].flips == 0);  // critical region has no errors
    CHECK(r.dram->injections[1].critical == 0);
    CHECK(r.dram->injections[1].flips == r.dram->injections[1].approximate);
    for (const auto& w : r.warnings) CHECK(w.module == "partition");

    const std::string text = render_report(r, ReportFormat::Text);
    CHECK(text.find("affinity type tree_node threshold 2") != std::string::npos);
    CHECK(text.find("partition misses_before") != std::string::npos);
    CHECK(text.find("group hot region critical base 0x40000000 stride 24") != std::string::npos);
    CHECK(text.find("injection group cold") != std::string::npos);
  }

  TEST_CASE("plan on a scalar target is an analysis error") {
    AnalysisInputs in;
    in.trace_text = "A 1 R 0x1000 8 double\n";
    in.plan_text = test::read_fixture("tree_node_split.plan");
    CHECK_THROWS_AS((void)analyze(in), AnalysisError);
  }

  TEST_CASE("identical inputs give byte-identical JSON") {
    AnalysisInputs in = tree_inputs();
    in.threshold = 1;
    in.plan_text = test::read_fixture("tree_node_split.plan");
    in.regions_text = test::read_fixture("regions.cfg");
    in.seed = 99;
    CHECK(render_report(analyze(in), ReportFormat::Json) == render_report(analyze(in), ReportFormat::Json));
  }
}

TEST_SUITE("render_report") {
  TEST_CASE("mcf-style summary line") {
    CHECK(first_line(render_report(mcf_like_report(), ReportFormat::Text)) ==
          "miss_rate 33.7% (48.6%) target arc_t (struct arc) C1 Y C2 Y C3 N");
  }

  TEST_CASE("absent sections are omitted") {
    const std::string text = render_report(mcf_like_report(), ReportFormat::Text);
    CHECK(text.find("affinity") == std::string::npos);
    CHECK(text.find("partition") == std::string::npos);
    CHECK(text.find("dram") == std::string::npos);
    CHECK(text.find("warning") == std::string::npos);
    CHECK(text.find("\n\n") == std::string::npos);
    const std::string json = render_report(mcf_like_report(), ReportFormat::Json);
    CHECK(json.find("\"affinity\"") == std::string::npos);
    CHECK(json.find("\"partition\"") == std::string::npos);
    CHECK(json.find("null") == std::string::npos);
  }

  TEST_CASE("JSON round trip") {
    AnalysisInputs in = tree_inputs();
    in.threshold = 3;
    in.plan_text = test::read_fixture("tree_node_split.plan");
    in.regions_text = test::read_fixture("regions.cfg");
    const auto full = analyze(in);
    for (const auto& r : {mcf_like_report(), full}) {
      const std::string json = render_report(r, ReportFormat::Json);
      CHECK(json.find("\"schema\": \"apxpart-report/1\"") != std::string::npos);
      const auto back = parse_report_json(json);
      CHECK(back == r);
      CHECK(render_report(back, ReportFormat::Json) == json);
    }
  }

  TEST_CASE("infinite ratio survives as null") {
    AnalysisReport r = mcf_like_report();
    r.partition = PartitionSection{0, 5, std::numeric_limits<double>::infinity(), {}};
    const std::string json = render_report(r, ReportFormat::Json);
    CHECK(std::isinf(parse_report_json(json).partition->ratio));
  }

  TEST_CASE("schema errors") {
    CHECK_THROWS_AS((void)parse_report_json("{}"), InputError);
    CHECK_THROWS_AS((void)parse_report_json("not json"), InputError);
    CHECK_THROWS_AS((void)parse_report_json(R"({"schema": "other/9"})"), InputError);
  }
}

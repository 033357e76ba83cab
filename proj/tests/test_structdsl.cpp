#include <doctest.h>

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>

#include "apxpart/error.hpp"
#include "apxpart/rng.hpp"
#include "apxpart/structdsl.hpp"
#include "test_support.hpp"

using namespace apxpart;

namespace {

FlattenedLayout layout_of(const std::string& src, const std::string& name, AbiProfile abi = AbiProfile::lp64()) {
  const DeclSet decls = parse_decls(src);
  const StructDecl* d = decls.find(name);
  REQUIRE(d != nullptr);
  return layout(*d, decls, abi);
}

const LayoutEntry& entry(const FlattenedLayout& l, const std::string& path) {
  const auto it = std::find_if(l.entries.begin(), l.entries.end(), [&](const LayoutEntry& e) { return e.path == path; });
  REQUIRE(it != l.entries.end());
  return *it;
}

constexpr CriteriaResult YYY{Verdict::Yes, Verdict::Yes, Verdict::Yes};
constexpr CriteriaResult YYN{Verdict::Yes, Verdict::Yes, Verdict::No};
constexpr CriteriaResult YNY{Verdict::Yes, Verdict::No, Verdict::Yes};
constexpr CriteriaResult YNN{Verdict::Yes, Verdict::No, Verdict::No};
constexpr CriteriaResult NAA{Verdict::No, Verdict::NotApplicable, Verdict::NotApplicable};

}  // namespace

TEST_SUITE("parse_decls") {
  TEST_CASE("struct complex") {
    const DeclSet decls = parse_decls("struct complex { double real; double imag; };");
    REQUIRE(decls.decls().size() == 1);
    const StructDecl& d = decls.decls()[0];
    CHECK(d.name == "complex");
    REQUIRE(d.members.size() == 2);
    CHECK(d.members[0] == MemberDecl{"real", {ScalarKind::Double, std::nullopt}});
    CHECK(d.members[1] == MemberDecl{"imag", {ScalarKind::Double, std::nullopt}});
  }

  TEST_CASE("empty struct") {
    const DeclSet decls = parse_decls("struct E {};");
    REQUIRE(decls.find("E") != nullptr);
    CHECK(decls.find("E")->members.empty());
    CHECK(layout(*decls.find("E"), decls, AbiProfile::lp64_packed()).total_size == 0);
    CHECK(layout(*decls.find("E"), decls).total_size == 0);
  }

  TEST_CASE("tree_node source taken as-is, including the statements after it") {
    const DeclSet decls = parse_decls(test::read_fixture("tree_node.h"));
    REQUIRE(decls.decls().size() == 1);
    const StructDecl& d = decls.decls()[0];
    CHECK(d.name == "tree_node");
    REQUIRE(d.members.size() == 4);
    CHECK(d.members[0] == MemberDecl{"id", {ScalarKind::Int, std::nullopt}});
    CHECK(d.members[1] == MemberDecl{"r", {ScalarKind::Pointer, std::nullopt}});
    CHECK(d.members[2] == MemberDecl{"l", {ScalarKind::Pointer, std::nullopt}});
    CHECK(d.members[3] == MemberDecl{"score", {ScalarKind::Double, std::nullopt}});
  }

  TEST_CASE("typedef aliases resolve, including ones declared before the struct") {
    const DeclSet decls = parse_decls(test::read_fixture("mcf_arc.h"));
    const StructDecl* arc = decls.find("arc_t");
    REQUIRE(arc != nullptr);
    CHECK(arc->name == "arc");
    CHECK(arc->typedef_alias == "arc_t");
    CHECK(decls.find("arc") == arc);
    REQUIRE(decls.alias("arc_p") != nullptr);
    CHECK(std::get<ScalarKind>(decls.alias("arc_p")->base) == ScalarKind::Pointer);
    // "node_p tail, head;" declares two members.
    CHECK(arc->members.size() == 8);
  }

  TEST_CASE("typedef struct with a body") {
    const DeclSet decls = parse_decls("typedef struct pt { float x, y; } point_t, *point_p;");
    REQUIRE(decls.find("point_t") != nullptr);
    CHECK(decls.find("point_t")->name == "pt");
    CHECK(std::get<ScalarKind>(decls.alias("point_p")->base) == ScalarKind::Pointer);
  }

  TEST_CASE("member functions are counted and dropped") {
    const DeclSet decls = parse_decls(R"(
      class counter {
       public:
        counter();
        ~counter();
        int get() const;
        void bump() { ++value; }
        virtual void reset() = 0;
       private:
        int value;
        int limit;
      };
    )");
    const StructDecl* d = decls.find("counter");
    REQUIRE(d != nullptr);
    CHECK(d->is_class);
    CHECK(d->member_function_count == 5);
    REQUIRE(d->members.size() == 2);
    CHECK(d->members[0].name == "value");
    // Two integers and a function: Y N N.
    CHECK(classify(layout(*d, decls), true) == YNN);
  }

  TEST_CASE("scalar spellings and enums") {
    const DeclSet decls = parse_decls(R"(
      enum color { RED, GREEN };
      struct s {
        unsigned char a; short int b; unsigned c; long long d; int64_t e;
        enum color f; const char *g; void *h; unsigned long i; uint32_t j;
      };
    )");
    const auto& m = decls.find("s")->members;
    const std::vector<ScalarKind> expected{ScalarKind::Char, ScalarKind::Short, ScalarKind::Int, ScalarKind::LongLong,
                                           ScalarKind::Int64, ScalarKind::Int, ScalarKind::Pointer, ScalarKind::Pointer,
                                           ScalarKind::Long, ScalarKind::Int};
    REQUIRE(m.size() == expected.size());
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(std::get<ScalarKind>(m[i].type.base) == expected[i]);
  }

  TEST_CASE("syntax errors carry line and column") {
    try {
      (void)parse_decls("struct a {\n  int x\n};");
      FAIL("expected a syntax error");
    } catch (const SyntaxError& e) {
      CHECK(e.line() == 3);
      CHECK(e.column() == 1);
      CHECK(e.module() == "structdsl");
    }
  }

  TEST_CASE("rejected constructs") {
    CHECK_THROWS_AS((void)parse_decls("struct a { int x : 3; };"), SyntaxError);
    CHECK_THROWS_AS((void)parse_decls("union u { int x; };"), SyntaxError);
    CHECK_THROWS_AS((void)parse_decls("struct a { union { int x; } u; };"), SyntaxError);
    CHECK_THROWS_AS((void)parse_decls("struct a { struct { int x; } in; };"), SyntaxError);
    CHECK_THROWS_AS((void)parse_decls("struct a { long double x; };"), SyntaxError);
    CHECK_THROWS_AS((void)parse_decls("struct a { mystery_t x; };"), SyntaxError);
  }

  TEST_CASE("semantic errors") {
    CHECK_THROWS_WITH_AS((void)parse_decls("struct a { struct b x; };"),
                         doctest::Contains("unresolved struct reference 'b'"), InputError);
    CHECK_THROWS_WITH_AS((void)parse_decls("struct a { int x; double x; };"), doctest::Contains("duplicate member"),
                         InputError);
    CHECK_THROWS_WITH_AS((void)parse_decls("struct a { int x[0]; };"), doctest::Contains("array size 0"), InputError);
    CHECK_THROWS_WITH_AS((void)parse_decls("struct a { struct a self; };"), doctest::Contains("recursion"),
                         InputError);
    CHECK_THROWS_WITH_AS((void)parse_decls("struct a { int x; }; struct a { int y; };"),
                         doctest::Contains("duplicate definition"), InputError);
    // Recursion through a pointer is fine, and so is a pointer to an undeclared struct.
    CHECK_NOTHROW((void)parse_decls("struct a { struct a *next; struct later *p; };"));
  }
}

TEST_SUITE("layout") {
  TEST_CASE("tree_node LP64") {
    const auto l = layout_of(test::read_fixture("tree_node.h"), "tree_node");
    CHECK(entry(l, "id").offset == 0);
    CHECK(entry(l, "r").offset == 8);
    CHECK(entry(l, "l").offset == 16);
    CHECK(entry(l, "score").offset == 24);
    CHECK(l.total_size == 32);
  }

  TEST_CASE("tree_node packed: 20 bytes then 8") {
    const auto l = layout_of(test::read_fixture("tree_node.h"), "tree_node", AbiProfile::lp64_packed());
    CHECK(entry(l, "id").offset == 0);
    CHECK(entry(l, "r").offset == 4);
    CHECK(entry(l, "l").offset == 12);
    CHECK(entry(l, "score").offset == 20);
    CHECK(l.total_size == 28);
  }

  TEST_CASE("mcf arc: ident at 0x18") {
    const auto l = layout_of(test::read_fixture("mcf_arc.h"), "arc");
    CHECK(entry(l, "ident").offset == 0x18);
    CHECK(entry(l, "ident").size == 4);
    CHECK(entry(l, "nextout").offset == 0x20);
    CHECK(l.total_size == 64);
  }

  TEST_CASE("ILP32 shrinks pointers and longs") {
    const auto l = layout_of(test::read_fixture("tree_node.h"), "tree_node", AbiProfile::ilp32());
    CHECK(entry(l, "r").offset == 4);
    CHECK(entry(l, "score").offset == 16);
    CHECK(l.total_size == 24);
  }

  TEST_CASE("arrays expand up to the cap, then become a run") {
    const std::string src = "struct m { int size; double *mat; double small[3]; float big[100]; };";
    const auto l = layout_of(src, "m");
    CHECK(entry(l, "small[0]").offset == 16);
    CHECK(entry(l, "small[2]").offset == 32);
    const auto& big = entry(l, "big[]");
    CHECK(big.offset == 40);
    CHECK(big.count == 100);
    CHECK(big.stride == 4);
    CHECK(l.total_size == 440);
    CHECK(l.leaf_count() == 2 + 3 + 100);

    const auto r = l.resolve("big[7]");
    REQUIRE(r.has_value());
    CHECK(r->offset == 40 + 28);
    CHECK_FALSE(l.resolve("big[100]").has_value());
    CHECK_FALSE(l.resolve("big[x]").has_value());
    const auto loc = l.locate(40 + 29);
    REQUIRE(loc.has_value());
    CHECK(loc->path == "big[7]");
    CHECK(loc->element == 7);
    CHECK_FALSE(l.locate(5).has_value());  // padding after size
  }

  TEST_CASE("cap is configurable") {
    const DeclSet decls = parse_decls("struct m { char c[4]; };");
    const auto expanded = layout(*decls.find("m"), decls, AbiProfile::lp64(), {4});
    CHECK(expanded.entries.size() == 4);
    const auto run = layout(*decls.find("m"), decls, AbiProfile::lp64(), {3});
    REQUIRE(run.entries.size() == 1);
    CHECK(run.entries[0].path == "c[]");
  }

  TEST_CASE("long array of structs becomes per-leaf runs") {
    const auto l = layout_of("struct p { int a; double b; }; struct s { char tag; struct p items[20]; };", "s");
    const auto& a = entry(l, "items[].a");
    const auto& b = entry(l, "items[].b");
    CHECK(a.offset == 8);
    CHECK(a.stride == 16);
    CHECK(b.offset == 16);
    CHECK(b.count == 20);
    CHECK(l.total_size == 8 + 20 * 16);
    const auto r = l.resolve("items[3].b");
    REQUIRE(r.has_value());
    CHECK(r->offset == 16 + 3 * 16);
    const auto loc = l.locate(8 + 5 * 16 + 4);  // padding inside items[5]
    CHECK_FALSE(loc.has_value());
  }

  TEST_CASE("layout rejects by-value recursion in a hand-built DeclSet") {
    DeclSet decls;
    decls.add({"leaf", {{"x", {ScalarKind::Int, std::nullopt}}}, std::nullopt, 0, false});
    StructDecl bad{"loop", {{"self", {StructRef{"loop"}, std::nullopt}}}, std::nullopt, 0, false};
    CHECK_THROWS_AS(decls.add(bad), InputError);
    // layout() itself also guards against cycles.
    CHECK_THROWS_AS((void)layout(bad, decls), InputError);
  }
}

// The host compiler is an independent oracle for natural LP64 layout.
namespace oracle {
struct tree_node {
  int id;
  tree_node* r;
  tree_node* l;
  double score;
};
struct inner {
  char a;
  int b;
};
struct outer {
  char c;
  inner s;
  short t;
  double d;
};
struct trailing {
  inner s;
  char c;
};
struct mixed {
  char a;
  short b;
  char c;
  long long d;
  float e[3];
  char f;
};
struct nested_arr {
  short h;
  inner items[3];
  char z;
};
}  // namespace oracle

TEST_SUITE("layout vs host compiler") {
  static_assert(sizeof(void*) == 8 && sizeof(long) == 8, "host must be LP64 for this oracle");

  TEST_CASE("flat and nested structs match offsetof/sizeof") {
    const std::string src = R"(
      struct tree_node { int id; struct tree_node *r; struct tree_node *l; double score; };
      struct inner { char a; int b; };
      struct outer { char c; struct inner s; short t; double d; };
      struct trailing { struct inner s; char c; };
      struct mixed { char a; short b; char c; long long d; float e[3]; char f; };
      struct nested_arr { short h; struct inner items[3]; char z; };
    )";
    const DeclSet decls = parse_decls(src);
    auto L = [&](const char* n) { return layout(*decls.find(n), decls); };

    const auto tn = L("tree_node");
    CHECK(tn.total_size == sizeof(oracle::tree_node));
    CHECK(entry(tn, "score").offset == offsetof(oracle::tree_node, score));

    const auto o = L("outer");
    CHECK(o.total_size == sizeof(oracle::outer));
    CHECK(entry(o, "s.a").offset == offsetof(oracle::outer, s) + offsetof(oracle::inner, a));
    CHECK(entry(o, "s.b").offset == offsetof(oracle::outer, s) + offsetof(oracle::inner, b));
    CHECK(entry(o, "t").offset == offsetof(oracle::outer, t));
    CHECK(entry(o, "d").offset == offsetof(oracle::outer, d));

    const auto tr = L("trailing");
    CHECK(tr.total_size == sizeof(oracle::trailing));
    CHECK(entry(tr, "c").offset == offsetof(oracle::trailing, c));

    const auto mx = L("mixed");
    CHECK(mx.total_size == sizeof(oracle::mixed));
    CHECK(entry(mx, "b").offset == offsetof(oracle::mixed, b));
    CHECK(entry(mx, "d").offset == offsetof(oracle::mixed, d));
    CHECK(entry(mx, "e[2]").offset == offsetof(oracle::mixed, e) + 2 * sizeof(float));
    CHECK(entry(mx, "f").offset == offsetof(oracle::mixed, f));

    const auto na = L("nested_arr");
    CHECK(na.total_size == sizeof(oracle::nested_arr));
    CHECK(entry(na, "items[2].b").offset ==
          offsetof(oracle::nested_arr, items) + 2 * sizeof(oracle::inner) + offsetof(oracle::inner, b));
    CHECK(entry(na, "z").offset == offsetof(oracle::nested_arr, z));
  }
}

TEST_SUITE("classify") {
  TEST_CASE("reference verdicts") {
    CHECK(classify(layout_of(test::read_fixture("milc_complex.h"), "complex"), true) == YNY);
    CHECK(classify(scalar_layout(ScalarKind::Double), false) == NAA);
    CHECK(classify(scalar_layout(ScalarKind::Int64), false) == NAA);
    CHECK(classify(scalar_layout(ScalarKind::Float), false) == NAA);
    CHECK(classify(layout_of(test::read_fixture("tree_node.h"), "tree_node"), true) == YYY);
    CHECK(classify(layout_of(test::read_fixture("mcf_arc.h"), "arc"), true) == YYN);
  }

  TEST_CASE("C2 and C3 are not symmetric") {
    CHECK(classify(layout_of("struct p { int *only; };", "p"), true) == YNN);
    CHECK(classify(layout_of("struct p { float a; float b; };", "p"), true) == YNY);
    CHECK(classify(layout_of("struct p { float a; };", "p"), true) == YNN);
    CHECK(classify(layout_of("struct p { int *a; int *b; };", "p"), true) == YNN);
    CHECK(classify(layout_of("struct p { float a[2]; };", "p"), true) == YNY);
    CHECK(classify(layout_of("struct E {};", "E"), true) == YNN);
  }

  TEST_CASE("nested structs are flattened before classification") {
    const auto l = layout_of("struct v { double x; }; struct n { struct v pos; struct n *next; };", "n");
    CHECK(classify(l, true) == YYY);
  }

  TEST_CASE("resolve_type") {
    const DeclSet decls = parse_decls(test::read_fixture("mcf_arc.h") + "typedef double real_t;");
    const auto arc = resolve_type("arc_t", decls);
    REQUIRE(arc.has_value());
    CHECK(arc->display_name == "arc_t (struct arc)");
    CHECK(arc->is_composite);
    CHECK(resolve_type("arc", decls)->display_name == "arc_t (struct arc)");
    const auto d = resolve_type("double", decls);
    REQUIRE(d.has_value());
    CHECK_FALSE(d->is_composite);
    CHECK(d->display_name == "double");
    CHECK(resolve_type("real_t", decls)->display_name == "real_t (double)");
    CHECK_FALSE(resolve_type("nope", decls).has_value());
    const DeclSet classes = parse_decls("class cChannel { int a; };");
    CHECK(resolve_type("cChannel", classes)->display_name == "class cChannel");
  }
}

// ---------------------------------------------------------------------------
// Properties over generated declarations
// ---------------------------------------------------------------------------

namespace {

struct GenMember {
  std::string type;  // spelling
  std::string name;
  std::size_t array = 0;
};

const std::vector<std::string> kScalarSpellings{"char", "short", "int", "long", "long long", "int64_t",
                                                "float", "double", "void *", "struct node *"};

std::string render(const std::string& name, const std::vector<GenMember>& members, std::size_t functions) {
  std::string s = "struct " + name + " {\n";
  std::size_t f = 0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (f < functions && i % 2 == 0) s += "  int method" + std::to_string(f++) + "();\n";
    s += "  " + members[i].type + " " + members[i].name;
    if (members[i].array) s += "[" + std::to_string(members[i].array) + "]";
    s += ";\n";
  }
  while (f < functions) s += "  int method" + std::to_string(f++) + "();\n";
  return s + "};\n";
}

std::vector<GenMember> random_members(Rng& rng, bool allow_nested) {
  std::vector<GenMember> out;
  const std::size_t n = rng.uniform_below(7);
  for (std::size_t i = 0; i < n; ++i) {
    GenMember m;
    m.name = "m" + std::to_string(i);
    if (allow_nested && rng.uniform_below(4) == 0) {
      m.type = "struct inner";
    } else {
      m.type = kScalarSpellings[rng.uniform_below(kScalarSpellings.size())];
    }
    // Struct arrays stay under the expansion cap; a run inside a run is not supported.
    const std::uint64_t max_array = m.type == "struct inner" ? 16 : 20;
    if (rng.uniform_below(5) == 0) m.array = 1 + rng.uniform_below(max_array);
    out.push_back(m);
  }
  return out;
}

}  // namespace

TEST_SUITE("layout properties") {
  TEST_CASE("invariants hold on generated structs") {
    Rng rng(20240607);
    for (int iter = 0; iter < 500; ++iter) {
      const auto inner = random_members(rng, false);
      const auto outer = random_members(rng, true);
      const std::string src = render("inner", inner, 0) + render("outer", outer, 0);
      CAPTURE(src);
      const DeclSet decls = parse_decls(src);
      for (const char* name : {"inner", "outer"}) {
        const StructDecl& d = *decls.find(name);
        const auto natural = layout(d, decls);
        const auto packed = layout(d, decls, AbiProfile::lp64_packed());

        // Determinism.
        CHECK(natural == layout(d, decls));

        // Packed size is the plain sum of leaf sizes; natural never smaller.
        std::size_t sum = 0;
        for (const auto& e : packed.entries) sum += e.size * e.count;
        CHECK(packed.total_size == sum);
        CHECK(natural.total_size >= packed.total_size);

        for (const auto* l : {&natural, &packed}) {
          std::size_t max_align = 1;
          for (std::size_t i = 0; i < l->entries.size(); ++i) {
            const auto& e = l->entries[i];
            const std::size_t align = l->abi.scalar(e.kind).align;
            max_align = std::max(max_align, align);
            CHECK(e.offset % align == 0);
            CHECK(e.offset + e.extent() <= l->total_size);
            if (i > 0) {
              const auto& prev = l->entries[i - 1];
              CHECK(prev.offset < e.offset);
              if (!prev.is_run() && !e.is_run()) CHECK(prev.offset + prev.size <= e.offset);
            }
          }
          CHECK(l->total_size % max_align == 0);
        }

        // Every byte of every leaf maps back to that leaf.
        for (const auto& e : natural.entries) {
          if (e.is_run()) continue;
          const auto loc = natural.locate(e.offset + e.size - 1);
          REQUIRE(loc.has_value());
          CHECK(loc->path == e.path);
        }
      }
    }
  }

  TEST_CASE("flattening agrees with placing the same leaves monolithically") {
    // A nested struct with no internal padding and matching alignment lays
    // out exactly like its leaves inlined into the parent.
    Rng rng(99);
    for (int iter = 0; iter < 200; ++iter) {
      std::vector<GenMember> leaves;
      const std::size_t n = 1 + rng.uniform_below(4);
      for (std::size_t i = 0; i < n; ++i) leaves.push_back({"double", "d" + std::to_string(i), 0});
      std::vector<GenMember> head = random_members(rng, false);
      std::string src = render("inner", leaves, 0) + "struct nested {\n";
      std::string mono = "struct mono {\n";
      for (const auto& m : head) {
        const std::string line = "  " + m.type + " " + m.name + (m.array ? "[" + std::to_string(m.array) + "]" : "") + ";\n";
        src += line;
        mono += line;
      }
      src += "  struct inner in;\n};\n";
      for (const auto& m : leaves) mono += "  double in_" + m.name + ";\n";
      mono += "};\n";
      const DeclSet decls = parse_decls(src + mono);
      const auto a = layout(*decls.find("nested"), decls);
      const auto b = layout(*decls.find("mono"), decls);
      CAPTURE(src);
      CHECK(a.total_size == b.total_size);
      REQUIRE(a.entries.size() == b.entries.size());
      for (std::size_t i = 0; i < a.entries.size(); ++i) CHECK(a.entries[i].offset == b.entries[i].offset);
    }
  }

  TEST_CASE("classify ignores member order and member functions") {
    Rng rng(7);
    for (int iter = 0; iter < 300; ++iter) {
      auto members = random_members(rng, false);
      const auto base = classify(layout_of(render("s", members, 0), "s"), true);
      auto shuffled = members;
      const auto perm = random_permutation(shuffled.size(), rng.next());
      for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = members[perm[i]];
      CHECK(classify(layout_of(render("s", shuffled, 0), "s"), true) == base);
      CHECK(classify(layout_of(render("s", members, 1 + rng.uniform_below(3)), "s"), true) == base);
      // C2 and C3 never hold without C1.
      CHECK(base.c1 == Verdict::Yes);
    }
  }
}

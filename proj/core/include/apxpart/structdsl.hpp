#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace apxpart {

// ---------------------------------------------------------------------------
// Scalars and ABI
// ---------------------------------------------------------------------------

enum class ScalarKind { Char, Short, Int, Long, LongLong, Int64, Float, Double, Pointer };

enum class Category { Integer, Floating, Pointer };

[[nodiscard]] std::string_view to_string(ScalarKind kind);
[[nodiscard]] std::string_view to_string(Category category);
[[nodiscard]] Category category_of(ScalarKind kind);

// Maps a bare scalar type name ("double", "int64_t", "long long", "float", ...)
// to its kind. Returns nullopt for anything that is not a scalar.
[[nodiscard]] std::optional<ScalarKind> scalar_from_name(std::string_view name);

struct ScalarInfo {
  ScalarKind kind;
  std::size_t size;
  std::size_t align;
  Category category;
};

// Size/alignment rules. LP64 is the default; ILP32 shrinks long and pointers
// to 4 bytes. `packed` drops all padding (every alignment becomes 1).
struct AbiProfile {
  std::size_t pointer_size = 8;
  bool packed = false;

  [[nodiscard]] static AbiProfile lp64() { return {8, false}; }
  [[nodiscard]] static AbiProfile ilp32() { return {4, false}; }
  [[nodiscard]] static AbiProfile lp64_packed() { return {8, true}; }

  [[nodiscard]] ScalarInfo scalar(ScalarKind kind) const;

  bool operator==(const AbiProfile&) const = default;
};

// ---------------------------------------------------------------------------
// Declarations
// ---------------------------------------------------------------------------

struct StructRef {
  std::string name;
  bool operator==(const StructRef&) const = default;
};

struct MemberType {
  std::variant<ScalarKind, StructRef> base;
  // Product of all array dimensions; nullopt when the member is not an array.
  std::optional<std::size_t> array_count;

  bool operator==(const MemberType&) const = default;
};

struct MemberDecl {
  std::string name;
  MemberType type;

  bool operator==(const MemberDecl&) const = default;
};

struct StructDecl {
  std::string name;
  std::vector<MemberDecl> members;
  std::optional<std::string> typedef_alias;
  // Counted for reporting only; member functions never take part in layout
  // or classification.
  std::size_t member_function_count = 0;
  bool is_class = false;
};

// The set of declarations parsed from one source, plus typedef aliases.
class DeclSet {
 public:
  // Appends a declaration after validating it against what is already
  // present. Throws InputError on duplicate names, duplicate members,
  // zero-sized arrays or by-value references to unknown/incomplete structs.
  void add(StructDecl decl);

  // Registers `alias` for a member type (typedef). Struct aliases by value
  // are also recorded on the StructDecl the first time they appear.
  void add_alias(std::string alias, MemberType type);

  // Looks up a struct by its tag name or by a by-value typedef alias.
  [[nodiscard]] const StructDecl* find(std::string_view name_or_alias) const;
  [[nodiscard]] const MemberType* alias(std::string_view name) const;
  [[nodiscard]] const std::vector<StructDecl>& decls() const noexcept { return decls_; }

 private:
  std::vector<StructDecl> decls_;
  std::map<std::string, MemberType, std::less<>> aliases_;
};

// Parses the declaration DSL. Throws SyntaxError (with line/column) or
// InputError for semantic problems.
[[nodiscard]] DeclSet parse_decls(std::string_view source);

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

// One scalar leaf of a flattened type. Arrays longer than the expansion cap
// stay as a single run: `count` elements spaced `stride` bytes apart, with
// "[]" in the path where the index goes (e.g. "mat[]" or "arr[].x").
struct LayoutEntry {
  std::string path;
  ScalarKind kind;
  std::size_t offset = 0;
  std::size_t size = 0;
  std::size_t count = 1;
  std::size_t stride = 0;

  [[nodiscard]] Category category() const { return category_of(kind); }
  [[nodiscard]] bool is_run() const { return count > 1; }
  [[nodiscard]] std::size_t extent() const { return is_run() ? (count - 1) * stride + size : size; }

  bool operator==(const LayoutEntry&) const = default;
};

// A leaf addressed by a concrete path, e.g. "mat[17]" inside a run "mat[]".
struct ResolvedMember {
  std::size_t entry_index;
  std::size_t element;  // index inside a run, 0 otherwise
  std::size_t offset;
  std::size_t size;
  ScalarKind kind;
  std::string path;
};

struct FlattenedLayout {
  std::string type_name;
  std::vector<LayoutEntry> entries;
  std::size_t total_size = 0;
  std::size_t alignment = 1;
  AbiProfile abi;

  // Number of scalar leaves, counting every element of a run.
  [[nodiscard]] std::size_t leaf_count() const;

  // Leaf containing byte `offset` of one element, or nullopt for padding
  // (and for offsets at or beyond total_size).
  [[nodiscard]] std::optional<ResolvedMember> locate(std::size_t offset) const;

  // Leaf named by `path` ("score", "pos.x", "mat[3]", "arr[2].x").
  [[nodiscard]] std::optional<ResolvedMember> resolve(std::string_view path) const;

  bool operator==(const FlattenedLayout&) const = default;
};

struct LayoutOptions {
  std::size_t array_expand_cap = 16;
};

// Sequential placement with natural alignment (or none when packed), nested
// structs flattened with dotted paths. Throws InputError on recursion through
// a by-value member, zero-sized arrays or unknown struct references.
[[nodiscard]] FlattenedLayout layout(const StructDecl& decl, const DeclSet& decls,
                                     const AbiProfile& abi = AbiProfile::lp64(),
                                     const LayoutOptions& options = {});

// Layout of a bare scalar target type: one entry with an empty path.
[[nodiscard]] FlattenedLayout scalar_layout(ScalarKind kind, const AbiProfile& abi = AbiProfile::lp64());

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

enum class Verdict { Yes, No, NotApplicable };

[[nodiscard]] std::string_view to_string(Verdict verdict);  // "Y", "N", "-"

struct CriteriaResult {
  Verdict c1 = Verdict::No;
  Verdict c2 = Verdict::NotApplicable;
  Verdict c3 = Verdict::NotApplicable;

  bool operator==(const CriteriaResult&) const = default;
};

// C1: composite type. C2: a pointer leaf plus at least one non-pointer leaf.
// C3: a floating-point leaf plus at least one other leaf of any type.
[[nodiscard]] CriteriaResult classify(const FlattenedLayout& layout, bool is_composite);

// A target type name resolved against a DeclSet: a struct (by tag or
// typedef alias) or a bare scalar.
struct ResolvedType {
  std::string name;          // struct tag, or scalar spelling as given
  std::string display_name;  // "arc_t (struct arc)", "struct complex", "double"
  bool is_composite = false;
  FlattenedLayout layout;
};

[[nodiscard]] std::optional<ResolvedType> resolve_type(std::string_view name, const DeclSet& decls,
                                                       const AbiProfile& abi = AbiProfile::lp64(),
                                                       const LayoutOptions& options = {});

}  // namespace apxpart

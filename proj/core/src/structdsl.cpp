#include "apxpart/structdsl.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

#include "apxpart/error.hpp"
#include "text_util.hpp"

namespace apxpart {

namespace {

constexpr const char* kModule = "structdsl";

std::size_t round_up(std::size_t value, std::size_t align) {
  return align <= 1 ? value : (value + align - 1) / align * align;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scalars
// ---------------------------------------------------------------------------

std::string_view to_string(ScalarKind kind) {
  switch (kind) {
    case ScalarKind::Char: return "char";
    case ScalarKind::Short: return "short";
    case ScalarKind::Int: return "int";
    case ScalarKind::Long: return "long";
    case ScalarKind::LongLong: return "longlong";
    case ScalarKind::Int64: return "int64";
    case ScalarKind::Float: return "float";
    case ScalarKind::Double: return "double";
    case ScalarKind::Pointer: return "pointer";
  }
  return "?";
}

std::string_view to_string(Category category) {
  switch (category) {
    case Category::Integer: return "integer";
    case Category::Floating: return "floating";
    case Category::Pointer: return "pointer";
  }
  return "?";
}

Category category_of(ScalarKind kind) {
  switch (kind) {
    case ScalarKind::Float:
    case ScalarKind::Double: return Category::Floating;
    case ScalarKind::Pointer: return Category::Pointer;
    default: return Category::Integer;
  }
}

std::optional<ScalarKind> scalar_from_name(std::string_view name) {
  struct Alias {
    std::string_view name;
    ScalarKind kind;
  };
  static constexpr std::array<Alias, 35> kNames{{
      {"char", ScalarKind::Char},
      {"signed char", ScalarKind::Char},
      {"unsigned char", ScalarKind::Char},
      {"int8_t", ScalarKind::Char},
      {"uint8_t", ScalarKind::Char},
      {"bool", ScalarKind::Char},
      {"short", ScalarKind::Short},
      {"unsigned short", ScalarKind::Short},
      {"short int", ScalarKind::Short},
      {"int16_t", ScalarKind::Short},
      {"uint16_t", ScalarKind::Short},
      {"int", ScalarKind::Int},
      {"unsigned", ScalarKind::Int},
      {"unsigned int", ScalarKind::Int},
      {"signed", ScalarKind::Int},
      {"int32_t", ScalarKind::Int},
      {"uint32_t", ScalarKind::Int},
      {"long", ScalarKind::Long},
      {"long int", ScalarKind::Long},
      {"unsigned long", ScalarKind::Long},
      {"size_t", ScalarKind::Long},
      {"ssize_t", ScalarKind::Long},
      {"long long", ScalarKind::LongLong},
      {"longlong", ScalarKind::LongLong},
      {"unsigned long long", ScalarKind::LongLong},
      {"int64_t", ScalarKind::Int64},
      {"uint64_t", ScalarKind::Int64},
      {"int64", ScalarKind::Int64},
      {"float", ScalarKind::Float},
      {"double", ScalarKind::Double},
      {"pointer", ScalarKind::Pointer},
      {"void*", ScalarKind::Pointer},
      {"char*", ScalarKind::Pointer},
      {"intptr_t", ScalarKind::Long},
      {"uintptr_t", ScalarKind::Long},
  }};
  for (const auto& alias : kNames) {
    if (alias.name == name) return alias.kind;
  }
  return std::nullopt;
}

ScalarInfo AbiProfile::scalar(ScalarKind kind) const {
  std::size_t size = 0;
  switch (kind) {
    case ScalarKind::Char: size = 1; break;
    case ScalarKind::Short: size = 2; break;
    case ScalarKind::Int: size = 4; break;
    case ScalarKind::Long: size = pointer_size; break;
    case ScalarKind::LongLong: size = 8; break;
    case ScalarKind::Int64: size = 8; break;
    case ScalarKind::Float: size = 4; break;
    case ScalarKind::Double: size = 8; break;
    case ScalarKind::Pointer: size = pointer_size; break;
  }
  return {kind, size, packed ? std::size_t{1} : size, category_of(kind)};
}

// ---------------------------------------------------------------------------
// DeclSet
// ---------------------------------------------------------------------------

void DeclSet::add(StructDecl decl) {
  if (std::any_of(decls_.begin(), decls_.end(), [&](const StructDecl& d) { return d.name == decl.name; })) {
    throw InputError(kModule, "duplicate definition of struct '" + decl.name + "'");
  }
  std::set<std::string, std::less<>> seen;
  for (const auto& member : decl.members) {
    if (!seen.insert(member.name).second) {
      throw InputError(kModule, "duplicate member '" + member.name + "' in struct '" + decl.name + "'");
    }
    if (member.type.array_count && *member.type.array_count == 0) {
      throw InputError(kModule, "array size 0 for member '" + member.name + "' in struct '" + decl.name + "'");
    }
    if (const auto* ref = std::get_if<StructRef>(&member.type.base)) {
      if (ref->name == decl.name) {
        throw InputError(kModule, "recursion through value member '" + member.name + "' in struct '" +
                                      decl.name + "'");
      }
      if (find(ref->name) == nullptr) {
        throw InputError(kModule, "unresolved struct reference '" + ref->name + "' in member '" + member.name +
                                      "' of struct '" + decl.name + "'");
      }
    }
  }
  if (!decl.typedef_alias) {
    for (const auto& [alias, type] : aliases_) {
      const auto* ref = std::get_if<StructRef>(&type.base);
      if (ref != nullptr && ref->name == decl.name && !type.array_count) {
        decl.typedef_alias = alias;
        break;
      }
    }
  }
  decls_.push_back(std::move(decl));
}

void DeclSet::add_alias(std::string alias, MemberType type) {
  if (aliases_.contains(alias)) {
    throw InputError(kModule, "duplicate typedef '" + alias + "'");
  }
  if (const auto* ref = std::get_if<StructRef>(&type.base); ref != nullptr && !type.array_count) {
    for (auto& decl : decls_) {
      if (decl.name == ref->name && !decl.typedef_alias) decl.typedef_alias = alias;
    }
  }
  aliases_.emplace(std::move(alias), std::move(type));
}

const StructDecl* DeclSet::find(std::string_view name_or_alias) const {
  for (const auto& decl : decls_) {
    if (decl.name == name_or_alias) return &decl;
  }
  if (const auto* type = alias(name_or_alias)) {
    if (const auto* ref = std::get_if<StructRef>(&type->base); ref != nullptr && !type->array_count) {
      for (const auto& decl : decls_) {
        if (decl.name == ref->name) return &decl;
      }
    }
  }
  return nullptr;
}

const MemberType* DeclSet::alias(std::string_view name) const {
  const auto it = aliases_.find(name);
  return it == aliases_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct Token {
  enum class Kind { Ident, Number, Punct, End };
  Kind kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> tokens;
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      const std::size_t start_line = line;
      const std::size_t start_col = column;
      const auto end = src.find("*/", i + 2);
      if (end == std::string_view::npos) throw SyntaxError(kModule, start_line, start_col, "unterminated comment");
      advance(end + 2 - i);
      continue;
    }
    if (c == '#') {
      // Preprocessor lines are ignored.
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    const std::size_t tok_line = line;
    const std::size_t tok_col = column;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      tokens.push_back({Token::Kind::Ident, std::string(src.substr(i, j - i)), tok_line, tok_col});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])))) ++j;
      tokens.push_back({Token::Kind::Number, std::string(src.substr(i, j - i)), tok_line, tok_col});
      advance(j - i);
      continue;
    }
    static constexpr std::string_view kPunct = "{};*[](),:~=&<>.+-/%!|^?";
    if (kPunct.find(c) != std::string_view::npos) {
      tokens.push_back({Token::Kind::Punct, std::string(1, c), tok_line, tok_col});
      advance(1);
      continue;
    }
    throw SyntaxError(kModule, tok_line, tok_col, std::string("unexpected character '") + c + "'");
  }
  tokens.push_back({Token::Kind::End, "", line, column});
  return tokens;
}

bool is_scalar_word(std::string_view w) {
  static constexpr std::array<std::string_view, 9> kWords{"unsigned", "signed", "char",  "short", "int",
                                                          "long",     "float",  "double", "void"};
  return std::find(kWords.begin(), kWords.end(), w) != kWords.end();
}

bool is_qualifier(std::string_view w) { return w == "const" || w == "volatile" || w == "mutable"; }

struct ParsedType {
  MemberType type;
  bool is_void = false;
};

class Parser {
 public:
  explicit Parser(std::string_view source) : tokens_(tokenize(source)) {}

  DeclSet run() {
    while (!at_end()) parse_top_level();
    return std::move(decls_);
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  const Token& next() {
    const Token& t = peek();
    if (!at_end()) ++pos_;
    return t;
  }
  bool is_punct(const Token& t, char c) const {
    return t.kind == Token::Kind::Punct && t.text.size() == 1 && t.text[0] == c;
  }
  bool is_ident(const Token& t, std::string_view w) const { return t.kind == Token::Kind::Ident && t.text == w; }

  [[noreturn]] void fail(const Token& t, const std::string& message) const {
    throw SyntaxError(kModule, t.line, t.column, message);
  }
  [[noreturn]] void fail_semantic(const Token& t, const std::string& message) const {
    throw InputError(kModule, "line " + std::to_string(t.line) + ", column " + std::to_string(t.column) + ": " +
                                  message);
  }

  void expect_punct(char c) {
    const Token& t = next();
    if (!is_punct(t, c)) fail(t, std::string("expected '") + c + "' but found '" + describe(t) + "'");
  }
  std::string expect_ident(const char* what) {
    const Token& t = next();
    if (t.kind != Token::Kind::Ident) fail(t, std::string("expected ") + what + " but found '" + describe(t) + "'");
    return t.text;
  }
  static std::string describe(const Token& t) { return t.kind == Token::Kind::End ? "end of input" : t.text; }

  // Skips a balanced (...) or {...} group starting at the current token.
  void skip_balanced(char open, char close) {
    const Token& start = peek();
    expect_punct(open);
    int depth = 1;
    while (depth > 0) {
      if (at_end()) fail(start, std::string("unbalanced '") + open + "'");
      const Token& t = next();
      if (is_punct(t, open)) ++depth;
      if (is_punct(t, close)) --depth;
    }
  }

  void parse_top_level() {
    const Token& t = peek();
    if (is_punct(t, ';')) {
      next();
      return;
    }
    if (is_ident(t, "struct") || is_ident(t, "class")) {
      const bool is_class = t.text == "class";
      next();
      if (is_punct(peek(), '{')) fail(peek(), "anonymous structs are not supported");
      std::string name = expect_ident("struct name");
      if (is_punct(peek(), ';')) {  // forward declaration
        next();
        return;
      }
      if (!is_punct(peek(), '{')) {
        // A variable declaration such as "struct tree_node *nodes = ...;".
        skip_statement();
        return;
      }
      parse_struct_body(std::move(name), is_class);
      expect_punct(';');
      return;
    }
    if (is_ident(t, "typedef")) {
      next();
      parse_typedef();
      return;
    }
    if (is_ident(t, "enum")) {
      next();
      if (peek().kind == Token::Kind::Ident) next();
      if (is_punct(peek(), '{')) skip_balanced('{', '}');
      expect_punct(';');
      return;
    }
    if (is_ident(t, "union")) fail(t, "unions are not supported");
    if (t.kind == Token::Kind::Ident) {
      // Other top-level statements (globals, prototypes) carry no type information.
      skip_statement();
      return;
    }
    fail(t, "expected a struct, class, typedef or enum declaration but found '" + describe(t) + "'");
  }

  // Skips to the ';' ending the current statement, honouring nested (), {}
  // and [] groups. A brace-enclosed function body also ends the statement.
  void skip_statement() {
    const Token& start = peek();
    int depth = 0;
    for (;;) {
      if (at_end()) fail(start, "unterminated top-level statement");
      const Token& t = next();
      if (is_punct(t, '(') || is_punct(t, '[') || is_punct(t, '{')) ++depth;
      if (is_punct(t, ')') || is_punct(t, ']') || is_punct(t, '}')) {
        if (depth == 0) fail(t, "unbalanced '" + t.text + "'");
        --depth;
        if (depth == 0 && t.text == "}" && !is_punct(peek(), ';')) return;
      }
      if (depth == 0 && is_punct(t, ';')) return;
    }
  }

  void parse_typedef() {
    const Token& start = peek();
    MemberType base;
    bool is_void = false;
    if ((is_ident(start, "struct") || is_ident(start, "class")) && peek(1).kind == Token::Kind::Ident &&
        is_punct(peek(2), '{')) {
      const bool is_class = start.text == "class";
      next();
      std::string name = next().text;
      parse_struct_body(name, is_class);
      base.base = StructRef{std::move(name)};
    } else {
      const ParsedType parsed = parse_type();
      base = parsed.type;
      is_void = parsed.is_void;
    }
    for (;;) {
      std::size_t stars = 0;
      while (is_punct(peek(), '*')) {
        next();
        ++stars;
        while (peek().kind == Token::Kind::Ident && is_qualifier(peek().text)) next();
      }
      const Token& name_tok = peek();
      std::string alias = expect_ident("typedef name");
      if (is_punct(peek(), '[')) fail(peek(), "array typedefs are not supported");
      if (is_punct(peek(), '(')) fail(peek(), "function typedefs are not supported");
      MemberType type = base;
      if (stars > 0) {
        type = MemberType{ScalarKind::Pointer, std::nullopt};
      } else if (is_void) {
        fail(name_tok, "typedef of void");
      }
      try {
        decls_.add_alias(std::move(alias), std::move(type));
      } catch (const InputError& e) {
        fail_semantic(name_tok, e.what());
      }
      if (is_punct(peek(), ',')) {
        next();
        continue;
      }
      expect_punct(';');
      return;
    }
  }

  // By-value struct references come back unchecked; the caller decides
  // whether an incomplete type is acceptable.
  ParsedType parse_type() {
    ParsedType out;
    while (peek().kind == Token::Kind::Ident && is_qualifier(peek().text)) next();
    const Token& t = peek();
    if (t.kind != Token::Kind::Ident) fail(t, "expected a type but found '" + describe(t) + "'");
    if (t.text == "union") fail(t, "unions are not supported");
    if (t.text == "static") fail(t, "static members are not supported");
    if (t.text == "struct" || t.text == "class") {
      next();
      if (is_punct(peek(), '{')) fail(peek(), "anonymous structs are not supported");
      out.type.base = StructRef{expect_ident("struct name")};
    } else if (t.text == "enum") {
      next();
      if (is_punct(peek(), '{')) fail(peek(), "anonymous enums are not supported");
      expect_ident("enum name");
      out.type.base = ScalarKind::Int;
    } else if (is_scalar_word(t.text)) {
      std::vector<std::string> words;
      while (peek().kind == Token::Kind::Ident && (is_scalar_word(peek().text) || is_qualifier(peek().text))) {
        if (!is_qualifier(peek().text)) words.push_back(peek().text);
        next();
      }
      out = scalar_from_words(words, t);
    } else if (const auto* aliased = decls_.alias(t.text)) {
      next();
      out.type = *aliased;
    } else if (decls_.find(t.text) != nullptr) {
      next();
      out.type.base = StructRef{t.text};
    } else if (auto kind = scalar_from_name(t.text)) {
      next();
      out.type.base = *kind;
    } else {
      fail(t, "unknown type '" + t.text + "'");
    }
    while (peek().kind == Token::Kind::Ident && is_qualifier(peek().text)) next();
    return out;
  }

  ParsedType scalar_from_words(const std::vector<std::string>& words, const Token& where) {
    const auto count = [&](std::string_view w) { return std::count(words.begin(), words.end(), w); };
    ParsedType out;
    const auto longs = count("long");
    if (count("void") > 0) {
      if (words.size() != 1) fail(where, "invalid use of void");
      out.is_void = true;
      out.type.base = ScalarKind::Char;  // placeholder, only valid behind '*'
      return out;
    }
    if (count("double") > 0) {
      if (longs > 0) fail(where, "long double is not supported");
      out.type.base = ScalarKind::Double;
    } else if (count("float") > 0) {
      out.type.base = ScalarKind::Float;
    } else if (count("char") > 0) {
      out.type.base = ScalarKind::Char;
    } else if (count("short") > 0) {
      out.type.base = ScalarKind::Short;
    } else if (longs >= 2) {
      out.type.base = ScalarKind::LongLong;
    } else if (longs == 1) {
      out.type.base = ScalarKind::Long;
    } else {
      out.type.base = ScalarKind::Int;
    }
    return out;
  }

  void skip_function_tail() {
    skip_balanced('(', ')');
    for (;;) {
      const Token& t = peek();
      if (t.kind == Token::Kind::Ident &&
          (t.text == "const" || t.text == "noexcept" || t.text == "override" || t.text == "final")) {
        next();
        continue;
      }
      if (is_punct(t, '=')) {  // = 0, = default, = delete
        next();
        next();
        continue;
      }
      break;
    }
    if (is_punct(peek(), '{')) {
      skip_balanced('{', '}');
      if (is_punct(peek(), ';')) next();
      return;
    }
    if (is_punct(peek(), ':')) fail(peek(), "constructor initializer lists are not supported");
    expect_punct(';');
  }

  void parse_struct_body(std::string name, bool is_class) {
    StructDecl decl;
    decl.name = std::move(name);
    decl.is_class = is_class;
    std::vector<const Token*> member_tokens;
    expect_punct('{');
    while (!is_punct(peek(), '}')) {
      const Token& t = peek();
      if (at_end()) fail(t, "unterminated struct '" + decl.name + "'");
      if (is_punct(t, ';')) {
        next();
        continue;
      }
      if (t.kind == Token::Kind::Ident &&
          (t.text == "public" || t.text == "private" || t.text == "protected") && is_punct(peek(1), ':')) {
        next();
        next();
        continue;
      }
      if (t.kind == Token::Kind::Ident && (t.text == "virtual" || t.text == "inline" || t.text == "explicit")) {
        next();
        continue;
      }
      if (is_punct(t, '~')) {
        next();
        expect_ident("destructor name");
        skip_function_tail();
        ++decl.member_function_count;
        continue;
      }
      if (t.kind == Token::Kind::Ident && t.text == decl.name && is_punct(peek(1), '(')) {
        next();
        skip_function_tail();
        ++decl.member_function_count;
        continue;
      }
      const Token& type_tok = peek();
      const ParsedType parsed = parse_type();
      bool first = true;
      for (;;) {
        std::size_t stars = 0;
        while (is_punct(peek(), '*') || is_punct(peek(), '&')) {
          next();
          ++stars;
          while (peek().kind == Token::Kind::Ident && is_qualifier(peek().text)) next();
        }
        bool function_pointer = false;
        if (is_punct(peek(), '(') && is_punct(peek(1), '*')) {
          next();
          while (is_punct(peek(), '*')) next();
          function_pointer = true;
        }
        const Token& name_tok = peek();
        std::string member = expect_ident("member name");
        if (function_pointer) {
          expect_punct(')');
          if (is_punct(peek(), '(')) skip_balanced('(', ')');
        } else if (is_punct(peek(), '(')) {
          if (!first) fail(peek(), "member function in a declarator list");
          skip_function_tail();
          ++decl.member_function_count;
          break;
        }
        MemberType type = parsed.type;
        if (stars > 0 || function_pointer) {
          type = MemberType{ScalarKind::Pointer, std::nullopt};
        } else if (parsed.is_void) {
          fail(type_tok, "member '" + member + "' has type void");
        } else if (const auto* ref = std::get_if<StructRef>(&type.base)) {
          if (ref->name == decl.name) {
            fail_semantic(name_tok, "recursion through value member '" + member + "' in struct '" + decl.name + "'");
          }
          if (decls_.find(ref->name) == nullptr) {
            fail_semantic(name_tok, "unresolved struct reference '" + ref->name + "' in member '" + member + "'");
          }
        }
        while (is_punct(peek(), '[')) {
          next();
          const Token& n = next();
          if (n.kind != Token::Kind::Number) fail(n, "expected an array size but found '" + describe(n) + "'");
          const auto value = detail::parse_u64(n.text);
          if (!value) fail(n, "invalid array size '" + n.text + "'");
          if (*value == 0) fail_semantic(n, "array size 0 for member '" + member + "'");
          type.array_count = type.array_count.value_or(1) * *value;
          expect_punct(']');
        }
        if (is_punct(peek(), ':')) fail(peek(), "bit-fields are not supported");
        if (is_punct(peek(), '=')) fail(peek(), "member initializers are not supported");
        for (const auto& existing : decl.members) {
          if (existing.name == member) {
            fail_semantic(name_tok, "duplicate member '" + member + "' in struct '" + decl.name + "'");
          }
        }
        decl.members.push_back({std::move(member), std::move(type)});
        first = false;
        if (is_punct(peek(), ',')) {
          next();
          continue;
        }
        expect_punct(';');
        break;
      }
    }
    expect_punct('}');
    const Token& end_tok = peek();
    try {
      decls_.add(std::move(decl));
    } catch (const InputError& e) {
      fail_semantic(end_tok, e.what());
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  DeclSet decls_;
};

}  // namespace

DeclSet parse_decls(std::string_view source) { return Parser(source).run(); }

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

namespace {

std::string instantiate_run_path(std::string_view pattern, std::size_t index) {
  const auto pos = pattern.find("[]");
  std::string out(pattern.substr(0, pos));
  out += "[" + std::to_string(index) + "]";
  out += pattern.substr(pos + 2);
  return out;
}

FlattenedLayout layout_impl(const StructDecl& decl, const DeclSet& decls, const AbiProfile& abi,
                            const LayoutOptions& options, std::vector<std::string>& stack) {
  if (std::find(stack.begin(), stack.end(), decl.name) != stack.end()) {
    throw InputError(kModule, "recursion through value member of struct '" + decl.name + "'");
  }
  stack.push_back(decl.name);

  FlattenedLayout out;
  out.type_name = decl.name;
  out.abi = abi;
  std::size_t offset = 0;
  std::size_t max_align = 1;

  for (const auto& member : decl.members) {
    const std::size_t count = member.type.array_count.value_or(1);
    if (count == 0) throw InputError(kModule, "array size 0 for member '" + member.name + "'");
    const bool is_array = member.type.array_count.has_value();
    const bool expand = count <= options.array_expand_cap;

    if (const auto* kind = std::get_if<ScalarKind>(&member.type.base)) {
      const ScalarInfo info = abi.scalar(*kind);
      offset = round_up(offset, info.align);
      max_align = std::max(max_align, info.align);
      if (!is_array) {
        out.entries.push_back({member.name, *kind, offset, info.size, 1, 0});
      } else if (expand) {
        for (std::size_t i = 0; i < count; ++i) {
          out.entries.push_back(
              {member.name + "[" + std::to_string(i) + "]", *kind, offset + i * info.size, info.size, 1, 0});
        }
      } else {
        out.entries.push_back({member.name + "[]", *kind, offset, info.size, count, info.size});
      }
      offset += info.size * count;
      continue;
    }

    const auto& ref = std::get<StructRef>(member.type.base);
    const StructDecl* nested_decl = decls.find(ref.name);
    if (nested_decl == nullptr) {
      throw InputError(kModule, "unresolved struct reference '" + ref.name + "' in member '" + member.name + "'");
    }
    const FlattenedLayout nested = layout_impl(*nested_decl, decls, abi, options, stack);
    offset = round_up(offset, nested.alignment);
    max_align = std::max(max_align, nested.alignment);
    if (!is_array || expand) {
      for (std::size_t i = 0; i < count; ++i) {
        const std::string prefix =
            is_array ? member.name + "[" + std::to_string(i) + "]." : member.name + ".";
        const std::size_t base = offset + i * nested.total_size;
        for (const auto& e : nested.entries) {
          out.entries.push_back({prefix + e.path, e.kind, base + e.offset, e.size, e.count, e.stride});
        }
      }
    } else {
      for (const auto& e : nested.entries) {
        if (e.is_run()) {
          throw InputError(kModule, "member '" + member.name +
                                        "': arrays of structs containing long arrays exceed the expansion cap");
        }
        out.entries.push_back(
            {member.name + "[]." + e.path, e.kind, offset + e.offset, e.size, count, nested.total_size});
      }
    }
    offset += nested.total_size * count;
  }

  out.alignment = abi.packed ? 1 : max_align;
  out.total_size = round_up(offset, out.alignment);
  stack.pop_back();
  return out;
}

}  // namespace

FlattenedLayout layout(const StructDecl& decl, const DeclSet& decls, const AbiProfile& abi,
                       const LayoutOptions& options) {
  std::vector<std::string> stack;
  return layout_impl(decl, decls, abi, options, stack);
}

FlattenedLayout scalar_layout(ScalarKind kind, const AbiProfile& abi) {
  const ScalarInfo info = abi.scalar(kind);
  FlattenedLayout out;
  out.type_name = std::string(to_string(kind));
  out.entries.push_back({"", kind, 0, info.size, 1, 0});
  out.total_size = info.size;
  out.alignment = info.align;
  out.abi = abi;
  return out;
}

std::size_t FlattenedLayout::leaf_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.count;
  return n;
}

std::optional<ResolvedMember> FlattenedLayout::locate(std::size_t offset) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (offset < e.offset || offset >= e.offset + e.extent()) continue;
    if (!e.is_run()) return ResolvedMember{i, 0, e.offset, e.size, e.kind, e.path};
    const std::size_t rel = offset - e.offset;
    const std::size_t k = rel / e.stride;
    if (rel % e.stride < e.size) {
      return ResolvedMember{i, k, e.offset + k * e.stride, e.size, e.kind, instantiate_run_path(e.path, k)};
    }
  }
  return std::nullopt;
}

std::optional<ResolvedMember> FlattenedLayout::resolve(std::string_view path) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!e.is_run()) {
      if (e.path == path) return ResolvedMember{i, 0, e.offset, e.size, e.kind, e.path};
      continue;
    }
    const auto hole = e.path.find("[]");
    const std::string_view prefix = std::string_view(e.path).substr(0, hole);
    const std::string_view suffix = std::string_view(e.path).substr(hole + 2);
    if (path.size() < prefix.size() + suffix.size() + 3) continue;
    if (path.substr(0, prefix.size()) != prefix || path[prefix.size()] != '[') continue;
    if (path.substr(path.size() - suffix.size()) != suffix) continue;
    const std::string_view inner =
        path.substr(prefix.size() + 1, path.size() - suffix.size() - prefix.size() - 1);
    if (inner.empty() || inner.back() != ']') continue;
    const std::string_view digits = inner.substr(0, inner.size() - 1);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      continue;
    }
    const auto k = detail::parse_u64(digits);
    if (!k || *k >= e.count) continue;
    return ResolvedMember{i, static_cast<std::size_t>(*k), e.offset + *k * e.stride, e.size, e.kind,
                          std::string(path)};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Yes: return "Y";
    case Verdict::No: return "N";
    case Verdict::NotApplicable: return "-";
  }
  return "?";
}

CriteriaResult classify(const FlattenedLayout& layout, bool is_composite) {
  if (!is_composite) return {Verdict::No, Verdict::NotApplicable, Verdict::NotApplicable};
  bool has_pointer = false;
  bool has_non_pointer = false;
  bool has_floating = false;
  for (const auto& e : layout.entries) {
    has_pointer |= e.category() == Category::Pointer;
    has_non_pointer |= e.category() != Category::Pointer;
    has_floating |= e.category() == Category::Floating;
  }
  const auto yn = [](bool b) { return b ? Verdict::Yes : Verdict::No; };
  return {Verdict::Yes, yn(has_pointer && has_non_pointer), yn(has_floating && layout.leaf_count() >= 2)};
}

std::optional<ResolvedType> resolve_type(std::string_view name, const DeclSet& decls, const AbiProfile& abi,
                                         const LayoutOptions& options) {
  if (const StructDecl* decl = decls.find(name)) {
    ResolvedType out;
    out.name = decl->name;
    const std::string keyword = decl->is_class ? "class " : "struct ";
    out.display_name = decl->typedef_alias ? *decl->typedef_alias + " (" + keyword + decl->name + ")"
                                           : keyword + decl->name;
    out.is_composite = true;
    out.layout = layout(*decl, decls, abi, options);
    return out;
  }
  if (const MemberType* aliased = decls.alias(name)) {
    if (const auto* kind = std::get_if<ScalarKind>(&aliased->base); kind != nullptr && !aliased->array_count) {
      ResolvedType out;
      out.name = std::string(name);
      out.display_name = std::string(name) + " (" + std::string(to_string(*kind)) + ")";
      out.layout = scalar_layout(*kind, abi);
      out.layout.type_name = out.name;
      return out;
    }
    return std::nullopt;
  }
  if (const auto kind = scalar_from_name(name)) {
    ResolvedType out;
    out.name = std::string(name);
    out.display_name = std::string(name);
    out.layout = scalar_layout(*kind, abi);
    out.layout.type_name = out.name;
    return out;
  }
  return std::nullopt;
}

}  // namespace apxpart

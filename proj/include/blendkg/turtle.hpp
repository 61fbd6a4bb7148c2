#pragma once

// Turtle reader/writer for the subset emitted by FRED-style services and
// chat models: prefix/base directives, `;`/`,` continuations, `a`, IRIs,
// CURIEs, `_:x` and `[...]` blank nodes, string/boolean/numeric literals,
// datatypes and language tags. Collections and quoted triples are rejected.

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "blendkg/error.hpp"
#include "blendkg/rdf.hpp"

namespace blendkg::rdf {

namespace detail {

/// Byte offset of the first invalid UTF-8 sequence, or npos.
inline std::size_t find_invalid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return i;
    }
    if (i + len > s.size()) return i;
    for (std::size_t k = 1; k < len; ++k) {
      auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return i;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      return i;
    i += len;
  }
  return std::string_view::npos;
}

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

inline bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

class TurtleParser {
 public:
  TurtleParser(std::string_view text, const PrefixMap& defaults) : text_(text), graph_(defaults) {}

  Graph parse() {
    if (auto bad = find_invalid_utf8(text_); bad != std::string_view::npos) {
      pos_ = bad;
      fail("invalid UTF-8 sequence");
    }
    skip_ws();
    while (!at_end()) {
      statement();
      skip_ws();
    }
    return std::move(graph_);
  }

 private:
  // -- lexing helpers -------------------------------------------------------

  bool at_end() const { return pos_ >= text_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  [[noreturn]] void fail(const std::string& msg) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else if ((static_cast<unsigned char>(text_[i]) & 0xC0) != 0x80) {
        ++col;
      }
    }
    throw SyntaxError(line, col, msg);
  }

  void skip_ws() {
    while (!at_end()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos_;
      } else if (c == '#') {
        while (!at_end() && peek() != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  bool keyword_ahead(std::string_view kw, bool case_insensitive) const {
    if (pos_ + kw.size() > text_.size()) return false;
    for (std::size_t i = 0; i < kw.size(); ++i) {
      char a = text_[pos_ + i], b = kw[i];
      if (case_insensitive) {
        a = static_cast<char>(std::tolower(static_cast<unsigned char>(a)));
        b = static_cast<char>(std::tolower(static_cast<unsigned char>(b)));
      }
      if (a != b) return false;
    }
    char next = pos_ + kw.size() < text_.size() ? text_[pos_ + kw.size()] : ' ';
    return !(is_alpha(next) || is_digit(next) || next == ':' || next == '_' || next == '-');
  }

  // -- grammar --------------------------------------------------------------

  void statement() {
    if (peek() == '@') {
      if (keyword_ahead("@prefix", false)) {
        pos_ += 7;
        prefix_body();
        expect('.');
        return;
      }
      if (keyword_ahead("@base", false)) {
        pos_ += 5;
        skip_ws();
        base_ = read_iriref();
        expect('.');
        return;
      }
      fail("unknown directive");
    }
    if (keyword_ahead("PREFIX", true)) {
      pos_ += 6;
      prefix_body();
      return;
    }
    if (keyword_ahead("BASE", true)) {
      pos_ += 4;
      skip_ws();
      base_ = read_iriref();
      return;
    }
    triples();
    expect('.');
  }

  void prefix_body() {
    skip_ws();
    std::size_t start = pos_;
    while (!at_end() && peek() != ':') {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\n' || c == '<') fail("malformed prefix name");
      ++pos_;
    }
    if (at_end()) fail("unterminated prefix declaration");
    std::string name(text_.substr(start, pos_ - start));
    if (!is_valid_prefix_name(name)) fail("invalid prefix name '" + name + "'");
    ++pos_;  // ':'
    skip_ws();
    graph_.prefixes().bind(name, read_iriref());
  }

  void triples() {
    skip_ws();
    if (peek() == '[') {
      Term subject = blank_property_list();
      skip_ws();
      if (peek() != '.') predicate_object_list(subject);
      return;
    }
    Term subject = read_subject();
    predicate_object_list(subject);
  }

  void predicate_object_list(const Term& subject) {
    for (;;) {
      skip_ws();
      Term predicate = read_predicate();
      object_list(subject, predicate);
      skip_ws();
      if (peek() != ';') return;
      while (peek() == ';') {
        ++pos_;
        skip_ws();
      }
      // trailing ';' before terminator is legal
      if (peek() == '.' || peek() == ']' || at_end()) return;
    }
  }

  void object_list(const Term& subject, const Term& predicate) {
    for (;;) {
      skip_ws();
      Term object = read_object();
      graph_.insert(subject, predicate, object);
      skip_ws();
      if (peek() != ',') return;
      ++pos_;
    }
  }

  Term blank_property_list() {
    ++pos_;  // '['
    Term node = Term::blank(fresh_blank());
    skip_ws();
    if (peek() != ']') predicate_object_list(node);
    expect(']');
    return node;
  }

  Term read_subject() {
    char c = peek();
    if (c == '<') {
      if (peek(1) == '<') fail("quoted triples are not supported");
      return Term::iri(read_iriref());
    }
    if (c == '_' && peek(1) == ':') return read_blank_label();
    if (c == '(') fail("collections are not supported");
    if (c == '"' || c == '\'' || is_digit(c) || c == '+' || c == '-')
      fail("literal in subject position");
    return Term::iri(read_prefixed_name());
  }

  Term read_predicate() {
    char c = peek();
    if (c == 'a' && keyword_ahead("a", false)) {
      ++pos_;
      return Term::iri(std::string(ns::kRdf) + "type");
    }
    if (c == '<') return Term::iri(read_iriref());
    if (c == '_' || c == '[' || c == '"') fail("predicate must be an IRI");
    return Term::iri(read_prefixed_name());
  }

  Term read_object() {
    char c = peek();
    if (c == '<') {
      if (peek(1) == '<') fail("quoted triples are not supported");
      return Term::iri(read_iriref());
    }
    if (c == '_' && peek(1) == ':') return read_blank_label();
    if (c == '[') return blank_property_list();
    if (c == '(') fail("collections are not supported");
    if (c == '"' || c == '\'') return read_rdf_literal();
    if (is_digit(c) || c == '+' || c == '-' || (c == '.' && is_digit(peek(1)))) return read_number();
    if (keyword_ahead("true", false)) {
      pos_ += 4;
      return Term::boolean(true);
    }
    if (keyword_ahead("false", false)) {
      pos_ += 5;
      return Term::boolean(false);
    }
    if (at_end()) fail("unexpected end of input");
    return Term::iri(read_prefixed_name());
  }

  std::string read_iriref() {
    if (peek() != '<') fail("expected IRI");
    ++pos_;
    std::string out;
    for (;;) {
      if (at_end()) fail("unterminated IRI");
      char c = peek();
      if (c == '>') break;
      if (c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '"' || c == '{' || c == '}' ||
          c == '|' || c == '^' || c == '`' || c == '<')
        fail("illegal character in IRI");
      if (c == '\\') {
        if (char kind = peek(1); kind == 'u' || kind == 'U') {
          pos_ += 2;
          append_utf8(out, read_hex(kind == 'u' ? 4 : 8));
          continue;
        }
        fail("illegal escape in IRI");
      }
      out += c;
      ++pos_;
    }
    ++pos_;
    if (out.find(':') == std::string::npos) {
      if (!base_) fail("relative IRI <" + out + "> without @base");
      out = *base_ + out;
    }
    return out;
  }

  std::uint32_t read_hex(std::size_t digits) {
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < digits; ++i) {
      char c = peek();
      v <<= 4;
      if (c >= '0' && c <= '9') v |= static_cast<std::uint32_t>(c - '0');
      else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint32_t>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v |= static_cast<std::uint32_t>(c - 'A' + 10);
      else fail("bad hex escape");
      ++pos_;
    }
    return v;
  }

  std::string read_prefixed_name() {
    std::size_t start = pos_;
    while (!at_end() && peek() != ':') {
      char c = peek();
      if (!(is_alpha(c) || is_digit(c) || c == '_' || c == '-' || c == '.')) break;
      ++pos_;
    }
    if (peek() != ':') {
      pos_ = start;
      fail("expected IRI, prefixed name, blank node or literal");
    }
    std::string prefix(text_.substr(start, pos_ - start));
    ++pos_;
    std::size_t local_start = pos_;
    while (!at_end() && (is_local_name_char(peek()) || peek() == ':' || peek() == '%')) ++pos_;
    // a trailing '.' terminates the statement, not the name
    while (pos_ > local_start && text_[pos_ - 1] == '.') --pos_;
    std::string local(text_.substr(local_start, pos_ - local_start));
    auto ns_iri = graph_.prefixes().namespace_of(prefix);
    if (!ns_iri) throw UnknownPrefix(prefix);
    return *ns_iri + local;
  }

  Term read_blank_label() {
    pos_ += 2;
    std::size_t start = pos_;
    while (!at_end() && is_local_name_char(peek())) ++pos_;
    while (pos_ > start && text_[pos_ - 1] == '.') --pos_;
    if (pos_ == start) fail("empty blank node label");
    std::string label(text_.substr(start, pos_ - start));
    auto it = explicit_blanks_.find(label);
    if (it != explicit_blanks_.end()) return Term::blank(it->second);
    std::string actual = label;
    if (used_blanks_.count(actual)) actual = fresh_blank();
    used_blanks_.insert(actual);
    explicit_blanks_[label] = actual;
    return Term::blank(actual);
  }

  std::string fresh_blank() {
    std::string label;
    do {
      label = "genid" + std::to_string(blank_counter_++);
    } while (used_blanks_.count(label) || explicit_blanks_.count(label));
    used_blanks_.insert(label);
    return label;
  }

  Term read_rdf_literal() {
    std::string lexical = read_string();
    if (peek() == '@') {
      ++pos_;
      std::size_t start = pos_;
      while (!at_end() && (is_alpha(peek()) || is_digit(peek()) || peek() == '-')) ++pos_;
      std::string lang(text_.substr(start, pos_ - start));
      if (lang.empty() || !is_alpha(lang.front())) fail("malformed language tag");
      return Term::literal(std::move(lexical), std::nullopt, std::move(lang));
    }
    if (peek() == '^' && peek(1) == '^') {
      pos_ += 2;
      std::string dt = peek() == '<' ? read_iriref() : read_prefixed_name();
      return Term::literal(std::move(lexical), std::move(dt));
    }
    return Term::literal(std::move(lexical), xsd("string"));
  }

  std::string read_string() {
    char quote = peek();
    bool long_form = peek(1) == quote && peek(2) == quote;
    pos_ += long_form ? 3 : 1;
    std::string out;
    for (;;) {
      if (at_end()) fail("unterminated string literal");
      char c = peek();
      if (long_form) {
        if (c == quote && peek(1) == quote && peek(2) == quote) {
          pos_ += 3;
          // up to two extra quotes may belong to the content
          while (peek() == quote && !at_end()) {
            out += quote;
            ++pos_;
          }
          return out;
        }
      } else {
        if (c == quote) {
          ++pos_;
          return out;
        }
        if (c == '\n' || c == '\r') fail("unterminated string literal");
      }
      if (c == '\\') {
        char e = peek(1);
        pos_ += 2;
        switch (e) {
          case 't': out += '\t'; break;
          case 'b': out += '\b'; break;
          case 'n': out += '\n'; break;
          case 'r': out += '\r'; break;
          case 'f': out += '\f'; break;
          case '"': out += '"'; break;
          case '\'': out += '\''; break;
          case '\\': out += '\\'; break;
          case 'u': append_utf8(out, read_hex(4)); break;
          case 'U': append_utf8(out, read_hex(8)); break;
          default: pos_ -= 2; fail("invalid escape sequence");
        }
        continue;
      }
      out += c;
      ++pos_;
    }
  }

  Term read_number() {
    std::size_t start = pos_;
    if (peek() == '+' || peek() == '-') ++pos_;
    bool digits_before = false, has_dot = false, has_exp = false;
    while (is_digit(peek())) {
      ++pos_;
      digits_before = true;
    }
    if (peek() == '.' && is_digit(peek(1))) {
      has_dot = true;
      ++pos_;
      while (is_digit(peek())) ++pos_;
    }
    if (peek() == 'e' || peek() == 'E') {
      has_exp = true;
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      if (!is_digit(peek())) fail("malformed exponent");
      while (is_digit(peek())) ++pos_;
    }
    if (!digits_before && !has_dot) fail("malformed number");
    std::string lexical(text_.substr(start, pos_ - start));
    const char* dt = has_exp ? "double" : has_dot ? "decimal" : "integer";
    return Term::literal(std::move(lexical), xsd(dt));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Graph graph_;
  std::optional<std::string> base_;
  std::map<std::string, std::string> explicit_blanks_;
  std::set<std::string> used_blanks_;
  std::size_t blank_counter_ = 0;
};

inline std::string escape_string(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04X", static_cast<unsigned>(c));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

inline bool matches_integer(std::string_view s) {
  std::size_t i = (!s.empty() && (s[0] == '+' || s[0] == '-')) ? 1 : 0;
  if (i >= s.size()) return false;
  for (; i < s.size(); ++i)
    if (!is_digit(s[i])) return false;
  return true;
}

inline bool matches_decimal(std::string_view s) {
  std::size_t i = (!s.empty() && (s[0] == '+' || s[0] == '-')) ? 1 : 0;
  auto dot = s.find('.', i);
  if (dot == std::string_view::npos || dot + 1 >= s.size()) return false;
  for (std::size_t k = i; k < s.size(); ++k)
    if (k != dot && !is_digit(s[k])) return false;
  return true;
}

inline bool matches_double(std::string_view s) {
  auto e = s.find_first_of("eE");
  if (e == std::string_view::npos) return false;
  auto mant = s.substr(0, e);
  auto exp = s.substr(e + 1);
  bool mant_ok = matches_integer(mant) || matches_decimal(mant);
  if (!mant_ok && !mant.empty() && mant.back() == '.') mant_ok = matches_integer(mant.substr(0, mant.size() - 1));
  return mant_ok && matches_integer(exp);
}

}  // namespace detail

inline Graph parse_turtle(std::string_view text, const PrefixMap& defaults = default_prefixes()) {
  return detail::TurtleParser(text, defaults).parse();
}

/// Compact or bracketed form of an IRI under the given prefixes.
inline std::string format_iri(const std::string& value, const PrefixMap& prefixes) {
  if (auto c = prefixes.compact(value)) return *c;
  return "<" + value + ">";
}

inline std::string format_term(const Term& t, const PrefixMap& prefixes) {
  switch (t.kind()) {
    case Term::Kind::Iri:
      return format_iri(t.value(), prefixes);
    case Term::Kind::Blank:
      return "_:" + t.value();
    case Term::Kind::Literal: {
      const auto& lex = t.value();
      if (t.language()) return "\"" + detail::escape_string(lex) + "\"@" + *t.language();
      if (!t.datatype()) return "\"" + detail::escape_string(lex) + "\"";
      const auto& dt = *t.datatype();
      if (dt == xsd("string")) return "\"" + detail::escape_string(lex) + "\"";
      if (dt == xsd("boolean") && (lex == "true" || lex == "false")) return lex;
      if (dt == xsd("integer") && detail::matches_integer(lex)) return lex;
      if (dt == xsd("decimal") && detail::matches_decimal(lex)) return lex;
      if (dt == xsd("double") && detail::matches_double(lex)) return lex;
      return "\"" + detail::escape_string(lex) + "\"^^" + format_iri(dt, prefixes);
    }
  }
  return {};
}

/// Copy of `g` whose prefix map keeps only the bindings its serialization uses.
inline Graph prune_prefixes(const Graph& g) {
  const auto& all = g.prefixes();
  PrefixMap used;
  auto note = [&](const std::string& iri) {
    if (auto c = all.compact(iri)) {
      auto p = c->substr(0, c->find(':'));
      used.bind(p, *all.namespace_of(p));
    }
  };
  const Term rdf_type = Term::iri(std::string(ns::kRdf) + "type");
  for (const auto& t : g) {
    for (const Term* term : {&t.subject, &t.predicate, &t.object}) {
      if (term == &t.predicate && *term == rdf_type) continue;
      if (term->is_iri()) note(term->value());
      if (term->is_literal()) {
        auto rendered = format_term(*term, all);
        if (auto caret = rendered.rfind("\"^^"); caret != std::string::npos) note(*term->datatype());
      }
    }
  }
  Graph out(used);
  for (const auto& t : g) out.insert(t);
  return out;
}

/// Deterministic Turtle: sorted prefix directives, then one block per
/// subject (IRIs before blank nodes), predicates and objects sorted.
inline std::string serialize_turtle(const Graph& g) {
  std::ostringstream out;
  const auto& prefixes = g.prefixes();
  for (const auto& [p, n] : prefixes.entries()) out << "@prefix " << p << ": <" << n << "> .\n";

  const Term rdf_type = Term::iri(std::string(ns::kRdf) + "type");
  bool first_block = true;
  auto it = g.begin();
  while (it != g.end()) {
    const Term& subject = it->subject;
    if (first_block && !prefixes.empty()) out << "\n";
    if (!first_block) out << "\n";
    first_block = false;
    out << format_term(subject, prefixes);
    bool first_pred = true;
    while (it != g.end() && it->subject == subject) {
      const Term& predicate = it->predicate;
      out << (first_pred ? " " : " ;\n    ");
      first_pred = false;
      out << (predicate == rdf_type ? std::string("a") : format_term(predicate, prefixes));
      bool first_obj = true;
      while (it != g.end() && it->subject == subject && it->predicate == predicate) {
        out << (first_obj ? " " : " , ") << format_term(it->object, prefixes);
        first_obj = false;
        ++it;
      }
    }
    out << " .\n";
  }
  return out.str();
}

}  // namespace blendkg::rdf

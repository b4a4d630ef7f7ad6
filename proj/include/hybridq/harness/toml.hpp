#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "hybridq/error.hpp"

namespace hybridq::toml {

// Subset of TOML: [section] headers, key = value pairs, '#' comments;
// values are strings, integers, floats, booleans and (possibly multi-line)
// arrays of those.
struct Value {
  std::variant<bool, std::int64_t, double, std::string, std::vector<Value>> v;
  int line = 0;

  bool is_array() const { return std::holds_alternative<std::vector<Value>>(v); }
};

using Table = std::map<std::string, Value>;
using Document = std::map<std::string, Table>;

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Document parse() {
    Document doc;
    Table* current = &doc[""];
    std::set<std::string> seen_sections;
    while (skip_blank_lines()) {
      if (peek() == '[') {
        ++pos_;
        skip_spaces();
        const std::string name = bare_key();
        skip_spaces();
        expect(']');
        end_of_line();
        if (!seen_sections.insert(name).second) fail("duplicate section [" + name + "]");
        current = &doc[name];
        continue;
      }
      const int line = line_;
      const std::string key = bare_key();
      skip_spaces();
      expect('=');
      skip_spaces();
      Value v = value();
      v.line = line;
      end_of_line();
      if (!current->emplace(key, std::move(v)).second) fail("duplicate key '" + key + "'", line);
    }
    return doc;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, int line = -1) const {
    throw ConfigError("config line " + std::to_string(line < 0 ? line_ : line) + ": " + msg);
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  bool at_end() const { return pos_ >= s_.size(); }

  void skip_spaces() {
    while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!at_end() && peek() != '\n') ++pos_;
    }
  }

  // Skips whitespace, comments and newlines; false at end of input.
  bool skip_blank_lines() {
    for (;;) {
      skip_spaces();
      skip_comment();
      if (peek() == '\r') ++pos_;
      if (peek() == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      return !at_end();
    }
  }

  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (at_end()) return;
    if (peek() != '\n') fail(std::string("unexpected '") + peek() + "'");
    ++pos_;
    ++line_;
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string bare_key() {
    const std::size_t b = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-' ||
                         peek() == '.')) {
      ++pos_;
    }
    if (b == pos_) fail("expected a key");
    return std::string(s_.substr(b, pos_ - b));
  }

  Value value() {
    const char c = peek();
    if (c == '"') return {string_value()};
    if (c == '[') return {array_value()};
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return {true};
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return {false};
    }
    return number_value();
  }

  std::string string_value() {
    expect('"');
    std::string out;
    while (!at_end() && peek() != '"') {
      char c = s_[pos_++];
      if (c == '\n') fail("unterminated string");
      if (c == '\\') {
        if (at_end()) fail("unterminated string");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(c);
    }
    expect('"');
    return out;
  }

  std::vector<Value> array_value() {
    expect('[');
    std::vector<Value> out;
    for (;;) {
      skip_blank_lines();
      if (peek() == ']') {
        ++pos_;
        return out;
      }
      Value v = value();
      v.line = line_;
      out.push_back(std::move(v));
      skip_blank_lines();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() != ']') fail("expected ',' or ']' in array");
    }
  }

  Value number_value() {
    const std::size_t b = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                         peek() == '.' || peek() == '_')) {
      ++pos_;
    }
    std::string tok;
    for (char c : s_.substr(b, pos_ - b)) {
      if (c != '_') tok.push_back(c);
    }
    if (tok.empty()) fail("expected a value");
    const char* first = tok.data() + (tok[0] == '+' ? 1 : 0);
    const char* last = tok.data() + tok.size();
    if (tok.find_first_of(".eE") == std::string::npos && tok.find("inf") == std::string::npos &&
        tok.find("nan") == std::string::npos) {
      std::int64_t i = 0;
      const auto r = std::from_chars(first, last, i);
      if (r.ec == std::errc() && r.ptr == last) return {i};
      fail("invalid integer '" + tok + "'");
    }
    double d = 0.0;
    const auto r = std::from_chars(first, last, d);
    if (r.ec != std::errc() || r.ptr != last) fail("invalid number '" + tok + "'");
    return {d};
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace detail

inline Document parse(std::string_view text) { return detail::Parser(text).parse(); }

/// Typed, consuming access to one section; `finish` rejects leftover keys.
class SectionReader {
 public:
  SectionReader(std::string name, const Table* table) : name_(std::move(name)), table_(table) {}

  bool has(const std::string& key) const { return table_ && table_->count(key); }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    used_.insert(key);
    out = convert<T>(table_->at(key), key);
  }

  void finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!used_.count(k)) {
        throw ConfigError("config line " + std::to_string(v.line) + ": unknown key '" + k + "'" +
                          (name_.empty() ? std::string() : " in [" + name_ + "]"));
      }
    }
  }

 private:
  template <typename T>
  T convert(const Value& v, const std::string& key) const {
    auto bad = [&](const char* want) -> ConfigError {
      return ConfigError("config line " + std::to_string(v.line) + ": key '" + key + "' must be " + want);
    };
    if constexpr (std::is_same_v<T, bool>) {
      if (auto p = std::get_if<bool>(&v.v)) return *p;
      throw bad("a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto p = std::get_if<std::string>(&v.v)) return *p;
      throw bad("a string");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (auto p = std::get_if<double>(&v.v)) return static_cast<T>(*p);
      if (auto p = std::get_if<std::int64_t>(&v.v)) return static_cast<T>(*p);
      throw bad("a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (auto p = std::get_if<std::int64_t>(&v.v)) {
        if constexpr (std::is_unsigned_v<T>) {
          if (*p < 0) throw bad("a non-negative integer");
        }
        return static_cast<T>(*p);
      }
      throw bad("an integer");
    } else {
      using E = typename T::value_type;
      const auto* arr = std::get_if<std::vector<Value>>(&v.v);
      if (!arr) throw bad("an array");
      T out;
      for (const auto& e : *arr) out.push_back(convert<E>(e, key));
      return out;
    }
  }

  std::string name_;
  const Table* table_;
  std::set<std::string> used_;
};

}  // namespace hybridq::toml

#pragma once

// Minimal TOML subset: comments, [section] headers one level deep, bare keys,
// strings, numbers, booleans, arrays (multi-line, trailing comma tolerated),
// and inline tables. Enough for the model config format; errors carry
// 1-based line/column.

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "tws/errors.hpp"

namespace tws::toml {

struct Value;
using Array = std::vector<Value>;
using Table = std::map<std::string, Value>;

struct Value {
  std::variant<double, std::string, bool, Array, Table> v;
  int line = 0;

  bool is_number() const { return std::holds_alternative<double>(v); }
  bool is_string() const { return std::holds_alternative<std::string>(v); }
  bool is_array() const { return std::holds_alternative<Array>(v); }
  bool is_table() const { return std::holds_alternative<Table>(v); }

  double number(const std::string& what) const {
    if (!is_number()) throw ConfigError(what + " must be a number", line);
    return std::get<double>(v);
  }
  const std::string& string(const std::string& what) const {
    if (!is_string()) throw ConfigError(what + " must be a string", line);
    return std::get<std::string>(v);
  }
  const Array& array(const std::string& what) const {
    if (!is_array()) throw ConfigError(what + " must be an array", line);
    return std::get<Array>(v);
  }
  const Table& table(const std::string& what) const {
    if (!is_table()) throw ConfigError(what + " must be a table", line);
    return std::get<Table>(v);
  }
};

Table parse(const std::string& text);

}  // namespace tws::toml

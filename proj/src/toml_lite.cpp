#include "toml_lite.hpp"

#include <cctype>
#include <cstdlib>

namespace tws::toml {

namespace {

class Reader {
 public:
  explicit Reader(const std::string& text) : s_(text) {}

  Table run() {
    Table root;
    Table* current = &root;
    for (;;) {
      skip_blank(true);
      if (done()) break;
      if (peek() == '[') {
        current = section(root);
        continue;
      }
      auto [key, key_line] = bare_key();
      expect('=');
      Value val = value();
      if (!current->emplace(key, std::move(val)).second)
        fail("duplicate key '" + key + "'", key_line);
      end_of_line();
    }
    return root;
  }

 private:
  const std::string& s_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;

  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }

  char take() {
    char c = s_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  [[noreturn]] void fail(const std::string& msg, int line = 0) {
    throw ConfigError(msg, line ? line : line_, line ? 1 : col_);
  }

  // Skips spaces and comments; newlines too when requested.
  void skip_blank(bool newlines) {
    while (!done()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r') {
        take();
      } else if (c == '#') {
        while (!done() && peek() != '\n') take();
      } else if (c == '\n' && newlines) {
        take();
      } else {
        break;
      }
    }
  }

  void end_of_line() {
    skip_blank(false);
    if (done()) return;
    if (peek() != '\n') fail("expected end of line");
    take();
  }

  void expect(char c) {
    skip_blank(false);
    if (done() || peek() != c) fail(std::string("expected '") + c + "'");
    take();
  }

  std::pair<std::string, int> bare_key() {
    skip_blank(false);
    int at = line_;
    std::string key;
    while (!done()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
        key += take();
      } else {
        break;
      }
    }
    if (key.empty()) fail("expected a key");
    return {key, at};
  }

  Table* section(Table& root) {
    expect('[');
    auto [name, at] = bare_key();
    expect(']');
    end_of_line();
    Value v;
    v.v = Table{};
    v.line = at;
    auto [it, inserted] = root.emplace(name, std::move(v));
    if (!inserted) fail("duplicate section '" + name + "'", at);
    return &std::get<Table>(it->second.v);
  }

  Value value() {
    skip_blank(true);
    if (done()) fail("expected a value");
    Value out;
    out.line = line_;
    char c = peek();
    if (c == '"') {
      out.v = string_value();
    } else if (c == '[') {
      out.v = array_value();
    } else if (c == '{') {
      out.v = inline_table();
    } else if (std::isalpha(static_cast<unsigned char>(c))) {
      auto [word, at] = bare_key();
      if (word == "true")
        out.v = true;
      else if (word == "false")
        out.v = false;
      else
        fail("unexpected word '" + word + "'", at);
    } else {
      out.v = number_value();
    }
    return out;
  }

  std::string string_value() {
    take();  // opening quote
    std::string out;
    for (;;) {
      if (done()) fail("unterminated string");
      char c = take();
      if (c == '"') break;
      if (c == '\n') fail("newline inside string");
      if (c == '\\') {
        if (done()) fail("unterminated escape");
        char e = take();
        if (e == '"' || e == '\\')
          out += e;
        else
          fail("unsupported escape");
      } else {
        out += c;
      }
    }
    return out;
  }

  Array array_value() {
    take();  // '['
    Array out;
    for (;;) {
      skip_blank(true);
      if (done()) fail("unterminated array");
      if (peek() == ']') {
        take();
        break;
      }
      out.push_back(value());
      skip_blank(true);
      if (done()) fail("unterminated array");
      if (peek() == ',') {
        take();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
    return out;
  }

  Table inline_table() {
    take();  // '{'
    Table out;
    for (;;) {
      skip_blank(true);
      if (done()) fail("unterminated inline table");
      if (peek() == '}') {
        take();
        break;
      }
      auto [key, key_line] = bare_key();
      expect('=');
      Value val = value();
      if (!out.emplace(key, std::move(val)).second)
        fail("duplicate key '" + key + "'", key_line);
      skip_blank(true);
      if (done()) fail("unterminated inline table");
      if (peek() == ',') {
        take();
      } else if (peek() != '}') {
        fail("expected ',' or '}' in inline table");
      }
    }
    return out;
  }

  double number_value() {
    skip_blank(false);
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    // strtod does not advance our line/col bookkeeping; numbers never span lines.
    size_t n = static_cast<size_t>(end - begin);
    pos_ += n;
    col_ += static_cast<int>(n);
    return v;
  }
};

}  // namespace

Table parse(const std::string& text) { return Reader(text).run(); }

}  // namespace tws::toml

#include "misspec/config.hpp"

#include <cctype>
#include <cstdint>
#include <sstream>

#include "misspec/errors.hpp"

namespace misspec {

using nlohmann::json;

namespace {

struct TomlCursor {
  const std::string& s;
  std::size_t i = 0;

  bool done() const { return i >= s.size(); }
  char peek() const { return s[i]; }

  void skip_ws_inline() {
    while (!done() && (s[i] == ' ' || s[i] == '\t')) ++i;
  }

  void skip_ws_and_comments() {
    while (!done()) {
      char c = s[i];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++i;
      } else if (c == '#') {
        while (!done() && s[i] != '\n') ++i;
      } else {
        break;
      }
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    std::size_t line = 1;
    for (std::size_t k = 0; k < i && k < s.size(); ++k)
      if (s[k] == '\n') ++line;
    throw SchemaError("TOML parse error at line " + std::to_string(line) + ": " + msg);
  }
};

std::string parse_key_part(TomlCursor& c) {
  c.skip_ws_inline();
  if (c.done()) c.fail("expected key");
  if (c.peek() == '"' || c.peek() == '\'') {
    const char q = c.peek();
    ++c.i;
    std::string out;
    while (!c.done() && c.peek() != q) out.push_back(c.s[c.i++]);
    if (c.done()) c.fail("unterminated quoted key");
    ++c.i;
    return out;
  }
  std::string out;
  while (!c.done() && (std::isalnum(static_cast<unsigned char>(c.peek())) ||
                       c.peek() == '_' || c.peek() == '-'))
    out.push_back(c.s[c.i++]);
  if (out.empty()) c.fail("empty key");
  return out;
}

std::vector<std::string> parse_dotted_key(TomlCursor& c) {
  std::vector<std::string> parts{parse_key_part(c)};
  c.skip_ws_inline();
  while (!c.done() && c.peek() == '.') {
    ++c.i;
    parts.push_back(parse_key_part(c));
    c.skip_ws_inline();
  }
  return parts;
}

json parse_value(TomlCursor& c);

json parse_string_value(TomlCursor& c) {
  const char q = c.peek();
  ++c.i;
  std::string out;
  while (!c.done() && c.peek() != q) {
    char ch = c.s[c.i++];
    if (q == '"' && ch == '\\' && !c.done()) {
      char e = c.s[c.i++];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default: c.fail("unsupported escape");
      }
    } else {
      out.push_back(ch);
    }
  }
  if (c.done()) c.fail("unterminated string");
  ++c.i;
  return json(out);
}

json parse_array_value(TomlCursor& c) {
  ++c.i;  // '['
  json arr = json::array();
  c.skip_ws_and_comments();
  if (!c.done() && c.peek() == ']') {
    ++c.i;
    return arr;
  }
  while (true) {
    c.skip_ws_and_comments();
    arr.push_back(parse_value(c));
    c.skip_ws_and_comments();
    if (c.done()) c.fail("unterminated array");
    if (c.peek() == ',') {
      ++c.i;
      c.skip_ws_and_comments();
      if (!c.done() && c.peek() == ']') {
        ++c.i;
        return arr;
      }
      continue;
    }
    if (c.peek() == ']') {
      ++c.i;
      return arr;
    }
    c.fail("expected ',' or ']' in array");
  }
}

json parse_inline_table(TomlCursor& c) {
  ++c.i;  // '{'
  json obj = json::object();
  c.skip_ws_inline();
  if (!c.done() && c.peek() == '}') {
    ++c.i;
    return obj;
  }
  while (true) {
    auto parts = parse_dotted_key(c);
    c.skip_ws_inline();
    if (c.done() || c.peek() != '=') c.fail("expected '=' in inline table");
    ++c.i;
    c.skip_ws_inline();
    json v = parse_value(c);
    json* slot = &obj;
    for (std::size_t k = 0; k + 1 < parts.size(); ++k) slot = &(*slot)[parts[k]];
    (*slot)[parts.back()] = v;
    c.skip_ws_inline();
    if (c.done()) c.fail("unterminated inline table");
    if (c.peek() == ',') {
      ++c.i;
      c.skip_ws_inline();
      continue;
    }
    if (c.peek() == '}') {
      ++c.i;
      return obj;
    }
    c.fail("expected ',' or '}' in inline table");
  }
}

json parse_value(TomlCursor& c) {
  if (c.done()) c.fail("expected value");
  const char ch = c.peek();
  if (ch == '"' || ch == '\'') return parse_string_value(c);
  if (ch == '[') return parse_array_value(c);
  if (ch == '{') return parse_inline_table(c);
  std::string tok;
  while (!c.done()) {
    char t = c.peek();
    if (t == ',' || t == ']' || t == '}' || t == '\n' || t == '\r' || t == '#' ||
        t == ' ' || t == '\t')
      break;
    tok.push_back(c.s[c.i++]);
  }
  if (tok == "true") return json(true);
  if (tok == "false") return json(false);
  if (tok.empty()) c.fail("empty value");
  // number: integer when it parses exactly as one, else double
  try {
    std::size_t pos = 0;
    if (tok.find_first_of(".eE") == std::string::npos) {
      long long v = std::stoll(tok, &pos);
      if (pos == tok.size()) return json(v);
    }
    pos = 0;
    double d = std::stod(tok, &pos);
    if (pos == tok.size()) return json(d);
  } catch (...) {
  }
  c.fail("cannot parse value token '" + tok + "'");
}

json* descend(json& root, const std::vector<std::string>& parts, bool array_tail) {
  json* node = &root;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    json& slot = (*node)[parts[k]];
    const bool last = (k + 1 == parts.size());
    if (last && array_tail) {
      if (slot.is_null()) slot = json::array();
      if (!slot.is_array()) throw SchemaError("TOML: redefinition of " + parts[k]);
      slot.push_back(json::object());
      node = &slot.back();
    } else {
      if (slot.is_null()) slot = json::object();
      if (slot.is_array()) {
        node = &slot.back();
      } else if (slot.is_object()) {
        node = &slot;
      } else {
        throw SchemaError("TOML: key collision at " + parts[k]);
      }
    }
  }
  return node;
}

}  // namespace

json parse_toml(const std::string& text) {
  TomlCursor c{text};
  json root = json::object();
  json* table = &root;
  while (true) {
    c.skip_ws_and_comments();
    if (c.done()) break;
    if (c.peek() == '[') {
      ++c.i;
      bool array_tail = false;
      if (!c.done() && c.peek() == '[') {
        array_tail = true;
        ++c.i;
      }
      auto parts = parse_dotted_key(c);
      c.skip_ws_inline();
      if (c.done() || c.peek() != ']') c.fail("expected ']'");
      ++c.i;
      if (array_tail) {
        if (c.done() || c.peek() != ']') c.fail("expected ']]'");
        ++c.i;
      }
      table = descend(root, parts, array_tail);
      continue;
    }
    auto parts = parse_dotted_key(c);
    c.skip_ws_inline();
    if (c.done() || c.peek() != '=') c.fail("expected '='");
    ++c.i;
    c.skip_ws_inline();
    json v = parse_value(c);
    json* slot = table;
    for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
      json& next = (*slot)[parts[k]];
      if (next.is_null()) next = json::object();
      slot = &next;
    }
    (*slot)[parts.back()] = v;
  }
  return root;
}

json parse_config_text(const std::string& text) {
  for (char ch : text) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') continue;
    if (ch == '{' || ch == '[') {
      // '[' could open a TOML table header too; JSON arrays are not valid
      // top-level configs, so only '{' forces JSON.
      if (ch == '{') {
        try {
          return json::parse(text);
        } catch (const json::exception& e) {
          throw SchemaError(std::string("JSON parse error: ") + e.what());
        }
      }
    }
    break;
  }
  return parse_toml(text);
}

std::string config_digest(const json& doc) {
  const std::string canon = doc.dump();  // nlohmann keeps object keys sorted
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace misspec

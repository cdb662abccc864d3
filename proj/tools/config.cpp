#include "config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "mradon/errors.hpp"

namespace mradon::cli {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw config_error(errc::config_invalid, what);
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
      return false;
  }
  return true;
}

// Recursive-descent value parser over a single line fragment.
Value parse_value(const std::string& text, std::size_t& pos);

void skip_ws(const std::string& text, std::size_t& pos) {
  while (pos < text.size() &&
         std::isspace(static_cast<unsigned char>(text[pos])))
    ++pos;
}

Value parse_array(const std::string& text, std::size_t& pos) {
  Array items;
  ++pos;  // consume '['
  skip_ws(text, pos);
  if (pos < text.size() && text[pos] == ']') {
    ++pos;
    return Value{items};
  }
  for (;;) {
    items.push_back(parse_value(text, pos));
    skip_ws(text, pos);
    if (pos >= text.size()) fail("unterminated array");
    if (text[pos] == ',') {
      ++pos;
      skip_ws(text, pos);
      continue;
    }
    if (text[pos] == ']') {
      ++pos;
      return Value{items};
    }
    fail("expected ',' or ']' in array");
  }
}

Value parse_string(const std::string& text, std::size_t& pos) {
  ++pos;  // consume '"'
  std::string out;
  while (pos < text.size() && text[pos] != '"') {
    if (text[pos] == '\\' && pos + 1 < text.size()) {
      ++pos;
      switch (text[pos]) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default: fail("unknown escape in string");
      }
      ++pos;
      continue;
    }
    out.push_back(text[pos++]);
  }
  if (pos >= text.size()) fail("unterminated string");
  ++pos;  // consume closing quote
  return Value{out};
}

Value parse_value(const std::string& text, std::size_t& pos) {
  skip_ws(text, pos);
  if (pos >= text.size()) fail("missing value");
  const char c = text[pos];
  if (c == '[') return parse_array(text, pos);
  if (c == '"') return parse_string(text, pos);
  if (text.compare(pos, 4, "true") == 0) {
    pos += 4;
    return Value{true};
  }
  if (text.compare(pos, 5, "false") == 0) {
    pos += 5;
    return Value{false};
  }
  char* end = nullptr;
  const double v = std::strtod(text.c_str() + pos, &end);
  if (end == text.c_str() + pos) fail("malformed value '" + text.substr(pos) + "'");
  pos = static_cast<std::size_t>(end - text.c_str());
  return Value{v};
}

const Value& require(const Config& cfg, const std::string& key) {
  auto it = cfg.find(key);
  if (it == cfg.end()) fail("missing required key '" + key + "'");
  return it->second;
}

}  // namespace

double Value::number(const std::string& key) const {
  if (!is_number()) fail("key '" + key + "' must be a number");
  return std::get<double>(data);
}

bool Value::boolean(const std::string& key) const {
  if (!is_bool()) fail("key '" + key + "' must be a boolean");
  return std::get<bool>(data);
}

const std::string& Value::str(const std::string& key) const {
  if (!is_string()) fail("key '" + key + "' must be a string");
  return std::get<std::string>(data);
}

const Array& Value::array(const std::string& key) const {
  if (!is_array()) fail("key '" + key + "' must be an array");
  return std::get<Array>(data);
}

Config parse_config(const std::string& text) {
  Config cfg;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    try {
      if (line.front() == '[') {
        if (line.back() != ']') fail("unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        if (!valid_key(section)) fail("invalid section name '" + section + "'");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail("expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      if (!valid_key(key)) fail("invalid key '" + key + "'");
      std::size_t pos = 0;
      const std::string rhs = trim(line.substr(eq + 1));
      Value v = parse_value(rhs, pos);
      skip_ws(rhs, pos);
      if (pos != rhs.size()) fail("trailing characters after value");
      const std::string path = section.empty() ? key : section + "." + key;
      if (cfg.count(path)) fail("duplicate key '" + path + "'");
      cfg.emplace(path, std::move(v));
    } catch (const config_error& e) {
      fail("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

void apply_override(Config& cfg, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    fail("override '" + spec + "' must have the form key=value");
  const std::string key = trim(spec.substr(0, eq));
  for (char c : key) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' &&
        c != '-' && c != '.')
      fail("override has invalid key '" + key + "'");
  }
  if (key.empty()) fail("override '" + spec + "' has an empty key");
  std::size_t pos = 0;
  const std::string rhs = trim(spec.substr(eq + 1));
  Value v = parse_value(rhs, pos);
  skip_ws(rhs, pos);
  if (pos != rhs.size())
    fail("override '" + spec + "' has trailing characters after value");
  cfg[key] = std::move(v);
}

namespace {

void render_value(std::ostringstream& out, const Value& v) {
  if (v.is_number()) {
    char buf[40];
    const double x = std::get<double>(v.data);
    if (x == static_cast<long long>(x) && std::abs(x) < 1e15)
      std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(x));
    else
      std::snprintf(buf, sizeof buf, "%.17g", x);
    out << buf;
  } else if (v.is_bool()) {
    out << (std::get<bool>(v.data) ? "true" : "false");
  } else if (v.is_string()) {
    out << '"';
    for (char c : std::get<std::string>(v.data)) {
      if (c == '"' || c == '\\') out << '\\';
      out << c;
    }
    out << '"';
  } else {
    out << '[';
    const Array& a = std::get<Array>(v.data);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i) out << ", ";
      render_value(out, a[i]);
    }
    out << ']';
  }
}

}  // namespace

std::string render_config(const Config& cfg) {
  std::ostringstream out;
  // Top-level keys (no dot) first, then sections in sorted order; the map
  // is already sorted, so one pass per phase keeps section blocks together.
  for (const auto& [key, value] : cfg) {
    if (key.find('.') != std::string::npos) continue;
    out << key << " = ";
    render_value(out, value);
    out << '\n';
  }
  std::string current;
  for (const auto& [key, value] : cfg) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) continue;
    const std::string section = key.substr(0, dot);
    if (section != current) {
      out << "\n[" << section << "]\n";
      current = section;
    }
    out << key.substr(dot + 1) << " = ";
    render_value(out, value);
    out << '\n';
  }
  return out.str();
}

bool has_key(const Config& cfg, const std::string& key) {
  return cfg.count(key) != 0;
}

double get_number(const Config& cfg, const std::string& key) {
  return require(cfg, key).number(key);
}

double get_number_or(const Config& cfg, const std::string& key,
                     double fallback) {
  auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second.number(key);
}

long get_integer(const Config& cfg, const std::string& key) {
  const double v = get_number(cfg, key);
  if (v != std::floor(v)) fail("key '" + key + "' must be an integer");
  return static_cast<long>(v);
}

long get_integer_or(const Config& cfg, const std::string& key, long fallback) {
  if (!has_key(cfg, key)) return fallback;
  return get_integer(cfg, key);
}

bool get_bool_or(const Config& cfg, const std::string& key, bool fallback) {
  auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second.boolean(key);
}

std::string get_string(const Config& cfg, const std::string& key) {
  return require(cfg, key).str(key);
}

std::string get_string_or(const Config& cfg, const std::string& key,
                          const std::string& fallback) {
  auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second.str(key);
}

std::vector<double> get_number_list(const Config& cfg, const std::string& key) {
  const Array& a = require(cfg, key).array(key);
  std::vector<double> out;
  out.reserve(a.size());
  for (const Value& v : a) out.push_back(v.number(key));
  return out;
}

}  // namespace mradon::cli

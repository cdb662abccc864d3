// Minimal TOML-subset configuration: flat sections, key = value pairs,
// numbers, booleans, quoted strings, and (nested) single-line arrays.
// Keys are addressed by dotted path ("domain.semi_axes"); command-line
// overrides reuse the same value grammar.
#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace mradon::cli {

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<double, bool, std::string, Array> data;

  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_array() const { return std::holds_alternative<Array>(data); }

  double number(const std::string& key) const;
  bool boolean(const std::string& key) const;
  const std::string& str(const std::string& key) const;
  const Array& array(const std::string& key) const;
};

// Configuration as a flat map from dotted key path to value.
using Config = std::map<std::string, Value>;

// Parses TOML-subset text.  Throws mradon::config_error with a line number
// on malformed input.
Config parse_config(const std::string& text);

// Applies a "key.path=value" override, replacing or inserting the key.
void apply_override(Config& cfg, const std::string& spec);

// Renders the configuration back to canonical TOML text (sections sorted,
// top-level keys first).  parse_config(render_config(c)) == c.
std::string render_config(const Config& cfg);

// Typed accessors.  The *_or forms return the fallback when the key is
// absent; all forms throw mradon::config_error naming the key on a type
// mismatch.
bool has_key(const Config& cfg, const std::string& key);
double get_number(const Config& cfg, const std::string& key);
double get_number_or(const Config& cfg, const std::string& key, double fallback);
long get_integer(const Config& cfg, const std::string& key);
long get_integer_or(const Config& cfg, const std::string& key, long fallback);
bool get_bool_or(const Config& cfg, const std::string& key, bool fallback);
std::string get_string(const Config& cfg, const std::string& key);
std::string get_string_or(const Config& cfg, const std::string& key,
                          const std::string& fallback);
std::vector<double> get_number_list(const Config& cfg, const std::string& key);

}  // namespace mradon::cli

#pragma once

#include <map>
#include <string>
#include <string_view>

namespace majorantlab {

using KeyValues = std::map<std::string, std::string>;

// Flat "key=value" pairs separated by commas or newlines. Blank entries and
// '#' comments are skipped. Duplicate keys keep the last value.
KeyValues parse_kv(std::string_view text);

std::string trim(std::string_view s);

// Typed lookups; ValidationError naming the key on bad or missing values.
double kv_double(const KeyValues& kv, const std::string& key);
double kv_double(const KeyValues& kv, const std::string& key, double fallback);
long long kv_int(const KeyValues& kv, const std::string& key);
long long kv_int(const KeyValues& kv, const std::string& key, long long fallback);
std::string kv_string(const KeyValues& kv, const std::string& key, const std::string& fallback);

}  // namespace majorantlab

#include "majorantlab/kvtext.hpp"

#include <charconv>
#include <cstdlib>

#include "majorantlab/errors.hpp"

namespace majorantlab {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

KeyValues parse_kv(std::string_view text) {
  KeyValues out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find_first_of(",\n", pos);
    const auto item = trim(text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    if (!item.empty() && item.front() != '#') {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ValidationError("expected key=value, got '" + item + "'");
      auto key = trim(std::string_view(item).substr(0, eq));
      if (key.empty()) throw ValidationError("empty key in '" + item + "'");
      out[key] = trim(std::string_view(item).substr(eq + 1));
    }
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

double kv_double(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw ValidationError("missing key '" + key + "'");
  char* endp = nullptr;
  const double v = std::strtod(it->second.c_str(), &endp);
  if (it->second.empty() || *endp != '\0') throw ValidationError("key '" + key + "': not a number: '" + it->second + "'");
  return v;
}

double kv_double(const KeyValues& kv, const std::string& key, double fallback) {
  return kv.count(key) ? kv_double(kv, key) : fallback;
}

long long kv_int(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw ValidationError("missing key '" + key + "'");
  long long v = 0;
  const auto& s = it->second;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    // accept integral values written in float notation (1e6)
    char* endp = nullptr;
    const double d = std::strtod(s.c_str(), &endp);
    if (s.empty() || *endp != '\0' || d != static_cast<double>(static_cast<long long>(d)))
      throw ValidationError("key '" + key + "': not an integer: '" + s + "'");
    return static_cast<long long>(d);
  }
  return v;
}

long long kv_int(const KeyValues& kv, const std::string& key, long long fallback) {
  return kv.count(key) ? kv_int(kv, key) : fallback;
}

std::string kv_string(const KeyValues& kv, const std::string& key, const std::string& fallback) {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

}  // namespace majorantlab

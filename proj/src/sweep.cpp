#include "majorantlab/sweep.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include "json.hpp"

namespace majorantlab {

double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) return kNaN;
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : kNaN;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t task) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (task + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<double> golden_xis(int count) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  std::vector<double> out;
  for (int k = 1; k <= count; ++k) {
    const double v = k * g;
    out.push_back(v - std::floor(v));
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

std::vector<std::string> sweep_columns() {
  return {"experiment", "h1", "h2", "psi_mode", "sign", "p", "N", "xi", "m", "quantity", "value",
          "bound", "ratio", "fitted_exponent", "seed", "borderline_count", "wall_ms"};
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

}  // namespace

void write_csv(std::ostream& os, const std::vector<SweepResult>& rows, bool include_timing) {
  auto cols = sweep_columns();
  if (!include_timing) cols.pop_back();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& r : rows) {
    os << csv_field(r.experiment) << ',' << csv_field(r.h1) << ',' << csv_field(r.h2) << ','
       << csv_field(r.psi_mode) << ',' << csv_field(r.sign) << ',' << format_double(r.p) << ',' << r.N << ','
       << format_double(r.xi) << ',' << r.m << ',' << csv_field(r.quantity) << ',' << format_double(r.value)
       << ',' << format_double(r.bound) << ',' << format_double(r.ratio) << ','
       << format_double(r.fitted_exponent) << ',' << r.seed << ',' << r.borderline_count;
    if (include_timing) os << ',' << fmt::format("{:.3f}", r.wall_ms);
    os << '\n';
  }
}

void write_jsonl(std::ostream& os, const std::vector<SweepResult>& rows, bool include_timing) {
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["experiment"] = r.experiment;
    j["h1"] = r.h1;
    j["h2"] = r.h2;
    j["psi_mode"] = r.psi_mode;
    j["sign"] = r.sign;
    j["p"] = json_number(r.p);
    j["N"] = r.N;
    j["xi"] = json_number(r.xi);
    j["m"] = r.m;
    j["quantity"] = r.quantity;
    j["value"] = json_number(r.value);
    j["bound"] = json_number(r.bound);
    j["ratio"] = json_number(r.ratio);
    j["fitted_exponent"] = json_number(r.fitted_exponent);
    j["seed"] = r.seed;
    j["borderline_count"] = r.borderline_count;
    if (include_timing) j["wall_ms"] = std::round(r.wall_ms * 1000.0) / 1000.0;
    os << j.dump() << '\n';
  }
}

}  // namespace majorantlab

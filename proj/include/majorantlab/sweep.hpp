#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace majorantlab {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// One row of an experiment sweep. Every row carries the parameters needed to
// re-run it; timing is the only field excluded from reproducibility checks.
struct SweepResult {
  std::string experiment;
  std::string h1;        // "family=...;c=...;x0=..." or empty
  std::string h2;
  std::string psi_mode;
  std::string sign;
  double p = kNaN;
  long long N = 0;
  double xi = kNaN;
  long long m = 0;
  std::string quantity;
  double value = kNaN;
  double bound = kNaN;
  double ratio = kNaN;
  double fitted_exponent = kNaN;
  std::uint64_t seed = 0;
  long long borderline_count = 0;
  double wall_ms = 0.0;
};

// Least-squares slope of log y against log x over points with x, y > 0 and
// finite. NaN when fewer than two such points exist.
double fit_loglog_slope(std::span<const double> x, std::span<const double> y);

// Published mixing function: splitmix64 finalizer applied to master + golden
// increment * (task + 1).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t task);

// Fractional parts of k (sqrt(5) - 1)/2 for k = 1..count.
std::vector<double> golden_xis(int count);

std::vector<std::string> sweep_columns();

// CSV: header row, comma separated, '.' decimal, shortest round-trip floats.
void write_csv(std::ostream& os, const std::vector<SweepResult>& rows, bool include_timing = true);
// JSON lines with the same fields as the CSV columns.
void write_jsonl(std::ostream& os, const std::vector<SweepResult>& rows, bool include_timing = true);

std::string format_double(double v);

}  // namespace majorantlab

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "majorantlab/kvtext.hpp"
#include "majorantlab/rvfunc.hpp"
#include "majorantlab/sparseset.hpp"
#include "majorantlab/sweep.hpp"

namespace majorantlab::cli {

// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitCapacity = 3;
inline constexpr int kExitVerifyFailed = 4;

const std::vector<std::string>& experiments();

// "[section]" headers and "key = value" lines; '#' starts a comment line.
// Keys before the first header land in section "". Values may contain commas.
using ConfigSections = std::map<std::string, KeyValues>;
ConfigSections parse_config(const std::string& text);
ConfigSections load_config(const std::string& path);

// Integers and ranges separated by commas: "1000, 1e5", "1e4..1e7" (decades),
// "2^10..2^16" (powers of two). Sorted and deduplicated.
std::vector<long long> parse_N_list(const std::string& text);
std::vector<long long> parse_int_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

// "golden(k)" -> 0, 1/2 and k golden-ratio points; "random(k)" -> 0, 1/2 and k
// uniform points from the seed; otherwise an explicit list.
std::vector<double> resolve_xis(const std::string& rule, std::uint64_t seed);

struct ExperimentConfig {
  std::string experiment;
  rv::RegVaryFn h1;
  rv::RegVaryFn h2;
  KeyValues h1_kv;  // as resolved, for the echo
  KeyValues h2_kv;
  sparse::SetKind kind = sparse::SetKind::frac_plus;
  rv::PsiMode psi_mode = rv::PsiMode::difference;
  std::vector<long long> N_list;
  double p = kNaN;  // NaN: p_threshold + 0.5 (or the threshold with exact_endpoint)
  bool exact_endpoint = false;
  std::string xi_rule = "golden(8)";
  std::vector<double> xis;
  int m_max = 64;
  int trials = 16;
  int budget = 200;
  int restarts = 16;
  std::string method = "auto";
  std::vector<long long> A;  // explicit set for the majorant experiment
  std::vector<double> c1_list;
  std::vector<double> c2_list;
  std::string level = "quick";
  std::uint64_t seed = 0;
  double tol = 1e-8;
  std::string out_dir = ".";
  std::string format = "both";
  bool timing = true;
  std::string coeffs_out;  // sidecar path for argmax coefficients

  // Builds from parsed sections; general keys may sit in "", [experiment] or
  // [output]. Defaults depend on the experiment. ValidationError on bad keys.
  static ExperimentConfig from_sections(const ConfigSections& sections);

  sparse::SetSpec set_spec() const;
  double resolved_p() const;
  // Resolved configuration as ordered key/value pairs (excludes worker count).
  std::vector<std::pair<std::string, std::string>> echo() const;
};

struct VerifyCheck {
  std::string name;
  bool passed = false;
  double measured = kNaN;
  double threshold = kNaN;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool ok() const;
  std::vector<SweepResult> rows() const;
};

enum class VerifyLevel { quick, full };

struct VerifyOptions {
  // Truncated sawtooth under test; replaced by fixtures to mutate the suite.
  std::function<double(double, int)> sawtooth_truncated;
  // Only checks whose name contains this substring run.
  std::string filter;
};

VerifyReport verify_suite(VerifyLevel level, const VerifyOptions& opts = {});

// Runs the experiment and writes <out_dir>/<experiment>.csv and/or .jsonl,
// each starting with '#' lines echoing the resolved config. Messages go to
// `log`. Returns an exit code; errors name the offending parameters.
int run(const ExperimentConfig& config, std::ostream& log);

}  // namespace majorantlab::cli

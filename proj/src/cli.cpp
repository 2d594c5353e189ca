#include "majorantlab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "majorantlab/errors.hpp"
#include "majorantlab/expsum.hpp"
#include "majorantlab/majorant.hpp"
#include "majorantlab/parallel.hpp"
#include "majorantlab/trigpoly.hpp"

namespace majorantlab::cli {

namespace {

const std::set<std::string> kGeneralKeys = {
    "experiment", "kind",     "psi_mode", "N_list", "N",      "p",       "exact_endpoint", "xi",     "m_max",
    "trials",     "budget",   "restarts", "method", "A",      "c1_list", "c2_list",        "level",  "seed",
    "tol",        "out",      "format",   "timing", "coeffs_out", "workers"};

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError(fmt::format("key '{}': not a boolean: '{}'", key, v));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "123", "1e6", "2^10", "10^7"
long long parse_integer(const std::string& s) {
  const auto caret = s.find('^');
  if (caret != std::string::npos) {
    const long long base = parse_integer(trim(s.substr(0, caret)));
    const long long e = parse_integer(trim(s.substr(caret + 1)));
    if (base < 2 || e < 0 || e * std::log2(static_cast<double>(base)) > 62)
      throw ValidationError(fmt::format("bad power '{}'", s));
    long long v = 1;
    for (long long i = 0; i < e; ++i) v *= base;
    return v;
  }
  KeyValues kv{{"value", s}};
  return kv_int(kv, "value");
}

bool is_power_of(long long v, long long base) {
  if (v < 1) return false;
  while (v % base == 0) v /= base;
  return v == 1;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>)
      out += format_double(v[i]);
    else
      out += fmt::format("{}", v[i]);
  }
  return out;
}

std::vector<long long> default_N_list(const std::string& experiment) {
  if (experiment == "count") return parse_N_list("1e4..1e7");
  if (experiment == "expsum-decay" || experiment == "lemma2") return parse_N_list("1e4..1e6");
  if (experiment == "vdc") return parse_N_list("2^10..2^20");
  if (experiment == "prop2") return parse_N_list("2^10..2^16");
  if (experiment == "majorant") return parse_N_list("2^10..2^14");
  return {};
}

}  // namespace

const std::vector<std::string>& experiments() {
  static const std::vector<std::string> names = {"count", "expsum-decay", "vdc",        "lemma2",
                                                 "prop2", "majorant",     "thresholds", "verify"};
  return names;
}

ConfigSections parse_config(const std::string& text) {
  ConfigSections out;
  out[""];
  std::string section;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ValidationError(fmt::format("config line {}: unterminated section header", lineno));
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw ValidationError(fmt::format("config line {}: empty section name", lineno));
      out[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ValidationError(fmt::format("config line {}: expected key = value", lineno));
    const auto key = trim(t.substr(0, eq));
    if (key.empty()) throw ValidationError(fmt::format("config line {}: empty key", lineno));
    out[section][key] = trim(t.substr(eq + 1));
  }
  return out;
}

ConfigSections load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot read config '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<long long> parse_N_list(const std::string& text) {
  std::vector<long long> out;
  for (const auto& item : split_list(text)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_integer(item));
      continue;
    }
    const long long lo = parse_integer(trim(item.substr(0, dots)));
    const long long hi = parse_integer(trim(item.substr(dots + 2)));
    if (lo < 1 || hi < lo) throw ValidationError(fmt::format("bad range '{}'", item));
    long long factor = 0;
    if (is_power_of(lo, 10) && is_power_of(hi, 10))
      factor = 10;
    else if (is_power_of(lo, 2) && is_power_of(hi, 2))
      factor = 2;
    else
      throw ValidationError(fmt::format("range '{}' needs powers of 10 or of 2 at both ends", item));
    for (long long v = lo; v <= hi; v *= factor) out.push_back(v);
  }
  for (long long v : out)
    if (v < 1) throw ValidationError(fmt::format("N={} must be positive", v));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<long long> parse_int_list(const std::string& text) {
  std::vector<long long> out;
  for (const auto& item : split_list(text)) out.push_back(parse_integer(item));
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    KeyValues kv{{"value", item}};
    out.push_back(kv_double(kv, "value"));
  }
  return out;
}

std::vector<double> resolve_xis(const std::string& rule, std::uint64_t seed) {
  const auto r = trim(rule);
  auto count_in = [&](const std::string& prefix) {
    const auto inner = r.substr(prefix.size(), r.size() - prefix.size() - 1);
    const long long k = parse_integer(trim(inner));
    if (k < 0 || k > 1000000) throw ValidationError(fmt::format("xi rule '{}': count out of range", r));
    return static_cast<int>(k);
  };
  std::vector<double> out;
  if (r.rfind("golden(", 0) == 0 && r.back() == ')') {
    out = {0.0, 0.5};
    for (double x : golden_xis(count_in("golden("))) out.push_back(x);
  } else if (r.rfind("random(", 0) == 0 && r.back() == ')') {
    out = {0.0, 0.5};
    std::mt19937_64 rng(derive_seed(seed, 0));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int k = count_in("random(");
    for (int i = 0; i < k; ++i) out.push_back(U(rng));
  } else {
    out = parse_double_list(r);
    if (out.empty()) throw ValidationError("xi list is empty");
  }
  return out;
}

ExperimentConfig ExperimentConfig::from_sections(const ConfigSections& sections) {
  KeyValues general;
  KeyValues h1kv{{"family", "log_power"}, {"B", "1"}, {"c", "1"}};
  KeyValues h2_over;
  for (const auto& [name, kv] : sections) {
    if (name.empty() || name == "experiment" || name == "output") {
      for (const auto& [k, v] : kv) {
        if (!kGeneralKeys.count(k)) throw ValidationError(fmt::format("unknown config key '{}'", k));
        general[k] = v;
      }
    } else if (name == "h1") {
      for (const auto& [k, v] : kv) h1kv[k] = v;
    } else if (name == "h2") {
      h2_over = kv;
    } else {
      throw ValidationError(fmt::format("unknown config section '[{}]'", name));
    }
  }
  // h2 inherits every key of h1 it does not set
  KeyValues h2kv = h1kv;
  for (const auto& [k, v] : h2_over) h2kv[k] = v;
  for (const auto* kv : {&h1kv, &h2kv})
    for (const auto& [k, v] : *kv)
      if (k != "family" && k != "B" && k != "C" && k != "m" && k != "c" && k != "x0")
        throw ValidationError(fmt::format("unknown family key '{}'", k));

  ExperimentConfig c;
  c.experiment = kv_string(general, "experiment", "");
  if (std::find(experiments().begin(), experiments().end(), c.experiment) == experiments().end())
    throw ValidationError(fmt::format("experiment '{}' is not one of count, expsum-decay, vdc, lemma2, prop2, "
                                      "majorant, thresholds, verify",
                                      c.experiment));
  c.h1_kv = h1kv;
  c.h2_kv = h2kv;
  c.h1 = rv::RegVaryFn::from_kv(h1kv);
  c.h2 = rv::RegVaryFn::from_kv(h2kv);
  c.kind = sparse::set_kind_from_string(kv_string(general, "kind", "frac_plus"));
  c.psi_mode = rv::psi_mode_from_string(kv_string(general, "psi_mode", "difference"));
  const std::string nkey = general.count("N_list") ? "N_list" : "N";
  c.N_list = general.count(nkey) ? parse_N_list(general.at(nkey)) : default_N_list(c.experiment);
  // an explicit majorant set defaults to N = max(A)
  if (c.experiment == "majorant" && general.count("A") && !general.count(nkey)) c.N_list.clear();
  c.p = kv_double(general, "p", kNaN);
  c.exact_endpoint = general.count("exact_endpoint") ? parse_bool("exact_endpoint", general.at("exact_endpoint")) : false;
  c.xi_rule = kv_string(general, "xi", c.xi_rule);
  c.m_max = static_cast<int>(kv_int(general, "m_max", c.m_max));
  c.trials = static_cast<int>(kv_int(general, "trials", c.trials));
  c.budget = static_cast<int>(kv_int(general, "budget", c.budget));
  c.restarts = static_cast<int>(kv_int(general, "restarts", c.restarts));
  c.method = kv_string(general, "method", c.method);
  if (general.count("A")) c.A = parse_int_list(general.at("A"));
  c.c1_list = parse_double_list(kv_string(general, "c1_list", "1, 1.25, 1.5, 1.75, 1.9"));
  c.c2_list = parse_double_list(kv_string(general, "c2_list", "1, 1.05, 1.1, 1.15, 1.19"));
  c.level = kv_string(general, "level", c.level);
  if (general.count("seed")) {
    const auto& s = general.at("seed");
    std::size_t used = 0;
    try {
      c.seed = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || s.front() == '-') throw ValidationError(fmt::format("seed '{}' is not a u64", s));
  }
  c.tol = kv_double(general, "tol", c.tol);
  c.out_dir = kv_string(general, "out", c.out_dir);
  c.format = kv_string(general, "format", c.format);
  c.timing = general.count("timing") ? parse_bool("timing", general.at("timing")) : true;
  c.coeffs_out = kv_string(general, "coeffs_out", "");

  if (c.format != "csv" && c.format != "jsonl" && c.format != "both")
    throw ValidationError(fmt::format("format '{}' is not csv, jsonl or both", c.format));
  if (c.level != "quick" && c.level != "full") throw ValidationError(fmt::format("level '{}' is not quick or full", c.level));
  majorant::method_from_string(c.method);
  if (c.m_max < 1) throw ValidationError("m_max must be >= 1");
  if (c.trials < 0) throw ValidationError("trials must be >= 0");
  if (!(c.tol >= 1e-12 && c.tol <= 1e-2)) throw ValidationError(fmt::format("tol={} outside [1e-12, 1e-2]", c.tol));
  c.xis = resolve_xis(c.xi_rule, c.seed);
  const bool needs_set = c.experiment != "thresholds" && c.experiment != "verify" &&
                         !(c.experiment == "majorant" && !c.A.empty());
  if (needs_set) {
    c.set_spec().validate();
    if (c.N_list.empty()) throw ValidationError("N_list is empty");
  }
  if (c.experiment == "prop2" || c.experiment == "majorant") c.resolved_p();
  return c;
}

sparse::SetSpec ExperimentConfig::set_spec() const {
  sparse::SetSpec s;
  s.kind = kind;
  s.h1 = h1;
  s.h2 = h2;
  s.psi_mode = psi_mode;
  s.N = N_list.empty() ? 1 : N_list.back();
  return s;
}

double ExperimentConfig::resolved_p() const {
  if (!std::isnan(p)) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw ValidationError(fmt::format("p={} must be finite and >= 1", p));
    return p;
  }
  const double c2 = h2.c();
  const double thr = c2 > 1.0 ? majorant::p_threshold(h1.c(), c2) : 2.0;
  return exact_endpoint ? thr : thr + 0.5;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("experiment", experiment);
  e.emplace_back("h1", h1.to_kv());
  e.emplace_back("h2", h2.to_kv());
  e.emplace_back("kind", sparse::to_string(kind));
  e.emplace_back("psi_mode", rv::to_string(psi_mode));
  e.emplace_back("N_list", join(N_list));
  std::string pstr = "unused";
  if (experiment == "prop2" || experiment == "majorant") pstr = format_double(resolved_p());
  e.emplace_back("p", pstr);
  e.emplace_back("exact_endpoint", exact_endpoint ? "true" : "false");
  e.emplace_back("xi", xi_rule);
  e.emplace_back("xi_values", join(xis));
  e.emplace_back("m_max", std::to_string(m_max));
  e.emplace_back("trials", std::to_string(trials));
  e.emplace_back("budget", std::to_string(budget));
  e.emplace_back("restarts", std::to_string(restarts));
  e.emplace_back("method", method);
  e.emplace_back("A", join(A));
  e.emplace_back("c1_list", join(c1_list));
  e.emplace_back("c2_list", join(c2_list));
  e.emplace_back("level", level);
  e.emplace_back("seed", std::to_string(seed));
  e.emplace_back("tol", format_double(tol));
  e.emplace_back("format", format);
  e.emplace_back("timing", timing ? "true" : "false");
  return e;
}

// ---------------------------------------------------------------------------

bool VerifyReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

std::vector<SweepResult> VerifyReport::rows() const {
  std::vector<SweepResult> out;
  for (const auto& c : checks) {
    SweepResult r;
    r.experiment = "verify";
    r.quantity = c.name;
    r.value = c.measured;
    r.bound = c.threshold;
    r.ratio = c.passed ? 1.0 : 0.0;
    out.push_back(r);
  }
  return out;
}

namespace {

using trig::TrigPoly;

struct Suite {
  const VerifyOptions& opts;
  VerifyReport report;

  // Records measured <= threshold (or >= when `at_least`).
  template <class F>
  void check(const std::string& name, double threshold, F&& measure, bool at_least = false) {
    if (!opts.filter.empty() && name.find(opts.filter) == std::string::npos) return;
    VerifyCheck c;
    c.name = name;
    c.threshold = threshold;
    try {
      c.measured = measure();
      c.passed = at_least ? c.measured >= threshold : c.measured <= threshold;
    } catch (const std::exception& e) {
      c.passed = false;
      c.detail = e.what();
    }
    report.checks.push_back(std::move(c));
  }
};

sparse::SetSpec xlogx_spec(long long N) {
  sparse::SetSpec s;
  s.h1 = rv::RegVaryFn::make(1.0, rv::SlowlyVaryingSpec::log_power(1.0));
  s.h2 = s.h1;
  s.N = N;
  return s;
}

TrigPoly random_poly(std::mt19937_64& rng, std::size_t terms, long long degree) {
  std::uniform_int_distribution<long long> U(0, degree);
  std::normal_distribution<double> G;
  std::set<long long> supp;
  while (supp.size() < terms) supp.insert(U(rng));
  std::vector<trig::cplx> c;
  for (std::size_t i = 0; i < terms; ++i) c.emplace_back(G(rng), G(rng));
  return TrigPoly::make({supp.begin(), supp.end()}, c);
}

double max_of(const std::vector<SweepResult>& rows, const std::string& q, double SweepResult::*field) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& r : rows)
    if (q.empty() || r.quantity == q) m = std::max(m, r.*field);
  return m;
}

void quick_checks(Suite& s, const std::function<double(double, int)>& saw) {
  s.check("lp_norm_single_term", 1e-12, [] {
    return std::abs(trig::lp_norm(TrigPoly::make({7}, {{0.6, -0.8}}), 3.0).value - 1.0);
  });
  s.check("lp_norm_pair_p4", 1e-10, [] {
    return std::abs(trig::lp_norm(TrigPoly::ones({1, 2}), 4.0).value - std::pow(6.0, 0.25));
  });
  s.check("parseval", 1e-10, [] {
    std::mt19937_64 rng(1);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const auto P = random_poly(rng, 1 + static_cast<std::size_t>(t) * 3, 4096);
      double l2 = 0.0;
      for (const auto& c : P.coeffs) l2 += std::norm(c);
      worst = std::max(worst, std::abs(trig::lp_norm(P, 2.0).value / std::sqrt(l2) - 1.0));
    }
    return worst;
  });
  s.check("even_p_oracle", 1e-8, [] {
    std::mt19937_64 rng(2);
    double worst = 0.0;
    for (int p : {4, 6}) {
      const auto P = random_poly(rng, 24, 500);
      const double a = trig::lp_norm(P, p, 1e-10).value;
      const double b = std::pow(trig::even_p_oracle(P, p), 1.0 / p);
      worst = std::max(worst, std::abs(a / b - 1.0));
    }
    return worst;
  });
  s.check("threshold_c2_one", 0.0, [] {
    double worst = 0.0;
    for (double c1 : {1.0, 1.25, 1.5, 1.9}) worst = std::max(worst, std::abs(majorant::p_threshold(c1, 1.0) - 2.0));
    return worst;
  });
  s.check("threshold_forms_agree", 1e-12, [] {
    double worst = 0.0;
    for (double c1 : {1.0, 1.4, 1.8})
      for (double c2 : {1.0, 1.05, 1.1, 1.15, 1.19})
        worst = std::max(worst, std::abs(majorant::p_threshold(c1, c2) / majorant::p_threshold_ratio_form(c1, c2) - 1.0));
    return worst;
  });
  s.check("sawtooth_envelope", 2.0, [&] {
    double K = 0.0;
    for (int M : {8, 64, 512})
      for (int i = 0; i < 4096; ++i) {
        const double x = (i + 0.5) / 4096.0;
        const double env = std::min(1.0, 1.0 / (M * expsum::dist_to_int(x)));
        K = std::max(K, std::abs(expsum::sawtooth(x) - saw(x, M)) / env);
      }
    return K;
  });
  s.check("dirichlet_closed_form", 1e-9, [] {
    double worst = 0.0;
    for (double xi : {0.0, 0.5, 0.1234567, 0.999}) {
      std::complex<long double> acc = 0;
      for (long long n = 1; n <= 5000; ++n) {
        const long double a = 2 * std::numbers::pi_v<long double> * xi * n;
        acc += std::complex<long double>(std::cos(a), std::sin(a));
      }
      const auto d = expsum::dirichlet_sum(5000, xi);
      worst = std::max(worst, std::abs(std::complex<double>(acc) - d));
    }
    return worst;
  });
  s.check("floor_set_example", 0.0, [] {
    const auto h = rv::RegVaryFn::make(1.5, rv::SlowlyVaryingSpec::constant_one());
    const auto set = sparse::build_floor_set(h, 11);
    return set.members == std::vector<long long>{1, 2, 5, 8, 11} ? 0.0 : 1.0;
  });
  s.check("inverse_roundtrip", 1e-13, [] {
    double worst = 0.0;
    const rv::InverseFn phi(rv::RegVaryFn::make(1.0, rv::SlowlyVaryingSpec::log_power(1.0)));
    for (long double y : {10.0L, 1e3L, 1e6L, 1e9L, 1e12L}) {
      const long double x = phi.invert(y);
      worst = std::max(worst, static_cast<double>(std::abs(phi.source().eval(x) / y - 1.0L)));
    }
    return worst;
  });
  s.check("majorant_p2_parseval", 1e-9, [] {
    majorant::MajorantProblem prob;
    prob.A = {0, 3, 4, 9, 20, 21};
    prob.p = 2.0;
    prob.budget = 40;
    prob.restarts = 2;
    return std::abs(majorant::estimate_constant(prob).value - 1.0);
  });
  s.check("majorant_even_ceiling", 1.0 + 1e-6, [] {
    majorant::MajorantProblem prob;
    prob.A = {0, 3, 4, 9, 20, 21};
    prob.budget = 40;
    prob.restarts = 2;
    double worst = 0.0;
    for (double p : {4.0, 6.0}) {
      prob.p = p;
      worst = std::max(worst, majorant::estimate_constant(prob).value);
    }
    return worst;
  });
  s.check("majorant_c3_above_one", 1.0005, [] {
    return majorant::brute_force_constant({0, 1, 3}, 3.0, majorant::Alphabet::signs()).value;
  }, true);
  s.check("hy_envelope_full_interval", 1.0, [] {
    std::vector<long long> full(100);
    for (long long n = 1; n <= 100; ++n) full[static_cast<std::size_t>(n - 1)] = n;
    return majorant::hy_envelope(full, 100, 3.0);
  }, true);
  s.check("count_ratio_1e5", 0.1, [] {
    const auto rows = sparse::count_vs_phi2(xlogx_spec(100000), {100000});
    return std::abs(rows.front().ratio - 1.0);
  });
  s.check("worker_count_independence", 0.0, [] {
    const auto spec = xlogx_spec(1 << 18);
    const int saved = workers();
    set_workers(1);
    const auto a = expsum::decay_sweep(spec, {1 << 16, 1 << 18}, {0.5});
    set_workers(std::max(2, saved));
    const auto b = expsum::decay_sweep(spec, {1 << 16, 1 << 18}, {0.5});
    set_workers(saved);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i].value - b[i].value));
    return diff;
  });
}

void full_checks(Suite& s) {
  s.check("structural_floor_vs_frac", 0.0, [] {
    const auto ctx = sparse::FracContext::from(xlogx_spec(200000));
    double mismatches = 0.0;
    for (long long n = ctx.n_min(); n <= 200000; ++n) {
      const auto m = sparse::member_frac(n, ctx.phi1, ctx.psi, sparse::Sign::plus);
      if (!m.borderline && m.member != sparse::member_floor_characterization(n, ctx.phi1, ctx.psi)) mismatches += 1;
    }
    return mismatches;
  });
  s.check("count_exponent", 0.0, [] {
    const auto rows = sparse::count_vs_phi2(xlogx_spec(1000000), {10000, 100000, 1000000});
    return rows.front().fitted_exponent;
  });
  s.check("error_term_decay_exponent", -0.05, [] {
    const auto rows = expsum::decay_sweep(xlogx_spec(1000000), {10000, 100000, 1000000},
                                          {0.0, 0.5, golden_xis(1).front()});
    return max_of(rows, "", &SweepResult::fitted_exponent);
  });
  s.check("weighted_discrepancy_exponent", 1.0, [] {
    const auto rows = expsum::lemma2_sweep(xlogx_spec(1000000), {10000, 100000, 1000000}, {0.5, golden_xis(1).front()});
    return max_of(rows, "", &SweepResult::fitted_exponent);
  });
  s.check("vdc_envelope", 50.0, [] {
    const auto ctx = sparse::FracContext::from(xlogx_spec(1 << 18));
    const auto rows = expsum::lemma1_sweep(ctx, 16, {1 << 10, 1 << 14, 1 << 18}, golden_xis(4));
    return max_of(rows, "", &SweepResult::ratio);
  });
  s.check("prop2_nongrowth", 0.02, [] {
    auto spec = xlogx_spec(1 << 14);
    spec.h2 = rv::RegVaryFn::make(1.1, rv::SlowlyVaryingSpec::log_power(1.0));
    const double p = majorant::p_threshold(1.0, 1.1) + 0.5;
    const auto rows = trig::prop2_sweep(spec, {1 << 10, 1 << 12, 1 << 14}, p, 4, 1);
    return max_of(rows, "prop2_ratio_max", &SweepResult::fitted_exponent);
  });
  s.check("mu_nu_decay", 0.0, [] {
    const auto rows = trig::prop2_sweep(xlogx_spec(1 << 16), {1 << 12, 1 << 14, 1 << 16}, 4.0, 0, 1);
    return max_of(rows, "mu_nu_sup", &SweepResult::fitted_exponent);
  });
  s.check("uniformity_slope", 0.02, [] {
    majorant::UniformityOptions o;
    o.budget = 40;
    o.restarts = 4;
    const auto rows = majorant::uniformity_sweep(xlogx_spec(1 << 12), 2.5, {1 << 8, 1 << 10, 1 << 12}, o);
    for (const auto& r : rows)
      if (r.quantity == "constant" && !(r.value <= r.bound)) return std::numeric_limits<double>::infinity();
    return rows.front().fitted_exponent;
  });
}

std::string error_context(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [k, v] : c.echo()) {
    if (v.empty() || v == "unused") continue;
    out += fmt::format("{}{}={}", out.empty() ? "" : "; ", k, v);
  }
  return out;
}

void write_outputs(const ExperimentConfig& c, const std::vector<SweepResult>& rows, const std::string& stem,
                   std::ostream& log) {
  std::filesystem::create_directories(c.out_dir);
  auto header = [&](std::ostream& os) {
    os << "# majorantlab " << c.experiment << '\n';
    for (const auto& [k, v] : c.echo()) os << "# " << k << " = " << v << '\n';
  };
  auto open = [&](const std::string& ext) {
    const auto path = std::filesystem::path(c.out_dir) / (stem + ext);
    std::ofstream os(path);
    if (!os) throw ValidationError(fmt::format("cannot write '{}'", path.string()));
    log << "wrote " << path.string() << '\n';
    return os;
  };
  if (c.format == "csv" || c.format == "both") {
    auto os = open(".csv");
    header(os);
    write_csv(os, rows, c.timing);
  }
  if (c.format == "jsonl" || c.format == "both") {
    auto os = open(".jsonl");
    header(os);
    write_jsonl(os, rows, c.timing);
  }
}

void write_coeffs(const ExperimentConfig& c, const std::vector<long long>& Ns,
                  const std::vector<std::vector<long long>>& sets, const std::vector<majorant::MajorantEstimate>& ests) {
  std::ofstream os(c.coeffs_out);
  if (!os) throw ValidationError(fmt::format("cannot write '{}'", c.coeffs_out));
  os << "# majorantlab majorant argmax coefficients\n";
  for (const auto& [k, v] : c.echo()) os << "# " << k << " = " << v << '\n';
  os << "N,n,re,im\n";
  for (std::size_t i = 0; i < ests.size(); ++i)
    for (std::size_t j = 0; j < sets[i].size(); ++j)
      os << Ns[i] << ',' << sets[i][j] << ',' << format_double(ests[i].argmax_coeffs[j].real() + 0.0) << ','
         << format_double(ests[i].argmax_coeffs[j].imag() + 0.0) << '\n';
}

std::vector<SweepResult> run_majorant(const ExperimentConfig& c) {
  const double p = c.resolved_p();
  std::vector<majorant::MajorantEstimate> ests;
  std::vector<std::vector<long long>> sets;
  std::vector<long long> Ns;
  std::vector<SweepResult> rows;
  if (!c.A.empty()) {
    majorant::MajorantProblem prob;
    prob.A = c.A;
    std::sort(prob.A.begin(), prob.A.end());
    prob.N = c.N_list.empty() ? prob.A.back() : c.N_list.back();
    prob.p = p;
    prob.budget = c.budget;
    prob.restarts = c.restarts;
    prob.seed = c.seed;
    prob.method = majorant::method_from_string(c.method);
    prob.tol = c.tol;
    const auto t0 = std::chrono::steady_clock::now();
    ests.push_back(majorant::estimate_constant(prob));
    SweepResult r;
    r.experiment = "majorant";
    r.p = p;
    r.N = prob.N;
    r.quantity = "constant";
    r.value = ests.back().value;
    r.bound = majorant::hy_envelope(prob.A, prob.N, p);
    r.ratio = r.value / r.bound;
    r.seed = c.seed;
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(r);
    sets.push_back(prob.A);
    Ns.push_back(prob.N);
  } else {
    majorant::UniformityOptions o;
    o.budget = c.budget;
    o.restarts = c.restarts;
    o.seed = c.seed;
    o.method = majorant::method_from_string(c.method);
    rows = majorant::uniformity_sweep(c.set_spec(), p, c.N_list, o, &ests);
    if (!c.coeffs_out.empty()) {
      auto spec = c.set_spec();
      const auto full = sparse::build_frac_set(spec);
      for (long long N : c.N_list) {
        sets.push_back(full.prefix(N).members);
        Ns.push_back(N);
      }
    }
  }
  if (!c.coeffs_out.empty()) write_coeffs(c, Ns, sets, ests);
  return rows;
}

}  // namespace

VerifyReport verify_suite(VerifyLevel level, const VerifyOptions& opts) {
  Suite s{opts, {}};
  const auto saw = opts.sawtooth_truncated ? opts.sawtooth_truncated
                                           : std::function<double(double, int)>(expsum::sawtooth_truncated);
  quick_checks(s, saw);
  if (level == VerifyLevel::full) full_checks(s);
  return s.report;
}

int run(const ExperimentConfig& c, std::ostream& log) {
  try {
    std::vector<SweepResult> rows;
    const auto& e = c.experiment;
    if (e == "count") {
      rows = sparse::count_vs_phi2(c.set_spec(), c.N_list);
    } else if (e == "expsum-decay") {
      rows = expsum::decay_sweep(c.set_spec(), c.N_list, c.xis);
    } else if (e == "lemma2") {
      rows = expsum::lemma2_sweep(c.set_spec(), c.N_list, c.xis);
    } else if (e == "vdc") {
      rows = expsum::lemma1_sweep(sparse::FracContext::from(c.set_spec()), c.m_max, c.N_list, c.xis);
    } else if (e == "prop2") {
      rows = trig::prop2_sweep(c.set_spec(), c.N_list, c.resolved_p(), c.trials, c.seed, c.tol);
    } else if (e == "majorant") {
      rows = run_majorant(c);
    } else if (e == "thresholds") {
      rows = majorant::thresholds(c.c1_list, c.c2_list);
    } else if (e == "verify") {
      const auto report = verify_suite(c.level == "full" ? VerifyLevel::full : VerifyLevel::quick);
      for (const auto& chk : report.checks)
        log << (chk.passed ? "PASS " : "FAIL ") << chk.name << " measured=" << format_double(chk.measured)
            << " threshold=" << format_double(chk.threshold) << (chk.detail.empty() ? "" : " error=" + chk.detail)
            << '\n';
      write_outputs(c, report.rows(), "verify", log);
      const auto failed = std::count_if(report.checks.begin(), report.checks.end(), [](auto& x) { return !x.passed; });
      log << "failures: " << failed << '\n';
      return report.ok() ? kExitOk : kExitVerifyFailed;
    } else {
      throw ValidationError(fmt::format("unknown experiment '{}'", e));
    }
    write_outputs(c, rows, e, log);
    return kExitOk;
  } catch (const ValidationError& ex) {
    log << "validation error: " << ex.what() << " [" << error_context(c) << "]\n";
    return kExitValidation;
  } catch (const DomainError& ex) {
    log << "validation error: " << ex.what() << " [" << error_context(c) << "]\n";
    return kExitValidation;
  } catch (const CapacityError& ex) {
    log << "capacity error: " << ex.what() << " [" << error_context(c) << "]\n";
    return kExitCapacity;
  } catch (const ConvergenceError& ex) {
    log << "budget error: " << ex.what() << " [" << error_context(c) << "]\n";
    return kExitCapacity;
  }
}

}  // namespace majorantlab::cli

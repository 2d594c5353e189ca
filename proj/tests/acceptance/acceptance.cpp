// Acceptance run: one pass/fail line per criterion. With an argument, only
// that criterion runs.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "majorantlab/cli.hpp"
#include "majorantlab/expsum.hpp"
#include "majorantlab/majorant.hpp"
#include "majorantlab/parallel.hpp"
#include "majorantlab/sparseset.hpp"
#include "majorantlab/trigpoly.hpp"

using namespace majorantlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double max_seconds;
  std::function<Outcome()> run;
};

rv::RegVaryFn xlogx() { return rv::RegVaryFn::make(1.0, rv::SlowlyVaryingSpec::log_power(1.0)); }
rv::RegVaryFn x11logx() { return rv::RegVaryFn::make(1.1, rv::SlowlyVaryingSpec::log_power(1.0)); }

sparse::SetSpec spec_of(rv::RegVaryFn h1, rv::RegVaryFn h2, long long N,
                        sparse::SetKind kind = sparse::SetKind::frac_plus) {
  sparse::SetSpec s;
  s.kind = kind;
  s.h1 = std::move(h1);
  s.h2 = std::move(h2);
  s.N = N;
  return s;
}

std::vector<long long> powers(long long base, int lo, int hi) {
  std::vector<long long> out;
  long long v = 1;
  for (int k = 0; k <= hi; ++k, v *= base)
    if (k >= lo) out.push_back(v);
  return out;
}

std::vector<long long> random_set(std::mt19937_64& rng, std::size_t size, long long span) {
  std::uniform_int_distribution<long long> U(0, span);
  std::set<long long> s;
  while (s.size() < size) s.insert(U(rng));
  return {s.begin(), s.end()};
}

Outcome cardinality() {
  const auto rows = sparse::count_vs_phi2(spec_of(xlogx(), xlogx(), 10000000), powers(10, 4, 7));
  const double ratio = rows.back().ratio;
  const double slope = rows.back().fitted_exponent;
  std::string d;
  for (const auto& r : rows) d += fmt::format("N={} ratio={:.6f}; ", r.N, r.ratio);
  return {ratio >= 0.95 && ratio <= 1.05 && slope < 0.0, d + fmt::format("exponent of |ratio-1| = {:.4f}", slope)};
}

Outcome structural() {
  const long long N = 1000000;
  const rv::InverseFn phi(xlogx());
  const auto psi = rv::PsiFn::make(phi, rv::PsiMode::difference);
  const auto A = sparse::build_floor_set(xlogx(), N, psi.n_min());
  long long floor_mismatch = 0, equiv_mismatch = 0, border = 0, checked = 0;
  for (long long n = psi.n_min(); n <= N; ++n) {
    ++checked;
    const auto plus = sparse::member_frac(n, phi, psi, sparse::Sign::plus);
    const auto minus = sparse::member_frac(n, phi, psi, sparse::Sign::minus);
    if (plus.borderline || minus.borderline) {
      ++border;
      continue;
    }
    if (plus.member != sparse::member_floor_characterization(n, phi, psi)) ++floor_mismatch;
    if (minus.member != A.contains(n)) ++equiv_mismatch;
  }
  const double frac = static_cast<double>(border) / static_cast<double>(checked);
  return {floor_mismatch == 0 && equiv_mismatch == 0 && frac <= 1e-6,
          fmt::format("n in [{}, {}]: floor-characterization mismatches={}, B_minus vs floor image mismatches={}, "
                      "borderline fraction={}",
                      psi.n_min(), N, floor_mismatch, equiv_mismatch, frac)};
}

Outcome decay() {
  const double golden = golden_xis(1).front();
  const auto rows = expsum::decay_sweep(spec_of(xlogx(), xlogx(), 10000000), powers(10, 4, 7), {0.0, 0.5, golden});
  double worst = -std::numeric_limits<double>::infinity();
  std::string d;
  for (double xi : {0.0, 0.5, golden})
    for (const auto& r : rows)
      if (r.xi == xi) {
        worst = std::max(worst, r.fitted_exponent);
        d += fmt::format("xi={:.4f}: exponent {:.4f}; ", xi, r.fitted_exponent);
        break;
      }
  return {worst <= -0.05, d + fmt::format("max exponent {:.4f} (need <= -0.05)", worst)};
}

Outcome vdc_envelope() {
  const auto ctx = sparse::FracContext::from(spec_of(xlogx(), xlogx(), 1LL << 24));
  const auto rows = expsum::lemma1_sweep(ctx, 64, powers(2, 10, 24), golden_xis(8));
  double worst = 0.0;
  bool finite = true;
  for (const auto& r : rows) {
    finite = finite && std::isfinite(r.ratio);
    worst = std::max(worst, r.ratio);
  }
  const double slope = rows.front().fitted_exponent;
  return {finite && worst <= 50.0 && slope <= 0.02,
          fmt::format("{} rows; fitted constant (max ratio) {:.4f}; slope of per-N max {:.4f}", rows.size(), worst,
                      slope)};
}

Outcome norm_engine() {
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> G;
  std::uniform_real_distribution<double> U(0.0, 16.0);
  double parseval = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto D = static_cast<long long>(std::pow(2.0, U(rng)));
    const std::size_t terms = std::min<std::size_t>(static_cast<std::size_t>(D) + 1, 1 + rng() % 256);
    auto supp = random_set(rng, terms - 1, D - 1);
    supp.push_back(D);
    std::vector<trig::cplx> c(terms);
    double l2 = 0.0;
    for (auto& x : c) {
      x = {G(rng), G(rng)};
      l2 += std::norm(x);
    }
    const auto P = trig::TrigPoly::make(supp, c);
    parseval = std::max(parseval, std::abs(trig::lp_norm(P, 2.0).value / std::sqrt(l2) - 1.0));
  }
  double oracle = 0.0;
  for (int t = 0; t < 40; ++t) {
    const std::size_t terms = 1 + static_cast<std::size_t>(t) * 63 / 39;
    const auto supp = random_set(rng, terms, 4000);
    std::vector<trig::cplx> c(terms);
    for (auto& x : c) x = {G(rng), G(rng)};
    const auto P = trig::TrigPoly::make(supp, c);
    for (int p : {4, 6}) {
      const double a = trig::lp_norm(P, p).value;
      const double b = std::pow(trig::even_p_oracle(P, p), 1.0 / p);
      oracle = std::max(oracle, std::abs(a / b - 1.0));
    }
  }
  const double pair = std::abs(trig::lp_norm(trig::TrigPoly::ones({1, 2}), 4.0).value - std::pow(6.0, 0.25));
  return {parseval <= 1e-10 && oracle <= 1e-8 && pair <= 1e-10,
          fmt::format("Parseval max rel err {:.3g} (1000 polys); even-p oracle max rel err {:.3g}; "
                      "|{{1,2}} p=4 - 6^(1/4)| = {:.3g}",
                      parseval, oracle, pair)};
}

Outcome even_p() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    majorant::MajorantProblem prob;
    prob.A = random_set(rng, 2 + static_cast<std::size_t>(t % 30), 600);
    prob.budget = 40;
    prob.restarts = 4;
    prob.seed = static_cast<std::uint64_t>(t);
    for (double p : {2.0, 4.0, 6.0}) {
      prob.p = p;
      worst = std::max(worst, majorant::estimate_constant(prob).value);
    }
  }
  const double random_worst = worst;
  const auto full = sparse::build_frac_set(spec_of(xlogx(), xlogx(), 100000));
  for (long long N : {1000LL, 10000LL, 100000LL}) {
    auto prob = majorant::MajorantProblem::from_set(full.prefix(N), 2.0);
    prob.N = N;
    prob.budget = 8;
    prob.restarts = 2;
    prob.seed = static_cast<std::uint64_t>(N);
    for (double p : {2.0, 4.0, 6.0}) {
      prob.p = p;
      worst = std::max(worst, majorant::estimate_constant(prob).value);
    }
  }
  return {worst <= 1.0 + 1e-6,
          fmt::format("max over 50 random sets {:.12f}; max including B_N (N = 1e3, 1e4, 1e5) {:.12f}",
                      random_worst, worst)};
}

Outcome c3() {
  const std::vector<long long> A{0, 1, 3};
  const auto brute = majorant::brute_force_constant(A, 3.0, majorant::Alphabet::signs());
  majorant::MajorantProblem prob;
  prob.A = A;
  prob.p = 3.0;
  prob.seed = 3;
  const auto est = majorant::estimate_constant(prob);
  std::string coeffs;
  for (const auto& a : brute.argmax_coeffs) coeffs += fmt::format("{:+g} ", a.real());
  return {brute.value >= 1.0005 && std::abs(est.value - brute.value) <= 1e-6,
          fmt::format("A={{0,1,3}} signs [{}]: brute force {:.10f}; estimate_constant {:.10f} ({})", coeffs,
                      brute.value, est.value, est.method)};
}

Outcome uniformity() {
  majorant::UniformityOptions o;
  o.seed = 8;
  const auto rows = majorant::uniformity_sweep(spec_of(xlogx(), xlogx(), 1 << 16), 2.5, powers(2, 10, 16), o);
  bool below = true;
  std::string d;
  for (const auto& r : rows)
    if (r.quantity == "constant") {
      below = below && r.value <= r.bound;
      d += fmt::format("N={} C={:.6f} env={:.3f}; ", r.N, r.value, r.bound);
    }
  const double slope = rows.front().fitted_exponent;
  return {slope <= 0.02 && below, d + fmt::format("slope {:.5f}", slope)};
}

Outcome prop2() {
  const double p = majorant::p_threshold(1.0, 1.1) + 0.5;
  const auto rows = trig::prop2_sweep(spec_of(xlogx(), x11logx(), 1 << 18), powers(2, 10, 18), p, 16, 2024);
  double ratio_slope = kNaN, sup_slope = kNaN;
  std::string d = fmt::format("p={}; ", p);
  for (const auto& r : rows) {
    if (r.quantity == "prop2_ratio_max") {
      ratio_slope = r.fitted_exponent;
      d += fmt::format("N={} max ratio {:.4f}; ", r.N, r.value);
    }
    if (r.quantity == "mu_nu_sup") sup_slope = r.fitted_exponent;
  }
  return {ratio_slope <= 0.02 && sup_slope < 0.0,
          d + fmt::format("ratio slope {:.4f}; sup|F(mu-nu)| slope {:.4f}", ratio_slope, sup_slope)};
}

Outcome threshold() {
  bool ok = true;
  for (double c1 : {1.0, 1.25, 1.5, 1.9}) ok = ok && majorant::p_threshold(c1, 1.0) == 2.0;
  const double near6 = majorant::p_threshold(1.0, 1.2 - 1e-9);
  ok = ok && std::abs(near6 - 6.0) <= 1e-6;
  bool monotone = true;
  double prev = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double v = majorant::p_threshold(1.0, 1.0 + 0.2 * k / 20.0);
    if (k > 0 && !(v > prev)) monotone = false;
    prev = v;
  }
  return {ok && monotone, fmt::format("p(c1,1) = 2 for c1 in {{1,1.25,1.5,1.9}}; p(1, 6/5-1e-9) = {:.9f}; monotone={}",
                                      near6, monotone)};
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const std::vector<std::string> configs = {
      "experiment = count\nN_list = 1e4..1e6\n",
      "experiment = expsum-decay\nN_list = 1e4..1e6\nxi = golden(4)\n",
      "experiment = vdc\nN_list = 2^10..2^16\nm_max = 8\nxi = random(3)\n",
      "experiment = lemma2\nN_list = 1e4, 1e5\n",
      "experiment = prop2\nN_list = 2^10..2^13\ntrials = 6\n[h2]\nc = 1.1\n",
      "experiment = majorant\nN_list = 2^8..2^11\nbudget = 30\nrestarts = 4\np = 3\n",
      "experiment = thresholds\n",
  };
  const auto root = fs::temp_directory_path() / "majorantlab_acceptance_determinism";
  fs::remove_all(root);
  std::ostringstream log;
  int differing = 0, files = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::vector<std::string> outs;
    for (int run = 0; run < 3; ++run) {
      set_workers(run == 1 ? 8 : 1);
      const auto dir = root / fmt::format("{}_{}", i, run);
      const auto cfg = cli::ExperimentConfig::from_sections(
          cli::parse_config("seed = 99\ntiming = false\nout = " + dir.string() + "\n" + configs[i]));
      if (cli::run(cfg, log) != cli::kExitOk) return {false, "run failed: " + log.str()};
      std::string all;
      for (const auto& e : fs::directory_iterator(dir)) all += e.path().filename().string() + read_all(e.path());
      outs.push_back(all);
    }
    ++files;
    if (outs[0] != outs[1] || outs[0] != outs[2]) ++differing;
  }
  set_workers(1);
  fs::remove_all(root);
  return {differing == 0, fmt::format("{} experiments x (workers 1, 8, 1): {} differ", files, differing)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "cardinality |B_N|/phi2(N)", 120, cardinality},
      {2, "structural identities", 60, structural},
      {3, "error-term decay", 300, decay},
      {4, "van der Corput envelope", 600, vdc_envelope},
      {5, "norm engine", 120, norm_engine},
      {6, "even-p majorant exactness", 300, even_p},
      {7, "C_3 > 1", 120, c3},
      {8, "uniform boundedness (c1 = c2 = 1)", 1800, uniformity},
      {9, "restriction ratio (c1 = 1, c2 = 1.1)", 1800, prop2},
      {10, "threshold formula", 1, threshold},
      {11, "determinism", 600, determinism},
  };
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  set_workers(static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.max_seconds;
    const bool ok = o.passed && in_time;
    if (!ok) ++failed;
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail
              << fmt::format(" [{:.1f} s, limit {} s{}]", secs, c.max_seconds, in_time ? "" : ", over time") << std::endl;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion " << only << '\n';
    return 2;
  }
  return failed == 0 ? 0 : 1;
}

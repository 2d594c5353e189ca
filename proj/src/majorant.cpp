#include "majorantlab/majorant.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "majorantlab/compensated.hpp"
#include "majorantlab/errors.hpp"
#include "majorantlab/fft.hpp"
#include "majorantlab/parallel.hpp"

namespace majorantlab::majorant {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kGradTol = 1e-7;
constexpr std::size_t kMinGrid = 4096;
constexpr std::size_t kExhaustiveFlips = 64;
constexpr std::size_t kScreened = 8;
constexpr std::size_t kFinalists = 4;
constexpr int kMaxHalvings = 40;

inline double abs_pow(double r2, double p) {
  if (p == 2.0) return r2;
  if (p == 4.0) return r2 * r2;
  if (p == 6.0) return r2 * r2 * r2;
  return std::pow(r2, 0.5 * p);
}

// |z|^{p-2} from |z|^2 for p >= 2.
inline double abs_pow_m2(double r2, double p) {
  if (p == 2.0) return 1.0;
  if (p == 4.0) return r2;
  if (p == 6.0) return r2 * r2;
  return r2 > 0.0 ? std::pow(r2, 0.5 * p - 1.0) : 0.0;
}

void check_range(double c1, double c2) {
  if (!(c1 >= 1.0 && c1 < 2.0)) throw ValidationError(fmt::format("c1={} outside [1, 2)", c1));
  if (!(c2 >= 1.0 && c2 < 1.2)) throw ValidationError(fmt::format("c2={} outside [1, 6/5)", c2));
  if (!threshold_admissible(c1, c2))
    throw ValidationError(fmt::format("(c1, c2) = ({}, {}) violates 1 < 1/(3 c1) + 1/c2", c1, c2));
}

// P(xi) = sum a_i e(s_i xi) on the grid j/K with s_i = A_i - A_0.
class GridPoly {
 public:
  GridPoly(const std::vector<long long>& A, double p, std::size_t K)
      : p_(p), K_(K), bwd_(K, Fft::Direction::backward), fwd_(K, Fft::Direction::forward), vals_(K), twiddle_(K) {
    shift_.reserve(A.size());
    for (long long n : A) shift_.push_back(static_cast<std::size_t>(n - A.front()));
    for (std::size_t j = 0; j < K; ++j) twiddle_[j] = unit_phase(static_cast<double>(j) / static_cast<double>(K));
  }

  std::size_t size() const { return shift_.size(); }

  // Loads coefficients and returns F = mean |P|^p over the grid.
  double load(const std::vector<cplx>& a) {
    cplx* b = bwd_.data();
    std::fill(b, b + K_, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < a.size(); ++i) b[shift_[i]] = a[i];
    bwd_.execute();
    std::copy(b, b + K_, vals_.begin());
    return objective();
  }

  double objective() const {
    double acc = 0.0;
    for (const auto& v : vals_) acc += abs_pow(std::norm(v), p_);
    return acc / static_cast<double>(K_);
  }

  // ghat_i = int |P|^{p-2} P e(-s_i xi) on the grid.
  std::vector<cplx> ghat() {
    cplx* f = fwd_.data();
    for (std::size_t j = 0; j < K_; ++j) f[j] = vals_[j] * abs_pow_m2(std::norm(vals_[j]), p_);
    fwd_.execute();
    std::vector<cplx> g(shift_.size());
    const double inv = 1.0 / static_cast<double>(K_);
    for (std::size_t i = 0; i < shift_.size(); ++i) g[i] = f[shift_[i]] * inv;
    return g;
  }

  // F after replacing a_i by -a_i.
  double flip_objective(std::size_t i, cplx ai) const {
    const cplx d = -2.0 * ai;
    const std::uint64_t s = shift_[i];
    const std::uint64_t mask = K_ - 1;
    double acc = 0.0;
    for (std::size_t j = 0; j < K_; ++j) acc += abs_pow(std::norm(vals_[j] + d * twiddle_[(s * j) & mask]), p_);
    return acc / static_cast<double>(K_);
  }

  void apply_flip(std::size_t i, cplx ai) {
    const cplx d = -2.0 * ai;
    const std::uint64_t s = shift_[i];
    const std::uint64_t mask = K_ - 1;
    for (std::size_t j = 0; j < K_; ++j) vals_[j] += d * twiddle_[(s * j) & mask];
  }

 private:
  double p_;
  std::size_t K_;
  Fft bwd_;
  Fft fwd_;
  std::vector<cplx> vals_;
  std::vector<cplx> twiddle_;
  std::vector<std::size_t> shift_;
};

struct StartResult {
  double F = 0.0;
  std::vector<cplx> coeffs;
  int iterations = 0;
  bool exhausted = false;
  bool phase = false;
};

std::vector<double> phase_gradient(const std::vector<cplx>& a, const std::vector<cplx>& g, double p) {
  std::vector<double> grad(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) grad[i] = -p * std::imag(a[i] * std::conj(g[i]));
  return grad;
}

std::vector<cplx> phases_to_coeffs(const std::vector<double>& theta) {
  std::vector<cplx> a(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) a[i] = std::polar(1.0, theta[i]);
  return a;
}

StartResult sign_search(GridPoly& gp, std::vector<cplx> a, double p, int budget) {
  StartResult r;
  double F = gp.load(a);
  const std::size_t n = a.size();
  bool converged = false;
  while (r.iterations < budget) {
    std::vector<std::size_t> cand;
    if (n <= kExhaustiveFlips) {
      cand.resize(n);
      for (std::size_t i = 0; i < n; ++i) cand[i] = i;
    } else {
      // first-order change of F under a_i -> -a_i
      const auto g = gp.ghat();
      std::vector<std::pair<double, std::size_t>> gain;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = -2.0 * p * std::real(a[i] * std::conj(g[i]));
        if (d > 0.0) gain.emplace_back(-d, i);
      }
      const std::size_t keep = std::min(kScreened, gain.size());
      std::partial_sort(gain.begin(), gain.begin() + static_cast<std::ptrdiff_t>(keep), gain.end());
      for (std::size_t k = 0; k < keep; ++k) cand.push_back(gain[k].second);
      std::sort(cand.begin(), cand.end());
    }
    double best = F * (1.0 + 1e-13);
    std::size_t arg = n;
    for (std::size_t i : cand) {
      const double Fi = gp.flip_objective(i, a[i]);
      if (Fi > best) {
        best = Fi;
        arg = i;
      }
    }
    if (arg == n) {
      converged = true;
      break;
    }
    gp.apply_flip(arg, a[arg]);
    a[arg] = -a[arg];
    F = best;
    ++r.iterations;
  }
  r.exhausted = !converged;
  r.F = gp.load(a);
  r.coeffs = std::move(a);
  return r;
}

StartResult phase_ascent(GridPoly& gp, std::vector<double> theta, double p, int budget) {
  StartResult r;
  r.phase = true;
  auto a = phases_to_coeffs(theta);
  double F = gp.load(a);
  auto grad = phase_gradient(a, gp.ghat(), p);
  double step_prev = 0.0;
  bool converged = false;
  while (r.iterations < budget) {
    double gmax = 0.0, g2 = 0.0;
    for (double g : grad) {
      gmax = std::max(gmax, std::abs(g));
      g2 += g * g;
    }
    if (gmax < kGradTol * F) {
      converged = true;
      break;
    }
    // at most one radian of movement per coordinate
    double step = step_prev > 0.0 ? std::min(2.0 * step_prev, 1.0 / gmax) : 1.0 / gmax;
    bool accepted = false;
    std::vector<double> trial(theta.size());
    for (int h = 0; h < kMaxHalvings; ++h, step *= 0.5) {
      for (std::size_t i = 0; i < theta.size(); ++i) trial[i] = theta[i] + step * grad[i];
      a = phases_to_coeffs(trial);
      const double Ft = gp.load(a);
      if (Ft >= F + kArmijo * step * g2) {
        F = Ft;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      a = phases_to_coeffs(theta);
      gp.load(a);
      converged = true;
      break;
    }
    theta.swap(trial);
    step_prev = step;
    grad = phase_gradient(a, gp.ghat(), p);
    ++r.iterations;
  }
  r.exhausted = !converged;
  r.F = F;
  r.coeffs = std::move(a);
  return r;
}

double ratio_norm(const std::vector<long long>& A, const std::vector<cplx>& a, double p, double tol) {
  return trig::lp_norm(trig::TrigPoly::make(A, a), p, tol).value;
}

}  // namespace

bool threshold_admissible(double c1, double c2) { return 1.0 / (3.0 * c1) + 1.0 / c2 > 1.0; }

double p_threshold(double c1, double c2) {
  check_range(c1, c2);
  return 2.0 + (12.0 - 12.0 / c2) / (1.0 / c1 + 3.0 / c2 - 3.0);
}

double p_threshold_ratio_form(double c1, double c2) {
  check_range(c1, c2);
  return (2.0 / c1 - 6.0 / c2 + 6.0) / (1.0 / c1 + 3.0 / c2 - 3.0);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::signs: return "signs";
    case Method::phase: return "phase";
    case Method::automatic: return "auto";
  }
  return "auto";
}

Method method_from_string(const std::string& name) {
  if (name == "signs") return Method::signs;
  if (name == "phase") return Method::phase;
  if (name == "auto") return Method::automatic;
  throw ValidationError(fmt::format("unknown method '{}' (expected signs, phase or auto)", name));
}

MajorantProblem MajorantProblem::from_set(const sparse::SparseSet& set, double p) {
  MajorantProblem prob;
  prob.A = set.members;
  prob.N = set.spec.N;
  prob.p = p;
  return prob;
}

void MajorantProblem::validate() const {
  if (A.empty()) throw ValidationError("majorant: A must be nonempty");
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (A[i] < 0) throw ValidationError("majorant: A must be nonnegative");
    if (i > 0 && A[i] <= A[i - 1]) throw ValidationError("majorant: A must be strictly increasing");
  }
  if (N != 0 && A.back() > N) throw ValidationError(fmt::format("majorant: max(A)={} exceeds N={}", A.back(), N));
  if (!(p >= 2.0) || !std::isfinite(p)) throw ValidationError(fmt::format("majorant: p={} must be >= 2", p));
  if (budget < 0) throw ValidationError("majorant: budget must be >= 0");
  if (restarts < 0) throw ValidationError("majorant: restarts must be >= 0");
  if (!(tol >= 1e-12 && tol <= 1e-2)) throw ValidationError(fmt::format("majorant: tol={} outside [1e-12, 1e-2]", tol));
}

std::size_t optimizer_grid(long long D) {
  return std::max(kMinGrid, next_pow2(4 * static_cast<std::size_t>(D + 1)));
}

PhaseObjective phase_objective(const std::vector<long long>& A, const std::vector<double>& theta, double p,
                               std::size_t K) {
  if (A.empty() || theta.size() != A.size()) throw ValidationError("phase_objective: size mismatch");
  if (K == 0 || (K & (K - 1)) != 0 || static_cast<std::size_t>(A.back() - A.front()) >= K)
    throw ValidationError("phase_objective: K must be a power of two above the support span");
  GridPoly gp(A, p, K);
  const auto a = phases_to_coeffs(theta);
  PhaseObjective out;
  out.F = gp.load(a);
  out.grad = phase_gradient(a, gp.ghat(), p);
  return out;
}

MajorantEstimate estimate_constant(const MajorantProblem& prob) {
  prob.validate();
  const auto& A = prob.A;
  const std::size_t n = A.size();
  const std::size_t K = optimizer_grid(A.back() - A.front());
  const double p = prob.p;

  // start 0: all ones; 1..restarts: signs; restarts+1..2 restarts: phases
  const bool use_signs = prob.method != Method::phase;
  const bool use_phase = prob.method != Method::signs;
  std::vector<std::size_t> starts{0};
  const auto R = static_cast<std::size_t>(prob.restarts);
  for (std::size_t r = 0; r < R; ++r)
    if (use_signs) starts.push_back(1 + r);
  for (std::size_t r = 0; r < R; ++r)
    if (use_phase) starts.push_back(1 + R + r);

  std::vector<StartResult> results(starts.size());
  parallel_chunks(starts.size(), [&](std::size_t k) {
    const std::size_t id = starts[k];
    GridPoly gp(A, p, K);
    std::mt19937_64 rng(derive_seed(prob.seed, id));
    if (id == 0) {
      const std::vector<cplx> ones(n, cplx(1.0, 0.0));
      if (use_signs) {
        results[k] = sign_search(gp, ones, p, prob.budget);
      } else {
        results[k].F = gp.load(ones);
        results[k].coeffs = ones;
        results[k].phase = true;
      }
    } else if (id <= R) {
      std::vector<cplx> a(n);
      for (auto& v : a) v = (rng() >> 63) != 0 ? cplx(-1.0, 0.0) : cplx(1.0, 0.0);
      results[k] = sign_search(gp, std::move(a), p, prob.budget);
    } else {
      std::uniform_real_distribution<double> U(0.0, 2.0 * std::numbers::pi);
      std::vector<double> theta(n);
      for (auto& t : theta) t = U(rng);
      results[k] = phase_ascent(gp, std::move(theta), p, prob.budget);
    }
  });

  MajorantEstimate est;
  est.trials = static_cast<int>(starts.size());
  est.norm_tol = prob.tol;
  for (const auto& r : results) {
    est.iterations += r.iterations;
    est.budget_exhausted = est.budget_exhausted || r.exhausted;
  }

  // finalists: best grid objectives (ties to the lower start index), plus ones
  std::vector<std::size_t> order(results.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return results[x].F > results[y].F; });
  const double top = results[order.front()].F;
  std::vector<std::size_t> finalists;
  for (std::size_t k : order) {
    if (finalists.size() == kFinalists || results[k].F < top * (1.0 - 1e-6)) break;
    finalists.push_back(k);
  }

  est.ones_norm = trig::lp_norm(trig::TrigPoly::ones(A), p, prob.tol).value;
  est.value = 1.0;
  est.argmax_coeffs.assign(n, cplx(1.0, 0.0));
  est.method = use_signs ? "signs_local_search" : "phase_gradient";
  for (std::size_t k : finalists) {
    const double v = ratio_norm(A, results[k].coeffs, p, prob.tol) / est.ones_norm;
    if (v > est.value) {
      est.value = v;
      est.argmax_coeffs = results[k].coeffs;
      est.method = results[k].phase ? "phase_gradient" : "signs_local_search";
    }
  }
  return est;
}

Alphabet Alphabet::phase_grid(int k) {
  if (k < 1) throw ValidationError("phase_grid: k must be >= 1");
  return {Kind::phase_grid, k};
}

std::string Alphabet::name() const {
  switch (kind) {
    case Kind::signs: return "signs";
    case Kind::fourth_roots: return "fourth_roots";
    case Kind::phase_grid: return fmt::format("phase_grid({})", k);
  }
  return "signs";
}

MajorantEstimate brute_force_constant(const std::vector<long long>& A, double p, Alphabet alphabet, double budget,
                                      bool fix_first, double tol) {
  MajorantProblem check;
  check.A = A;
  check.p = p;
  check.tol = tol;
  check.validate();
  if (alphabet.kind != Alphabet::Kind::phase_grid && A.size() > 12)
    throw CapacityError(fmt::format("brute_force_constant: |A|={} exceeds 12 for {}", A.size(), alphabet.name()));
  const int k = alphabet.k;
  std::vector<cplx> letters(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    if (4 % k == 0) {
      static const cplx quarter[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
      letters[static_cast<std::size_t>(j)] = quarter[(4 / k) * j];
    } else {
      letters[static_cast<std::size_t>(j)] = unit_phase(static_cast<double>(j) / k);
    }
  }
  const std::size_t free = A.size() - (fix_first ? 1 : 0);
  const double count = std::pow(static_cast<double>(k), static_cast<double>(free));
  if (count > budget)
    throw CapacityError(fmt::format("brute_force_constant: {}^{} patterns exceed budget {}", k, free, budget));
  const auto total = static_cast<std::size_t>(count);

  const double ones = trig::lp_norm(trig::TrigPoly::ones(A), p, tol).value;
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (total + kChunk - 1) / kChunk;
  std::vector<double> best(chunks, -1.0);
  std::vector<std::size_t> arg(chunks, 0);
  auto pattern = [&](std::size_t idx) {
    std::vector<cplx> a(A.size(), cplx(1.0, 0.0));
    for (std::size_t i = fix_first ? 1 : 0; i < A.size(); ++i) {
      a[i] = letters[idx % static_cast<std::size_t>(k)];
      idx /= static_cast<std::size_t>(k);
    }
    return a;
  };
  parallel_chunks(chunks, [&](std::size_t c) {
    const std::size_t hi = std::min(total, (c + 1) * kChunk);
    for (std::size_t idx = c * kChunk; idx < hi; ++idx) {
      const double v = ratio_norm(A, pattern(idx), p, tol) / ones;
      if (v > best[c]) {
        best[c] = v;
        arg[c] = idx;
      }
    }
  });
  MajorantEstimate est;
  est.method = "brute_force";
  est.trials = static_cast<int>(total);
  est.norm_tol = tol;
  est.ones_norm = ones;
  est.value = -1.0;
  std::size_t win = 0;
  for (std::size_t c = 0; c < chunks; ++c)
    if (best[c] > est.value) {
      est.value = best[c];
      win = arg[c];
    }
  est.argmax_coeffs = pattern(win);
  return est;
}

double hy_envelope(const std::vector<long long>& A, long long N, double p) {
  if (!(p >= 2.0)) throw ValidationError(fmt::format("hy_envelope: p={} must be >= 2", p));
  const double size = static_cast<double>(A.size());
  return std::pow(size, 1.0 - 1.0 / p) / trig::lower_bound_lowfreq(A, p, N);
}

std::vector<SweepResult> uniformity_sweep(const sparse::SetSpec& spec, double p, const std::vector<long long>& N_list,
                                          const UniformityOptions& opts, std::vector<MajorantEstimate>* estimates) {
  const double c1 = spec.h1.c(), c2 = spec.h2.c();
  const double floor_p = c2 > 1.0 ? p_threshold(c1, c2) : 2.0;
  if (!(p >= floor_p)) throw ValidationError(fmt::format("uniformity_sweep: p={} below the threshold {}", p, floor_p));
  if (N_list.empty()) return {};
  auto Ns = N_list;
  std::sort(Ns.begin(), Ns.end());
  Ns.erase(std::unique(Ns.begin(), Ns.end()), Ns.end());
  auto big = spec;
  big.N = Ns.back();
  const auto full = sparse::build_frac_set(big);

  std::vector<SweepResult> rows;
  double running = 0.0;
  std::vector<double> xs, ys;
  for (long long N : Ns) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto set = full.prefix(N);
    if (set.size() == 0) throw ValidationError(fmt::format("uniformity_sweep: B_N is empty at N={}", N));
    auto prob = MajorantProblem::from_set(set, p);
    prob.N = N;
    prob.budget = opts.budget;
    prob.restarts = opts.restarts;
    prob.method = opts.method;
    prob.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(N));
    auto est = estimate_constant(prob);
    const double env = hy_envelope(set.members, N, p);
    running = std::max(running, est.value);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    xs.push_back(static_cast<double>(N));
    ys.push_back(est.value);
    SweepResult r;
    r.experiment = "majorant";
    r.h1 = spec.h1.to_kv();
    r.h2 = spec.h2.to_kv();
    r.psi_mode = rv::to_string(spec.psi_mode);
    r.sign = sparse::to_string(spec.sign());
    r.p = p;
    r.N = N;
    r.seed = prob.seed;
    r.borderline_count = set.borderline_count;
    r.wall_ms = ms;
    r.quantity = "constant";
    r.value = est.value;
    r.bound = env;
    r.ratio = est.value / env;
    rows.push_back(r);
    r.quantity = "running_max";
    r.value = running;
    r.bound = kNaN;
    r.ratio = kNaN;
    rows.push_back(r);
    if (estimates) estimates->push_back(std::move(est));
  }
  const double slope = fit_loglog_slope(xs, ys);
  for (auto& r : rows) r.fitted_exponent = slope;
  return rows;
}

std::vector<SweepResult> thresholds(const std::vector<double>& c1s, const std::vector<double>& c2s) {
  std::vector<SweepResult> rows;
  for (double c1 : c1s)
    for (double c2 : c2s) {
      if (!(c1 >= 1.0 && c1 < 2.0 && c2 >= 1.0 && c2 < 1.2) || !threshold_admissible(c1, c2)) continue;
      SweepResult r;
      r.experiment = "thresholds";
      r.h1 = fmt::format("c={}", format_double(c1));
      r.h2 = fmt::format("c={}", format_double(c2));
      r.quantity = "p_threshold";
      r.value = p_threshold(c1, c2);
      r.bound = p_threshold_ratio_form(c1, c2);
      r.ratio = r.value / r.bound;
      rows.push_back(r);
    }
  return rows;
}

}  // namespace majorantlab::majorant

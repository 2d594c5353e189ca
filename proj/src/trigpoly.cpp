#include "majorantlab/trigpoly.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "majorantlab/compensated.hpp"
#include "majorantlab/errors.hpp"
#include "majorantlab/fft.hpp"
#include "majorantlab/parallel.hpp"

namespace majorantlab::trig {

namespace {

std::atomic<std::size_t> g_grid_cap{0};

// |z|^p from |z|^2 with the even powers done by multiplication.
inline double abs_pow(double r2, double p) {
  if (p == 2.0) return r2;
  if (p == 4.0) return r2 * r2;
  if (p == 6.0) return r2 * r2 * r2;
  if (p == 8.0) {
    const double r4 = r2 * r2;
    return r4 * r4;
  }
  return std::pow(r2, 0.5 * p);
}

void check_tol(double tol) {
  if (!(tol >= 1e-12 && tol <= 1e-2)) throw ValidationError(fmt::format("tol={} outside [1e-12, 1e-2]", tol));
}

void check_p(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ValidationError(fmt::format("p={} must be a finite number >= 1", p));
}

}  // namespace

TrigPoly TrigPoly::make(std::vector<long long> support, std::vector<cplx> coeffs) {
  TrigPoly P{std::move(support), std::move(coeffs)};
  P.validate();
  return P;
}

TrigPoly TrigPoly::ones(std::vector<long long> support) {
  std::vector<cplx> c(support.size(), cplx(1.0, 0.0));
  return make(std::move(support), std::move(c));
}

void TrigPoly::validate() const {
  if (support.size() != coeffs.size()) throw ValidationError("TrigPoly: support and coefficients differ in length");
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i] < 0) throw ValidationError("TrigPoly: negative frequency");
    if (i > 0 && support[i] <= support[i - 1]) throw ValidationError("TrigPoly: support must be strictly increasing");
    if (!std::isfinite(coeffs[i].real()) || !std::isfinite(coeffs[i].imag()))
      throw ValidationError("TrigPoly: non-finite coefficient");
  }
}

cplx TrigPoly::eval(double xi) const {
  ComplexCompensatedSum acc;
  const double x = frac(xi);
  for (std::size_t i = 0; i < support.size(); ++i) acc += coeffs[i] * unit_phase(frac_product(x, support[i]));
  return acc.value();
}

double DiscreteMeasure::total_mass() const {
  CompensatedSum s;
  for (double m : masses) s += m;
  return s.value();
}

void DiscreteMeasure::validate() const {
  if (atoms.size() != masses.size()) throw ValidationError("DiscreteMeasure: atoms and masses differ in length");
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i > 0 && atoms[i] <= atoms[i - 1]) throw ValidationError("DiscreteMeasure: atoms must be strictly increasing");
    if (!(masses[i] > 0.0) || !std::isfinite(masses[i])) throw ValidationError("DiscreteMeasure: masses must be positive");
  }
}

std::size_t grid_cap() {
  const std::size_t set = g_grid_cap.load();
  if (set != 0) return set;
  if (const char* env = std::getenv("MAJORANTLAB_GRID_CAP"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v >= 8.0) return static_cast<std::size_t>(v);
  }
  return kDefaultGridCap;
}

void set_grid_cap(std::size_t cap) { g_grid_cap.store(cap); }

QuadratureResult lp_norm(const TrigPoly& P, double p, double tol, std::size_t cap) {
  check_p(p);
  check_tol(tol);
  P.validate();
  if (cap == 0) cap = grid_cap();
  QuadratureResult res;
  if (P.support.empty()) return res;
  const long long shift = P.support.front();
  const auto D = static_cast<std::size_t>(P.support.back() - shift);
  const std::size_t K = next_pow2(8 * (D + 1));
  if (K > cap) throw CapacityError(fmt::format("lp_norm: initial grid {} exceeds the cap {}", K, cap));

  Fft fft(K, Fft::Direction::backward);
  cplx* buf = fft.data();
  CompensatedSum total;
  auto accumulate = [&] {
    double block = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      block += abs_pow(std::norm(buf[j]), p);
      if ((j & 1023) == 1023) {
        total += block;
        block = 0.0;
      }
    }
    total += block;
  };

  std::fill(buf, buf + K, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < P.size(); ++i) buf[P.support[i] - shift] = P.coeffs[i];
  fft.execute();
  accumulate();
  std::size_t G = K;
  double value = std::pow(total.value() / static_cast<double>(G), 1.0 / p);
  double prev = value;

  for (;;) {
    if (2 * G > cap) {
      throw ConvergenceError(fmt::format("lp_norm: no convergence below grid cap {} (last {}, previous {})", cap, value, prev),
                             value, prev);
    }
    const std::size_t G2 = 2 * G;
    // new points (j K + r) / G2 for odd r < G2 / K
    const std::size_t steps = G2 / K;
    for (std::size_t r = 1; r < steps; r += 2) {
      std::fill(buf, buf + K, cplx(0.0, 0.0));
      for (std::size_t i = 0; i < P.size(); ++i) {
        const auto n = static_cast<std::size_t>(P.support[i] - shift);
        const double t = static_cast<double>((n * r) % G2) / static_cast<double>(G2);
        buf[n] = P.coeffs[i] * unit_phase(t);
      }
      fft.execute();
      accumulate();
    }
    G = G2;
    prev = value;
    value = std::pow(total.value() / static_cast<double>(G), 1.0 / p);
    const double change = value == 0.0 ? std::abs(value - prev) : std::abs(value - prev) / value;
    if (change < tol) {
      res.value = value;
      res.grid_size = G;
      res.refinement_error = change;
      return res;
    }
  }
}

std::vector<cplx> sample(const TrigPoly& P, std::size_t K) {
  if (K == 0 || (K & (K - 1)) != 0) throw ValidationError("sample: K must be a power of two");
  Fft fft(K, Fft::Direction::backward);
  cplx* buf = fft.data();
  std::fill(buf, buf + K, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < P.size(); ++i) buf[static_cast<std::size_t>(P.support[i]) % K] += P.coeffs[i];
  fft.execute();
  return std::vector<cplx>(buf, buf + K);
}

double even_p_oracle(const TrigPoly& P, int p, double budget) {
  if (p != 2 && p != 4 && p != 6 && p != 8) throw ValidationError("even_p_oracle: p must be 2, 4, 6 or 8");
  P.validate();
  const int q = p / 2;
  const double work = std::pow(static_cast<double>(P.size()), q);
  if (work > budget) throw CapacityError(fmt::format("even_p_oracle: |A|^{} = {:.3g} exceeds the budget {:.3g}", q, work, budget));
  using lcplx = std::complex<long double>;
  std::vector<std::pair<long long, lcplx>> cur;
  for (std::size_t i = 0; i < P.size(); ++i) cur.emplace_back(P.support[i], lcplx(P.coeffs[i].real(), P.coeffs[i].imag()));
  for (int step = 1; step < q; ++step) {
    std::vector<std::pair<long long, lcplx>> next;
    next.reserve(cur.size() * P.size());
    for (const auto& [e, c] : cur)
      for (std::size_t i = 0; i < P.size(); ++i)
        next.emplace_back(e + P.support[i], c * lcplx(P.coeffs[i].real(), P.coeffs[i].imag()));
    std::sort(next.begin(), next.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    cur.clear();
    for (const auto& [e, c] : next) {
      if (!cur.empty() && cur.back().first == e) cur.back().second += c;
      else cur.emplace_back(e, c);
    }
  }
  long double s = 0.0L;
  for (const auto& [e, c] : cur) s += std::norm(c);
  return static_cast<double>(s);
}

double lower_bound_lowfreq(const std::vector<long long>& A, double p, long long N) {
  check_p(p);
  if (A.empty()) throw ValidationError("lower_bound_lowfreq: A must be nonempty");
  if (N < 1 || *std::max_element(A.begin(), A.end()) > N) throw ValidationError("lower_bound_lowfreq: need max(A) <= N");
  const double L = 1.0 / (100.0 * static_cast<double>(N));
  // |P(-xi)| = |P(xi)| for real coefficients, so integrate over [0, L] twice
  auto f = [&](double xi) {
    double re = 0.0, im = 0.0;
    for (long long n : A) {
      const cplx e = unit_phase(xi * static_cast<double>(n));
      re += e.real();
      im += e.imag();
    }
    return abs_pow(re * re + im * im, p);
  };
  const double half = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, L, 8, 1e-10);
  return std::pow(2.0 * half, 1.0 / p);
}

DiscreteMeasure measure_mu(const sparse::SparseSet& set) {
  if (set.psi.size() != set.members.size()) throw ValidationError("measure_mu: the set carries no psi weights");
  DiscreteMeasure m;
  m.atoms = set.members;
  m.masses.resize(set.size());
  const auto N = static_cast<double>(set.spec.N);
  for (std::size_t i = 0; i < set.size(); ++i) m.masses[i] = 1.0 / (set.psi[i] * N);
  return m;
}

DiscreteMeasure measure_nu(long long N) {
  if (N < 1) throw ValidationError("measure_nu: N must be >= 1");
  DiscreteMeasure m;
  m.atoms.resize(static_cast<std::size_t>(N));
  m.masses.assign(static_cast<std::size_t>(N), 1.0 / static_cast<double>(N));
  for (long long n = 1; n <= N; ++n) m.atoms[static_cast<std::size_t>(n - 1)] = n;
  return m;
}

cplx fourier_of_measure(const DiscreteMeasure& m, double xi) {
  const double x = frac(xi);
  ComplexCompensatedSum acc;
  for (std::size_t i = 0; i < m.atoms.size(); ++i)
    acc += m.masses[i] * (x == 0.0 ? cplx(1.0, 0.0) : unit_phase(frac_product(x, m.atoms[i])));
  return acc.value();
}

namespace {

std::size_t fold(long long atom, std::size_t K) {
  const auto k = static_cast<long long>(K);
  return static_cast<std::size_t>(((atom % k) + k) % k);
}

}  // namespace

std::vector<cplx> fourier_on_grid(const DiscreteMeasure& m, std::size_t K) {
  if (K == 0 || (K & (K - 1)) != 0) throw ValidationError("fourier_on_grid: K must be a power of two");
  Fft fft(K, Fft::Direction::backward);
  cplx* buf = fft.data();
  std::fill(buf, buf + K, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < m.atoms.size(); ++i) buf[fold(m.atoms[i], K)] += m.masses[i];
  fft.execute();
  return std::vector<cplx>(buf, buf + K);
}

double sup_fourier_difference(const DiscreteMeasure& a, const DiscreteMeasure& b, std::size_t K) {
  if (K == 0 || (K & (K - 1)) != 0) throw ValidationError("sup_fourier_difference: K must be a power of two");
  Fft fft(K, Fft::Direction::backward);
  cplx* buf = fft.data();
  std::fill(buf, buf + K, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < a.atoms.size(); ++i) buf[fold(a.atoms[i], K)] += a.masses[i];
  for (std::size_t i = 0; i < b.atoms.size(); ++i) buf[fold(b.atoms[i], K)] -= b.masses[i];
  fft.execute();
  double mx = 0.0;
  for (std::size_t j = 0; j < K; ++j) mx = std::max(mx, std::abs(buf[j]));
  return mx;
}

TrigPoly tn_poly(const std::vector<cplx>& f, const DiscreteMeasure& mu) {
  if (f.size() != mu.atoms.size()) throw ValidationError("tn_poly: f must have one value per atom");
  TrigPoly P;
  P.support = mu.atoms;
  P.coeffs.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) P.coeffs[i] = f[i] * mu.masses[i];
  return P;
}

std::vector<cplx> apply_TN(const std::vector<cplx>& f, const DiscreteMeasure& mu, std::size_t K) {
  return sample(tn_poly(f, mu), K);
}

TrigPoly ttstar_apply(const TrigPoly& f, const DiscreteMeasure& m) {
  TrigPoly out;
  std::size_t j = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    while (j < m.atoms.size() && m.atoms[j] < f.support[i]) ++j;
    if (j < m.atoms.size() && m.atoms[j] == f.support[i]) {
      out.support.push_back(f.support[i]);
      out.coeffs.push_back(f.coeffs[i] * m.masses[j]);
    }
  }
  return out;
}

double l2_mu(const std::vector<cplx>& f, const DiscreteMeasure& mu) {
  if (f.size() != mu.atoms.size()) throw ValidationError("l2_mu: f must have one value per atom");
  CompensatedSum s;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::norm(f[i]) * mu.masses[i];
  return std::sqrt(s.value());
}

double prop2_ratio(const std::vector<cplx>& f, const DiscreteMeasure& mu, long long N, double p, double tol) {
  const double num = lp_norm(tn_poly(f, mu), p, tol).value * std::pow(static_cast<double>(N), 1.0 / p);
  return num / l2_mu(f, mu);
}

std::vector<cplx> random_coefficients(std::size_t count, std::uint64_t seed, long long N, int trial) {
  std::mt19937_64 rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(N)), static_cast<std::uint64_t>(trial)));
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  std::vector<cplx> out(count);
  for (auto& z : out) {
    const double re = g(rng);
    const double im = g(rng);
    z = {re, im};
  }
  return out;
}

std::vector<SweepResult> prop2_sweep(const sparse::SetSpec& spec, const std::vector<long long>& N_list, double p,
                                     int trials, std::uint64_t seed, double tol) {
  check_p(p);
  if (trials < 0) throw ValidationError("prop2_sweep: trials must be >= 0");
  if (N_list.empty()) return {};
  auto Ns = N_list;
  std::sort(Ns.begin(), Ns.end());
  Ns.erase(std::unique(Ns.begin(), Ns.end()), Ns.end());
  auto big = spec;
  big.N = Ns.back();
  const auto t0 = std::chrono::steady_clock::now();
  const auto full = sparse::build_frac_set(big);

  std::vector<SweepResult> rows;
  auto row = [&](long long N, const std::string& quantity, double value) {
    SweepResult r;
    r.experiment = "prop2";
    r.h1 = spec.h1.to_kv();
    r.h2 = spec.h2.to_kv();
    r.psi_mode = rv::to_string(spec.psi_mode);
    r.sign = sparse::to_string(spec.sign());
    r.p = p;
    r.N = N;
    r.quantity = quantity;
    r.value = value;
    r.ratio = value;
    r.seed = seed;
    r.borderline_count = full.borderline_count;
    return r;
  };
  for (long long N : Ns) {
    const auto set = full.prefix(N);
    if (set.size() == 0) throw ValidationError(fmt::format("prop2_sweep: B_N is empty at N={}", N));
    const auto mu = measure_mu(set);
    std::vector<double> ratios(static_cast<std::size_t>(trials) + 1);
    parallel_chunks(ratios.size(), [&](std::size_t t) {
      const auto f = t == 0 ? std::vector<cplx>(set.size(), cplx(1.0, 0.0))
                            : random_coefficients(set.size(), seed, N, static_cast<int>(t));
      ratios[t] = prop2_ratio(f, mu, N, p, tol);
    });
    const double ones = ratios[0];
    const double mx = trials > 0 ? *std::max_element(ratios.begin() + 1, ratios.end()) : kNaN;
    const std::size_t K = next_pow2(8 * static_cast<std::size_t>(N + 1));
    const double sup = sup_fourier_difference(mu, measure_nu(N), K);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    for (auto r : {row(N, "prop2_ratio_max", mx), row(N, "prop2_ratio_ones", ones), row(N, "mu_nu_sup", sup)}) {
      r.wall_ms = ms;
      rows.push_back(std::move(r));
    }
  }
  for (const std::string q : {"prop2_ratio_max", "prop2_ratio_ones", "mu_nu_sup"}) {
    std::vector<double> xs, ys;
    for (const auto& r : rows)
      if (r.quantity == q) {
        xs.push_back(static_cast<double>(r.N));
        ys.push_back(r.value);
      }
    const double slope = fit_loglog_slope(xs, ys);
    for (auto& r : rows)
      if (r.quantity == q) r.fitted_exponent = slope;
  }
  return rows;
}

}  // namespace majorantlab::trig

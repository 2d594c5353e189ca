#include "majorantlab/rvfunc.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "majorantlab/errors.hpp"
#include "majorantlab/kvtext.hpp"

namespace majorantlab::rv {

namespace {

constexpr long double kEps = std::numeric_limits<long double>::epsilon();
constexpr int kMaxIteratedLog = 4;

void require_finite(long double v, const char* what, long double x) {
  if (!std::isfinite(v)) throw DomainError(fmt::format("{}: non-finite result at x={}", what, static_cast<double>(x)));
}

}  // namespace

std::string to_string(SlowKind kind) {
  switch (kind) {
    case SlowKind::log_power: return "log_power";
    case SlowKind::exp_log_power: return "exp_log_power";
    case SlowKind::iterated_log: return "iterated_log";
    case SlowKind::constant_one: return "constant_one";
  }
  return "?";
}

SlowKind slow_kind_from_string(const std::string& name) {
  if (name == "log_power") return SlowKind::log_power;
  if (name == "exp_log_power") return SlowKind::exp_log_power;
  if (name == "iterated_log") return SlowKind::iterated_log;
  if (name == "constant_one" || name == "power") return SlowKind::constant_one;
  throw ValidationError("unknown slowly varying family '" + name + "'");
}

SlowlyVaryingSpec SlowlyVaryingSpec::log_power(double B) {
  SlowlyVaryingSpec s{SlowKind::log_power, B, 0.5, 1};
  s.validate();
  return s;
}

SlowlyVaryingSpec SlowlyVaryingSpec::exp_log_power(double B, double C) {
  SlowlyVaryingSpec s{SlowKind::exp_log_power, B, C, 1};
  s.validate();
  return s;
}

SlowlyVaryingSpec SlowlyVaryingSpec::iterated_log(int m) {
  SlowlyVaryingSpec s{SlowKind::iterated_log, 1.0, 0.5, m};
  s.validate();
  return s;
}

SlowlyVaryingSpec SlowlyVaryingSpec::constant_one() { return {}; }

void SlowlyVaryingSpec::validate() const {
  switch (kind) {
    case SlowKind::log_power:
      if (!(B > 0.0) || !std::isfinite(B)) throw ValidationError("log_power: B must be positive");
      break;
    case SlowKind::exp_log_power:
      if (!(B > 0.0) || !std::isfinite(B)) throw ValidationError("exp_log_power: B must be positive");
      if (!(C > 0.0 && C < 1.0)) throw ValidationError("exp_log_power: C must lie in (0,1)");
      break;
    case SlowKind::iterated_log:
      if (m < 1 || m > kMaxIteratedLog)
        throw ValidationError(fmt::format("iterated_log: m must lie in [1,{}]", kMaxIteratedLog));
      break;
    case SlowKind::constant_one:
      break;
  }
}

bool SlowlyVaryingSpec::defined_at(long double x) const {
  if (!(x > 0.0L) || !std::isfinite(x)) return false;
  switch (kind) {
    case SlowKind::constant_one: return true;
    case SlowKind::log_power:
    case SlowKind::exp_log_power: return x > 1.0L;
    case SlowKind::iterated_log: {
      long double l = x;
      for (int j = 0; j < m; ++j) {
        if (!(l > 1.0L)) return false;
        l = std::log(l);
      }
      return l > 0.0L;
    }
  }
  return false;
}

long double SlowlyVaryingSpec::value(long double x) const { return jet(x).ell; }

namespace {

// L^b with the common integer exponents done by multiplication.
template <class T>
T pow_small(T L, double b) {
  if (b == 1.0) return L;
  if (b == 2.0) return L * L;
  if (b == 3.0) return L * L * L;
  if (b == 0.5) return std::sqrt(L);
  return std::exp(static_cast<T>(b) * std::log(L));
}

template <class T>
SlowJet jet_impl(const SlowlyVaryingSpec& s, T x, T L) {
  SlowJet j;
  switch (s.kind) {
    case SlowKind::constant_one:
      break;
    case SlowKind::log_power: {
      const T b = static_cast<T>(s.B);
      j.ell = pow_small(L, s.B);
      j.theta = b / L;
      j.dtheta = -b / (x * L * L);
      j.d2theta = b * (L + 2) / (x * x * L * L * L);
      break;
    }
    case SlowKind::exp_log_power: {
      const T b = static_cast<T>(s.B);
      const T cc = static_cast<T>(s.C);
      const T Lc = pow_small(L, s.C);
      j.ell = std::exp(b * Lc);
      j.theta = b * cc * Lc / L;
      j.dtheta = b * cc * (cc - 1) * Lc / (L * L) / x;
      j.d2theta = b * cc * (cc - 1) * ((cc - 2) * Lc / (L * L * L) - Lc / (L * L)) / (x * x);
      break;
    }
    case SlowKind::iterated_log: {
      // l_1 = log x, l_{j+1} = log l_j; P_j = l_1...l_j; s_j = sum_{i<=j} 1/P_i.
      std::array<T, kMaxIteratedLog> P{};
      std::array<T, kMaxIteratedLog> sj{};
      T l = L;
      T prod = 1;
      T acc = 0;
      for (int i = 0; i < s.m; ++i) {
        if (i > 0) l = std::log(l);
        prod *= l;
        P[i] = prod;
        acc += 1 / prod;
        sj[i] = acc;
      }
      const T theta = 1 / P[s.m - 1];
      const T sm = sj[s.m - 1];
      T ds = 0;
      for (int i = 0; i < s.m; ++i) ds += sj[i] / P[i];
      ds = -ds / x;
      const T dtheta = -theta * sm / x;
      j.ell = l;
      j.theta = theta;
      j.dtheta = dtheta;
      j.d2theta = -(dtheta * sm + theta * ds) / x + theta * sm / (x * x);
      break;
    }
  }
  return j;
}

template <class T>
T pow_c_impl(double c, T x, T log_x) {
  if (c == 1.0) return x;
  if (c == 1.5) return x * std::sqrt(x);  // exact at perfect squares
  if (c == 0.5) return std::sqrt(x);
  return std::exp(static_cast<T>(c) * log_x);
}

}  // namespace

SlowJet SlowlyVaryingSpec::jet(long double x) const { return jet_impl<long double>(*this, x, std::log(x)); }

// ---------------------------------------------------------------------------

namespace {

// h' > 0, h'' >= 0, l > 0 on a log-spaced grid of [x0, x0 * 2^60].
bool shape_ok_from(const RegVaryFn& f, long double x0) {
  if (!f.ell().defined_at(x0)) return false;
  constexpr int kGrid = 121;
  for (int i = 0; i < kGrid; ++i) {
    const long double x = x0 * std::exp2(0.5L * i);
    if (!f.ell().defined_at(x)) return false;
    long double d1 = 0.0L, d2 = 0.0L;
    try {
      d1 = f.eval(x, 1);
      d2 = f.eval(x, 2);
    } catch (const DomainError&) {
      return false;
    }
    if (!(d1 > 0.0L) || d2 < 0.0L) return false;
  }
  return f.eval(x0, 0) >= 1.0L;
}

}  // namespace

RegVaryFn RegVaryFn::make(double c, SlowlyVaryingSpec ell) {
  if (!(c > 0.0 && c < 2.0)) throw ValidationError(fmt::format("exponent c={} outside (0,2)", c));
  ell.validate();
  if (c == 1.0 && !ell.in_L0()) throw ValidationError("c = 1 requires a slowly varying factor tending to infinity");
  for (int k = 0; k <= 60; ++k) {
    const long double x0 = std::exp2(static_cast<long double>(k));
    const RegVaryFn f(c, ell, x0);
    if (shape_ok_from(f, x0)) return f;
  }
  throw ValidationError("no admissible x0 found for " + RegVaryFn(c, ell, 1.0L).to_kv());
}

RegVaryFn RegVaryFn::make(double c, SlowlyVaryingSpec ell, long double x0) {
  if (!(c > 0.0 && c < 2.0)) throw ValidationError(fmt::format("exponent c={} outside (0,2)", c));
  ell.validate();
  if (c == 1.0 && !ell.in_L0()) throw ValidationError("c = 1 requires a slowly varying factor tending to infinity");
  const RegVaryFn f(c, ell, x0);
  if (!shape_ok_from(f, x0))
    throw ValidationError(fmt::format("h is not increasing and convex with h >= 1 from x0={}", static_cast<double>(x0)));
  return f;
}

RegVaryFn RegVaryFn::make_unchecked(double c, SlowlyVaryingSpec ell, long double x0) {
  return RegVaryFn(c, ell, x0);
}

long double RegVaryFn::pow_c(long double x, long double log_x) const { return pow_c_impl<long double>(c_, x, log_x); }

long double RegVaryFn::eval(long double x, int order) const {
  if (order < 0 || order > 3) throw ValidationError("eval_h: order must lie in [0,3]");
  if (!(x >= x0_)) throw DomainError(fmt::format("eval_h: x={} below x0={}", static_cast<double>(x), static_cast<double>(x0_)));
  const long double L = std::log(x);
  const SlowJet j = jet_impl<long double>(ell_, x, L);
  const long double h = pow_c(x, L) * j.ell;
  require_finite(h, "eval_h", x);
  if (order == 0) return h;
  const long double cc = c_;
  const long double k = (cc + j.theta) / x;
  long double out = 0.0L;
  if (order == 1) {
    out = h * k;
  } else {
    const long double dk = j.dtheta / x - (cc + j.theta) / (x * x);
    if (order == 2) {
      out = h * (k * k + dk);
    } else {
      const long double d2k = j.d2theta / x - 2.0L * j.dtheta / (x * x) + 2.0L * (cc + j.theta) / (x * x * x);
      out = h * (k * k * k + 3.0L * k * dk + d2k);
    }
  }
  require_finite(out, "eval_h", x);
  return out;
}

void RegVaryFn::eval01(long double x, long double& h, long double& dh) const {
  const long double L = std::log(x);
  const SlowJet j = jet_impl<long double>(ell_, x, L);
  h = pow_c(x, L) * j.ell;
  dh = h * (static_cast<long double>(c_) + j.theta) / x;
}

void RegVaryFn::eval01_fast(double x, double& h, double& dh) const {
  const double L = std::log(x);
  const SlowJet j = jet_impl<double>(ell_, x, L);
  h = pow_c_impl<double>(c_, x, L) * static_cast<double>(j.ell);
  dh = h * (c_ + static_cast<double>(j.theta)) / x;
}

std::string RegVaryFn::to_kv() const {
  std::string s = "family=" + to_string(ell_.kind);
  switch (ell_.kind) {
    case SlowKind::log_power: s += fmt::format(", B={}", ell_.B); break;
    case SlowKind::exp_log_power: s += fmt::format(", B={}, C={}", ell_.B, ell_.C); break;
    case SlowKind::iterated_log: s += fmt::format(", m={}", ell_.m); break;
    case SlowKind::constant_one: break;
  }
  s += fmt::format(", c={}, x0={}", c_, static_cast<double>(x0_));
  return s;
}

RegVaryFn RegVaryFn::from_kv(const std::map<std::string, std::string>& kv) {
  SlowlyVaryingSpec ell;
  ell.kind = slow_kind_from_string(kv_string(kv, "family", "log_power"));
  ell.B = kv_double(kv, "B", 1.0);
  ell.C = kv_double(kv, "C", 0.5);
  ell.m = static_cast<int>(kv_int(kv, "m", 1));
  const double c = kv_double(kv, "c", 1.0);
  if (kv.count("x0")) return make(c, ell, kv_double(kv, "x0"));
  return make(c, ell);
}

RegVaryFn RegVaryFn::from_kv(const std::string& text) { return from_kv(parse_kv(text)); }

// ---------------------------------------------------------------------------

InverseFn::InverseFn(RegVaryFn source) : source_(std::move(source)), y0_(source_.eval(source_.x0(), 0)) {}

long double InverseFn::initial_guess(long double y) const {
  // Double-precision phase: one fixed-point step x = (y / l(x))^(1/c), then Newton.
  const double yd = static_cast<double>(y);
  const double x0 = static_cast<double>(source_.x0());
  const double inv_c = 1.0 / source_.c();
  double x = std::pow(yd, inv_c);
  {
    double h = 0.0, dh = 0.0;
    source_.eval01_fast(x, h, dh);
    const double next = x * std::pow(yd / h, inv_c);
    if (std::isfinite(next)) x = next;
  }
  if (!(x >= x0) || !std::isfinite(x)) x = x0;
  for (int i = 0; i < 12; ++i) {
    double h = 0.0, dh = 0.0;
    source_.eval01_fast(x, h, dh);
    const double xn = x - (h - yd) / dh;
    if (!(xn >= x0) || !std::isfinite(xn)) break;
    const bool done = std::abs(xn - x) <= 1e-15 * x;
    x = xn;
    if (done) break;
  }
  return x;
}

long double InverseFn::invert(long double y) const {
  if (!(y >= y0_)) throw DomainError(fmt::format("invert: y={} below y0={}", static_cast<double>(y), static_cast<double>(y0_)));
  if (y == y0_) return source_.x0();
  const long double tol = std::max(1e-14L * y, 1e-14L);
  constexpr long double kInf = std::numeric_limits<long double>::infinity();

  long double lo = source_.x0();
  long double hi = kInf;
  long double x = initial_guess(y);
  bool converged = false;
  long double h = 0.0L, dh = 0.0L;
  for (int it = 0; it < 60; ++it) {
    source_.eval01(x, h, dh);
    const long double r = h - y;
    if (r == 0.0L) {
      converged = true;
      break;
    }
    if (r > 0.0L) hi = std::min(hi, x);
    else lo = std::max(lo, x);
    long double xn = x - r / dh;
    if (!(xn > lo && xn < hi)) xn = std::isfinite(hi) ? 0.5L * (lo + hi) : 2.0L * x;
    // h''/h' is of order 1/x on the supported families, so a step below
    // 1e-12 x leaves a quadratic error far under one ulp.
    if (std::abs(xn - x) <= 1e-12L * std::abs(x) && std::abs(r) <= tol) {
      x = xn;
      converged = true;
      break;
    }
    x = xn;
  }
  if (!converged) {
    lo = source_.x0();
    hi = std::max(lo * 2.0L, y);
    for (int i = 0; i < 200 && source_.eval(hi, 0) < y; ++i) hi *= 2.0L;
    for (int i = 0; i < 200; ++i) {
      const long double mid = 0.5L * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (source_.eval(mid, 0) < y) lo = mid;
      else hi = mid;
    }
    x = 0.5L * (lo + hi);
    if (!(std::abs(source_.eval(x, 0) - y) <= tol))
      throw ConvergenceError(fmt::format("invert: no convergence at y={}", static_cast<double>(y)));
  }
  // Exact integer roots (e.g. phi(k^3) = k^2 for h = x^1.5) are returned exactly.
  const long double r = std::nearbyint(x);
  if (r != x && r >= source_.x0() && std::abs(r - x) <= 16.0L * kEps * std::abs(x)) {
    long double hr = 0.0L, dr = 0.0L;
    source_.eval01(r, hr, dr);
    if (hr == y) return r;
  }
  return x;
}

long double InverseFn::deriv(long double y, int order) const {
  if (order < 1 || order > 3) throw ValidationError("phi_deriv: order must lie in [1,3]");
  const long double x = invert(y);
  const long double d1 = source_.eval(x, 1);
  if (order == 1) return 1.0L / d1;
  const long double d2 = source_.eval(x, 2);
  if (order == 2) return -d2 / (d1 * d1 * d1);
  const long double d3 = source_.eval(x, 3);
  return (3.0L * d2 * d2 - d1 * d3) / (d1 * d1 * d1 * d1 * d1);
}

long double InverseFn::sigma1_estimate(long double x) const {
  return x * x * std::abs(deriv(x, 2)) / invert(x);
}

// ---------------------------------------------------------------------------

std::string to_string(PsiMode mode) {
  switch (mode) {
    case PsiMode::difference: return "difference";
    case PsiMode::derivative: return "derivative";
    case PsiMode::constant: return "constant";
  }
  return "?";
}

PsiMode psi_mode_from_string(const std::string& name) {
  if (name == "difference") return PsiMode::difference;
  if (name == "derivative") return PsiMode::derivative;
  throw ValidationError("unknown psi mode '" + name + "' (difference|derivative)");
}

PsiFn PsiFn::make(InverseFn phi2, PsiMode mode) {
  if (mode == PsiMode::constant) throw ValidationError("use PsiFn::constant for synthetic windows");
  PsiFn p(std::move(phi2), mode, 0, 0.0);
  const long long start = std::max<long long>(1, static_cast<long long>(std::ceil(p.phi2_.y0())));
  auto ok = [&](long long n) { return p.eval_unchecked(static_cast<long double>(n), 0) <= 0.5L; };
  if (ok(start)) {
    p.n_min_ = start;
    return p;
  }
  long long lo = start;
  long long hi = std::max<long long>(2 * start, start + 1);
  while (!ok(hi)) {
    lo = hi;
    if (hi > (1LL << 60)) throw ValidationError("psi never drops below 1/2");
    hi *= 2;
  }
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    if (ok(mid)) hi = mid;
    else lo = mid;
  }
  p.n_min_ = hi;
  return p;
}

PsiFn PsiFn::constant(double value, InverseFn phi2, long long n_min) {
  if (!(value >= 0.0 && value <= 1.0)) throw ValidationError("constant psi must lie in [0,1]");
  return PsiFn(std::move(phi2), PsiMode::constant, n_min, value);
}

long double PsiFn::eval_unchecked(long double x, int order) const {
  if (order < 0 || order > 2) throw ValidationError("eval_psi: order must lie in [0,2]");
  switch (mode_) {
    case PsiMode::constant:
      return order == 0 ? static_cast<long double>(constant_) : 0.0L;
    case PsiMode::derivative:
      return phi2_.deriv(x, order + 1);
    case PsiMode::difference:
      if (order == 0) return phi2_.invert(x + 1.0L) - phi2_.invert(x);
      return phi2_.deriv(x + 1.0L, order) - phi2_.deriv(x, order);
  }
  return 0.0L;
}

long double PsiFn::eval(long double x, int order) const {
  if (!(x >= static_cast<long double>(n_min_)))
    throw DomainError(fmt::format("eval_psi: x={} below n_min={}", static_cast<double>(x), n_min_));
  return eval_unchecked(x, order);
}

}  // namespace majorantlab::rv

#pragma once

#include <map>
#include <string>

#include "majorantlab/compensated.hpp"

namespace majorantlab::rv {

enum class SlowKind { log_power, exp_log_power, iterated_log, constant_one };

std::string to_string(SlowKind kind);
SlowKind slow_kind_from_string(const std::string& name);

// Value of l and its log-derivative kernel theta(x) = x l'(x) / l(x) with the
// first two derivatives of theta.
struct SlowJet {
  long double ell = 1.0L;
  long double theta = 0.0L;
  long double dtheta = 0.0L;
  long double d2theta = 0.0L;
};

// Closed-form slowly varying factor l(x) = exp(int theta(t)/t dt).
//   log_power:      (log x)^B,            theta = B / log x
//   exp_log_power:  exp(B (log x)^C),     theta = B C (log x)^(C-1)
//   iterated_log:   log log ... log x (m times), theta = 1 / (l_1 ... l_m)
//   constant_one:   1,                    theta = 0
struct SlowlyVaryingSpec {
  SlowKind kind = SlowKind::constant_one;
  double B = 1.0;
  double C = 0.5;
  int m = 1;

  static SlowlyVaryingSpec log_power(double B);
  static SlowlyVaryingSpec exp_log_power(double B, double C);
  static SlowlyVaryingSpec iterated_log(int m);
  static SlowlyVaryingSpec constant_one();

  // Throws ValidationError on out-of-range parameters.
  void validate() const;

  // True when l is defined and strictly positive at x.
  bool defined_at(long double x) const;

  // Kinds that tend to infinity with positive decreasing theta.
  bool in_L0() const { return kind != SlowKind::constant_one; }

  long double value(long double x) const;
  SlowJet jet(long double x) const;

  bool operator==(const SlowlyVaryingSpec&) const = default;
};

// h(x) = x^c l(x) on [x0, inf), increasing and convex there.
class RegVaryFn {
 public:
  // Placeholder h(x) = x on [1, inf); not a member of any supported family.
  RegVaryFn() : RegVaryFn(1.0, SlowlyVaryingSpec{}, 1.0L) {}

  // Validates c in (0, 2), L0 membership when c == 1, and computes x0 as the
  // smallest power of two at which l > 0, h >= 1, h' > 0 and h'' >= 0 hold on
  // a log-spaced test grid. An explicit x0 is checked the same way.
  static RegVaryFn make(double c, SlowlyVaryingSpec ell);
  static RegVaryFn make(double c, SlowlyVaryingSpec ell, long double x0);

  // No admissibility checks; for synthetic calibration functions such as
  // h(x) = x that sit on the boundary of the supported families.
  static RegVaryFn make_unchecked(double c, SlowlyVaryingSpec ell, long double x0);

  double c() const { return c_; }
  const SlowlyVaryingSpec& ell() const { return ell_; }
  long double x0() const { return x0_; }

  // order-th derivative, order in [0, 3]. DomainError if x < x0, overflow
  // reported as DomainError as well.
  long double eval(long double x, int order = 0) const;

  // h and h' together (no domain check); hot path of the inversion.
  void eval01(long double x, long double& h, long double& dh) const;
  // Double-precision variant used to seed the inversion.
  void eval01_fast(double x, double& h, double& dh) const;

  // "family=log_power, B=1, c=1, x0=2"
  std::string to_kv() const;
  static RegVaryFn from_kv(const std::map<std::string, std::string>& kv);
  static RegVaryFn from_kv(const std::string& text);

  bool operator==(const RegVaryFn& o) const {
    return c_ == o.c_ && ell_ == o.ell_ && x0_ == o.x0_;
  }

 private:
  RegVaryFn(double c, SlowlyVaryingSpec ell, long double x0) : c_(c), ell_(ell), x0_(x0) {}
  long double pow_c(long double x, long double log_x) const;

  double c_;
  SlowlyVaryingSpec ell_;
  long double x0_;
};

// phi = h^{-1} on [y0, inf), y0 = h(x0).
class InverseFn {
 public:
  explicit InverseFn(RegVaryFn source);

  const RegVaryFn& source() const { return source_; }
  long double y0() const { return y0_; }
  double gamma() const { return 1.0 / source_.c(); }

  // Safeguarded Newton with bisection fallback. Deterministic in y alone.
  long double invert(long double y) const;
  // Same root as a head-tail pair; the fractional part is taken on the pair.
  DoubleDouble invert_pair(long double y) const { return DoubleDouble::from(invert(y)); }

  // phi^(order)(y), order in [1, 3], through the inverse function theorem.
  long double deriv(long double y, int order) const;

  // x^2 |phi''(x)| / phi(x): the empirical sigma_1.
  long double sigma1_estimate(long double x) const;

 private:
  long double initial_guess(long double y) const;

  RegVaryFn source_;
  long double y0_;
};

enum class PsiMode { difference, derivative, constant };

std::string to_string(PsiMode mode);
PsiMode psi_mode_from_string(const std::string& name);

// Membership window psi. difference: phi2(x+1) - phi2(x); derivative: phi2'(x);
// constant: a fixed synthetic value used for calibration only.
class PsiFn {
 public:
  // n_min is the smallest integer n >= ceil(y0) with psi(n) <= 1/2 (doubling
  // search followed by integer bisection; psi is decreasing for c2 >= 1).
  static PsiFn make(InverseFn phi2, PsiMode mode);
  static PsiFn constant(double value, InverseFn phi2, long long n_min);

  PsiMode mode() const { return mode_; }
  const InverseFn& phi2() const { return phi2_; }
  long long n_min() const { return n_min_; }
  double constant_value() const { return constant_; }

  // order in [0, 2]. DomainError if x < n_min.
  long double eval(long double x, int order = 0) const;
  // No domain check against n_min (only against y0); used by the n_min search.
  long double eval_unchecked(long double x, int order = 0) const;

 private:
  PsiFn(InverseFn phi2, PsiMode mode, long long n_min, double constant)
      : phi2_(std::move(phi2)), mode_(mode), n_min_(n_min), constant_(constant) {}

  InverseFn phi2_;
  PsiMode mode_;
  long long n_min_;
  double constant_;
};

// Free-function surface mirroring the operations of the module.
inline long double eval_h(const RegVaryFn& f, long double x, int order) { return f.eval(x, order); }
inline long double invert(const InverseFn& f, long double y) { return f.invert(y); }
inline long double phi_deriv(const InverseFn& f, long double y, int order) { return f.deriv(y, order); }
inline long double eval_psi(const PsiFn& p, long double x, int order) { return p.eval(x, order); }
inline long double sigma1_estimate(const InverseFn& f, long double x) { return f.sigma1_estimate(x); }

}  // namespace majorantlab::rv

#pragma once

#include <cmath>
#include <complex>

namespace majorantlab {

// Error-free transformations (Knuth two-sum, Dekker fast-two-sum).
inline double two_sum(double a, double b, double& err) {
  const double s = a + b;
  const double bb = s - a;
  err = (a - (s - bb)) + (b - bb);
  return s;
}

inline double fast_two_sum(double a, double b, double& err) {
  const double s = a + b;
  err = b - (s - a);
  return s;
}

// Head-tail pair representing hi + lo with |lo| <= ulp(hi)/2.
struct DoubleDouble {
  double hi = 0.0;
  double lo = 0.0;

  static DoubleDouble from(long double x) {
    DoubleDouble r;
    r.hi = static_cast<double>(x);
    r.lo = static_cast<double>(x - static_cast<long double>(r.hi));
    return r;
  }

  long double to_long_double() const {
    return static_cast<long double>(hi) + static_cast<long double>(lo);
  }

  DoubleDouble operator-() const { return {-hi, -lo}; }
};

// Fractional part {x} = x - floor(x) in [0, 1), taken on the pair so that the
// integer part of hi does not eat the bits carried by lo.
inline double frac(const DoubleDouble& x) {
  const double fl = std::floor(x.hi);
  double e = 0.0;
  const double s = two_sum(x.hi - fl, x.lo, e);  // x.hi - fl is exact
  double t = s + e;
  t -= std::floor(t);
  if (t >= 1.0) t = 0.0;
  return t;
}

inline double frac(double x) {
  double t = x - std::floor(x);
  return t >= 1.0 ? 0.0 : t;
}

// Fractional part of xi*n without the rounding of the product.
inline double frac_product(double xi, long long n) {
  const double nd = static_cast<double>(n);
  const double p = xi * nd;
  const double err = std::fma(xi, nd, -p);
  const double fl = std::floor(p);
  double t = (p - fl) + err;
  t -= std::floor(t);
  return t >= 1.0 ? 0.0 : t;
}

// e(t) = exp(2 pi i t) for t already reduced to a small range.
inline std::complex<double> unit_phase(double t) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  const double a = kTwoPi * t;
  return {std::cos(a), std::sin(a)};
}

// Neumaier-style compensated accumulator.
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(double v) : sum_(v) {}

  CompensatedSum& operator+=(double v) {
    double e = 0.0;
    sum_ = two_sum(sum_, v, e);
    err_ += e;
    return *this;
  }
  CompensatedSum& operator+=(const CompensatedSum& o) {
    *this += o.sum_;
    err_ += o.err_;
    return *this;
  }
  double value() const { return sum_ + err_; }

 private:
  double sum_ = 0.0;
  double err_ = 0.0;
};

class ComplexCompensatedSum {
 public:
  ComplexCompensatedSum& operator+=(std::complex<double> v) {
    re_ += v.real();
    im_ += v.imag();
    return *this;
  }
  ComplexCompensatedSum& operator+=(const ComplexCompensatedSum& o) {
    re_ += o.re_;
    im_ += o.im_;
    return *this;
  }
  std::complex<double> value() const { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum re_;
  CompensatedSum im_;
};

}  // namespace majorantlab

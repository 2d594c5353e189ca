#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "majorantlab/sparseset.hpp"
#include "majorantlab/sweep.hpp"

namespace majorantlab::trig {

using cplx = std::complex<double>;

// P(xi) = sum_k coeffs[k] e(support[k] xi). An empty support is the zero
// polynomial.
struct TrigPoly {
  std::vector<long long> support;  // strictly increasing, >= 0
  std::vector<cplx> coeffs;

  // Throws ValidationError unless the invariants hold.
  static TrigPoly make(std::vector<long long> support, std::vector<cplx> coeffs);
  static TrigPoly ones(std::vector<long long> support);

  long long degree() const { return support.empty() ? 0 : support.back(); }
  std::size_t size() const { return support.size(); }
  cplx eval(double xi) const;
  void validate() const;
};

struct DiscreteMeasure {
  std::vector<long long> atoms;  // strictly increasing
  std::vector<double> masses;    // positive

  double total_mass() const;
  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  std::size_t grid_size = 0;
  double refinement_error = 0.0;  // relative change at the last doubling
};

inline constexpr std::size_t kDefaultGridCap = std::size_t{1} << 26;
inline constexpr double kDefaultTol = 1e-8;

// Cap on the quadrature grid: set_grid_cap if called, else the environment
// variable MAJORANTLAB_GRID_CAP, else kDefaultGridCap.
std::size_t grid_cap();
void set_grid_cap(std::size_t cap);

// (int_0^1 |P|^p)^{1/p} by the periodic rectangle rule on K points, K from the
// smallest power of two >= 8(D+1) doubling until the relative change is below
// tol. Only new points are evaluated at each doubling. ConvergenceError when
// the cap is reached first.
QuadratureResult lp_norm(const TrigPoly& P, double p, double tol = kDefaultTol, std::size_t cap = 0);

// Samples P(j/K), j < K, for any power of two K (support folded mod K).
std::vector<cplx> sample(const TrigPoly& P, std::size_t K);

// ||P||_p^p for even p in {2, 4, 6, 8} from the coefficients of P^{p/2}.
// CapacityError if |support|^{p/2} exceeds the budget.
double even_p_oracle(const TrigPoly& P, int p, double budget = 1e8);

// (int_{|xi| <= 1/(100 N)} |sum_{n in A} e(n xi)|^p)^{1/p} by adaptive
// Gauss-Kronrod quadrature.
double lower_bound_lowfreq(const std::vector<long long>& A, double p, long long N);

// mu_N: atoms B_N with masses psi(n)^{-1} / N.
DiscreteMeasure measure_mu(const sparse::SparseSet& set);
// nu_N: atoms 1..N with masses 1/N.
DiscreteMeasure measure_nu(long long N);

cplx fourier_of_measure(const DiscreteMeasure& m, double xi);
// F(m)(j/K) for j < K via one FFT.
std::vector<cplx> fourier_on_grid(const DiscreteMeasure& m, std::size_t K);
// max_j |F(a)(j/K) - F(b)(j/K)|
double sup_fourier_difference(const DiscreteMeasure& a, const DiscreteMeasure& b, std::size_t K);

// T_N f as a polynomial: coefficients f(n) mu(n) on the atoms. f is aligned
// with mu.atoms.
TrigPoly tn_poly(const std::vector<cplx>& f, const DiscreteMeasure& mu);
// T_N f sampled on the K-point grid.
std::vector<cplx> apply_TN(const std::vector<cplx>& f, const DiscreteMeasure& mu, std::size_t K);
// Coefficients fhat(n) m(n) on support ∩ atoms.
TrigPoly ttstar_apply(const TrigPoly& f, const DiscreteMeasure& m);

// ||f||_{L^2(mu)} = (sum |f(n)|^2 mu(n))^{1/2}
double l2_mu(const std::vector<cplx>& f, const DiscreteMeasure& mu);
// ||T_N f||_p N^{1/p} / ||f||_{L^2(mu_N)}
double prop2_ratio(const std::vector<cplx>& f, const DiscreteMeasure& mu, long long N, double p, double tol = kDefaultTol);

// Complex standard normal coefficients, one stream per (seed, N, trial).
std::vector<cplx> random_coefficients(std::size_t count, std::uint64_t seed, long long N, int trial);

// Per N: "prop2_ratio_max" (max over trials of random f), "prop2_ratio_ones"
// (f = 1) and "mu_nu_sup" (sup over the grid of |F(mu_N - nu_N)|). Each
// quantity carries its fitted log-log slope in N.
std::vector<SweepResult> prop2_sweep(const sparse::SetSpec& spec, const std::vector<long long>& N_list, double p,
                                     int trials, std::uint64_t seed, double tol = kDefaultTol);

}  // namespace majorantlab::trig

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "majorantlab/rvfunc.hpp"
#include "majorantlab/sparseset.hpp"
#include "majorantlab/sweep.hpp"

namespace majorantlab::expsum {

using cplx = std::complex<double>;

enum class Weight { unit, psi, psi_inverse };

std::string to_string(Weight w);

struct ExpSumRequest {
  const sparse::SparseSet* set = nullptr;
  double xi = 0.0;
  Weight weight = Weight::unit;
};

// Sum over the members of e(xi n) times the requested weight, compensated.
cplx exp_sum(const ExpSumRequest& req);
cplx exp_sum(const sparse::SparseSet& set, double xi, Weight weight = Weight::unit);

// sum_{n=1}^N e(xi n) in closed form (N at xi = 0).
cplx dirichlet_sum(long long N, double xi);

// psi weight: sum_{n=n_min}^N psi(n) e(xi n); unit weight: dirichlet_sum.
cplx model_sum(const sparse::FracContext& ctx, long long N, double xi, Weight weight);
cplx model_sum(const rv::PsiFn& psi, long long N, double xi, Weight weight);

// |exp_sum(unit) - model_sum(psi)| for the set's own N.
double error_term(const sparse::SparseSet& set, double xi);
double error_term(const sparse::SparseSet& set, const sparse::FracContext& ctx, double xi);

// |sum_{B_N} psi^{-1} e(xi n) - sum_{n=1}^N e(xi n)|
double weighted_inverse_vs_dirichlet(const sparse::SparseSet& set, double xi);

// Distance to the nearest integer; a tie at 1/2 gives 1/2.
double dist_to_int(double x);

// {x} - 1/2 and its symmetric partial Fourier sum -sum_{m<=M} sin(2 pi m x) / (pi m).
double sawtooth(double x);
double sawtooth_truncated(double x, int M);

struct SawtoothExpansion {
  int M = 1;
  // max over the grid of |sawtooth - truncated| / min{1, 1/(M ||x||)}
  double fitted_K = 0.0;
};

// Fits K on `grid` equispaced points of (0, 1) that avoid integers.
SawtoothExpansion fit_sawtooth(int M, int grid = 4096);

// sum_{X <= n <= X2} e(xi n + m (phi1(n) - l psi(n))), direct evaluation.
cplx vdc_sum(const sparse::FracContext& ctx, long long m, int l, double xi, long long X, long long X2);

enum class SigmaMode { automatic, one, estimate };

// m^{1/2} X (sigma(X) phi1(X))^{-1/2}; automatic uses the estimated sigma when
// c1 == 1 and 1 otherwise.
double vdc_bound(long long m, long long X, const rv::InverseFn& phi1, SigmaMode mode = SigmaMode::automatic);
// |m|^{1/2} N log N (sigma(N) phi1(N))^{-1/2}
double lemma1_bound(long long m, long long N, const rv::InverseFn& phi1);

struct IDecomposition {
  long long N = 0;
  long long M = 0;
  cplx I1;
  double I2 = 0.0;  // sum min{1, 1/(M ||t - psi||)}
  double I3 = 0.0;  // sum min{1, 1/(M ||t||)}
  cplx set_sum;     // exp_sum(unit)
  cplx model;       // model_sum(psi)
  double error() const { return std::abs(set_sum - model); }
};

// Default work budget (index-frequency pairs) for decompose_I.
inline constexpr double kDefaultBudget = 4e9;

// I1 = sum_n e(xi n) (Phi_M(t_n - psi_n) - Phi_M(t_n)) with t_n = {±phi1(n)},
// and the sums I2, I3, over n in [n_min, N]. CapacityError if M N > budget.
IDecomposition decompose_I(const sparse::FracContext& ctx, sparse::Sign sign, double xi, long long N, long long M,
                           double budget = kDefaultBudget);

// 90% of the admissible margin: 0.9 (1 - 3(1 - 1/c2) - (1 - 1/c1)) / 6.
double truncation_delta(double c1, double c2);
// ceil(N^{1+delta} log N / phi2(N))
long long truncation_M(long long N, double delta, const rv::InverseFn& phi2);

// Rows of error_term for every (N, xi) from one pass to max N. value is the
// error, bound phi2(N), ratio their quotient; fitted_exponent is the slope of
// ratio against N for that xi.
std::vector<SweepResult> decay_sweep(const sparse::SetSpec& spec, const std::vector<long long>& N_list,
                                     const std::vector<double>& xis);

// Weighted discrepancy for every (N, xi); bound N, fitted_exponent is the
// growth exponent of the value in N.
std::vector<SweepResult> lemma2_sweep(const sparse::SetSpec& spec, const std::vector<long long>& N_list,
                                      const std::vector<double>& xis);

// |vdc_sum(m, l, xi, n_min, N)| / lemma1_bound for m in [1, m_max], l in
// {0, 1}, every xi and every N (each N >= n_min). One pass to max N.
// quantity is "vdc_l0" or "vdc_l1".
std::vector<SweepResult> lemma1_sweep(const sparse::FracContext& ctx, int m_max, const std::vector<long long>& N_list,
                                      const std::vector<double>& xis);

}  // namespace majorantlab::expsum

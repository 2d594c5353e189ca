#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "majorantlab/sparseset.hpp"
#include "majorantlab/sweep.hpp"
#include "majorantlab/trigpoly.hpp"

namespace majorantlab::majorant {

using cplx = std::complex<double>;

// 2 + (12 - 12/c2) / (1/c1 + 3/c2 - 3). ValidationError unless c1 in [1, 2),
// c2 in [1, 6/5) and 1 < 1/(3 c1) + 1/c2.
double p_threshold(double c1, double c2);
// (2/c1 - 6/c2 + 6) / (1/c1 + 3/c2 - 3), same domain.
double p_threshold_ratio_form(double c1, double c2);
bool threshold_admissible(double c1, double c2);

enum class Method { signs, phase, automatic };
std::string to_string(Method m);
Method method_from_string(const std::string& name);

inline constexpr int kDefaultRestarts = 16;
inline constexpr int kDefaultIterations = 200;

struct MajorantProblem {
  std::vector<long long> A;  // strictly increasing, >= 0
  long long N = 0;           // max(A) <= N; 0 means max(A)
  double p = 3.0;
  int budget = kDefaultIterations;  // ascent iterations per start
  int restarts = kDefaultRestarts;  // random starts per family (signs, phases)
  std::uint64_t seed = 0;
  Method method = Method::automatic;
  double tol = trig::kDefaultTol;   // lp_norm tolerance for the reported ratio

  static MajorantProblem from_set(const sparse::SparseSet& set, double p);
  void validate() const;
};

struct MajorantEstimate {
  double value = 1.0;  // lower estimate of the sup: ratio at argmax_coeffs
  std::vector<cplx> argmax_coeffs;
  std::string method;  // signs_local_search, phase_gradient or brute_force
  int trials = 0;      // starts (or enumerated patterns)
  double norm_tol = trig::kDefaultTol;
  bool budget_exhausted = false;  // some start hit the iteration budget
  long long iterations = 0;       // over all starts
  double ones_norm = 0.0;         // ||sum_{n in A} e(n .)||_p
};

// Best of the all-ones start, greedy single-flip sign search from random sign
// patterns and gradient ascent from random phases (signs: sign starts only,
// phase: phase starts only). Starts run in parallel with seeds derived from
// (seed, start index); the leading candidates are re-evaluated with lp_norm.
MajorantEstimate estimate_constant(const MajorantProblem& prob);

// F(theta) = int |sum a_n e(n xi)|^p on the K-point grid, a_n = exp(i theta_n),
// and dF/dtheta_n = -p int |P|^{p-2} Im(a_n e(n xi) conj P).
struct PhaseObjective {
  double F = 0.0;
  std::vector<double> grad;
};
PhaseObjective phase_objective(const std::vector<long long>& A, const std::vector<double>& theta, double p,
                               std::size_t K);
// Grid size used by the optimizer for support span D.
std::size_t optimizer_grid(long long D);

struct Alphabet {
  enum class Kind { signs, fourth_roots, phase_grid } kind = Kind::signs;
  int k = 2;  // letters: e(j/k), j < k

  static Alphabet signs() { return {Kind::signs, 2}; }
  static Alphabet fourth_roots() { return {Kind::fourth_roots, 4}; }
  static Alphabet phase_grid(int k);
  std::string name() const;
};

inline constexpr double kDefaultBruteBudget = 1 << 22;

// Exhaustive max of ||sum a_n e||_p / ||sum e||_p over patterns from the
// alphabet, a_0 fixed to 1 unless fix_first is false. CapacityError when
// |A| > 12 for signs or fourth roots, or the pattern count exceeds budget.
MajorantEstimate brute_force_constant(const std::vector<long long>& A, double p, Alphabet alphabet,
                                      double budget = kDefaultBruteBudget, bool fix_first = true,
                                      double tol = trig::kDefaultTol);

// |A|^{1/p'} / lower_bound_lowfreq(A, p, N): Hausdorff-Young over the
// low-frequency floor, a certified ceiling for C_p(A, N).
double hy_envelope(const std::vector<long long>& A, long long N, double p);

struct UniformityOptions {
  int budget = kDefaultIterations;
  int restarts = kDefaultRestarts;
  std::uint64_t seed = 0;
  Method method = Method::automatic;
};

// Per N: a "constant" row (estimate, with hy_envelope as bound) and a
// "running_max" row. Both carry the fitted log-log slope of the estimates in N.
// ValidationError when p is below p_threshold (or below 2 when c2 = 1).
// The per-N estimates go to `estimates` when given.
std::vector<SweepResult> uniformity_sweep(const sparse::SetSpec& spec, double p, const std::vector<long long>& N_list,
                                          const UniformityOptions& opts = {},
                                          std::vector<MajorantEstimate>* estimates = nullptr);

// p_threshold on a (c1, c2) grid; inadmissible pairs are skipped.
std::vector<SweepResult> thresholds(const std::vector<double>& c1s, const std::vector<double>& c2s);

}  // namespace majorantlab::majorant

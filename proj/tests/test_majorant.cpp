#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "families.hpp"
#include "majorantlab/errors.hpp"
#include "majorantlab/majorant.hpp"
#include "majorantlab/parallel.hpp"

using namespace majorantlab;
using namespace majorantlab::majorant;
using cplx = std::complex<double>;

namespace {

// sum over the grid of |sum_n a_n e(n j/K)|^p / K, direct in long double
long double direct_F(const std::vector<long long>& A, const std::vector<double>& theta, double p, std::size_t K) {
  long double acc = 0;
  for (std::size_t j = 0; j < K; ++j) {
    long double re = 0, im = 0;
    for (std::size_t i = 0; i < A.size(); ++i) {
      const long double ang = theta[i] + 2 * std::numbers::pi_v<long double> *
                                             static_cast<long double>((A[i] * static_cast<long long>(j)) % static_cast<long long>(K)) /
                                             static_cast<long double>(K);
      re += std::cos(ang);
      im += std::sin(ang);
    }
    acc += std::pow(re * re + im * im, static_cast<long double>(p) / 2);
  }
  return acc / static_cast<long double>(K);
}

std::vector<long long> random_set(std::mt19937_64& rng, std::size_t size, long long span) {
  std::vector<long long> A;
  std::uniform_int_distribution<long long> U(0, span);
  while (A.size() < size) {
    const long long v = U(rng);
    if (std::find(A.begin(), A.end(), v) == A.end()) A.push_back(v);
  }
  std::sort(A.begin(), A.end());
  return A;
}

MajorantProblem small_problem(std::vector<long long> A, double p, int budget = 60, int restarts = 4) {
  MajorantProblem prob;
  prob.A = std::move(A);
  prob.p = p;
  prob.budget = budget;
  prob.restarts = restarts;
  prob.seed = 7;
  return prob;
}

}  // namespace

TEST_CASE("p_threshold") {
  for (double c1 : {1.0, 1.25, 1.5, 1.9}) CHECK(p_threshold(c1, 1.0) == 2.0);
  CHECK(p_threshold(1.0, 1.2 - 1e-9) == doctest::Approx(6.0).epsilon(1e-6));
  // c1 = 1, c2 = 1.1: 2 + (12/11) / (8/11) = 3.5
  CHECK(p_threshold(1.0, 1.1) == doctest::Approx(3.5).epsilon(1e-14));
  for (double c1 : {1.0, 1.3, 1.7, 1.99}) {
    double prev = 0.0;
    for (int k = 0; k < 20; ++k) {
      const double c2 = 1.0 + 0.2 * k / 20.0;
      const double v = p_threshold(c1, c2);
      CHECK(v == doctest::Approx(p_threshold_ratio_form(c1, c2)).epsilon(1e-12));
      CHECK(v >= 2.0);
      if (k > 0) CHECK(v > prev);
      prev = v;
    }
  }
  CHECK(threshold_admissible(1.99, 1.199));
  CHECK_THROWS_AS(p_threshold(2.0, 1.1), ValidationError);
  CHECK_THROWS_AS(p_threshold(1.0, 1.2), ValidationError);
  CHECK_THROWS_AS(p_threshold(0.9, 1.0), ValidationError);

  const auto rows = thresholds({1.0, 1.5}, {1.0, 1.1, 1.3});
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows)
    if (r.h2 == "c=1") CHECK(r.value == 2.0);
}

TEST_CASE("phase objective and gradient") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 2.0 * std::numbers::pi);
  for (double p : {2.5, 3.0, 5.0}) {
    for (std::size_t size : {1u, 5u, 32u}) {
      const auto A = random_set(rng, size, 60);
      std::vector<double> theta(size);
      for (auto& t : theta) t = U(rng);
      const std::size_t K = 256;
      const auto obj = phase_objective(A, theta, p, K);
      CHECK(obj.F == doctest::Approx(static_cast<double>(direct_F(A, theta, p, K))).epsilon(1e-12));
      const double h = 1e-5;
      for (std::size_t i = 0; i < size; ++i) {
        auto up = theta, dn = theta;
        up[i] += h;
        dn[i] -= h;
        const double fd = static_cast<double>((direct_F(A, up, p, K) - direct_F(A, dn, p, K)) / (2 * h));
        CHECK(std::abs(obj.grad[i] - fd) <= 1e-4 * std::max(std::abs(fd), 1e-3 * obj.F));
      }
    }
  }
  // real coefficients are critical points
  const auto flat = phase_objective({0, 2, 7}, {0.0, std::numbers::pi, 0.0}, 3.0, 64);
  for (double g : flat.grad) CHECK(std::abs(g) < 1e-12);
  CHECK_THROWS_AS(phase_objective({0, 100}, {0.0, 0.0}, 3.0, 64), ValidationError);
  CHECK(optimizer_grid(3) == 4096);
  CHECK(optimizer_grid(10000) == 65536);
}

TEST_CASE("estimate_constant examples") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 6; ++trial) {
    const auto A = random_set(rng, 3 + 4 * static_cast<std::size_t>(trial), 120);
    const auto e2 = estimate_constant(small_problem(A, 2.0));
    CHECK(e2.value == doctest::Approx(1.0).epsilon(1e-9));
    for (double p : {4.0, 6.0}) {
      const auto e = estimate_constant(small_problem(A, p));
      CHECK(e.value <= 1.0 + 1e-6);
      CHECK(e.value >= 1.0 - 1e-9);
    }
  }
  const auto e3 = estimate_constant(small_problem({0, 1, 3}, 3.0));
  CHECK(e3.value > 1.005);
  REQUIRE(e3.argmax_coeffs.size() == 3);
  for (const auto& a : e3.argmax_coeffs) CHECK(std::abs(std::abs(a) - 1.0) < 1e-12);
  // the ratio is that of the reported coefficients
  const double num = trig::lp_norm(trig::TrigPoly::make({0, 1, 3}, e3.argmax_coeffs), 3.0).value;
  CHECK(num / e3.ones_norm == doctest::Approx(e3.value).epsilon(1e-12));

  const auto one = estimate_constant(small_problem({42}, 3.0));
  CHECK(one.value == doctest::Approx(1.0).epsilon(1e-12));

  auto bad = small_problem({}, 3.0);
  CHECK_THROWS_AS(estimate_constant(bad), ValidationError);
  bad = small_problem({1, 1}, 3.0);
  CHECK_THROWS_AS(estimate_constant(bad), ValidationError);
  bad = small_problem({1, 2}, 1.5);
  CHECK_THROWS_AS(estimate_constant(bad), ValidationError);
  bad = small_problem({1, 20}, 3.0);
  bad.N = 10;
  CHECK_THROWS_AS(estimate_constant(bad), ValidationError);
  CHECK(method_from_string("phase") == Method::phase);
  CHECK_THROWS_AS(method_from_string("newton"), ValidationError);
}

TEST_CASE("budget exhaustion is flagged, not thrown") {
  auto prob = small_problem({0, 1, 3, 7, 12, 20}, 3.0, 1, 2);
  const auto e = estimate_constant(prob);
  CHECK(e.value >= 1.0 - 1e-9);
  CHECK(e.budget_exhausted);
  CHECK(e.iterations <= e.trials);
}

TEST_CASE("brute_force_constant") {
  for (auto alph : {Alphabet::signs(), Alphabet::fourth_roots(), Alphabet::phase_grid(3)}) {
    CHECK(brute_force_constant({0, 2, 5, 6}, 2.0, alph).value == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(brute_force_constant({1, 2}, 4.0, Alphabet::signs()).value == doctest::Approx(1.0).epsilon(1e-12));

  const auto b = brute_force_constant({0, 1, 3}, 3.0, Alphabet::signs());
  CHECK(b.trials == 4);
  CHECK(b.argmax_coeffs[0] == cplx(1.0, 0.0));
  CHECK(estimate_constant(small_problem({0, 1, 3}, 3.0)).value == doctest::Approx(b.value).epsilon(1e-6));

  // the global phase can be fixed without loss
  std::mt19937_64 rng(3);
  for (int t = 0; t < 3; ++t) {
    const auto A = random_set(rng, 5, 30);
    const auto fixed = brute_force_constant(A, 3.0, Alphabet::fourth_roots(), kDefaultBruteBudget, true);
    const auto all = brute_force_constant(A, 3.0, Alphabet::fourth_roots(), kDefaultBruteBudget, false);
    CHECK(fixed.value == doctest::Approx(all.value).epsilon(1e-12));
    CHECK(all.trials == 1024);
  }

  CHECK_THROWS_AS(brute_force_constant(std::vector<long long>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}, 3.0,
                                       Alphabet::signs()),
                  CapacityError);
  CHECK_THROWS_AS(brute_force_constant({0, 1, 2, 3, 4, 5}, 3.0, Alphabet::phase_grid(8), 1000.0), CapacityError);
  CHECK_THROWS_AS(Alphabet::phase_grid(0), ValidationError);
}

TEST_CASE("oracle dominance") {
  std::mt19937_64 rng(21);
  for (std::size_t size : {4u, 5u, 6u, 8u}) {
    const auto A = random_set(rng, size, 40);
    for (double p : {3.0, 5.0}) {
      const auto est = estimate_constant(small_problem(A, p, 200, 6));
      CHECK(est.value >= brute_force_constant(A, p, Alphabet::signs()).value - 1e-9);
      auto phase = small_problem(A, p, 200, 6);
      phase.method = Method::phase;
      CHECK(estimate_constant(phase).value >= brute_force_constant(A, p, Alphabet::fourth_roots()).value - 1e-6);
    }
  }
}

TEST_CASE("hy_envelope") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 100; ++t) {
    const long long N = 64;
    const auto A = random_set(rng, 2 + static_cast<std::size_t>(t % 10), N);
    const auto est = estimate_constant(small_problem(A, 3.0, 20, 2));
    CHECK(est.value <= hy_envelope(A, N, 3.0));
  }
  double prev = 0.0;
  for (long long N : {100LL, 200LL, 400LL, 800LL}) {
    std::vector<long long> full(static_cast<std::size_t>(N));
    for (long long n = 1; n <= N; ++n) full[static_cast<std::size_t>(n - 1)] = n;
    const double env = hy_envelope(full, N, 3.0);
    CHECK(std::isfinite(env));
    CHECK(env >= 1.0);
    // |A|^{2/3} over N (2 / (100 N))^{1/3}: flat in N for the full interval
    if (prev > 0.0) CHECK(env / prev == doctest::Approx(1.0).epsilon(0.02));
    prev = env;
  }
  CHECK_THROWS_AS(hy_envelope({1, 2}, 10, 1.5), ValidationError);
}

TEST_CASE("uniformity_sweep") {
  sparse::SetSpec spec;
  spec.h1 = testfam::xlogx();
  spec.h2 = spec.h1;
  UniformityOptions opts;
  opts.budget = 20;
  opts.restarts = 2;
  opts.seed = 4;
  const auto rows = uniformity_sweep(spec, 2.5, {256, 1024, 512}, opts);
  REQUIRE(rows.size() == 6);
  double running = 0.0;
  for (std::size_t i = 0; i < rows.size(); i += 2) {
    const auto& c = rows[i];
    const auto& m = rows[i + 1];
    CHECK(c.quantity == "constant");
    CHECK(m.quantity == "running_max");
    CHECK(c.value >= 1.0 - 1e-9);
    CHECK(c.value <= c.bound);
    CHECK(m.value >= running);
    CHECK(m.value == std::max(running, c.value));
    running = m.value;
    CHECK(std::isfinite(c.fitted_exponent));
  }
  CHECK(rows[0].N == 256);
  CHECK(rows[4].N == 1024);

  spec.h2 = testfam::supported()[5].f;  // x^1.1 log x, threshold 3.5
  CHECK_THROWS_AS(uniformity_sweep(spec, 2.5, {256}, opts), ValidationError);
}

TEST_CASE("estimate_constant is independent of the worker count") {
  std::mt19937_64 rng(17);
  const auto A = random_set(rng, 90, 400);
  auto prob = small_problem(A, 3.0, 15, 3);
  set_workers(1);
  const auto a = estimate_constant(prob);
  set_workers(3);
  const auto b = estimate_constant(prob);
  set_workers(1);
  CHECK(a.value == b.value);
  CHECK(a.argmax_coeffs == b.argmax_coeffs);
  CHECK(a.iterations == b.iterations);
}

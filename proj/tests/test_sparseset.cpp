#include <cmath>
#include <sstream>

#include "doctest.h"
#include "families.hpp"
#include "majorantlab/errors.hpp"
#include "majorantlab/parallel.hpp"
#include "majorantlab/sparseset.hpp"

using namespace majorantlab;
using namespace majorantlab::sparse;
using rv::InverseFn;
using rv::PsiFn;
using rv::PsiMode;
using rv::RegVaryFn;
using rv::SlowlyVaryingSpec;

namespace {

SetSpec spec_of(SetKind kind, RegVaryFn h1, RegVaryFn h2, long long N) {
  SetSpec s;
  s.kind = kind;
  s.h1 = std::move(h1);
  s.h2 = std::move(h2);
  s.psi_mode = PsiMode::difference;
  s.N = N;
  return s;
}

}  // namespace

TEST_CASE("build_floor_set small cases") {
  const auto a = build_floor_set(testfam::power15(), 12);
  CHECK(a.members == std::vector<long long>{1, 2, 5, 8, 11});

  const auto identity = RegVaryFn::make_unchecked(1.0, SlowlyVaryingSpec::constant_one(), 1.0L);
  const auto b = build_floor_set(identity, 10);
  CHECK(b.members == std::vector<long long>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
}

TEST_CASE("build_floor_set cardinality matches a direct count") {
  const auto h = testfam::xlogx();
  const long long N = 1000000;
  const auto a = build_floor_set(h, N);
  // n >= 2 with n log n < N + 1, in double precision
  long long direct = 0;
  for (long long n = 2; static_cast<double>(n) * std::log(static_cast<double>(n)) < N + 1.0; ++n) ++direct;
  CHECK(static_cast<long long>(a.size()) == direct);
  const InverseFn inv(h);
  CHECK(static_cast<long long>(a.size()) == static_cast<long long>(std::floor(inv.invert(N + 1.0L))) - 1);
  CHECK(a.borderline_count == 0);
}

TEST_CASE("capacity errors") {
  CHECK_THROWS_AS(build_floor_set(testfam::xlogx(), 100000, 1, 1000), CapacityError);
  auto s = spec_of(SetKind::frac_plus, testfam::xlogx(), testfam::xlogx(), 100000);
  CHECK_THROWS_AS(build_frac_set(s, 1000), CapacityError);
}

TEST_CASE("member_frac at exact integer phi1") {
  const InverseFn phi(testfam::power15());
  const auto psi = PsiFn::make(phi, PsiMode::difference);
  const auto plus = member_frac(8, phi, psi, Sign::plus);
  const auto minus = member_frac(8, phi, psi, Sign::minus);
  CHECK(plus.member);
  CHECK(minus.member);
  CHECK(plus.t == 0.0);
  CHECK(minus.t == 0.0);
  CHECK(member_floor_characterization(8, phi, psi));
}

TEST_CASE("B_minus equals the floor image for matched h") {
  const auto h = testfam::power15();
  const InverseFn phi(h);
  const auto psi = PsiFn::make(phi, PsiMode::difference);
  CHECK(psi.n_min() == 2);
  const long long N = 10000;
  const auto a = build_floor_set(h, N, psi.n_min());
  long long mismatches = 0, border = 0;
  for (long long n = psi.n_min(); n <= N; ++n) {
    const auto m = member_frac(n, phi, psi, Sign::minus);
    if (m.borderline) ++border;
    else if (m.member != a.contains(n)) ++mismatches;
  }
  CHECK(mismatches == 0);
  // exact ties at n = k^3 and n = k^3 - 1 (phi(125) = 25) land inside the guard band
  CHECK(border <= 2 * 22);
  CHECK(member_frac(124, phi, psi, Sign::minus).borderline);
  CHECK_FALSE(a.contains(124));

  const auto b = build_frac_set(spec_of(SetKind::frac_minus, h, h, 12));
  CHECK(b.members == std::vector<long long>{2, 5, 8, 11});
}

TEST_CASE("member_frac golden value at n_min for x log x") {
  const InverseFn phi(testfam::xlogx());
  const auto psi = PsiFn::make(phi, PsiMode::difference);
  // psi(2) = 0.51164 > 1/2
  CHECK(psi.n_min() == 3);
  const auto m = member_frac(psi.n_min(), phi, psi, Sign::plus);
  // 40-digit reference: phi(3) = 2.857390783514365679..., phi(4) - phi(3) = 0.469931539084729954...
  CHECK_FALSE(m.member);
  CHECK(m.t == doctest::Approx(0.857390783514365679).epsilon(1e-13));
  CHECK(m.margin == doctest::Approx(-0.387459244429635724).epsilon(1e-12));
}

TEST_CASE("floor characterization agrees with the fractional-part test") {
  const InverseFn phi(testfam::xlogx());
  const auto psi = PsiFn::make(phi, PsiMode::difference);
  long long mismatches = 0, border = 0;
  for (long long n = psi.n_min(); n <= 1000000; ++n) {
    const auto m = member_frac(n, phi, psi, Sign::plus);
    if (m.borderline) ++border;
    else if (m.member != member_floor_characterization(n, phi, psi)) ++mismatches;
  }
  CHECK(mismatches == 0);
  CHECK(border == 0);
}

TEST_CASE("synthetic windows") {
  const InverseFn phi(testfam::power15());
  // psi = 0.3 and {phi1(n)} about 0.4: both tests reject
  const auto psi = PsiFn::constant(0.3, phi, 1);
  long long n = 2;
  while (std::abs(member_frac(n, phi, psi, Sign::plus).t - 0.4) > 0.01) ++n;
  CHECK_FALSE(member_frac(n, phi, psi, Sign::plus).member);
  CHECK_FALSE(member_floor_characterization(n, phi, psi));

  const auto zero = PsiFn::constant(0.0, phi, 1);
  SetSpec s = spec_of(SetKind::frac_plus, testfam::power15(), testfam::power15(), 5000);
  const FracContext ctx{phi, zero, true};
  CHECK(build_frac_set(s, ctx).members.empty());
}

TEST_CASE("cardinality against phi2 at moderate N") {
  const auto h = testfam::xlogx();
  const auto set = build_frac_set(spec_of(SetKind::frac_plus, h, h, 10000));
  const double phi2 = static_cast<double>(InverseFn(h).invert(10000.0L));
  CHECK(std::abs(set.size() / phi2 - 1.0) < 0.1);
}

TEST_CASE("count_vs_phi2") {
  const auto h = testfam::xlogx();
  auto s = spec_of(SetKind::frac_plus, h, h, 1);
  const auto one = count_vs_phi2(s, {100000});
  REQUIRE(one.size() == 1);
  CHECK(std::isnan(one[0].fitted_exponent));

  auto mixed = spec_of(SetKind::frac_plus, testfam::power15(), h, 1);
  const auto rows = count_vs_phi2(mixed, {10000, 100000, 1000000, 10000000});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].fitted_exponent < 0.0);
  CHECK(std::abs(rows.back().ratio - 1.0) < std::abs(rows.front().ratio - 1.0));
  for (const auto& r : rows) CHECK(r.ratio == doctest::Approx(r.value / r.bound));

  auto bad = spec_of(SetKind::frac_plus, h, testfam::power15(), 1);
  CHECK_THROWS_AS(count_vs_phi2(bad, {1000}), ValidationError);
}

TEST_CASE("structural invariants") {
  const auto h = testfam::xlogx();
  const auto small = build_frac_set(spec_of(SetKind::frac_plus, h, h, 10000));
  const auto big = build_frac_set(spec_of(SetKind::frac_plus, h, h, 10000000));
  // strictly increasing within [n_min, N]
  CHECK(std::adjacent_find(big.members.begin(), big.members.end(), std::greater_equal<>()) == big.members.end());
  CHECK(big.members.front() >= big.n_min);
  CHECK(big.members.back() <= 10000000);
  // monotone growth: B_N is the prefix of B_M
  CHECK(big.prefix(10000).members == small.members);
  CHECK(big.prefix(10000).psi == small.psi);
  // vanishing density
  CHECK(static_cast<double>(big.size()) / 1e7 < static_cast<double>(small.size()) / 1e4);
  CHECK(static_cast<double>(big.borderline_count) / static_cast<double>(big.size()) <= 1e-6);
}

TEST_CASE("determinism across builds and worker counts") {
  const auto spec = spec_of(SetKind::frac_plus, testfam::power15(), testfam::xlogx(), 400000);
  set_workers(1);
  const auto a = build_frac_set(spec);
  const auto b = build_frac_set(spec);
  set_workers(4);
  const auto c = build_frac_set(spec);
  set_workers(1);
  CHECK(a.members == b.members);
  CHECK(a.members == c.members);
  CHECK(a.psi == c.psi);
  CHECK(a.borderline_count == c.borderline_count);
}

TEST_CASE("scan table agrees with point queries") {
  const auto ctx = FracContext::from(testfam::power15(), testfam::xlogx(), PsiMode::derivative);
  const auto t = scan(ctx, Sign::plus, ctx.n_min(), ctx.n_min() + 3000);
  for (std::size_t i = 0; i < t.size(); i += 7) {
    const long long n = t.n_lo + static_cast<long long>(i);
    const auto m = member_frac(n, ctx.phi1, ctx.psi, Sign::plus);
    CHECK(m.member == (t.member[i] != 0));
    CHECK(m.t == t.frac_phi1[i]);
    CHECK(static_cast<double>(ctx.psi.eval(n, 0)) == t.psi[i]);
  }
  CHECK_THROWS_AS(scan(ctx, Sign::plus, ctx.n_min() - 1, 10), DomainError);
}

TEST_CASE("export formats round trip") {
  const auto h = testfam::xlogx();
  const auto set = build_frac_set(spec_of(SetKind::frac_minus, h, h, 50000));
  std::stringstream text;
  write_text(text, set);
  const auto back = read_text(text);
  CHECK(back.members == set.members);
  CHECK(back.spec.h1 == set.spec.h1);
  CHECK(back.spec.kind == SetKind::frac_minus);
  CHECK(back.spec.N == 50000);

  std::stringstream bin;
  write_binary(bin, set);
  CHECK(read_binary(bin) == set.members);
  std::stringstream junk("nonsense");
  CHECK_THROWS_AS(read_binary(junk), ValidationError);
}

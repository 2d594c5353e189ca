#include "majorantlab/expsum.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "majorantlab/compensated.hpp"
#include "majorantlab/errors.hpp"
#include "majorantlab/parallel.hpp"

namespace majorantlab::expsum {

using sparse::FracContext;
using sparse::ScanTable;
using sparse::Sign;
using sparse::SparseSet;

namespace {

constexpr long long kChunk = 1LL << 16;
constexpr double kPi = std::numbers::pi;

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// sin(pi x) for x in [0, 1), accurate near both ends.
double sinpi01(double x) { return x > 0.5 ? std::sin(kPi * (1.0 - x)) : std::sin(kPi * x); }

double reduce_xi(double xi) {
  if (!std::isfinite(xi)) throw ValidationError("xi must be finite");
  return frac(xi);
}

// Splits [lo, hi] into fixed chunks that never straddle a checkpoint.
struct Segment {
  long long lo;
  long long hi;        // inclusive
  int checkpoint = -1;  // index of the checkpoint closed by this segment
};

std::vector<Segment> segments(long long lo, const std::vector<long long>& checkpoints) {
  std::vector<Segment> out;
  long long start = lo;
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    const long long end = checkpoints[k];
    while (start <= end) {
      const long long hi = std::min(end, start + kChunk - 1);
      out.push_back({start, hi, hi == end ? static_cast<int>(k) : -1});
      start = hi + 1;
    }
    if (start > end && (out.empty() || out.back().checkpoint != static_cast<int>(k))) {
      // checkpoint at or below the start: closes with no terms
      out.push_back({start, start - 1, static_cast<int>(k)});
    }
  }
  return out;
}

// Runs kernel(table, acc) over [n_min, max checkpoint] in fixed chunks and
// returns the accumulators at every checkpoint (sorted ascending, distinct).
// The merge runs in chunk order, so the result does not depend on workers().
template <class Kernel>
std::vector<std::vector<cplx>> checkpointed_pass(const FracContext& ctx, Sign sign,
                                                 const std::vector<long long>& checkpoints, std::size_t nacc,
                                                 Kernel&& kernel) {
  const auto segs = segments(ctx.n_min(), checkpoints);
  std::vector<std::vector<ComplexCompensatedSum>> partial(segs.size());
  parallel_chunks(segs.size(), [&](std::size_t i) {
    partial[i].assign(nacc, ComplexCompensatedSum{});
    if (segs[i].hi < segs[i].lo) return;
    const ScanTable t = sparse::scan_serial(ctx, sign, segs[i].lo, segs[i].hi);
    kernel(t, partial[i]);
  });
  std::vector<std::vector<cplx>> out(checkpoints.size());
  std::vector<ComplexCompensatedSum> running(nacc);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    for (std::size_t a = 0; a < nacc; ++a) running[a] += partial[i][a];
    if (segs[i].checkpoint >= 0) {
      auto& snap = out[static_cast<std::size_t>(segs[i].checkpoint)];
      snap.resize(nacc);
      for (std::size_t a = 0; a < nacc; ++a) snap[a] = running[a].value();
    }
  }
  return out;
}

std::vector<long long> sorted_unique(std::vector<long long> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Per-xi set sum and psi-weighted model sum (2 accumulators per xi).
std::vector<std::vector<cplx>> set_and_model_pass(const FracContext& ctx, Sign sign,
                                                  const std::vector<long long>& checkpoints,
                                                  const std::vector<double>& xis, bool inverse_weight) {
  const std::size_t K = xis.size();
  return checkpointed_pass(ctx, sign, checkpoints, 2 * K, [&](const ScanTable& t, std::vector<ComplexCompensatedSum>& acc) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const long long n = t.n_lo + static_cast<long long>(i);
      for (std::size_t k = 0; k < K; ++k) {
        const cplx e = unit_phase(frac_product(xis[k], n));
        if (t.member[i]) acc[2 * k] += inverse_weight ? e / t.psi[i] : e;
        acc[2 * k + 1] += t.psi[i] * e;
      }
    }
  });
}

}  // namespace

std::string to_string(Weight w) {
  switch (w) {
    case Weight::unit: return "unit";
    case Weight::psi: return "psi";
    case Weight::psi_inverse: return "psi_inverse";
  }
  return "?";
}

cplx exp_sum(const ExpSumRequest& req) {
  if (req.set == nullptr) throw ValidationError("exp_sum: no set given");
  return exp_sum(*req.set, req.xi, req.weight);
}

cplx exp_sum(const SparseSet& set, double xi, Weight weight) {
  const double x = reduce_xi(xi);
  if (weight != Weight::unit && set.psi.size() != set.members.size())
    throw ValidationError("exp_sum: psi weights need a set built with its window");
  ComplexCompensatedSum acc;
  for (std::size_t i = 0; i < set.members.size(); ++i) {
    const cplx e = x == 0.0 ? cplx(1.0, 0.0) : unit_phase(frac_product(x, set.members[i]));
    switch (weight) {
      case Weight::unit: acc += e; break;
      case Weight::psi: acc += set.psi[i] * e; break;
      case Weight::psi_inverse: acc += e / set.psi[i]; break;
    }
  }
  return acc.value();
}

cplx dirichlet_sum(long long N, double xi) {
  if (N <= 0) return {0.0, 0.0};
  const double x = reduce_xi(xi);
  if (x == 0.0) return {static_cast<double>(N), 0.0};
  // e(x) (e(Nx) - 1) / (e(x) - 1) = e(x) e((f - x)/2) sin(pi f) / sin(pi x), f = {N x}
  const double f = frac_product(x, N);
  const double mag = sinpi01(f) / sinpi01(x);
  return mag * unit_phase(frac(x + 0.5 * (f - x)));
}

cplx model_sum(const FracContext& ctx, long long N, double xi, Weight weight) {
  if (weight == Weight::unit) return dirichlet_sum(N, xi);
  if (weight == Weight::psi_inverse) throw ValidationError("model_sum: weight must be psi or unit");
  if (N < ctx.n_min()) throw DomainError(fmt::format("model_sum: N={} below n_min={}", N, ctx.n_min()));
  const double x = reduce_xi(xi);
  const auto out = checkpointed_pass(ctx, Sign::plus, {N}, 1, [&](const ScanTable& t, std::vector<ComplexCompensatedSum>& acc) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const long long n = t.n_lo + static_cast<long long>(i);
      acc[0] += t.psi[i] * (x == 0.0 ? cplx(1.0, 0.0) : unit_phase(frac_product(x, n)));
    }
  });
  return out[0][0];
}

cplx model_sum(const rv::PsiFn& psi, long long N, double xi, Weight weight) {
  const FracContext ctx{psi.phi2(), psi, true};
  return model_sum(ctx, N, xi, weight);
}

double error_term(const SparseSet& set, double xi) { return error_term(set, FracContext::from(set.spec), xi); }

double error_term(const SparseSet& set, const FracContext& ctx, double xi) {
  return std::abs(exp_sum(set, xi, Weight::unit) - model_sum(ctx, set.spec.N, xi, Weight::psi));
}

double weighted_inverse_vs_dirichlet(const SparseSet& set, double xi) {
  return std::abs(exp_sum(set, xi, Weight::psi_inverse) - dirichlet_sum(set.spec.N, xi));
}

double dist_to_int(double x) { return std::abs(x - std::nearbyint(x)); }

double sawtooth(double x) { return frac(x) - 0.5; }

double sawtooth_truncated(double x, int M) {
  if (M < 1) throw ValidationError("sawtooth_truncated: M must be >= 1");
  const cplx z = unit_phase(frac(x));
  cplx zm = z;
  double s = 0.0;
  for (int m = 1; m <= M; ++m) {
    s += zm.imag() / m;
    zm *= z;
  }
  return -s / kPi;
}

SawtoothExpansion fit_sawtooth(int M, int grid) {
  if (M < 1 || grid < 2) throw ValidationError("fit_sawtooth: need M >= 1 and grid >= 2");
  SawtoothExpansion out;
  out.M = M;
  for (int i = 0; i < grid; ++i) {
    const double x = (i + 0.5) / grid;
    const double env = std::min(1.0, 1.0 / (M * dist_to_int(x)));
    out.fitted_K = std::max(out.fitted_K, std::abs(sawtooth(x) - sawtooth_truncated(x, M)) / env);
  }
  return out;
}

cplx vdc_sum(const FracContext& ctx, long long m, int l, double xi, long long X, long long X2) {
  if (m == 0) throw ValidationError("vdc_sum: m must be nonzero");
  if (l != 0 && l != 1) throw ValidationError("vdc_sum: l must be 0 or 1");
  const double x = reduce_xi(xi);
  const long long lo = X;
  const long long hi = X2;
  if (hi < lo) return {0.0, 0.0};
  if (lo < ctx.n_min()) throw DomainError(fmt::format("vdc_sum: X={} below n_min={}", X, ctx.n_min()));
  const auto out = checkpointed_pass(ctx, Sign::plus, {hi}, 1, [&](const ScanTable& t, std::vector<ComplexCompensatedSum>& acc) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const long long n = t.n_lo + static_cast<long long>(i);
      if (n < lo) continue;
      // m {phi1} - m l psi, reduced on the pair for large m
      const double mt = static_cast<double>(m) * t.frac_phi1[i];
      const double mt_err = std::fma(static_cast<double>(m), t.frac_phi1[i], -mt);
      const double phase = frac(frac(mt) + mt_err + frac_product(x, n) - frac(static_cast<double>(m * l) * t.psi[i]));
      acc[0] += unit_phase(phase);
    }
  });
  return out[0][0];
}

double vdc_bound(long long m, long long X, const rv::InverseFn& phi1, SigmaMode mode) {
  if (m == 0) throw ValidationError("vdc_bound: m must be nonzero");
  const auto x = static_cast<long double>(X);
  double sigma = 1.0;
  if (mode == SigmaMode::estimate || (mode == SigmaMode::automatic && phi1.source().c() == 1.0))
    sigma = static_cast<double>(phi1.sigma1_estimate(x));
  const double phi = static_cast<double>(phi1.invert(x));
  return std::sqrt(static_cast<double>(std::llabs(m))) * static_cast<double>(X) / std::sqrt(sigma * phi);
}

double lemma1_bound(long long m, long long N, const rv::InverseFn& phi1) {
  return vdc_bound(m, N, phi1, SigmaMode::automatic) * std::log(static_cast<double>(N));
}

IDecomposition decompose_I(const FracContext& ctx, Sign sign, double xi, long long N, long long M, double budget) {
  if (M < 1) throw ValidationError("decompose_I: M must be >= 1");
  if (N < ctx.n_min()) throw DomainError(fmt::format("decompose_I: N={} below n_min={}", N, ctx.n_min()));
  const double work = static_cast<double>(M) * static_cast<double>(N);
  if (work > budget) throw CapacityError(fmt::format("decompose_I: M*N = {:.3g} exceeds the budget {:.3g}", work, budget));
  const double x = reduce_xi(xi);
  const auto Mi = static_cast<int>(M);
  // accumulators: I1, I2, I3, set sum, model sum
  const auto out = checkpointed_pass(ctx, sign, {N}, 5, [&](const ScanTable& t, std::vector<ComplexCompensatedSum>& acc) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const long long n = t.n_lo + static_cast<long long>(i);
      const double tt = t.frac_phi1[i];
      const double a = tt - t.psi[i];
      const cplx e = x == 0.0 ? cplx(1.0, 0.0) : unit_phase(frac_product(x, n));
      acc[0] += (sawtooth_truncated(a, Mi) - sawtooth_truncated(tt, Mi)) * e;
      acc[1] += std::min(1.0, 1.0 / (static_cast<double>(M) * dist_to_int(a)));
      acc[2] += std::min(1.0, 1.0 / (static_cast<double>(M) * dist_to_int(tt)));
      if (t.member[i]) acc[3] += e;
      acc[4] += t.psi[i] * e;
    }
  });
  IDecomposition d;
  d.N = N;
  d.M = M;
  d.I1 = out[0][0];
  d.I2 = out[0][1].real();
  d.I3 = out[0][2].real();
  d.set_sum = out[0][3];
  d.model = out[0][4];
  return d;
}

double truncation_delta(double c1, double c2) {
  const double margin = 1.0 - 3.0 * (1.0 - 1.0 / c2) - (1.0 - 1.0 / c1);
  if (!(margin > 0.0)) throw ValidationError(fmt::format("truncation_delta: (c1, c2) = ({}, {}) is not admissible", c1, c2));
  return 0.9 * margin / 6.0;
}

long long truncation_M(long long N, double delta, const rv::InverseFn& phi2) {
  const double n = static_cast<double>(N);
  const double phi = static_cast<double>(phi2.invert(static_cast<long double>(N)));
  return std::max<long long>(1, static_cast<long long>(std::ceil(std::pow(n, 1.0 + delta) * std::log(n) / phi)));
}

namespace {

SweepResult base_row(const std::string& experiment, const sparse::SetSpec& spec) {
  SweepResult r;
  r.experiment = experiment;
  r.h1 = spec.h1.to_kv();
  r.h2 = spec.h2.to_kv();
  r.psi_mode = rv::to_string(spec.psi_mode);
  r.sign = sparse::to_string(spec.sign());
  return r;
}

void fit_per_xi(std::vector<SweepResult>& rows, bool use_ratio) {
  std::vector<double> seen;
  for (const auto& r : rows) {
    if (std::find(seen.begin(), seen.end(), r.xi) != seen.end()) continue;
    seen.push_back(r.xi);
    std::vector<double> xs, ys;
    for (const auto& q : rows)
      if (q.xi == r.xi) {
        xs.push_back(static_cast<double>(q.N));
        ys.push_back(use_ratio ? q.ratio : q.value);
      }
    const double slope = fit_loglog_slope(xs, ys);
    for (auto& q : rows)
      if (q.xi == r.xi) q.fitted_exponent = slope;
  }
}

}  // namespace

std::vector<SweepResult> decay_sweep(const sparse::SetSpec& spec, const std::vector<long long>& N_list,
                                     const std::vector<double>& xis) {
  if (spec.kind == sparse::SetKind::floor_image) throw ValidationError("decay_sweep needs a fractional-part set");
  const auto t0 = std::chrono::steady_clock::now();
  const auto ctx = FracContext::from(spec);
  const auto Ns = sorted_unique(N_list);
  std::vector<double> reduced;
  for (double xi : xis) reduced.push_back(reduce_xi(xi));
  const auto snaps = set_and_model_pass(ctx, spec.sign(), Ns, reduced, false);
  const double ms = elapsed_ms(t0);
  std::vector<SweepResult> rows;
  for (std::size_t k = 0; k < reduced.size(); ++k) {
    for (std::size_t j = 0; j < Ns.size(); ++j) {
      auto r = base_row("expsum-decay", spec);
      r.N = Ns[j];
      r.xi = reduced[k];
      r.quantity = "error_term";
      r.value = std::abs(snaps[j][2 * k] - snaps[j][2 * k + 1]);
      r.bound = static_cast<double>(ctx.psi.phi2().invert(static_cast<long double>(Ns[j])));
      r.ratio = r.value / r.bound;
      r.wall_ms = ms;
      rows.push_back(std::move(r));
    }
  }
  fit_per_xi(rows, true);
  return rows;
}

std::vector<SweepResult> lemma2_sweep(const sparse::SetSpec& spec, const std::vector<long long>& N_list,
                                      const std::vector<double>& xis) {
  if (spec.kind == sparse::SetKind::floor_image) throw ValidationError("lemma2_sweep needs a fractional-part set");
  const auto t0 = std::chrono::steady_clock::now();
  const auto ctx = FracContext::from(spec);
  const auto Ns = sorted_unique(N_list);
  std::vector<double> reduced;
  for (double xi : xis) reduced.push_back(reduce_xi(xi));
  const auto snaps = set_and_model_pass(ctx, spec.sign(), Ns, reduced, true);
  const double ms = elapsed_ms(t0);
  std::vector<SweepResult> rows;
  for (std::size_t k = 0; k < reduced.size(); ++k) {
    for (std::size_t j = 0; j < Ns.size(); ++j) {
      auto r = base_row("lemma2", spec);
      r.N = Ns[j];
      r.xi = reduced[k];
      r.quantity = "weighted_inverse_vs_dirichlet";
      r.value = std::abs(snaps[j][2 * k] - dirichlet_sum(Ns[j], reduced[k]));
      r.bound = static_cast<double>(Ns[j]);
      r.ratio = r.value / r.bound;
      r.wall_ms = ms;
      rows.push_back(std::move(r));
    }
  }
  fit_per_xi(rows, false);
  return rows;
}

std::vector<SweepResult> lemma1_sweep(const FracContext& ctx, int m_max, const std::vector<long long>& N_list,
                                      const std::vector<double>& xis) {
  if (m_max < 1) throw ValidationError("lemma1_sweep: m_max must be >= 1");
  const auto Ns = sorted_unique(N_list);
  if (Ns.empty()) return {};
  if (Ns.front() < ctx.n_min())
    throw DomainError(fmt::format("lemma1_sweep: N={} below n_min={}", Ns.front(), ctx.n_min()));
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> reduced;
  for (double xi : xis) reduced.push_back(reduce_xi(xi));
  const std::size_t K = reduced.size();
  const auto M = static_cast<std::size_t>(m_max);
  // accumulator index ((l * M) + (m - 1)) * K + k
  const std::size_t nacc = 2 * M * K;
  constexpr std::size_t kBlock = 1024;
  const auto snaps = checkpointed_pass(ctx, Sign::plus, Ns, nacc, [&](const ScanTable& t, std::vector<ComplexCompensatedSum>& acc) {
    std::vector<double> bre(nacc, 0.0), bim(nacc, 0.0);
    std::vector<double> wr(K), wi(K), pr(K), pi(K);
    auto flush = [&] {
      for (std::size_t a = 0; a < nacc; ++a) {
        acc[a] += cplx(bre[a], bim[a]);
        bre[a] = 0.0;
        bim[a] = 0.0;
      }
    };
    for (std::size_t i = 0; i < t.size(); ++i) {
      const long long n = t.n_lo + static_cast<long long>(i);
      for (std::size_t k = 0; k < K; ++k) {
        const cplx w = unit_phase(frac_product(reduced[k], n));
        wr[k] = w.real();
        wi[k] = w.imag();
      }
      for (int l = 0; l < 2; ++l) {
        const cplx z = unit_phase(frac(t.frac_phi1[i] - l * t.psi[i]));
        const double zr = z.real(), zi = z.imag();
        std::copy(wr.begin(), wr.end(), pr.begin());
        std::copy(wi.begin(), wi.end(), pi.begin());
        double* re = bre.data() + static_cast<std::size_t>(l) * M * K;
        double* im = bim.data() + static_cast<std::size_t>(l) * M * K;
        for (std::size_t m = 0; m < M; ++m) {
          for (std::size_t k = 0; k < K; ++k) {
            const double a = pr[k] * zr - pi[k] * zi;
            const double b = pr[k] * zi + pi[k] * zr;
            pr[k] = a;
            pi[k] = b;
            re[m * K + k] += a;
            im[m * K + k] += b;
          }
        }
      }
      if ((i + 1) % kBlock == 0) flush();
    }
    flush();
  });
  const double ms = elapsed_ms(t0);
  std::vector<SweepResult> rows;
  const std::string h1 = ctx.phi1.source().to_kv();
  const std::string h2 = ctx.psi.phi2().source().to_kv();
  for (std::size_t j = 0; j < Ns.size(); ++j) {
    for (int l = 0; l < 2; ++l) {
      for (std::size_t m = 1; m <= M; ++m) {
        const double bound = lemma1_bound(static_cast<long long>(m), Ns[j], ctx.phi1);
        for (std::size_t k = 0; k < K; ++k) {
          SweepResult r;
          r.experiment = "vdc";
          r.h1 = h1;
          r.h2 = h2;
          r.psi_mode = rv::to_string(ctx.psi.mode());
          r.sign = "plus";
          r.N = Ns[j];
          r.xi = reduced[k];
          r.m = static_cast<long long>(m);
          r.quantity = l == 0 ? "vdc_l0" : "vdc_l1";
          r.value = std::abs(snaps[j][(static_cast<std::size_t>(l) * M + (m - 1)) * K + k]);
          r.bound = bound;
          r.ratio = r.value / bound;
          r.wall_ms = ms;
          rows.push_back(std::move(r));
        }
      }
    }
  }
  // growth trend of the per-N maximum ratio
  std::vector<double> xs, ys;
  for (long long N : Ns) {
    double mx = 0.0;
    for (const auto& r : rows)
      if (r.N == N) mx = std::max(mx, r.ratio);
    xs.push_back(static_cast<double>(N));
    ys.push_back(mx);
  }
  const double slope = fit_loglog_slope(xs, ys);
  for (auto& r : rows) r.fitted_exponent = slope;
  return rows;
}

}  // namespace majorantlab::expsum

#include "majorantlab/sparseset.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "majorantlab/errors.hpp"
#include "majorantlab/kvtext.hpp"
#include "majorantlab/parallel.hpp"

namespace majorantlab::sparse {

namespace {

constexpr long long kChunk = 1LL << 16;

bool near_integer_boundary(double t) { return t < kGuardBand || 1.0 - t < kGuardBand; }

// psi(n) with phi2(n) and phi2(n+1) supplied by the caller; the arithmetic
// matches PsiFn::eval exactly so scans and point queries agree bit for bit.
long double psi_from(const rv::PsiFn& psi, long double phi2_n, long double phi2_next) {
  switch (psi.mode()) {
    case rv::PsiMode::difference: return phi2_next - phi2_n;
    case rv::PsiMode::derivative: return 1.0L / psi.phi2().source().eval(phi2_n, 1);
    case rv::PsiMode::constant: return psi.constant_value();
  }
  return 0.0L;
}

void check_capacity(long double expected, long long cap) {
  if (expected > static_cast<long double>(cap))
    throw CapacityError(fmt::format("expected cardinality {:.3g} exceeds member cap {}", static_cast<double>(expected), cap));
}

struct ChunkOut {
  std::vector<long long> members;
  std::vector<double> psi;
  long long borderline = 0;
};

// Scans [lo, hi) and hands (n, t, psi, member, borderline) to `sink`.
template <class Sink>
void scan_range(const FracContext& ctx, Sign sign, long long lo, long long hi, Sink&& sink) {
  const auto& phi1 = ctx.phi1;
  const auto& phi2 = ctx.psi.phi2();
  const bool diff = ctx.psi.mode() == rv::PsiMode::difference;
  const bool need_phi2 = ctx.psi.mode() != rv::PsiMode::constant;
  long double phi2_cur = 0.0L;
  long double phi2_next = 0.0L;
  if (need_phi2) phi2_cur = phi2.invert(static_cast<long double>(lo));
  for (long long n = lo; n < hi; ++n) {
    const long double nn = static_cast<long double>(n);
    if (diff) phi2_next = phi2.invert(nn + 1.0L);
    const long double x1 = ctx.shared_inverse && need_phi2 ? phi2_cur : phi1.invert(nn);
    const long double psi = psi_from(ctx.psi, phi2_cur, phi2_next);
    DoubleDouble pair = DoubleDouble::from(x1);
    if (sign == Sign::minus) pair = -pair;
    const double t = frac(pair);
    const double margin = static_cast<double>(psi - static_cast<long double>(t));
    const bool member = static_cast<long double>(t) < psi;
    const bool border = std::abs(margin) < kGuardBand || near_integer_boundary(t);
    sink(n, t, static_cast<double>(psi), member, border);
    if (need_phi2) phi2_cur = diff ? phi2_next : phi2.invert(nn + 1.0L);
  }
}

}  // namespace

std::string to_string(SetKind kind) {
  switch (kind) {
    case SetKind::floor_image: return "floor_image";
    case SetKind::frac_plus: return "frac_plus";
    case SetKind::frac_minus: return "frac_minus";
  }
  return "?";
}

SetKind set_kind_from_string(const std::string& name) {
  if (name == "floor_image") return SetKind::floor_image;
  if (name == "frac_plus" || name == "plus") return SetKind::frac_plus;
  if (name == "frac_minus" || name == "minus") return SetKind::frac_minus;
  throw ValidationError("unknown set kind '" + name + "'");
}

std::string to_string(Sign sign) { return sign == Sign::plus ? "plus" : "minus"; }

bool SetSpec::admissible() const {
  const double c1 = h1.c();
  const double c2 = h2.c();
  if (!(c1 >= 1.0 && c1 < 2.0)) return false;
  if (!(c2 >= 1.0 && c2 < 1.2)) return false;
  return 3.0 * (1.0 - 1.0 / c2) + (1.0 - 1.0 / c1) < 1.0;
}

void SetSpec::validate() const {
  if (N < 1) throw ValidationError("N must be positive");
  if (!admissible())
    throw ValidationError(fmt::format("inadmissible exponents c1={}, c2={} (need c1 in [1,2), c2 in [1,6/5))", h1.c(), h2.c()));
}

std::string spec_kv(const SetSpec& spec) {
  return fmt::format("kind={}; h1={}; h2={}; psi_mode={}; N={}", to_string(spec.kind), spec.h1.to_kv(), spec.h2.to_kv(),
                     rv::to_string(spec.psi_mode), spec.N);
}

FracContext FracContext::from(const rv::RegVaryFn& h1, const rv::RegVaryFn& h2, rv::PsiMode mode) {
  rv::InverseFn phi2(h2);
  auto psi = rv::PsiFn::make(phi2, mode);
  return FracContext{rv::InverseFn(h1), std::move(psi), h1 == h2};
}

FracContext FracContext::from(const SetSpec& spec) { return from(spec.h1, spec.h2, spec.psi_mode); }

std::size_t SparseSet::count_upto(long long n) const {
  return static_cast<std::size_t>(std::upper_bound(members.begin(), members.end(), n) - members.begin());
}

SparseSet SparseSet::prefix(long long n) const {
  SparseSet out;
  out.spec = spec;
  out.spec.N = std::min(n, spec.N);
  out.n_min = n_min;
  const auto k = count_upto(n);
  out.members.assign(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(k));
  if (!psi.empty()) out.psi.assign(psi.begin(), psi.begin() + static_cast<std::ptrdiff_t>(k));
  // borderline diagnostics are not tracked per element; keep the whole-set count
  out.borderline_count = borderline_count;
  return out;
}

bool SparseSet::contains(long long n) const { return std::binary_search(members.begin(), members.end(), n); }

Membership member_frac(long long n, const rv::InverseFn& phi1, const rv::PsiFn& psi, Sign sign) {
  const long double nn = static_cast<long double>(n);
  const long double ps = psi.eval(nn, 0);
  DoubleDouble pair = phi1.invert_pair(nn);
  if (sign == Sign::minus) pair = -pair;
  Membership m;
  m.t = frac(pair);
  m.margin = static_cast<double>(ps - static_cast<long double>(m.t));
  m.member = static_cast<long double>(m.t) < ps;
  m.borderline = std::abs(m.margin) < kGuardBand || near_integer_boundary(m.t);
  return m;
}

bool member_floor_characterization(long long n, const rv::InverseFn& phi1, const rv::PsiFn& psi) {
  const long double nn = static_cast<long double>(n);
  const DoubleDouble x = phi1.invert_pair(nn);
  const long double ps = psi.eval(nn, 0);
  // floor of the pair: integer part of hi adjusted by the sign of the remainder
  auto floor_pair = [](double hi, double lo) {
    const double f = std::floor(hi);
    return (hi == f && lo < 0.0) ? f - 1.0 : f;
  };
  const double a = floor_pair(x.hi, x.lo);
  // phi1 - psi on the pair: hi part exact up to the two-sum error
  double err = 0.0;
  const double shifted_hi = two_sum(x.hi, -static_cast<double>(ps), err);
  const double ps_tail = static_cast<double>(ps - static_cast<long double>(static_cast<double>(ps)));
  double lo = 0.0;
  const double hi = fast_two_sum(shifted_hi, err + x.lo - ps_tail, lo);
  const double b = floor_pair(hi, lo);
  return a - b == 1.0;
}

SparseSet build_floor_set(const rv::RegVaryFn& h, long long N, long long lower, long long member_cap) {
  if (N < 1) throw ValidationError("build_floor_set: N must be positive");
  const long long n_first = static_cast<long long>(std::ceil(h.x0()));
  SparseSet out;
  out.spec.kind = SetKind::floor_image;
  out.spec.h1 = h;
  out.spec.h2 = h;
  out.spec.N = N;
  out.n_min = std::max<long long>(1, lower);
  const long double top = static_cast<long double>(N) + 1.0L;
  if (h.eval(static_cast<long double>(n_first), 0) >= top) return out;
  const rv::InverseFn inv(h);
  const long long n_last = static_cast<long long>(std::floor(inv.invert(top)));
  check_capacity(static_cast<long double>(n_last - n_first + 1), member_cap);

  const long long total = n_last - n_first + 1;
  const auto chunks = static_cast<std::size_t>((total + kChunk - 1) / kChunk);
  std::vector<ChunkOut> parts(chunks);
  parallel_chunks(chunks, [&](std::size_t c) {
    const long long lo = n_first + static_cast<long long>(c) * kChunk;
    const long long hi = std::min(n_last + 1, lo + kChunk);
    auto& part = parts[c];
    for (long long n = lo; n < hi; ++n) {
      const long double v = h.eval(static_cast<long double>(n), 0);
      const long double fl = std::floor(v);
      const long double fr = v - fl;
      if (fr < kGuardBand || 1.0L - fr < kGuardBand) ++part.borderline;
      const long long m = static_cast<long long>(fl);
      if (m < out.n_min || m > N) continue;
      if (part.members.empty() || part.members.back() != m) part.members.push_back(m);
    }
  });
  for (auto& part : parts) {
    for (long long m : part.members)
      if (out.members.empty() || out.members.back() != m) out.members.push_back(m);
    out.borderline_count += part.borderline;
  }
  return out;
}

SparseSet build_frac_set(const SetSpec& spec, long long member_cap) {
  return build_frac_set(spec, FracContext::from(spec), member_cap);
}

SparseSet build_frac_set(const SetSpec& spec, const FracContext& ctx, long long member_cap) {
  if (spec.kind == SetKind::floor_image) throw ValidationError("build_frac_set: spec kind is floor_image");
  if (spec.N < 1) throw ValidationError("build_frac_set: N must be positive");
  SparseSet out;
  out.spec = spec;
  out.n_min = ctx.n_min();
  if (spec.N < out.n_min) return out;
  if (ctx.psi.mode() != rv::PsiMode::constant) check_capacity(ctx.psi.phi2().invert(static_cast<long double>(spec.N)), member_cap);

  const Sign sign = spec.sign();
  const long long total = spec.N - out.n_min + 1;
  const auto chunks = static_cast<std::size_t>((total + kChunk - 1) / kChunk);
  std::vector<ChunkOut> parts(chunks);
  parallel_chunks(chunks, [&](std::size_t c) {
    const long long lo = out.n_min + static_cast<long long>(c) * kChunk;
    const long long hi = std::min(spec.N + 1, lo + kChunk);
    auto& part = parts[c];
    scan_range(ctx, sign, lo, hi, [&](long long n, double, double psi, bool member, bool border) {
      if (border) ++part.borderline;
      if (member) {
        part.members.push_back(n);
        part.psi.push_back(psi);
      }
    });
  });
  std::size_t count = 0;
  for (const auto& part : parts) count += part.members.size();
  if (static_cast<long long>(count) > member_cap) throw CapacityError("member cap exceeded");
  out.members.reserve(count);
  out.psi.reserve(count);
  for (auto& part : parts) {
    out.members.insert(out.members.end(), part.members.begin(), part.members.end());
    out.psi.insert(out.psi.end(), part.psi.begin(), part.psi.end());
    out.borderline_count += part.borderline;
  }
  return out;
}

namespace {

ScanTable scan_impl(const FracContext& ctx, Sign sign, long long n_lo, long long n_hi, bool parallel) {
  if (n_lo < ctx.n_min()) throw DomainError(fmt::format("scan: n_lo={} below n_min={}", n_lo, ctx.n_min()));
  ScanTable t;
  t.n_lo = n_lo;
  t.n_hi = n_hi;
  if (n_hi < n_lo) return t;
  const auto total = static_cast<std::size_t>(n_hi - n_lo + 1);
  t.frac_phi1.resize(total);
  t.psi.resize(total);
  t.member.resize(total);
  const auto chunks = (total + kChunk - 1) / kChunk;
  auto run = [&](std::size_t c) {
    const long long lo = n_lo + static_cast<long long>(c) * kChunk;
    const long long hi = std::min(n_hi + 1, lo + kChunk);
    scan_range(ctx, sign, lo, hi, [&](long long n, double tt, double psi, bool member, bool) {
      const auto i = static_cast<std::size_t>(n - n_lo);
      t.frac_phi1[i] = tt;
      t.psi[i] = psi;
      t.member[i] = member ? 1 : 0;
    });
  };
  if (parallel) {
    parallel_chunks(chunks, run);
  } else {
    for (std::size_t c = 0; c < chunks; ++c) run(c);
  }
  return t;
}

}  // namespace

ScanTable scan(const FracContext& ctx, Sign sign, long long n_lo, long long n_hi) {
  return scan_impl(ctx, sign, n_lo, n_hi, true);
}

ScanTable scan_serial(const FracContext& ctx, Sign sign, long long n_lo, long long n_hi) {
  return scan_impl(ctx, sign, n_lo, n_hi, false);
}

std::vector<SweepResult> count_vs_phi2(const SetSpec& spec, const std::vector<long long>& N_list) {
  if (N_list.empty()) return {};
  auto sorted = N_list;
  std::sort(sorted.begin(), sorted.end());
  SetSpec big = spec;
  big.N = sorted.back();
  big.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const auto ctx = FracContext::from(big);
  const auto set = build_frac_set(big, ctx);
  const double build_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  std::vector<SweepResult> rows;
  std::vector<double> xs, dev;
  for (long long N : N_list) {
    SweepResult r;
    r.experiment = "count";
    r.h1 = spec.h1.to_kv();
    r.h2 = spec.h2.to_kv();
    r.psi_mode = rv::to_string(spec.psi_mode);
    r.sign = to_string(spec.sign());
    r.N = N;
    r.quantity = "card_over_phi2";
    r.value = static_cast<double>(set.count_upto(N));
    r.bound = static_cast<double>(ctx.psi.phi2().invert(static_cast<long double>(N)));
    r.ratio = r.value / r.bound;
    r.borderline_count = set.borderline_count;
    r.wall_ms = build_ms;
    xs.push_back(static_cast<double>(N));
    dev.push_back(std::abs(r.ratio - 1.0));
    rows.push_back(std::move(r));
  }
  const double slope = fit_loglog_slope(xs, dev);
  for (auto& r : rows) r.fitted_exponent = slope;
  return rows;
}

// ---------------------------------------------------------------------------

void write_text(std::ostream& os, const SparseSet& set) {
  os << "# majorantlab sparse set\n";
  os << "# kind=" << to_string(set.spec.kind) << "\n";
  os << "# h1=" << set.spec.h1.to_kv() << "\n";
  os << "# h2=" << set.spec.h2.to_kv() << "\n";
  os << "# psi_mode=" << rv::to_string(set.spec.psi_mode) << "\n";
  os << "# N=" << set.spec.N << "\n";
  os << "# n_min=" << set.n_min << "\n";
  os << "# borderline_count=" << set.borderline_count << "\n";
  os << "# size=" << set.size() << "\n";
  for (long long m : set.members) os << m << '\n';
}

SparseSet read_text(std::istream& is) {
  SparseSet out;
  std::string line;
  KeyValues header;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = trim(std::string_view(line).substr(1));
      const auto eq = body.find('=');
      if (eq != std::string::npos) header[trim(std::string_view(body).substr(0, eq))] = trim(std::string_view(body).substr(eq + 1));
      continue;
    }
    out.members.push_back(std::stoll(line));
  }
  if (header.count("kind")) out.spec.kind = set_kind_from_string(header["kind"]);
  if (header.count("h1")) out.spec.h1 = rv::RegVaryFn::from_kv(header["h1"]);
  if (header.count("h2")) out.spec.h2 = rv::RegVaryFn::from_kv(header["h2"]);
  if (header.count("psi_mode")) out.spec.psi_mode = rv::psi_mode_from_string(header["psi_mode"]);
  out.spec.N = kv_int(header, "N", 0);
  out.n_min = kv_int(header, "n_min", 1);
  out.borderline_count = kv_int(header, "borderline_count", 0);
  return out;
}

namespace {
constexpr char kMagic[8] = {'M', 'L', 'S', 'E', 'T', '1', '\0', '\0'};

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw ValidationError("truncated binary set");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
}  // namespace

void write_binary(std::ostream& os, const SparseSet& set) {
  os.write(kMagic, sizeof kMagic);
  put_u64(os, set.members.size());
  for (long long m : set.members) put_u64(os, static_cast<std::uint64_t>(m));
}

std::vector<long long> read_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw ValidationError("not a binary set file");
  const auto count = get_u64(is);
  std::vector<long long> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) out.push_back(static_cast<long long>(get_u64(is)));
  return out;
}

void save(const std::string& path, const SparseSet& set) {
  const bool binary = path.size() >= 4 && path.substr(path.size() - 4) == ".bin";
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw ValidationError("cannot open '" + path + "' for writing");
  if (binary) write_binary(os, set);
  else write_text(os, set);
}

}  // namespace majorantlab::sparse

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "majorantlab/rvfunc.hpp"
#include "majorantlab/sweep.hpp"

namespace majorantlab::sparse {

enum class SetKind { floor_image, frac_plus, frac_minus };
enum class Sign { plus, minus };

std::string to_string(SetKind kind);
SetKind set_kind_from_string(const std::string& name);
std::string to_string(Sign sign);

// Membership margins |psi(n) - t| or distances of t to 0/1 below this count as
// borderline; the computed sign still decides.
inline constexpr double kGuardBand = 1e-9;

// Default cap on the number of stored members (about 2 GiB with weights).
inline constexpr long long kDefaultMemberCap = 1LL << 27;

struct SetSpec {
  SetKind kind = SetKind::frac_plus;
  rv::RegVaryFn h1;
  rv::RegVaryFn h2;
  rv::PsiMode psi_mode = rv::PsiMode::difference;
  long long N = 0;

  // c1 in [1,2), c2 in [1,6/5) and 3(1 - 1/c2) + (1 - 1/c1) < 1.
  void validate() const;
  bool admissible() const;
  Sign sign() const { return kind == SetKind::frac_minus ? Sign::minus : Sign::plus; }
};

// phi1, psi and whether phi1 coincides with phi2 (h1 == h2), which lets the
// scan reuse one inversion per index.
struct FracContext {
  rv::InverseFn phi1;
  rv::PsiFn psi;
  bool shared_inverse = false;

  static FracContext from(const SetSpec& spec);
  static FracContext from(const rv::RegVaryFn& h1, const rv::RegVaryFn& h2, rv::PsiMode mode);
  long long n_min() const { return psi.n_min(); }
};

struct SparseSet {
  SetSpec spec;
  std::vector<long long> members;  // strictly increasing, in [n_min, N]
  std::vector<double> psi;         // psi(member) for frac sets, empty for floor sets
  long long borderline_count = 0;
  long long n_min = 1;

  std::size_t size() const { return members.size(); }
  // |set ∩ [1, n]|
  std::size_t count_upto(long long n) const;
  // set ∩ [1, n] with its weights; requires n <= spec.N
  SparseSet prefix(long long n) const;
  bool contains(long long n) const;
};

struct Membership {
  bool member = false;
  double margin = 0.0;  // psi(n) - t
  double t = 0.0;       // {±phi1(n)}
  bool borderline = false;
};

Membership member_frac(long long n, const rv::InverseFn& phi1, const rv::PsiFn& psi, Sign sign);

// floor(phi1(n)) - floor(phi1(n) - psi(n)) == 1, evaluated on the head-tail pair.
bool member_floor_characterization(long long n, const rv::InverseFn& phi1, const rv::PsiFn& psi);

// {floor(h(n)) : n >= x0} ∩ [lower, N], sorted and deduplicated.
SparseSet build_floor_set(const rv::RegVaryFn& h, long long N, long long lower = 1,
                          long long member_cap = kDefaultMemberCap);

SparseSet build_frac_set(const SetSpec& spec, long long member_cap = kDefaultMemberCap);
SparseSet build_frac_set(const SetSpec& spec, const FracContext& ctx, long long member_cap = kDefaultMemberCap);

// Per-index table over [n_lo, n_hi]: {±phi1(n)}, psi(n), membership.
struct ScanTable {
  long long n_lo = 0;
  long long n_hi = 0;
  std::vector<double> frac_phi1;
  std::vector<double> psi;
  std::vector<std::uint8_t> member;

  std::size_t size() const { return psi.size(); }
};
ScanTable scan(const FracContext& ctx, Sign sign, long long n_lo, long long n_hi);
// Same table on the calling thread only; for callers that parallelize outside.
ScanTable scan_serial(const FracContext& ctx, Sign sign, long long n_lo, long long n_hi);

// |B_N| against phi2(N) for every N in the list (one build at max N, prefix
// counts). Each row carries the fitted decay exponent of |ratio - 1| across
// the whole list (NaN for a single N).
std::vector<SweepResult> count_vs_phi2(const SetSpec& spec, const std::vector<long long>& N_list);

// Text export: '#'-prefixed spec header lines, then one member per line.
void write_text(std::ostream& os, const SparseSet& set);
SparseSet read_text(std::istream& is);
// Binary export: magic "MLSET1\0\0", u64 count, then count little-endian i64.
void write_binary(std::ostream& os, const SparseSet& set);
std::vector<long long> read_binary(std::istream& is);
// Chooses the format by extension (.bin -> binary, otherwise text).
void save(const std::string& path, const SparseSet& set);

std::string spec_kv(const SetSpec& spec);

}  // namespace majorantlab::sparse

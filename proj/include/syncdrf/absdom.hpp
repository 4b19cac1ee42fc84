//===- absdom.hpp - Numerical abstract domains and mix ----------*- C++ -*-===//
//
// Intervals, octagons (difference-bound matrices over +x/-x) and explicit
// environment sets behind one value type, plus the region-granular mix used
// at acquire points and the thread-id recency tag.
//
//===----------------------------------------------------------------------===//
#ifndef SYNCDRF_ABSDOM_HPP
#define SYNCDRF_ABSDOM_HPP

#include "syncdrf/lang.hpp"

#include <limits>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace syncdrf {

/// Extended integer bound; kInf and -kInf stand for the infinities.
using Bound = std::int64_t;
inline constexpr Bound kInf = std::numeric_limits<Bound>::max() / 4;

/// Saturating addition on bounds: infinities absorb, overflow loosens.
Bound add_bound(Bound a, Bound b);

class DomainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class DomainKind { Interval, Octagon, EnvSet };

std::string_view to_string(DomainKind k);

struct Itv {
  Bound lo = -kInf, hi = kInf;
  bool operator==(const Itv &) const = default;
};

struct IntervalElem {
  bool bottom = false;
  std::vector<Itv> vars;
  bool operator==(const IntervalElem &) const = default;
};

/// m[i][j] bounds V_j - V_i, with V_2k = +x_k and V_2k+1 = -x_k.
struct OctagonElem {
  bool bottom = false;
  bool closed = false;
  std::size_t n = 0;
  std::vector<Bound> m; // (2n)^2 entries, row-major

  Bound &at(std::size_t i, std::size_t j) { return m[i * 2 * n + j]; }
  Bound at(std::size_t i, std::size_t j) const { return m[i * 2 * n + j]; }
};

using Env = std::vector<Value>;

/// Finite value space shared by explicit environment sets.
struct EnvUniverse {
  std::vector<Value> lo, hi; // per-variable box
  std::vector<Value> havoc_values;
};

struct EnvSetElem {
  std::shared_ptr<const EnvUniverse> universe;
  std::set<Env> envs;
  /// Set when some successor fell outside the box and was dropped.
  bool truncated = false;
};

class AbsVal {
public:
  AbsVal() = default;
  explicit AbsVal(IntervalElem e) : rep_(std::move(e)) {}
  explicit AbsVal(OctagonElem e) : rep_(std::move(e)) {}
  explicit AbsVal(EnvSetElem e) : rep_(std::move(e)) {}

  DomainKind kind() const { return static_cast<DomainKind>(rep_.index()); }
  std::size_t num_vars() const;

  const IntervalElem &interval() const { return std::get<IntervalElem>(rep_); }
  const OctagonElem &octagon() const { return std::get<OctagonElem>(rep_); }
  const EnvSetElem &envset() const { return std::get<EnvSetElem>(rep_); }
  IntervalElem &interval() { return std::get<IntervalElem>(rep_); }
  OctagonElem &octagon() { return std::get<OctagonElem>(rep_); }
  EnvSetElem &envset() { return std::get<EnvSetElem>(rep_); }

private:
  std::variant<IntervalElem, OctagonElem, EnvSetElem> rep_;
};

// Construction. EnvSet elements need a universe.
AbsVal make_top(DomainKind k, std::size_t nvars,
                std::shared_ptr<const EnvUniverse> u = nullptr);
AbsVal make_bottom(DomainKind k, std::size_t nvars,
                   std::shared_ptr<const EnvUniverse> u = nullptr);
/// The single environment mapping every variable to 0.
AbsVal make_zero(DomainKind k, std::size_t nvars,
                 std::shared_ptr<const EnvUniverse> u = nullptr);
std::shared_ptr<const EnvUniverse> make_universe(std::size_t nvars, Value lo,
                                                 Value hi,
                                                 std::vector<Value> havoc = {0, 1, 2});
AbsVal from_envs(std::shared_ptr<const EnvUniverse> u, std::set<Env> envs);
/// Octagon from a list of points: the tightest octagon containing them.
AbsVal octagon_hull(std::size_t nvars, const std::set<Env> &points);
AbsVal interval_to_octagon(const AbsVal &d);

bool is_bottom(const AbsVal &d);
bool contains(const AbsVal &d, const Env &env);
/// Points of d inside the box [lo, hi]^n (EnvSet elements: their own set).
std::set<Env> points_in_box(const AbsVal &d, Value lo, Value hi);

// Lattice.
bool dom_leq(const AbsVal &a, const AbsVal &b);
bool dom_equal(const AbsVal &a, const AbsVal &b);
AbsVal dom_join(const AbsVal &a, const AbsVal &b);
AbsVal dom_meet(const AbsVal &a, const AbsVal &b);
/// a widened by b; callers pass b = a join new. EnvSet elements throw.
AbsVal dom_widen(const AbsVal &a, const AbsVal &b);
/// Widening that moves an unstable bound to the next threshold before
/// giving up to infinity. `thresholds` must be sorted.
AbsVal dom_widen_thresholds(const AbsVal &a, const AbsVal &b,
                            const std::vector<Bound> &thresholds);

// Transfer functions.
AbsVal transfer_assign(const AbsVal &d, VarId x, const Expr &e);
AbsVal transfer_assume(const AbsVal &d, const BoolExpr &b);
AbsVal forget(const AbsVal &d, const std::set<VarId> &vs);
/// True when every environment of d satisfies b.
bool entails(const AbsVal &d, const BoolExpr &b);

/// Join of ds, then for each region r the join with all variables outside r
/// forgotten, and the meet of those. EnvSet elements get the exact product of
/// per-region projections.
AbsVal mix_abstract(const std::vector<AbsVal> &ds, const RegionMap &regions);

/// Canonical form, e.g. tight closure for octagons.
AbsVal canonical(const AbsVal &d);

/// Readable constraints such as `0 <= x = y` or `x = y + 1, 0 <= y`.
std::string to_constraints(const AbsVal &d, const std::vector<std::string> &vars);

/// Integer tight closure in place. Returns false when the octagon is empty.
bool close_octagon(OctagonElem &o);

// Thread-identifier recency.
struct RecencyTagged {
  AbsVal base;
  std::set<ThreadId> tids;
};

RecencyTagged recency_apply(ThreadId t, const Command &c, const RecencyTagged &d);
/// False iff the incoming fact was produced by writes of the receiver only.
bool recency_admit_sync(ThreadId receiver, const RecencyTagged &incoming);

} // namespace syncdrf

#endif // SYNCDRF_ABSDOM_HPP

#include "syncdrf/absdom.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

namespace syncdrf {

Bound add_bound(Bound a, Bound b) {
  if (a >= kInf || b >= kInf)
    return kInf;
  if (a <= -kInf || b <= -kInf)
    return -kInf;
  Bound s = a + b;
  return std::clamp(s, -kInf, kInf);
}

static Bound mul_bound(Value k, Bound b) {
  if (k == 0)
    return 0;
  if (b >= kInf)
    return k > 0 ? kInf : -kInf;
  if (b <= -kInf)
    return k > 0 ? -kInf : kInf;
  Bound r;
  if (__builtin_mul_overflow(k, b, &r))
    return (k > 0) == (b > 0) ? kInf : -kInf;
  return std::clamp(r, -kInf, kInf);
}

static Bound floor_div(Bound a, Value b) {
  Bound q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0)))
    --q;
  return q;
}

static Bound ceil_div(Bound a, Value b) {
  Bound q = a / b;
  if ((a % b != 0) && ((a < 0) == (b < 0)))
    ++q;
  return q;
}

std::string_view to_string(DomainKind k) {
  switch (k) {
  case DomainKind::Interval: return "interval";
  case DomainKind::Octagon: return "octagon";
  case DomainKind::EnvSet: return "envset";
  }
  return "?";
}

std::size_t AbsVal::num_vars() const {
  switch (kind()) {
  case DomainKind::Interval: return interval().vars.size();
  case DomainKind::Octagon: return octagon().n;
  case DomainKind::EnvSet: return envset().universe->lo.size();
  }
  return 0;
}

static void same_kind(const AbsVal &a, const AbsVal &b) {
  if (a.kind() != b.kind() || a.num_vars() != b.num_vars())
    throw DomainError("domain elements of different kinds or arities");
}

//===----------------------------------------------------------------------===//
// Octagon primitives
//===----------------------------------------------------------------------===//

namespace {

inline std::size_t bar(std::size_t i) { return i ^ 1; }
inline std::size_t pos(VarId v) { return 2 * v; }
inline std::size_t neg(VarId v) { return 2 * v + 1; }
inline std::size_t idx(Value sign, VarId v) { return sign > 0 ? pos(v) : neg(v); }

OctagonElem oct_top(std::size_t n) {
  OctagonElem o;
  o.n = n;
  o.m.assign(4 * n * n, kInf);
  for (std::size_t i = 0; i < 2 * n; ++i)
    o.at(i, i) = 0;
  o.closed = true;
  return o;
}

OctagonElem oct_bottom(std::size_t n) {
  OctagonElem o = oct_top(n);
  o.bottom = true;
  return o;
}

// Adds V_j - V_i <= c together with its coherent twin.
void oct_add(OctagonElem &o, std::size_t i, std::size_t j, Bound c) {
  if (c < o.at(i, j)) {
    o.at(i, j) = c;
    o.closed = false;
  }
  if (c < o.at(bar(j), bar(i))) {
    o.at(bar(j), bar(i)) = c;
    o.closed = false;
  }
}

Bound oct_hi(const OctagonElem &o, VarId v) {
  Bound b = o.at(neg(v), pos(v));
  return b >= kInf ? kInf : floor_div(b, 2);
}

Bound oct_lo(const OctagonElem &o, VarId v) {
  Bound b = o.at(pos(v), neg(v));
  return b >= kInf ? -kInf : -floor_div(b, 2);
}

OctagonElem closed_copy(const OctagonElem &o) {
  OctagonElem c = o;
  if (!c.bottom && !c.closed)
    close_octagon(c);
  return c;
}

bool is_unit_form(const LinearForm &f) {
  if (f.coeffs.size() > 2)
    return false;
  for (auto [v, a] : f.coeffs)
    if (a != 1 && a != -1)
      return false;
  return true;
}

// Upper bound of f over a closed, non-empty octagon.
Bound oct_upper(const OctagonElem &o, const LinearForm &f) {
  if (f.havoc)
    return kInf;
  if (f.coeffs.empty())
    return f.constant;
  if (is_unit_form(f)) {
    auto it = f.coeffs.begin();
    if (f.coeffs.size() == 1) {
      std::size_t j = idx(it->second, it->first);
      Bound b = o.at(bar(j), j);
      return add_bound(b >= kInf ? kInf : floor_div(b, 2), f.constant);
    }
    auto [x1, s1] = *it++;
    auto [x2, s2] = *it;
    std::size_t j = idx(s1, x1), i = idx(-s2, x2);
    return add_bound(o.at(i, j), f.constant);
  }
  Bound sum = f.constant;
  for (auto [v, a] : f.coeffs)
    sum = add_bound(sum, a > 0 ? mul_bound(a, oct_hi(o, v)) : mul_bound(a, oct_lo(o, v)));
  return sum;
}

LinearForm negated(LinearForm f) {
  for (auto &[v, a] : f.coeffs)
    a = -a;
  f.constant = -f.constant;
  return f;
}

Bound oct_lower(const OctagonElem &o, const LinearForm &f) {
  Bound u = oct_upper(o, negated(f));
  return u >= kInf ? -kInf : -u;
}

// Forgets variable v in a closed octagon.
void oct_forget_closed(OctagonElem &o, VarId v) {
  for (std::size_t k = 0; k < 2 * o.n; ++k)
    for (std::size_t i : {pos(v), neg(v)}) {
      o.at(i, k) = kInf;
      o.at(k, i) = kInf;
    }
  o.at(pos(v), pos(v)) = 0;
  o.at(neg(v), neg(v)) = 0;
}

// Adds the constraint f <= 0 (integer, exact when f is a unit form or a
// single scaled variable, interval reasoning otherwise).
void oct_add_le_zero(OctagonElem &o, const LinearForm &f) {
  if (o.bottom)
    return;
  if (f.coeffs.empty()) {
    if (f.constant > 0)
      o = oct_bottom(o.n);
    return;
  }
  Bound c = -f.constant; // Σ a v <= c
  if (is_unit_form(f)) {
    auto it = f.coeffs.begin();
    if (f.coeffs.size() == 1) {
      std::size_t j = idx(it->second, it->first);
      oct_add(o, bar(j), j, mul_bound(2, c));
      return;
    }
    auto [x1, s1] = *it++;
    auto [x2, s2] = *it;
    oct_add(o, idx(-s2, x2), idx(s1, x1), c);
    return;
  }
  if (f.coeffs.size() == 1) {
    auto [v, a] = *f.coeffs.begin();
    if (a > 0)
      oct_add(o, neg(v), pos(v), mul_bound(2, floor_div(c, a)));
    else
      oct_add(o, pos(v), neg(v), mul_bound(2, -ceil_div(c, a)));
    return;
  }
  // a_v v <= c - Σ_{w != v} a_w w  <=  c - lower(rest)
  OctagonElem cl = closed_copy(o);
  if (cl.bottom) {
    o = cl;
    return;
  }
  for (auto [v, a] : f.coeffs) {
    LinearForm rest = f;
    rest.coeffs.erase(v);
    rest.constant = 0;
    Bound lo_rest = oct_lower(cl, rest);
    if (lo_rest <= -kInf)
      continue;
    Bound rhs = c - lo_rest;
    if (a > 0)
      oct_add(o, neg(v), pos(v), mul_bound(2, floor_div(rhs, a)));
    else
      oct_add(o, pos(v), neg(v), mul_bound(2, -ceil_div(rhs, a)));
  }
}

//===----------------------------------------------------------------------===//
// Interval primitives
//===----------------------------------------------------------------------===//

Itv itv_of(const IntervalElem &d, const LinearForm &f) {
  if (f.havoc)
    return {};
  Itv r{f.constant, f.constant};
  for (auto [v, a] : f.coeffs) {
    const Itv &x = d.vars[v];
    Bound lo = a > 0 ? mul_bound(a, x.lo) : mul_bound(a, x.hi);
    Bound hi = a > 0 ? mul_bound(a, x.hi) : mul_bound(a, x.lo);
    r.lo = add_bound(r.lo, lo);
    r.hi = add_bound(r.hi, hi);
  }
  if (r.lo <= -kInf)
    r.lo = -kInf;
  if (r.hi >= kInf)
    r.hi = kInf;
  return r;
}

void itv_add_le_zero(IntervalElem &d, const LinearForm &f) {
  if (d.bottom)
    return;
  if (f.coeffs.empty()) {
    if (f.constant > 0)
      d.bottom = true;
    return;
  }
  for (int pass = 0; pass < 2; ++pass) {
    for (auto [v, a] : f.coeffs) {
      LinearForm rest = f;
      rest.coeffs.erase(v);
      Itv r = itv_of(d, rest);
      if (r.lo <= -kInf)
        continue;
      Bound rhs = -r.lo; // a v <= rhs
      Itv &x = d.vars[v];
      if (a > 0)
        x.hi = std::min(x.hi, floor_div(rhs, a));
      else
        x.lo = std::max(x.lo, ceil_div(rhs, a));
      if (x.lo > x.hi) {
        d.bottom = true;
        return;
      }
    }
  }
}

IntervalElem itv_top(std::size_t n) {
  IntervalElem d;
  d.vars.assign(n, Itv{});
  return d;
}

//===----------------------------------------------------------------------===//
// Environment sets
//===----------------------------------------------------------------------===//

bool in_box(const EnvUniverse &u, VarId v, Value x) {
  return x >= u.lo[v] && x <= u.hi[v];
}

void for_each_box_point(const std::vector<Value> &lo, const std::vector<Value> &hi,
                        const std::function<void(const Env &)> &f) {
  const std::size_t n = lo.size();
  for (std::size_t v = 0; v < n; ++v)
    if (lo[v] > hi[v])
      return;
  Env cur = lo;
  for (;;) {
    f(cur);
    std::size_t k = 0;
    while (k < n && cur[k] == hi[k]) {
      cur[k] = lo[k];
      ++k;
    }
    if (k == n)
      return;
    ++cur[k];
  }
}

// Normalised atoms: each is `f <= 0`; a disjunction list of conjunctions.
using Conj = std::vector<LinearForm>;

std::vector<Conj> atom_cases(const BoolExpr &atom) {
  LinearForm d = linear_difference(atom.operands[0], atom.operands[1]);
  auto plus = [](LinearForm f, Value c) {
    f.constant = checked_add(f.constant, c);
    return f;
  };
  switch (atom.op) {
  case CmpOp::Le: return {{d}};
  case CmpOp::Lt: return {{plus(d, 1)}};
  case CmpOp::Ge: return {{negated(d)}};
  case CmpOp::Gt: return {{plus(negated(d), 1)}};
  case CmpOp::Eq: return {{d, negated(d)}};
  case CmpOp::Ne: return {{plus(d, 1)}, {plus(negated(d), 1)}};
  }
  return {};
}

AbsVal assume_nnf(const AbsVal &d, const BoolExpr &b);

AbsVal assume_atom(const AbsVal &d, const BoolExpr &atom) {
  std::vector<Conj> cases = atom_cases(atom);
  std::optional<AbsVal> acc;
  for (const Conj &conj : cases) {
    AbsVal r = d;
    if (r.kind() == DomainKind::Interval) {
      for (const LinearForm &f : conj)
        itv_add_le_zero(r.interval(), f);
    } else {
      OctagonElem &o = r.octagon();
      for (const LinearForm &f : conj)
        oct_add_le_zero(o, f);
      if (!o.bottom)
        close_octagon(o);
    }
    acc = acc ? dom_join(*acc, r) : r;
  }
  return *acc;
}

AbsVal assume_nnf(const AbsVal &d, const BoolExpr &b) {
  if (is_bottom(d))
    return d;
  switch (b.kind) {
  case BoolExpr::Kind::True: return d;
  case BoolExpr::Kind::False:
    return make_bottom(d.kind(), d.num_vars(),
                       d.kind() == DomainKind::EnvSet ? d.envset().universe
                                                      : nullptr);
  case BoolExpr::Kind::And: return assume_nnf(assume_nnf(d, b.args[0]), b.args[1]);
  case BoolExpr::Kind::Or:
    return dom_join(assume_nnf(d, b.args[0]), assume_nnf(d, b.args[1]));
  case BoolExpr::Kind::Cmp: return assume_atom(d, b);
  case BoolExpr::Kind::Not: break;
  }
  throw std::logic_error("assume_nnf: negation left after normalisation");
}

} // namespace

//===----------------------------------------------------------------------===//
// Public operations
//===----------------------------------------------------------------------===//

bool close_octagon(OctagonElem &o) {
  if (o.bottom)
    return false;
  const std::size_t N = 2 * o.n;
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t i = 0; i < N; ++i) {
      Bound ik = o.at(i, k);
      if (ik >= kInf)
        continue;
      for (std::size_t j = 0; j < N; ++j) {
        Bound s = add_bound(ik, o.at(k, j));
        if (s < o.at(i, j))
          o.at(i, j) = s;
      }
    }
  for (std::size_t i = 0; i < N; ++i)
    if (o.at(i, i) < 0) {
      o = oct_bottom(o.n);
      return false;
    }
  for (std::size_t i = 0; i < N; ++i) {
    Bound &b = o.at(i, bar(i));
    if (b < kInf)
      b = 2 * floor_div(b, 2);
  }
  for (std::size_t i = 0; i < N; ++i)
    if (add_bound(o.at(i, bar(i)), o.at(bar(i), i)) < 0) {
      o = oct_bottom(o.n);
      return false;
    }
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      Bound a = o.at(i, bar(i)), b = o.at(bar(j), j);
      if (a >= kInf || b >= kInf)
        continue;
      Bound s = (a + b) / 2;
      if (s < o.at(i, j))
        o.at(i, j) = s;
    }
  for (std::size_t i = 0; i < N; ++i)
    o.at(i, i) = 0;
  o.closed = true;
  return true;
}

std::shared_ptr<const EnvUniverse> make_universe(std::size_t nvars, Value lo,
                                                 Value hi,
                                                 std::vector<Value> havoc) {
  auto u = std::make_shared<EnvUniverse>();
  u->lo.assign(nvars, lo);
  u->hi.assign(nvars, hi);
  u->havoc_values = std::move(havoc);
  return u;
}

static std::shared_ptr<const EnvUniverse>
need_universe(std::shared_ptr<const EnvUniverse> u) {
  if (!u)
    throw DomainError("environment sets need a value universe");
  return u;
}

AbsVal make_top(DomainKind k, std::size_t nvars,
                std::shared_ptr<const EnvUniverse> u) {
  switch (k) {
  case DomainKind::Interval: return AbsVal(itv_top(nvars));
  case DomainKind::Octagon: return AbsVal(oct_top(nvars));
  case DomainKind::EnvSet: {
    EnvSetElem e;
    e.universe = need_universe(u);
    for_each_box_point(u->lo, u->hi, [&](const Env &p) { e.envs.insert(p); });
    return AbsVal(std::move(e));
  }
  }
  return {};
}

AbsVal make_bottom(DomainKind k, std::size_t nvars,
                   std::shared_ptr<const EnvUniverse> u) {
  switch (k) {
  case DomainKind::Interval: {
    IntervalElem d = itv_top(nvars);
    d.bottom = true;
    return AbsVal(std::move(d));
  }
  case DomainKind::Octagon: return AbsVal(oct_bottom(nvars));
  case DomainKind::EnvSet: {
    EnvSetElem e;
    e.universe = need_universe(u);
    return AbsVal(std::move(e));
  }
  }
  return {};
}

AbsVal make_zero(DomainKind k, std::size_t nvars,
                 std::shared_ptr<const EnvUniverse> u) {
  switch (k) {
  case DomainKind::Interval: {
    IntervalElem d = itv_top(nvars);
    for (Itv &x : d.vars)
      x = {0, 0};
    return AbsVal(std::move(d));
  }
  case DomainKind::Octagon: {
    OctagonElem o = oct_top(nvars);
    for (VarId v = 0; v < nvars; ++v) {
      oct_add(o, neg(v), pos(v), 0);
      oct_add(o, pos(v), neg(v), 0);
    }
    close_octagon(o);
    return AbsVal(std::move(o));
  }
  case DomainKind::EnvSet: {
    EnvSetElem e;
    e.universe = need_universe(u);
    Env zero(nvars, 0);
    bool inside = true;
    for (VarId v = 0; v < nvars; ++v)
      inside = inside && in_box(*u, v, 0);
    if (inside)
      e.envs.insert(zero);
    else
      e.truncated = true;
    return AbsVal(std::move(e));
  }
  }
  return {};
}

AbsVal from_envs(std::shared_ptr<const EnvUniverse> u, std::set<Env> envs) {
  EnvSetElem e;
  e.universe = need_universe(u);
  for (const Env &env : envs) {
    bool inside = true;
    for (VarId v = 0; v < env.size(); ++v)
      inside = inside && in_box(*u, v, env[v]);
    if (inside)
      e.envs.insert(env);
    else
      e.truncated = true;
  }
  return AbsVal(std::move(e));
}

AbsVal octagon_hull(std::size_t nvars, const std::set<Env> &points) {
  if (points.empty())
    return AbsVal(oct_bottom(nvars));
  OctagonElem o = oct_top(nvars);
  const std::size_t N = 2 * nvars;
  auto val = [](const Env &p, std::size_t i) {
    return i % 2 == 0 ? p[i / 2] : -p[i / 2];
  };
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      Bound best = -kInf;
      for (const Env &p : points)
        best = std::max<Bound>(best, val(p, j) - val(p, i));
      o.at(i, j) = best;
    }
  o.closed = true;
  return AbsVal(std::move(o));
}

AbsVal interval_to_octagon(const AbsVal &d) {
  const IntervalElem &it = d.interval();
  if (it.bottom)
    return AbsVal(oct_bottom(it.vars.size()));
  OctagonElem o = oct_top(it.vars.size());
  for (VarId v = 0; v < it.vars.size(); ++v) {
    if (it.vars[v].hi < kInf)
      oct_add(o, neg(v), pos(v), mul_bound(2, it.vars[v].hi));
    if (it.vars[v].lo > -kInf)
      oct_add(o, pos(v), neg(v), mul_bound(-2, it.vars[v].lo));
  }
  close_octagon(o);
  return AbsVal(std::move(o));
}

bool is_bottom(const AbsVal &d) {
  switch (d.kind()) {
  case DomainKind::Interval: return d.interval().bottom;
  case DomainKind::Octagon: {
    if (d.octagon().bottom)
      return true;
    if (d.octagon().closed)
      return false;
    return closed_copy(d.octagon()).bottom;
  }
  case DomainKind::EnvSet: return d.envset().envs.empty();
  }
  return false;
}

bool contains(const AbsVal &d, const Env &env) {
  switch (d.kind()) {
  case DomainKind::Interval: {
    const IntervalElem &it = d.interval();
    if (it.bottom)
      return false;
    for (VarId v = 0; v < env.size(); ++v)
      if (env[v] < it.vars[v].lo || env[v] > it.vars[v].hi)
        return false;
    return true;
  }
  case DomainKind::Octagon: {
    const OctagonElem &o = d.octagon();
    if (o.bottom)
      return false;
    auto val = [&](std::size_t i) {
      return i % 2 == 0 ? env[i / 2] : -env[i / 2];
    };
    const std::size_t N = 2 * o.n;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j)
        if (o.at(i, j) < kInf && val(j) - val(i) > o.at(i, j))
          return false;
    return true;
  }
  case DomainKind::EnvSet: return d.envset().envs.count(env) > 0;
  }
  return false;
}

std::set<Env> points_in_box(const AbsVal &d, Value lo, Value hi) {
  std::set<Env> out;
  if (d.kind() == DomainKind::EnvSet) {
    for (const Env &e : d.envset().envs) {
      bool inside = std::all_of(e.begin(), e.end(),
                                [&](Value v) { return v >= lo && v <= hi; });
      if (inside)
        out.insert(e);
    }
    return out;
  }
  const std::size_t n = d.num_vars();
  for_each_box_point(std::vector<Value>(n, lo), std::vector<Value>(n, hi),
                     [&](const Env &p) {
                       if (contains(d, p))
                         out.insert(p);
                     });
  return out;
}

bool dom_leq(const AbsVal &a, const AbsVal &b) {
  same_kind(a, b);
  switch (a.kind()) {
  case DomainKind::Interval: {
    const IntervalElem &x = a.interval(), &y = b.interval();
    if (x.bottom)
      return true;
    if (y.bottom)
      return false;
    for (std::size_t v = 0; v < x.vars.size(); ++v)
      if (x.vars[v].lo < y.vars[v].lo || x.vars[v].hi > y.vars[v].hi)
        return false;
    return true;
  }
  case DomainKind::Octagon: {
    OctagonElem x = closed_copy(a.octagon());
    if (x.bottom)
      return true;
    if (is_bottom(b))
      return false;
    const OctagonElem &y = b.octagon();
    for (std::size_t k = 0; k < x.m.size(); ++k)
      if (x.m[k] > y.m[k])
        return false;
    return true;
  }
  case DomainKind::EnvSet: {
    const auto &x = a.envset().envs, &y = b.envset().envs;
    return std::includes(y.begin(), y.end(), x.begin(), x.end());
  }
  }
  return false;
}

bool dom_equal(const AbsVal &a, const AbsVal &b) {
  return dom_leq(a, b) && dom_leq(b, a);
}

AbsVal dom_join(const AbsVal &a, const AbsVal &b) {
  same_kind(a, b);
  switch (a.kind()) {
  case DomainKind::Interval: {
    const IntervalElem &x = a.interval(), &y = b.interval();
    if (x.bottom)
      return b;
    if (y.bottom)
      return a;
    IntervalElem r = x;
    for (std::size_t v = 0; v < r.vars.size(); ++v) {
      r.vars[v].lo = std::min(x.vars[v].lo, y.vars[v].lo);
      r.vars[v].hi = std::max(x.vars[v].hi, y.vars[v].hi);
    }
    return AbsVal(std::move(r));
  }
  case DomainKind::Octagon: {
    OctagonElem x = closed_copy(a.octagon()), y = closed_copy(b.octagon());
    if (x.bottom)
      return AbsVal(std::move(y));
    if (y.bottom)
      return AbsVal(std::move(x));
    for (std::size_t k = 0; k < x.m.size(); ++k)
      x.m[k] = std::max(x.m[k], y.m[k]);
    x.closed = true;
    return AbsVal(std::move(x));
  }
  case DomainKind::EnvSet: {
    EnvSetElem r = a.envset();
    r.envs.insert(b.envset().envs.begin(), b.envset().envs.end());
    r.truncated = r.truncated || b.envset().truncated;
    return AbsVal(std::move(r));
  }
  }
  return a;
}

AbsVal dom_meet(const AbsVal &a, const AbsVal &b) {
  same_kind(a, b);
  switch (a.kind()) {
  case DomainKind::Interval: {
    const IntervalElem &x = a.interval(), &y = b.interval();
    if (x.bottom)
      return a;
    if (y.bottom)
      return b;
    IntervalElem r = x;
    for (std::size_t v = 0; v < r.vars.size(); ++v) {
      r.vars[v].lo = std::max(x.vars[v].lo, y.vars[v].lo);
      r.vars[v].hi = std::min(x.vars[v].hi, y.vars[v].hi);
      if (r.vars[v].lo > r.vars[v].hi)
        r.bottom = true;
    }
    if (r.bottom)
      r.vars.assign(r.vars.size(), Itv{});
    return AbsVal(std::move(r));
  }
  case DomainKind::Octagon: {
    const OctagonElem &x = a.octagon(), &y = b.octagon();
    if (x.bottom)
      return a;
    if (y.bottom)
      return b;
    OctagonElem r = x;
    for (std::size_t k = 0; k < r.m.size(); ++k)
      r.m[k] = std::min(x.m[k], y.m[k]);
    r.closed = false;
    close_octagon(r);
    return AbsVal(std::move(r));
  }
  case DomainKind::EnvSet: {
    EnvSetElem r = a.envset();
    std::set<Env> out;
    const auto &ys = b.envset().envs;
    std::set_intersection(r.envs.begin(), r.envs.end(), ys.begin(), ys.end(),
                          std::inserter(out, out.begin()));
    r.envs = std::move(out);
    return AbsVal(std::move(r));
  }
  }
  return a;
}

AbsVal dom_widen(const AbsVal &a, const AbsVal &b) {
  same_kind(a, b);
  switch (a.kind()) {
  case DomainKind::Interval: {
    const IntervalElem &x = a.interval(), &y = b.interval();
    if (x.bottom)
      return b;
    if (y.bottom)
      return a;
    IntervalElem r = x;
    for (std::size_t v = 0; v < r.vars.size(); ++v) {
      if (y.vars[v].lo < x.vars[v].lo)
        r.vars[v].lo = -kInf;
      if (y.vars[v].hi > x.vars[v].hi)
        r.vars[v].hi = kInf;
    }
    return AbsVal(std::move(r));
  }
  case DomainKind::Octagon: {
    const OctagonElem &x = a.octagon();
    if (x.bottom)
      return b;
    if (is_bottom(b))
      return a;
    const OctagonElem &y = b.octagon();
    // The result is deliberately left unclosed: closing a widened matrix
    // can reintroduce bounds and break termination.
    OctagonElem r = x;
    for (std::size_t k = 0; k < r.m.size(); ++k)
      r.m[k] = y.m[k] <= x.m[k] ? x.m[k] : kInf;
    r.closed = false;
    for (std::size_t i = 0; i < 2 * r.n; ++i)
      r.at(i, i) = 0;
    return AbsVal(std::move(r));
  }
  case DomainKind::EnvSet:
    throw DomainError("environment sets have no widening");
  }
  return a;
}

AbsVal dom_widen_thresholds(const AbsVal &a, const AbsVal &b,
                            const std::vector<Bound> &ts) {
  same_kind(a, b);
  auto up = [&](Bound v, Bound scale) {
    auto it = std::lower_bound(ts.begin(), ts.end(), v, [&](Bound t, Bound x) {
      return scale * t < x;
    });
    return it == ts.end() ? kInf : scale * *it;
  };
  switch (a.kind()) {
  case DomainKind::Interval: {
    const IntervalElem &x = a.interval(), &y = b.interval();
    if (x.bottom)
      return b;
    if (y.bottom)
      return a;
    IntervalElem r = x;
    for (std::size_t v = 0; v < r.vars.size(); ++v) {
      if (y.vars[v].lo < x.vars[v].lo) {
        auto it = std::upper_bound(ts.begin(), ts.end(), y.vars[v].lo);
        r.vars[v].lo = it == ts.begin() || y.vars[v].lo <= -kInf ? -kInf
                                                                  : *std::prev(it);
      }
      if (y.vars[v].hi > x.vars[v].hi)
        r.vars[v].hi = y.vars[v].hi >= kInf ? kInf : up(y.vars[v].hi, 1);
    }
    return AbsVal(std::move(r));
  }
  case DomainKind::Octagon: {
    const OctagonElem &x = a.octagon();
    if (x.bottom)
      return b;
    if (is_bottom(b))
      return a;
    const OctagonElem &y = b.octagon();
    OctagonElem r = x;
    const std::size_t N = 2 * r.n;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) {
        Bound yi = y.at(i, j), xi = x.at(i, j);
        if (yi <= xi)
          continue;
        r.at(i, j) = yi >= kInf ? kInf : up(yi, bar(i) == j ? 2 : 1);
      }
    r.closed = false;
    for (std::size_t i = 0; i < N; ++i)
      r.at(i, i) = 0;
    return AbsVal(std::move(r));
  }
  case DomainKind::EnvSet:
    throw DomainError("environment sets have no widening");
  }
  return a;
}

AbsVal forget(const AbsVal &d, const std::set<VarId> &vs) {
  if (vs.empty())
    return d;
  switch (d.kind()) {
  case DomainKind::Interval: {
    IntervalElem r = d.interval();
    if (r.bottom)
      return d;
    for (VarId v : vs)
      r.vars.at(v) = Itv{};
    return AbsVal(std::move(r));
  }
  case DomainKind::Octagon: {
    OctagonElem r = closed_copy(d.octagon());
    if (r.bottom)
      return AbsVal(std::move(r));
    for (VarId v : vs)
      oct_forget_closed(r, v);
    return AbsVal(std::move(r));
  }
  case DomainKind::EnvSet: {
    const EnvSetElem &e = d.envset();
    EnvSetElem r;
    r.universe = e.universe;
    r.truncated = e.truncated;
    for (const Env &env : e.envs) {
      std::vector<Value> lo = env, hi = env;
      for (VarId v : vs) {
        lo[v] = e.universe->lo[v];
        hi[v] = e.universe->hi[v];
      }
      for_each_box_point(lo, hi, [&](const Env &p) { r.envs.insert(p); });
    }
    return AbsVal(std::move(r));
  }
  }
  return d;
}

AbsVal transfer_assign(const AbsVal &d, VarId x, const Expr &e) {
  if (is_bottom(d))
    return d;
  switch (d.kind()) {
  case DomainKind::Interval: {
    IntervalElem r = d.interval();
    r.vars.at(x) = itv_of(r, linearize(e));
    return AbsVal(std::move(r));
  }
  case DomainKind::Octagon: {
    LinearForm f = linearize(e);
    OctagonElem o = closed_copy(d.octagon());
    if (f.havoc) {
      oct_forget_closed(o, x);
      return AbsVal(std::move(o));
    }
    auto self = f.coeffs.find(x);
    if (f.coeffs.size() == 1 && self != f.coeffs.end() && self->second == 1) {
      // x := x + c shifts every bound mentioning x.
      Bound c = f.constant;
      auto delta = [&](std::size_t i) -> Bound {
        return i == pos(x) ? c : i == neg(x) ? -c : 0;
      };
      for (std::size_t i = 0; i < 2 * o.n; ++i)
        for (std::size_t j = 0; j < 2 * o.n; ++j)
          if (o.at(i, j) < kInf)
            o.at(i, j) = add_bound(o.at(i, j), delta(j) - delta(i));
      return AbsVal(std::move(o));
    }
    // General case: bounds of e, e - y and e + y in the pre-state.
    Bound hi = oct_upper(o, f), lo = oct_lower(o, f);
    std::vector<std::array<Bound, 4>> rel(o.n);
    for (VarId y = 0; y < o.n; ++y) {
      if (y == x)
        continue;
      LinearForm minus = f, plus = f;
      if ((minus.coeffs[y] -= 1) == 0)
        minus.coeffs.erase(y);
      if ((plus.coeffs[y] += 1) == 0)
        plus.coeffs.erase(y);
      rel[y] = {oct_upper(o, minus), oct_lower(o, minus), oct_upper(o, plus),
                oct_lower(o, plus)};
    }
    oct_forget_closed(o, x);
    if (hi < kInf)
      oct_add(o, neg(x), pos(x), mul_bound(2, hi));
    if (lo > -kInf)
      oct_add(o, pos(x), neg(x), mul_bound(-2, lo));
    for (VarId y = 0; y < o.n; ++y) {
      if (y == x)
        continue;
      auto [mu, ml, pu, pl] = rel[y];
      if (mu < kInf)
        oct_add(o, pos(y), pos(x), mu); // x - y <= mu
      if (ml > -kInf)
        oct_add(o, pos(x), pos(y), -ml); // y - x <= -ml
      if (pu < kInf)
        oct_add(o, neg(y), pos(x), pu); // x + y <= pu
      if (pl > -kInf)
        oct_add(o, pos(x), neg(y), -pl); // -x - y <= -pl
    }
    close_octagon(o);
    return AbsVal(std::move(o));
  }
  case DomainKind::EnvSet: {
    const EnvSetElem &s = d.envset();
    EnvSetElem r;
    r.universe = s.universe;
    r.truncated = s.truncated;
    for (const Env &env : s.envs)
      for (Value v : evaluate_all(e, env, s.universe->havoc_values)) {
        if (!in_box(*s.universe, x, v)) {
          r.truncated = true;
          continue;
        }
        Env n = env;
        n[x] = v;
        r.envs.insert(std::move(n));
      }
    return AbsVal(std::move(r));
  }
  }
  return d;
}

AbsVal transfer_assume(const AbsVal &d, const BoolExpr &b) {
  if (d.kind() == DomainKind::EnvSet) {
    EnvSetElem r = d.envset();
    for (auto it = r.envs.begin(); it != r.envs.end();)
      it = evaluate(b, *it) ? std::next(it) : r.envs.erase(it);
    return AbsVal(std::move(r));
  }
  AbsVal start = d;
  if (d.kind() == DomainKind::Octagon && !d.octagon().closed)
    start.octagon() = closed_copy(d.octagon());
  return assume_nnf(start, to_nnf(b));
}

bool entails(const AbsVal &d, const BoolExpr &b) {
  if (d.kind() == DomainKind::EnvSet) {
    for (const Env &e : d.envset().envs)
      if (!evaluate(b, e))
        return false;
    return true;
  }
  return is_bottom(transfer_assume(d, BoolExpr::negation(b)));
}

AbsVal mix_abstract(const std::vector<AbsVal> &ds, const RegionMap &regions) {
  if (ds.empty())
    throw DomainError("mix of an empty list");
  AbsVal j = ds[0];
  for (std::size_t i = 1; i < ds.size(); ++i)
    j = dom_join(j, ds[i]);
  if (is_bottom(j))
    return j;
  auto members = regions.members();
  switch (j.kind()) {
  case DomainKind::Interval:
    // Intervals carry no cross-variable facts, so the mix is the join.
    return j;
  case DomainKind::Octagon: {
    OctagonElem o = closed_copy(j.octagon());
    for (VarId a = 0; a < o.n; ++a)
      for (VarId b = 0; b < o.n; ++b) {
        if (regions.region_of[a] == regions.region_of[b])
          continue;
        for (std::size_t i : {pos(a), neg(a)})
          for (std::size_t k : {pos(b), neg(b)})
            o.at(i, k) = kInf;
      }
    return AbsVal(std::move(o));
  }
  case DomainKind::EnvSet: {
    const EnvSetElem &e = j.envset();
    EnvSetElem r;
    r.universe = e.universe;
    r.truncated = e.truncated;
    // Per region, the set of projections; the result is their product.
    std::vector<std::set<std::vector<Value>>> proj(members.size());
    for (const Env &env : e.envs)
      for (RegionId g = 0; g < members.size(); ++g) {
        std::vector<Value> p;
        for (VarId v : members[g])
          p.push_back(env[v]);
        proj[g].insert(std::move(p));
      }
    std::vector<Env> acc{Env(j.num_vars(), 0)};
    for (RegionId g = 0; g < members.size(); ++g) {
      std::vector<Env> next;
      for (const Env &partial : acc)
        for (const auto &p : proj[g]) {
          Env n = partial;
          for (std::size_t k = 0; k < members[g].size(); ++k)
            n[members[g][k]] = p[k];
          next.push_back(std::move(n));
        }
      acc = std::move(next);
    }
    r.envs.insert(acc.begin(), acc.end());
    return AbsVal(std::move(r));
  }
  }
  return j;
}

AbsVal canonical(const AbsVal &d) {
  if (d.kind() == DomainKind::Octagon)
    return AbsVal(closed_copy(d.octagon()));
  if (d.kind() == DomainKind::Interval && d.interval().bottom)
    return make_bottom(DomainKind::Interval, d.num_vars());
  return d;
}

//===----------------------------------------------------------------------===//
// Printing
//===----------------------------------------------------------------------===//

namespace {

std::string oct_constraints(const OctagonElem &in,
                            const std::vector<std::string> &names) {
  OctagonElem o = closed_copy(in);
  if (o.bottom)
    return "false";
  const std::size_t n = o.n;
  std::vector<Bound> lo(n), hi(n);
  for (VarId v = 0; v < n; ++v) {
    lo[v] = oct_lo(o, v);
    hi[v] = oct_hi(o, v);
  }
  // x - y fixed to a constant puts x and y in one class.
  std::vector<VarId> root(n);
  std::vector<Bound> off(n, 0); // value(v) = value(root) + off
  std::iota(root.begin(), root.end(), 0);
  for (VarId x = 0; x < n; ++x) {
    if (root[x] != x)
      continue;
    for (VarId y = x + 1; y < n; ++y) {
      if (root[y] != y)
        continue;
      Bound up = o.at(pos(x), pos(y));  // y - x <= up
      Bound dn = o.at(pos(y), pos(x));  // x - y <= dn
      if (up < kInf && dn < kInf && up == -dn) {
        root[y] = x;
        off[y] = up;
      }
    }
  }
  struct Item {
    VarId first;
    std::string text;
  };
  std::vector<Item> items;
  auto num = [](Bound b) { return std::to_string(b); };
  std::vector<VarId> bases;
  for (VarId r = 0; r < n; ++r) {
    if (root[r] != r)
      continue;
    std::vector<VarId> cls;
    for (VarId v = 0; v < n; ++v)
      if (root[v] == r)
        cls.push_back(v);
    VarId base = cls[0];
    for (VarId v : cls)
      if (off[v] < off[base])
        base = v;
    bases.push_back(base);
    if (lo[base] > -kInf && lo[base] == hi[base]) {
      // Constant class: one `a = b = v` item per value.
      std::map<Bound, std::vector<VarId>> by_value;
      for (VarId v : cls)
        by_value[lo[base] + off[v] - off[base]].push_back(v);
      for (const auto &[val, vs] : by_value) {
        std::string t;
        for (VarId v : vs)
          t += names[v] + " = ";
        items.push_back({vs[0], t + num(val)});
      }
      continue;
    }
    std::vector<VarId> chain;
    for (VarId v : cls) {
      Bound d = off[v] - off[base];
      if (d == 0) {
        chain.push_back(v);
      } else {
        items.push_back({v, names[v] + " = " + names[base] + " + " + num(d)});
      }
    }
    std::string ch;
    for (std::size_t k = 0; k < chain.size(); ++k)
      ch += (k ? " = " : "") + names[chain[k]];
    Bound l = lo[base], h = hi[base];
    std::string text;
    if (l > -kInf && h < kInf && l == h)
      text = ch + " = " + num(l);
    else if (l > -kInf && h < kInf)
      text = num(l) + " <= " + ch + " <= " + num(h);
    else if (l > -kInf)
      text = num(l) + " <= " + ch;
    else if (h < kInf)
      text = ch + " <= " + num(h);
    else if (chain.size() > 1)
      text = ch;
    if (!text.empty())
      items.push_back({chain[0], text});
  }
  std::sort(bases.begin(), bases.end());
  for (std::size_t a = 0; a < bases.size(); ++a)
    for (std::size_t b = a + 1; b < bases.size(); ++b) {
      VarId x = bases[a], y = bases[b];
      const std::string &X = names[x], &Y = names[y];
      auto emit = [&](const std::string &expr, Bound l, Bound u, Bound lo_impl,
                      Bound hi_impl) {
        bool need_lo = l > -kInf && (lo_impl <= -kInf || l > lo_impl);
        bool need_hi = u < kInf && (hi_impl >= kInf || u < hi_impl);
        if (need_lo && need_hi)
          items.push_back({x, num(l) + " <= " + expr + " <= " + num(u)});
        else if (need_lo)
          items.push_back({x, expr + " >= " + num(l)});
        else if (need_hi)
          items.push_back({x, expr + " <= " + num(u)});
      };
      Bound d_hi = o.at(pos(y), pos(x));                    // x - y <= d_hi
      Bound d_lo = o.at(pos(x), pos(y)) >= kInf ? -kInf : -o.at(pos(x), pos(y));
      Bound s_hi = o.at(neg(y), pos(x));                    // x + y <= s_hi
      Bound s_lo = o.at(pos(x), neg(y)) >= kInf ? -kInf : -o.at(pos(x), neg(y));
      emit(X + " - " + Y, d_lo, d_hi, add_bound(lo[x], hi[y] >= kInf ? -kInf : -hi[y]),
           add_bound(hi[x], lo[y] <= -kInf ? kInf : -lo[y]));
      emit(X + " + " + Y, s_lo, s_hi, add_bound(lo[x], lo[y]), add_bound(hi[x], hi[y]));
    }
  std::stable_sort(items.begin(), items.end(),
                   [](const Item &a, const Item &b) { return a.first < b.first; });
  if (items.empty())
    return "true";
  std::string out;
  for (std::size_t k = 0; k < items.size(); ++k)
    out += (k ? ", " : "") + items[k].text;
  return out;
}

} // namespace

std::string to_constraints(const AbsVal &d, const std::vector<std::string> &vars) {
  switch (d.kind()) {
  case DomainKind::Interval: return oct_constraints(interval_to_octagon(d).octagon(), vars);
  case DomainKind::Octagon: return oct_constraints(d.octagon(), vars);
  case DomainKind::EnvSet:
    return oct_constraints(octagon_hull(d.num_vars(), d.envset().envs).octagon(), vars);
  }
  return "";
}

//===----------------------------------------------------------------------===//
// Recency
//===----------------------------------------------------------------------===//

RecencyTagged recency_apply(ThreadId t, const Command &c, const RecencyTagged &d) {
  RecencyTagged r = d;
  switch (c.kind) {
  case Command::Kind::Assign:
    r.base = transfer_assign(d.base, c.var, c.expr);
    r.tids.insert(t);
    break;
  case Command::Kind::Assume:
    r.base = transfer_assume(d.base, c.cond);
    break;
  case Command::Kind::Acquire:
  case Command::Kind::Release:
    break;
  }
  return r;
}

bool recency_admit_sync(ThreadId receiver, const RecencyTagged &incoming) {
  return !(incoming.tids.size() == 1 && *incoming.tids.begin() == receiver);
}

} // namespace syncdrf

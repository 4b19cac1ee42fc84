#include "domain_props.hpp"

#include <random>
#include <sstream>

namespace syncdrf::props {

namespace {

using Rng = std::mt19937_64;

int uniform(Rng &rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool coin(Rng &rng, double p) { return std::bernoulli_distribution(p)(rng); }

std::vector<std::string> var_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(std::string(1, static_cast<char>('a' + i)));
  return out;
}

struct Gen {
  Rng rng;
  Value box;
  std::shared_ptr<const EnvUniverse> universe;
  std::size_t n;

  Gen(std::uint64_t seed, Value b, std::size_t nvars)
      : rng(seed), box(b), universe(make_universe(nvars, -b, b)), n(nvars) {}

  Env point() {
    Env e(n);
    for (Value &v : e)
      v = uniform(rng, -box, box);
    return e;
  }

  Expr expr(bool allow_havoc) {
    if (allow_havoc && coin(rng, 0.08))
      return Expr::havoc();
    Expr e = Expr::constant(uniform(rng, -3, 3));
    int terms = uniform(rng, 0, 2);
    for (int k = 0; k < terms; ++k) {
      int c = uniform(rng, -2, 2);
      if (c == 0)
        c = 1;
      Expr v = Expr::variable(uniform(rng, 0, static_cast<int>(n) - 1));
      e = Expr::add(e, c == 1 ? v : Expr::scale(c, v));
    }
    return e;
  }

  BoolExpr atom() {
    static const CmpOp ops[] = {CmpOp::Eq, CmpOp::Ne, CmpOp::Lt,
                                CmpOp::Le, CmpOp::Gt, CmpOp::Ge};
    return BoolExpr::cmp(ops[uniform(rng, 0, 5)], expr(false), expr(false));
  }

  BoolExpr cond(int depth = 2) {
    int k = depth > 0 ? uniform(rng, 0, 5) : 0;
    switch (k) {
    case 3: return BoolExpr::conj(cond(depth - 1), cond(depth - 1));
    case 4: return BoolExpr::disj(cond(depth - 1), cond(depth - 1));
    case 5: return BoolExpr::negation(cond(depth - 1));
    default: return atom();
    }
  }

  Command command() {
    if (coin(rng, 0.5))
      return Command::assign(uniform(rng, 0, static_cast<int>(n) - 1), expr(true));
    return Command::assume(cond());
  }

  // Raw octagon: random constraints, possibly unclosed.
  OctagonElem raw_octagon() {
    OctagonElem o = make_top(DomainKind::Octagon, n).octagon();
    int k = uniform(rng, 0, 5);
    for (int c = 0; c < k; ++c) {
      std::size_t i = uniform(rng, 0, 2 * n - 1), j = uniform(rng, 0, 2 * n - 1);
      if (i == j)
        continue;
      Bound b = uniform(rng, -5, 8);
      if ((i ^ 1) == j)
        b *= 2;
      o.at(i, j) = std::min(o.at(i, j), b);
      o.at(j ^ 1, i ^ 1) = std::min(o.at(j ^ 1, i ^ 1), b);
    }
    o.closed = false;
    return o;
  }

  AbsVal element(DomainKind kind) {
    switch (kind) {
    case DomainKind::Interval: {
      if (coin(rng, 0.03))
        return make_bottom(kind, n);
      IntervalElem d;
      for (std::size_t v = 0; v < n; ++v) {
        Itv x;
        if (!coin(rng, 0.2))
          x.lo = uniform(rng, -5, 3);
        if (!coin(rng, 0.2))
          x.hi = (x.lo > -kInf ? x.lo : -5) + uniform(rng, 0, 5);
        d.vars.push_back(x);
      }
      return AbsVal(std::move(d));
    }
    case DomainKind::Octagon: {
      if (coin(rng, 0.4)) {
        std::set<Env> pts;
        int k = uniform(rng, 0, 4);
        for (int i = 0; i < k; ++i)
          pts.insert(point());
        return octagon_hull(n, pts);
      }
      OctagonElem o = raw_octagon();
      close_octagon(o);
      return AbsVal(std::move(o));
    }
    case DomainKind::EnvSet: {
      std::set<Env> pts;
      int k = uniform(rng, 0, 8);
      for (int i = 0; i < k; ++i)
        pts.insert(point());
      return from_envs(universe, pts);
    }
    }
    return {};
  }

  DomainKind kind() { return static_cast<DomainKind>(uniform(rng, 0, 2)); }
  DomainKind numeric_kind() {
    return coin(rng, 0.5) ? DomainKind::Interval : DomainKind::Octagon;
  }

  RegionMap regions() {
    RegionMap r;
    std::size_t k = uniform(rng, 1, static_cast<int>(n));
    for (std::size_t i = 0; i < k; ++i)
      r.names.push_back("r" + std::to_string(i));
    for (std::size_t v = 0; v < n; ++v)
      r.region_of.push_back(v < k ? v : uniform(rng, 0, static_cast<int>(k) - 1));
    return r;
  }
};

std::set<Env> gamma(const AbsVal &d, Value box) {
  return points_in_box(d, -box, box);
}

bool subset(const std::set<Env> &a, const AbsVal &d) {
  for (const Env &e : a)
    if (!contains(d, e))
      return false;
  return true;
}

// Concrete mix of a set of environments at the given granularity.
std::set<Env> concrete_mix(const std::set<Env> &envs, const RegionMap &regions,
                           std::size_t n) {
  std::set<Env> out;
  if (envs.empty())
    return out;
  auto members = regions.members();
  std::vector<Env> acc{Env(n, 0)};
  for (const auto &ms : members) {
    std::set<std::vector<Value>> proj;
    for (const Env &e : envs) {
      std::vector<Value> p;
      for (VarId v : ms)
        p.push_back(e[v]);
      proj.insert(p);
    }
    std::vector<Env> next;
    for (const Env &a : acc)
      for (const auto &p : proj) {
        Env b = a;
        for (std::size_t k = 0; k < ms.size(); ++k)
          b[ms[k]] = p[k];
        next.push_back(b);
      }
    acc = std::move(next);
  }
  out.insert(acc.begin(), acc.end());
  return out;
}

std::string describe(const AbsVal &d, std::size_t n) {
  return std::string(to_string(d.kind())) + " " + to_constraints(d, var_names(n));
}

struct Recorder {
  PropResult &r;
  void fail(const std::string &what) {
    if (r.failures++ == 0)
      r.first_failure = what;
  }
};

AbsVal octagon_or_interval_point(DomainKind k, std::size_t n, const Env &p) {
  AbsVal o = octagon_hull(n, {p});
  if (k == DomainKind::Octagon)
    return o;
  IntervalElem d;
  for (Value v : p)
    d.vars.push_back({v, v});
  return AbsVal(std::move(d));
}

} // namespace

PropResult lattice_laws(const PropConfig &cfg) {
  PropResult r{"lattice laws", 0, 0, {}};
  Recorder rec{r};
  Rng seeds(cfg.seed);
  for (std::size_t i = 0; i < cfg.cases; ++i) {
    Gen g(seeds(), cfg.box, i % 4 == 3 ? 3 : 2);
    DomainKind k = g.kind();
    AbsVal a = g.element(k), b = g.element(k), c = g.element(k);
    AbsVal ab = dom_join(a, b);
    bool ok = dom_equal(ab, dom_join(b, a)) &&
              dom_equal(dom_join(ab, c), dom_join(a, dom_join(b, c))) &&
              dom_equal(dom_join(a, a), a) && dom_leq(a, a) &&
              dom_leq(a, ab) && dom_leq(b, ab);
    AbsVal abc = dom_join(ab, c);
    ok = ok && (!(dom_leq(a, ab) && dom_leq(ab, abc)) || dom_leq(a, abc));
    if (dom_leq(a, b) && dom_leq(b, a)) {
      std::set<Env> ga = gamma(a, cfg.box), gb = gamma(b, cfg.box);
      ok = ok && ga == gb;
    }
    // Order agrees with point sets; join over-approximates the union.
    if (dom_leq(a, b))
      ok = ok && subset(gamma(a, cfg.box), b);
    ok = ok && subset(gamma(a, cfg.box), ab) && subset(gamma(b, cfg.box), ab);
    AbsVal m = dom_meet(a, b);
    ok = ok && dom_leq(m, a) && dom_leq(m, b);
    AbsVal bot = make_bottom(k, g.n, g.universe);
    ok = ok && dom_leq(bot, a) && dom_equal(dom_join(bot, a), a);
    ++r.cases;
    if (!ok)
      rec.fail(describe(a, g.n) + " | " + describe(b, g.n) + " | " + describe(c, g.n));
  }
  return r;
}

PropResult transfer_soundness(const PropConfig &cfg) {
  PropResult r{"transfer soundness", 0, 0, {}};
  Recorder rec{r};
  Rng seeds(cfg.seed + 1);
  const std::vector<Value> havoc_probe = {-6, -3, -1, 0, 1, 2, 5, 9};
  for (std::size_t i = 0; i < cfg.cases; ++i) {
    Gen g(seeds(), cfg.box, i % 4 == 3 ? 3 : 2);
    DomainKind k = g.kind();
    AbsVal d = g.element(k);
    Command c = g.command();
    bool ok = true;
    if (c.kind == Command::Kind::Assign) {
      AbsVal post = transfer_assign(d, c.var, c.expr);
      for (const Env &e : gamma(d, cfg.box)) {
        std::vector<Value> vals =
            k == DomainKind::EnvSet ? g.universe->havoc_values : havoc_probe;
        for (Value v : evaluate_all(c.expr, e, vals)) {
          Env n = e;
          n[c.var] = v;
          bool in_box = v >= -cfg.box && v <= cfg.box;
          // EnvSet drops out-of-box successors and flags the truncation.
          if (k == DomainKind::EnvSet && !in_box) {
            ok = ok && post.envset().truncated;
            continue;
          }
          ok = ok && contains(post, n);
        }
      }
      if (k == DomainKind::EnvSet) {
        // Exactness: nothing beyond the image.
        for (const Env &n : post.envset().envs) {
          bool hit = false;
          for (const Env &e : d.envset().envs)
            for (Value v : evaluate_all(c.expr, e, g.universe->havoc_values)) {
              Env m = e;
              m[c.var] = v;
              hit = hit || m == n;
            }
          ok = ok && hit;
        }
      }
      // forget is sound too
      AbsVal f = forget(d, {c.var});
      ok = ok && subset(gamma(d, cfg.box), f);
    } else {
      AbsVal post = transfer_assume(d, c.cond);
      for (const Env &e : gamma(d, cfg.box))
        if (evaluate(c.cond, e))
          ok = ok && contains(post, e);
      if (k == DomainKind::EnvSet)
        for (const Env &e : post.envset().envs)
          ok = ok && evaluate(c.cond, e) && d.envset().envs.count(e);
      // entails is sound: if it claims b, every point satisfies b.
      if (entails(d, c.cond))
        for (const Env &e : gamma(d, cfg.box))
          ok = ok && evaluate(c.cond, e);
    }
    ++r.cases;
    if (!ok) {
      Program dummy;
      dummy.vars = var_names(g.n);
      rec.fail(describe(d, g.n) + " then " + print_command(c, dummy));
    }
  }
  return r;
}

PropResult mix_soundness(const PropConfig &cfg) {
  PropResult r{"mix soundness", 0, 0, {}};
  Recorder rec{r};
  Rng seeds(cfg.seed + 2);
  for (std::size_t i = 0; i < cfg.cases; ++i) {
    Gen g(seeds(), cfg.box, i % 4 == 3 ? 3 : 2);
    DomainKind k = g.kind();
    std::vector<AbsVal> ds;
    int count = uniform(g.rng, 1, 3);
    for (int j = 0; j < count; ++j)
      ds.push_back(g.element(k));
    RegionMap regions = i % 2 ? RegionMap::singletons(var_names(g.n)) : g.regions();
    std::set<Env> all;
    for (const AbsVal &d : ds)
      for (const Env &e : gamma(d, cfg.box))
        all.insert(e);
    AbsVal m = mix_abstract(ds, regions);
    std::set<Env> want = concrete_mix(all, regions, g.n);
    bool ok = subset(want, m);
    if (k == DomainKind::EnvSet)
      ok = ok && m.envset().envs == want;
    if (k == DomainKind::Interval && regions.is_singleton_partition()) {
      AbsVal j = ds[0];
      for (std::size_t q = 1; q < ds.size(); ++q)
        j = dom_join(j, ds[q]);
      ok = ok && dom_equal(j, m);
    }
    ++r.cases;
    if (!ok)
      rec.fail(describe(ds[0], g.n) + " (+" + std::to_string(ds.size() - 1) +
               " more)");
  }
  return r;
}

PropResult closure_idempotence(const PropConfig &cfg) {
  PropResult r{"DBM closure idempotence", 0, 0, {}};
  Recorder rec{r};
  Rng seeds(cfg.seed + 3);
  for (std::size_t i = 0; i < cfg.cases; ++i) {
    Gen g(seeds(), cfg.box, i % 4 == 3 ? 3 : 2);
    OctagonElem raw = g.raw_octagon();
    std::set<Env> before = gamma(AbsVal(raw), cfg.box);
    OctagonElem once = raw;
    close_octagon(once);
    OctagonElem twice = once;
    twice.closed = false;
    close_octagon(twice);
    bool ok = once.bottom == twice.bottom && (once.bottom || once.m == twice.m);
    ok = ok && gamma(AbsVal(once), cfg.box) == before;
    // Coherence: m[i][j] == m[bar j][bar i].
    if (!once.bottom)
      for (std::size_t a = 0; a < 2 * once.n; ++a)
        for (std::size_t b = 0; b < 2 * once.n; ++b)
          ok = ok && once.at(a, b) == once.at(b ^ 1, a ^ 1);
    ++r.cases;
    if (!ok)
      rec.fail(describe(AbsVal(raw), g.n));
  }
  return r;
}

PropResult widening_stabilization(const PropConfig &cfg) {
  PropResult r{"widening stabilization", 0, 0, {}};
  Recorder rec{r};
  Rng seeds(cfg.seed + 4);
  for (std::size_t i = 0; i < cfg.cases; ++i) {
    Gen g(seeds(), cfg.box, i % 4 == 3 ? 3 : 2);
    DomainKind k = g.numeric_kind();
    std::size_t entries = k == DomainKind::Octagon ? 4 * g.n * g.n : 2 * g.n;
    std::size_t limit = 2 * entries;
    AbsVal d = g.element(k);
    AbsVal w = d;
    std::size_t changes = 0;
    bool ok = true;
    // Strictly growing chain: each step joins in a point just outside.
    for (std::size_t step = 0; step < limit + 6; ++step) {
      Env p = g.point();
      for (Value &v : p)
        v *= static_cast<Value>(step + 1);
      AbsVal next = dom_join(d, octagon_or_interval_point(k, g.n, p));
      d = next;
      AbsVal nw = dom_widen(w, dom_join(w, d));
      if (!dom_leq(d, nw))
        ok = false;
      if (!dom_equal(nw, w))
        ++changes;
      w = nw;
    }
    ok = ok && changes <= limit;
    ++r.cases;
    if (!ok)
      rec.fail(describe(w, g.n) + " after " + std::to_string(changes) + " changes");
  }
  return r;
}

std::vector<PropResult> run_all(const PropConfig &cfg) {
  return {lattice_laws(cfg), transfer_soundness(cfg), mix_soundness(cfg),
          closure_idempotence(cfg), widening_stabilization(cfg)};
}

} // namespace syncdrf::props

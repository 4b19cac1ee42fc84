#include "syncdrf/engine.hpp"

#include <deque>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace syncdrf {

std::string_view to_string(AnalysisKind k) {
  switch (k) {
  case AnalysisKind::ValSet: return "valset";
  case AnalysisKind::Rel: return "rel";
  case AnalysisKind::RegRel: return "regrel";
  }
  return "?";
}

AnalysisConfig normalize(const AnalysisConfig &cfg) {
  AnalysisConfig c = cfg;
  if (c.analysis == AnalysisKind::ValSet && c.domain == DomainKind::Octagon)
    c.domain = DomainKind::Interval;
  return c;
}

RegionMap mix_regions(const Program &p, const AnalysisConfig &cfg) {
  if (cfg.analysis != AnalysisKind::RegRel)
    return RegionMap::singletons(p.vars);
  return cfg.regions ? *cfg.regions : p.regions;
}

namespace {

void collect_constants(const Expr &e, std::set<Bound> &out) {
  if (e.kind == Expr::Kind::Const)
    out.insert(e.value);
  if (e.kind == Expr::Kind::Scale)
    out.insert(e.value);
  for (const Expr &a : e.args)
    collect_constants(a, out);
}

void collect_constants(const BoolExpr &b, std::set<Bound> &out) {
  for (const Expr &e : b.operands)
    collect_constants(e, out);
  for (const BoolExpr &a : b.args)
    collect_constants(a, out);
}

} // namespace

std::vector<Bound> widening_thresholds(const Program &p) {
  std::set<Bound> cs{0};
  for (const Instruction &ins : p.instructions) {
    if (ins.command.kind == Command::Kind::Assign)
      collect_constants(ins.command.expr, cs);
    if (ins.command.kind == Command::Kind::Assume)
      collect_constants(ins.command.cond, cs);
  }
  std::set<Bound> out;
  for (Bound c : cs)
    for (Bound d : {c - 1, c, c + 1}) {
      out.insert(d);
      out.insert(-d);
    }
  return {out.begin(), out.end()};
}

namespace {

struct Context {
  const Program &p;
  const SyncCFG &g;
  AnalysisConfig cfg;
  RegionMap regions;
  RegionMap singles;
  std::shared_ptr<const EnvUniverse> universe;
  std::map<Loc, std::vector<const SyncEdge *>> sync_into; // pre-acquire -> edges
  std::map<Loc, std::vector<Loc>> sync_out;               // post-release -> pre-acquires
  std::map<Loc, std::vector<std::size_t>> incoming;

  Context(const Program &prog, const SyncCFG &graph, const AnalysisConfig &c)
      : p(prog), g(graph), cfg(normalize(c)), regions(mix_regions(prog, cfg)),
        singles(RegionMap::singletons(prog.vars)) {
    if (cfg.domain == DomainKind::EnvSet) {
      auto u = make_universe(p.vars.size(), cfg.box_lo, cfg.box_hi, cfg.havoc_values);
      universe = u;
    }
    for (const SyncEdge &e : g.sync_edges) {
      sync_into[e.to].push_back(&e);
      sync_out[e.from].push_back(e.to);
    }
    for (std::size_t i = 0; i < p.instructions.size(); ++i)
      incoming[p.instructions[i].target].push_back(i);
  }

  RecencyTagged bottom() const {
    return {make_bottom(cfg.domain, p.vars.size(), universe), {}};
  }
  RecencyTagged zero() const {
    return {make_zero(cfg.domain, p.vars.size(), universe), {}};
  }

  bool cartesian() const {
    return cfg.analysis == AnalysisKind::ValSet && cfg.domain == DomainKind::EnvSet;
  }

  RecencyTagged transfer(const std::map<Loc, RecencyTagged> &facts,
                         std::size_t idx) const {
    const Instruction &ins = p.instructions[idx];
    const RecencyTagged &in = facts.at(ins.source);
    if (is_bottom(in.base))
      return bottom();
    RecencyTagged out;
    const Command &c = ins.command;
    if (c.kind == Command::Kind::Acquire) {
      std::vector<AbsVal> inputs{in.base};
      out.tids = in.tids;
      auto it = sync_into.find(ins.source);
      if (it != sync_into.end())
        for (const SyncEdge *e : it->second) {
          if (e->lock != c.lock)
            continue;
          const RecencyTagged &buf = facts.at(e->from);
          if (is_bottom(buf.base))
            continue;
          if (cfg.recency && !recency_admit_sync(ins.thread, buf))
            continue;
          inputs.push_back(buf.base);
          out.tids.insert(buf.tids.begin(), buf.tids.end());
        }
      out.base = mix_abstract(inputs, regions);
    } else {
      out = recency_apply(ins.thread, c, in);
    }
    if (!cfg.recency)
      out.tids.clear();
    if (cartesian())
      out.base = mix_abstract({out.base}, singles);
    return out;
  }

  std::set<Loc> widen_points() const {
    std::set<Loc> out;
    for (const ThreadCFG &t : p.threads) {
      // Back-edge targets under DFS from the entry.
      std::map<Loc, int> state; // 1 on stack, 2 done
      std::function<void(Loc)> dfs = [&](Loc n) {
        state[n] = 1;
        for (std::size_t i : p.outgoing(n)) {
          Loc m = p.instructions[i].target;
          if (state[m] == 1)
            out.insert(m);
          else if (state[m] == 0)
            dfs(m);
        }
        state[n] = 2;
      };
      dfs(t.entry);
    }
    for (const Instruction &ins : p.instructions)
      if (ins.command.kind == Command::Kind::Acquire) {
        out.insert(ins.source);
        out.insert(ins.target);
      }
    return out;
  }
};

bool leq(const RecencyTagged &a, const RecencyTagged &b) {
  if (is_bottom(a.base))
    return true;
  if (!dom_leq(a.base, b.base))
    return false;
  return std::includes(b.tids.begin(), b.tids.end(), a.tids.begin(), a.tids.end());
}

RecencyTagged join(const RecencyTagged &a, const RecencyTagged &b) {
  RecencyTagged r{dom_join(a.base, b.base), a.tids};
  r.tids.insert(b.tids.begin(), b.tids.end());
  return r;
}

std::map<Loc, RecencyTagged> initial_facts(const Context &cx) {
  std::map<Loc, RecencyTagged> facts;
  for (const ThreadCFG &t : cx.p.threads)
    for (Loc n : t.locations)
      facts[n] = cx.bottom();
  for (const ThreadCFG &t : cx.p.threads)
    facts[t.entry] = cx.zero();
  return facts;
}

std::vector<std::string> violations(const Context &cx,
                                    const std::map<Loc, RecencyTagged> &facts) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < cx.p.instructions.size(); ++i) {
    const Instruction &ins = cx.p.instructions[i];
    if (!leq(cx.transfer(facts, i), facts.at(ins.target)))
      out.push_back(std::to_string(ins.source) + " -[" +
                    print_command(ins.command, cx.p) + "]-> " +
                    std::to_string(ins.target));
  }
  for (const ThreadCFG &t : cx.p.threads)
    if (!leq(cx.zero(), facts.at(t.entry)))
      out.push_back("entry " + std::to_string(t.entry));
  return out;
}

bool any_clamped(const std::map<Loc, RecencyTagged> &facts) {
  for (const auto &[n, f] : facts)
    if (f.base.kind() == DomainKind::EnvSet && f.base.envset().truncated)
      return true;
  return false;
}

} // namespace

LocationFacts analyze_fixpoint(const Program &p, const SyncCFG &g,
                               const AnalysisConfig &cfg) {
  Context cx(p, g, cfg);
  LocationFacts result;
  std::map<Loc, RecencyTagged> facts = initial_facts(cx);
  const bool can_widen = cx.cfg.domain != DomainKind::EnvSet;
  const std::set<Loc> wpoints = can_widen ? cx.widen_points() : std::set<Loc>{};
  std::map<Loc, int> updates;
  const std::vector<Bound> thresholds =
      cx.cfg.widen_thresholds ? widening_thresholds(p) : std::vector<Bound>{};

  std::deque<Loc> work;
  std::set<Loc> queued;
  auto push = [&](Loc n) {
    if (queued.insert(n).second)
      work.push_back(n);
  };
  for (const ThreadCFG &t : p.threads)
    push(t.entry);

  while (!work.empty()) {
    Loc n = work.front();
    work.pop_front();
    queued.erase(n);
    if (++result.visits > cx.cfg.iteration_cap)
      throw EngineError("fixpoint did not converge within " +
                        std::to_string(cx.cfg.iteration_cap) +
                        " visits; last location " + std::to_string(n));
    for (std::size_t i : p.outgoing(n)) {
      Loc m = p.instructions[i].target;
      RecencyTagged out = cx.transfer(facts, i);
      if (out.base.kind() == DomainKind::EnvSet && out.base.envset().truncated)
        result.clamped = true;
      RecencyTagged &old = facts.at(m);
      if (leq(out, old))
        continue;
      RecencyTagged next = join(old, out);
      if (wpoints.count(m) && updates[m] >= cx.cfg.widen_delay)
        next.base = dom_widen_thresholds(old.base, next.base, thresholds);
      ++updates[m];
      old = std::move(next);
      push(m);
      auto s = cx.sync_out.find(m);
      if (s != cx.sync_out.end())
        for (Loc a : s->second)
          push(a);
    }
  }

  // One descending pass, kept only if it is still a post-fixpoint.
  if (can_widen && !wpoints.empty()) {
    std::map<Loc, RecencyTagged> down = facts;
    std::set<Loc> entries;
    for (const ThreadCFG &t : p.threads)
      entries.insert(t.entry);
    for (auto &[n, f] : down) {
      RecencyTagged acc = entries.count(n) ? cx.zero() : cx.bottom();
      auto it = cx.incoming.find(n);
      if (it != cx.incoming.end())
        for (std::size_t i : it->second)
          acc = join(acc, cx.transfer(down, i));
      f = std::move(acc);
    }
    if (violations(cx, down).empty()) {
      facts = std::move(down);
      result.narrowed = true;
    }
  }

  result.facts = std::move(facts);
  result.clamped = result.clamped || any_clamped(result.facts);
  return result;
}

std::vector<std::string> check_post_fixpoint(const Program &p, const SyncCFG &g,
                                             const AnalysisConfig &cfg,
                                             const LocationFacts &facts) {
  Context cx(p, g, cfg);
  return violations(cx, facts.facts);
}

LocationFacts collecting_fixpoint(const Program &p, const SyncCFG &g,
                                  AnalysisConfig cfg, Value lo, Value hi,
                                  bool allow_clamp) {
  cfg.domain = DomainKind::EnvSet;
  cfg.box_lo = lo;
  cfg.box_hi = hi;
  cfg.iteration_cap = std::max<std::size_t>(cfg.iteration_cap, 1000000);
  LocationFacts f = analyze_fixpoint(p, g, cfg);
  if (f.clamped && !allow_clamp)
    throw BoxOverflowError("collecting fixpoint left the box [" +
                           std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return f;
}

std::set<Env> drop_versions(const std::set<VersionedEnv> &s) {
  std::set<Env> out;
  for (const VersionedEnv &e : s)
    out.insert(e.phi);
  return out;
}

VersionedFacts collecting_vrel(const Program &p, const SyncCFG &g, Value lo,
                               Value hi, Version version_cap,
                               const std::vector<Value> &havoc_values) {
  VersionedFacts r;
  auto &facts = r.facts;
  for (const ThreadCFG &t : p.threads)
    for (Loc n : t.locations)
      facts[n];
  for (const ThreadCFG &t : p.threads)
    facts[t.entry].insert(zero_env(p));
  std::map<Loc, std::vector<const SyncEdge *>> into;
  std::map<Loc, std::vector<Loc>> out_sync;
  for (const SyncEdge &e : g.sync_edges) {
    into[e.to].push_back(&e);
    out_sync[e.from].push_back(e.to);
  }
  auto fits = [&](const VersionedEnv &e) {
    for (VarId x = 0; x < e.phi.size(); ++x)
      if (e.phi[x] < lo || e.phi[x] > hi || e.nu[x] > version_cap)
        return false;
    return true;
  };

  std::deque<Loc> work;
  std::set<Loc> queued;
  auto push = [&](Loc n) {
    if (queued.insert(n).second)
      work.push_back(n);
  };
  for (const ThreadCFG &t : p.threads)
    push(t.entry);
  while (!work.empty()) {
    Loc n = work.front();
    work.pop_front();
    queued.erase(n);
    for (std::size_t i : p.outgoing(n)) {
      const Instruction &ins = p.instructions[i];
      const Command &c = ins.command;
      std::set<VersionedEnv> out;
      auto add = [&](VersionedEnv e) {
        if (fits(e))
          out.insert(std::move(e));
        else
          r.clamped = true;
      };
      const std::set<VersionedEnv> &in = facts.at(n);
      switch (c.kind) {
      case Command::Kind::Assign:
        for (const VersionedEnv &e : in)
          for (Value v : evaluate_all(c.expr, e.phi, havoc_values)) {
            VersionedEnv m = e;
            m.phi[c.var] = v;
            ++m.nu[c.var];
            add(std::move(m));
          }
        break;
      case Command::Kind::Assume:
        for (const VersionedEnv &e : in)
          if (evaluate(c.cond, e.phi))
            out.insert(e);
        break;
      case Command::Kind::Release: out = in; break;
      case Command::Kind::Acquire: {
        // updEnv against the union of the buffers of m. Initial buffers
        // hold the zero environment, which never wins a version comparison.
        std::vector<VersionedEnv> xs;
        if (auto it = into.find(n); it != into.end())
          for (const SyncEdge *e : it->second)
            if (e->lock == c.lock)
              xs.insert(xs.end(), facts.at(e->from).begin(), facts.at(e->from).end());
        for (const VersionedEnv &e : in)
          for (VersionedEnv u : upd_env(e, xs))
            add(std::move(u));
        break;
      }
      }
      std::set<VersionedEnv> &dst = facts.at(ins.target);
      std::size_t before = dst.size();
      dst.insert(out.begin(), out.end());
      if (dst.size() != before) {
        push(ins.target);
        if (auto s = out_sync.find(ins.target); s != out_sync.end())
          for (Loc a : s->second)
            push(a);
      }
    }
  }
  return r;
}

std::string stable_constraints(const std::set<Env> &inner, const std::set<Env> &outer,
                               const std::vector<std::string> &vars) {
  if (inner.empty())
    return "false";
  AbsVal a = octagon_hull(vars.size(), inner);
  AbsVal b = octagon_hull(vars.size(), outer);
  OctagonElem o = b.octagon();
  for (std::size_t k = 0; k < o.m.size(); ++k)
    if (o.m[k] != a.octagon().m[k])
      o.m[k] = kInf;
  o.closed = false;
  return to_constraints(AbsVal(std::move(o)), vars);
}

std::map<Loc, std::string> stable_collecting_facts(const Program &p,
                                                   const SyncCFG &g,
                                                   CollectingKind kind, Value box) {
  std::map<Loc, std::string> out;
  if (kind == CollectingKind::VRel) {
    VersionedFacts a = collecting_vrel(p, g, 0, box, box);
    VersionedFacts b = collecting_vrel(p, g, 0, box + 2, box + 2);
    for (const auto &[n, s] : a.facts)
      out[n] = stable_constraints(drop_versions(s), drop_versions(b.facts.at(n)), p.vars);
    return out;
  }
  AnalysisConfig cfg;
  cfg.analysis = kind == CollectingKind::Rel      ? AnalysisKind::Rel
                 : kind == CollectingKind::RegRel ? AnalysisKind::RegRel
                                                  : AnalysisKind::ValSet;
  LocationFacts a = collecting_fixpoint(p, g, cfg, 0, box, true);
  LocationFacts b = collecting_fixpoint(p, g, cfg, 0, box + 2, true);
  for (const auto &[n, f] : a.facts)
    out[n] = stable_constraints(f.base.envset().envs, b.at(n).base.envset().envs,
                                p.vars);
  return out;
}

std::vector<NamedConfig> standard_configs(const RegionMap &regions) {
  auto make = [&](AnalysisKind a, DomainKind d, bool recency) {
    AnalysisConfig c;
    c.analysis = a;
    c.domain = d;
    c.recency = recency;
    c.regions = regions;
    return c;
  };
  return {{"VS", make(AnalysisKind::ValSet, DomainKind::Interval, false)},
          {"RelNoT", make(AnalysisKind::Rel, DomainKind::Octagon, false)},
          {"RelT", make(AnalysisKind::Rel, DomainKind::Octagon, true)},
          {"RegNoT", make(AnalysisKind::RegRel, DomainKind::Octagon, false)},
          {"RegT", make(AnalysisKind::RegRel, DomainKind::Octagon, true)}};
}

std::vector<std::string> precision_order_violations(const Program &p,
                                                    const SyncCFG &g,
                                                    const RegionMap &regions,
                                                    Value box) {
  std::vector<NamedConfig> cs = standard_configs(regions);
  std::vector<LocationFacts> fs;
  for (const NamedConfig &c : cs)
    fs.push_back(analyze_fixpoint(p, g, c.cfg));
  // (more precise, less precise) index pairs
  const std::pair<int, int> order[] = {{1, 0}, {2, 1}, {4, 2}, {3, 1}, {4, 3}};
  std::vector<std::string> out;
  for (auto [fine, coarse] : order)
    for (const auto &[n, f] : fs[fine].facts)
      for (const Env &e : points_in_box(f.base, -box, box))
        if (!contains(fs[coarse].at(n).base, e)) {
          out.push_back(cs[fine].name + " not within " + cs[coarse].name +
                        " at " + std::to_string(n));
          break;
        }
  return out;
}

std::vector<std::string> constraint_list(const AbsVal &d,
                                         const std::vector<std::string> &vars) {
  std::string s = to_constraints(d, vars);
  std::vector<std::string> out;
  if (s == "true")
    return out;
  std::size_t start = 0;
  for (;;) {
    std::size_t k = s.find(", ", start);
    out.push_back(s.substr(start, k - start));
    if (k == std::string::npos)
      break;
    start = k + 2;
  }
  return out;
}

std::string facts_to_json(const Program &p, const LocationFacts &facts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto &[n, f] : facts.facts) {
    nlohmann::json tids = nlohmann::json::array();
    for (ThreadId t : f.tids)
      tids.push_back(p.threads[t].name);
    arr.push_back({{"location", n},
                   {"thread", p.threads[p.thread_of(n)].name},
                   {"constraints", constraint_list(f.base, p.vars)},
                   {"recency_tids", tids}});
  }
  return arr.dump(2);
}

} // namespace syncdrf

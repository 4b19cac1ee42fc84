#include "syncdrf/concrete.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace syncdrf {

StdState initial_state(const Program &p) {
  StdState s;
  for (const ThreadCFG &t : p.threads)
    s.pc.push_back(t.entry);
  s.mu.assign(p.locks.size(), kNoHolder);
  s.phi.assign(p.vars.size(), 0);
  return s;
}

std::vector<StdState> std_step(const Program &p, const StdState &s,
                               const Instruction &ins,
                               const std::vector<Value> &havoc_values) {
  (void)p;
  std::vector<StdState> out;
  const ThreadId t = ins.thread;
  if (s.pc.at(t) != ins.source)
    return out;
  const Command &c = ins.command;
  switch (c.kind) {
  case Command::Kind::Assign:
    for (Value v : evaluate_all(c.expr, s.phi, havoc_values)) {
      StdState n = s;
      n.phi[c.var] = v;
      n.pc[t] = ins.target;
      out.push_back(std::move(n));
    }
    break;
  case Command::Kind::Assume:
    if (evaluate(c.cond, s.phi)) {
      out.push_back(s);
      out.back().pc[t] = ins.target;
    }
    break;
  case Command::Kind::Acquire:
    if (s.mu.at(c.lock) == kNoHolder) {
      out.push_back(s);
      out.back().mu[c.lock] = static_cast<int>(t);
      out.back().pc[t] = ins.target;
    }
    break;
  case Command::Kind::Release:
    if (s.mu.at(c.lock) == static_cast<int>(t)) {
      out.push_back(s);
      out.back().mu[c.lock] = kNoHolder;
      out.back().pc[t] = ins.target;
    }
    break;
  }
  return out;
}

namespace {

// Depth-first walk shared by execution enumeration and race search. The
// hooks see each step as it is pushed and popped.
struct Walker {
  const Program &p;
  const ExploreOptions &opts;
  Execution path;
  std::size_t visited = 0;
  bool stopped = false;
  std::function<bool(const Execution &)> on_node;
  std::function<void(const Transition &)> on_push;
  std::function<void()> on_pop;

  void run() {
    path.initial = initial_state(p);
    path.steps.clear();
    dfs(opts.depth);
  }

  void dfs(int remaining) {
    if (++visited > opts.budget)
      throw ResourceLimitError("exploration budget of " +
                               std::to_string(opts.budget) + " exceeded");
    if (on_node && !on_node(path)) {
      stopped = true;
      return;
    }
    if (remaining <= 0)
      return;
    StdState cur = path.last();
    for (ThreadId t = 0; t < p.threads.size() && !stopped; ++t) {
      for (std::size_t idx : p.outgoing(cur.pc[t])) {
        const Instruction &ins = p.instructions[idx];
        for (StdState &next : std_step(p, cur, ins, opts.havoc_values)) {
          path.steps.push_back({cur, t, idx, std::move(next)});
          if (on_push)
            on_push(path.steps.back());
          dfs(remaining - (ins.auxiliary ? 0 : 1));
          if (on_pop)
            on_pop();
          path.steps.pop_back();
          if (stopped)
            return;
        }
      }
    }
  }
};

} // namespace

void enumerate_executions(const Program &p, const ExploreOptions &opts,
                          const std::function<bool(const Execution &)> &visit) {
  Walker w{p, opts, {}, 0, false, visit, nullptr, nullptr};
  w.run();
}

std::set<StdState> reachable_states(const Program &p, const ExploreOptions &opts) {
  std::set<StdState> seen{initial_state(p)};
  std::vector<StdState> frontier{initial_state(p)};
  for (int d = 0; d < opts.depth && !frontier.empty(); ++d) {
    std::vector<StdState> next;
    for (const StdState &s : frontier)
      for (ThreadId t = 0; t < p.threads.size(); ++t)
        for (std::size_t idx : p.outgoing(s.pc[t]))
          for (StdState &n : std_step(p, s, p.instructions[idx], opts.havoc_values))
            if (seen.insert(n).second) {
              if (seen.size() > opts.budget)
                throw ResourceLimitError("state budget exceeded");
              next.push_back(std::move(n));
            }
    frontier = std::move(next);
  }
  return seen;
}

HappensBefore happens_before(const Program &p, const Execution &e) {
  HappensBefore r;
  const std::size_t n = e.steps.size();
  std::vector<std::vector<std::size_t>> preds(n);
  std::map<ThreadId, std::size_t> last_of_thread;
  std::map<LockId, std::size_t> last_release;
  for (std::size_t j = 0; j < n; ++j) {
    const Transition &tr = e.steps[j];
    auto it = last_of_thread.find(tr.tid);
    if (it != last_of_thread.end()) {
      r.po.push_back({it->second, j});
      preds[j].push_back(it->second);
    }
    last_of_thread[tr.tid] = j;
    const Command &c = p.instructions[tr.instr].command;
    if (c.kind == Command::Kind::Acquire) {
      auto rel = last_release.find(c.lock);
      if (rel != last_release.end()) {
        r.sw.push_back({rel->second, j});
        preds[j].push_back(rel->second);
        // Only the next acquire synchronizes with this release.
        last_release.erase(rel);
      }
    } else if (c.kind == Command::Kind::Release) {
      last_release[c.lock] = j;
    }
  }
  r.hb.assign(n, std::vector<bool>(n, false));
  for (std::size_t j = 0; j < n; ++j) {
    r.hb[j][j] = true;
    for (std::size_t k : preds[j])
      for (std::size_t i = 0; i <= k; ++i)
        if (r.hb[i][k])
          r.hb[i][j] = true;
  }
  return r;
}

namespace {

using Clock = std::vector<std::uint32_t>;

struct Event {
  ThreadId tid;
  Clock clock;
  std::vector<std::size_t> reads, writes; // sorted units
  std::size_t instr;
};

std::vector<std::size_t> lift_units(const std::set<VarId> &vars,
                                    const RegionMap &lift) {
  std::vector<std::size_t> out;
  for (VarId v : vars)
    out.push_back(lift.region_of.at(v));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool contains(const std::vector<std::size_t> &xs, std::size_t u) {
  return std::binary_search(xs.begin(), xs.end(), u);
}

} // namespace

std::vector<RaceReport> find_races(const Program &p, const RegionMap &lift,
                                   const RaceSearchOptions &opts) {
  std::vector<RaceReport> out;
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  std::set<std::size_t> found_units;

  // Access sets per instruction, lifted once.
  std::vector<std::vector<std::size_t>> ins_reads, ins_writes;
  for (const Instruction &ins : p.instructions) {
    AccessSets a = access_sets(ins.command);
    ins_reads.push_back(lift_units(a.reads, lift));
    ins_writes.push_back(lift_units(a.writes, lift));
  }

  const std::size_t nt = p.threads.size();
  std::vector<Clock> thread_clock(nt, Clock(nt, 0));
  std::vector<Clock> lock_clock(p.locks.size(), Clock(nt, 0));
  std::vector<Event> events;
  // Undo log for clocks.
  struct Saved {
    ThreadId tid;
    Clock thread;
    std::optional<std::pair<LockId, Clock>> lock;
  };
  std::vector<Saved> undo;

  Walker w{p, opts.explore, {}, 0, false, nullptr, nullptr, nullptr};

  auto wanted = [&](std::size_t u) {
    return opts.units.empty() || opts.units.count(u) > 0;
  };

  w.on_push = [&](const Transition &tr) {
    Saved sv{tr.tid, thread_clock[tr.tid], std::nullopt};
    Clock &c = thread_clock[tr.tid];
    ++c[tr.tid];
    const Command &cmd = p.instructions[tr.instr].command;
    if (cmd.kind == Command::Kind::Acquire) {
      const Clock &l = lock_clock[cmd.lock];
      for (std::size_t k = 0; k < nt; ++k)
        c[k] = std::max(c[k], l[k]);
    } else if (cmd.kind == Command::Kind::Release) {
      sv.lock = {cmd.lock, lock_clock[cmd.lock]};
      lock_clock[cmd.lock] = c;
    }
    undo.push_back(std::move(sv));
    Event ev{tr.tid, c, ins_reads[tr.instr], ins_writes[tr.instr], tr.instr};
    const std::size_t j = events.size();
    for (std::size_t i = 0; i < j; ++i) {
      const Event &prev = events[i];
      if (prev.tid == ev.tid || prev.clock[prev.tid] <= ev.clock[prev.tid])
        continue;
      if (opts.involving && prev.instr != *opts.involving &&
          ev.instr != *opts.involving)
        continue;
      auto report = [&](std::size_t u) {
        if (!wanted(u))
          return;
        auto key = std::make_tuple(prev.instr, ev.instr, u);
        if (!seen.insert(key).second)
          return;
        found_units.insert(u);
        RaceReport r;
        r.execution = w.path;
        r.first = i;
        r.second = j;
        r.instr_first = prev.instr;
        r.instr_second = ev.instr;
        r.unit = u;
        r.unit_name = lift.names.at(u);
        out.push_back(std::move(r));
      };
      for (std::size_t u : ev.writes)
        if (contains(prev.writes, u) || contains(prev.reads, u))
          report(u);
      for (std::size_t u : ev.reads)
        if (contains(prev.writes, u) && !contains(ev.writes, u))
          report(u);
    }
    events.push_back(std::move(ev));
  };
  w.on_pop = [&]() {
    Saved &sv = undo.back();
    thread_clock[sv.tid] = std::move(sv.thread);
    if (sv.lock)
      lock_clock[sv.lock->first] = std::move(sv.lock->second);
    undo.pop_back();
    events.pop_back();
  };
  w.on_node = [&](const Execution &) {
    if (!opts.stop_when_all_found || opts.units.empty())
      return true;
    return !std::includes(found_units.begin(), found_units.end(),
                          opts.units.begin(), opts.units.end());
  };
  w.run();
  std::stable_sort(out.begin(), out.end(), [](const RaceReport &a, const RaceReport &b) {
    return std::tie(a.instr_first, a.instr_second, a.unit) <
           std::tie(b.instr_first, b.instr_second, b.unit);
  });
  return out;
}

std::vector<RaceReport> find_data_races(const Program &p,
                                        const ExploreOptions &opts) {
  RaceSearchOptions o;
  o.explore = opts;
  return find_races(p, RegionMap::singletons(p.vars), o);
}

std::vector<RaceReport> find_region_races(const Program &p,
                                          const RegionMap &regions,
                                          const ExploreOptions &opts) {
  RaceSearchOptions o;
  o.explore = opts;
  return find_races(p, regions, o);
}

static std::string fresh_name(const std::vector<std::string> &taken,
                              std::string base) {
  while (std::find(taken.begin(), taken.end(), base) != taken.end())
    base += "_";
  return base;
}

RegionTranslation translate_for_region_races(const Program &p,
                                             const RegionMap &regions) {
  RegionTranslation tr;
  Program q = p;
  q.instructions.clear();
  // The result is a bare control-flow graph.
  for (ThreadCFG &th : q.threads)
    th.body.clear();
  for (RegionId r = 0; r < regions.size(); ++r) {
    tr.region_var.push_back(q.vars.size());
    q.vars.push_back(fresh_name(q.vars, "X_" + regions.names[r]));
  }
  // Thread-local copies read regions on behalf of assume statements.
  std::map<std::pair<ThreadId, RegionId>, VarId> local;
  auto local_var = [&](ThreadId t, RegionId r) {
    auto it = local.find({t, r});
    if (it != local.end())
      return it->second;
    VarId v = q.vars.size();
    q.vars.push_back(fresh_name(q.vars, "L_" + p.threads[t].name + "_" +
                                            regions.names[r]));
    local[{t, r}] = v;
    return v;
  };
  Loc next_loc = p.max_loc + 1;
  auto new_loc = [&](ThreadId t) {
    q.threads[t].locations.push_back(next_loc);
    return next_loc++;
  };
  auto emit = [&](Loc from, Command c, Loc to, ThreadId t, bool aux,
                  std::size_t origin) {
    q.instructions.push_back({from, std::move(c), to, t, aux});
    tr.origin.push_back(origin);
  };
  auto regions_of = [&](const std::set<VarId> &vars) {
    std::set<RegionId> out;
    for (VarId v : vars)
      out.insert(regions.region_of.at(v));
    return out;
  };

  // Assume edges leaving one location share a single prefix chain: the
  // branches of a desugared `while`/`if` read the same variables and exactly
  // one of them is enabled.
  std::map<Loc, Loc> assume_start;
  for (Loc n = 1; n <= p.max_loc; ++n) {
    const auto &outs = p.outgoing(n);
    if (outs.empty())
      continue;
    std::set<RegionId> read;
    bool all_assume = true;
    for (std::size_t idx : outs) {
      const Command &c = p.instructions[idx].command;
      if (c.kind != Command::Kind::Assume)
        all_assume = false;
      else
        for (RegionId r : regions_of(access_sets(c).reads))
          read.insert(r);
    }
    if (!all_assume || read.empty())
      continue;
    ThreadId t = p.instructions[outs.front()].thread;
    Loc cur = n;
    for (RegionId r : read) {
      Loc nx = new_loc(t);
      emit(cur, Command::assign(local_var(t, r), Expr::variable(tr.region_var[r])),
           nx, t, true, outs.front());
      cur = nx;
    }
    assume_start[n] = cur;
  }

  for (std::size_t idx = 0; idx < p.instructions.size(); ++idx) {
    const Instruction &ins = p.instructions[idx];
    const Command &c = ins.command;
    if (c.kind == Command::Kind::Assign) {
      RegionId w = regions.region_of.at(c.var);
      std::set<RegionId> reads = regions_of(access_sets(c).reads);
      if (reads.empty())
        reads.insert(w);
      Loc cur = ins.source;
      for (RegionId r : reads) {
        Loc nx = new_loc(ins.thread);
        emit(cur,
             Command::assign(tr.region_var[w], Expr::variable(tr.region_var[r])),
             nx, ins.thread, true, idx);
        cur = nx;
      }
      emit(cur, c, ins.target, ins.thread, false, idx);
    } else if (c.kind == Command::Kind::Assume && assume_start.count(ins.source)) {
      emit(assume_start[ins.source], c, ins.target, ins.thread, false, idx);
    } else {
      emit(ins.source, c, ins.target, ins.thread, false, idx);
    }
  }
  q.max_loc = next_loc - 1;
  q.regions = RegionMap::singletons(q.vars);
  reindex(q);
  tr.program = std::move(q);
  return tr;
}

std::set<std::tuple<Loc, Loc, RegionId>>
region_races_via_translation(const Program &p, const RegionMap &regions,
                             const ExploreOptions &opts) {
  RegionTranslation tr = translate_for_region_races(p, regions);
  RaceSearchOptions o;
  o.explore = opts;
  o.units.insert(tr.region_var.begin(), tr.region_var.end());
  auto races = find_races(tr.program, RegionMap::singletons(tr.program.vars), o);
  std::set<std::tuple<Loc, Loc, RegionId>> keys;
  for (const RaceReport &r : races) {
    Loc a = p.instructions[tr.origin[r.instr_first]].source;
    Loc b = p.instructions[tr.origin[r.instr_second]].source;
    RegionId reg = std::find(tr.region_var.begin(), tr.region_var.end(), r.unit) -
                   tr.region_var.begin();
    keys.insert({std::min(a, b), std::max(a, b), reg});
  }
  return keys;
}

std::set<std::tuple<Loc, Loc, RegionId>>
region_race_keys(const Program &p, const std::vector<RaceReport> &races) {
  std::set<std::tuple<Loc, Loc, RegionId>> keys;
  for (const RaceReport &r : races) {
    Loc a = p.instructions[r.instr_first].source;
    Loc b = p.instructions[r.instr_second].source;
    keys.insert({std::min(a, b), std::max(a, b), r.unit});
  }
  return keys;
}

std::set<VarId> owned_vars_oracle(const Program &p, ThreadId t, Loc n,
                                  const ExploreOptions &opts) {
  if (p.thread_of(n) != t)
    throw std::invalid_argument("location " + std::to_string(n) +
                                " is not in thread " + p.threads.at(t).name);
  std::set<VarId> all;
  for (VarId v = 0; v < p.vars.size(); ++v)
    all.insert(v);
  if (p.vars.empty())
    return all;
  // Split n: the probe runs from n to a fresh location that takes over n's
  // outgoing edges.
  Program q = p;
  Loc split = q.max_loc + 1;
  q.max_loc = split;
  q.threads[t].locations.push_back(split);
  for (Instruction &ins : q.instructions)
    if (ins.source == n)
      ins.source = split;
  BoolExpr probe = BoolExpr::truth();
  for (VarId v = 0; v < p.vars.size(); ++v) {
    BoolExpr eq = BoolExpr::cmp(CmpOp::Eq, Expr::variable(v), Expr::variable(v));
    probe = v == 0 ? eq : BoolExpr::conj(std::move(probe), std::move(eq));
  }
  std::size_t probe_idx = q.instructions.size();
  q.instructions.push_back({n, Command::assume(probe), split, t, true});
  reindex(q);

  RaceSearchOptions o;
  o.explore = opts;
  // One extra step lets the probe fire at states reached at full depth.
  o.explore.depth = opts.depth + 1;
  o.units = all;
  o.involving = probe_idx;
  o.stop_when_all_found = true;
  for (const RaceReport &r : find_races(q, RegionMap::singletons(q.vars), o))
    all.erase(r.unit);
  return all;
}

std::string format_state(const Program &p, const StdState &s) {
  std::ostringstream os;
  os << "pc=[";
  for (std::size_t t = 0; t < s.pc.size(); ++t)
    os << (t ? "," : "") << p.threads[t].name << ":" << s.pc[t];
  os << "] mu=[";
  for (std::size_t m = 0; m < s.mu.size(); ++m)
    os << (m ? "," : "") << p.locks[m] << ":"
       << (s.mu[m] == kNoHolder ? std::string("-") : p.threads[s.mu[m]].name);
  os << "] phi=[";
  for (std::size_t v = 0; v < s.phi.size(); ++v)
    os << (v ? "," : "") << p.vars[v] << "=" << s.phi[v];
  os << "]";
  return os.str();
}

std::string format_trace(const Program &p, const Execution &e) {
  std::ostringstream os;
  for (const Transition &tr : e.steps) {
    const Instruction &ins = p.instructions[tr.instr];
    os << p.threads[tr.tid].name << " " << ins.source << " -["
       << print_command(ins.command, p) << "]-> " << ins.target << "\n";
  }
  HappensBefore hb = happens_before(p, e);
  auto edges = [&](const char *label,
                   const std::vector<std::pair<std::size_t, std::size_t>> &es) {
    os << label << ":";
    for (auto [a, b] : es)
      os << " " << a << "->" << b;
    os << "\n";
  };
  edges("po", hb.po);
  edges("sw", hb.sw);
  return os.str();
}

} // namespace syncdrf

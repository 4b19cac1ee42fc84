#include "syncdrf/difftest.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"

namespace syncdrf {

namespace {

constexpr std::size_t kKeptViolations = 20;

void record(CheckResult &r, std::string witness, std::string explanation) {
  ++r.violation_count;
  if (r.violations.size() < kKeptViolations)
    r.violations.push_back({std::move(witness), std::move(explanation)});
}

std::string step_label(const Program &p, const Instruction &ins) {
  return p.threads[ins.thread].name + " " + std::to_string(ins.source) + " -[" +
         print_command(ins.command, p) + "]-> " + std::to_string(ins.target);
}

std::string trail_text(const std::vector<std::string> &trail) {
  std::string s;
  for (const std::string &l : trail)
    s += l + "\n";
  return s;
}

void require_race_free(const Program &p, const MetaOptions &opts) {
  if (opts.assume_race_free)
    return;
  ExploreOptions e;
  e.depth = opts.depth;
  e.havoc_values = opts.havoc_values;
  auto races = find_data_races(p, e);
  if (!races.empty())
    throw PreconditionError("program has a data race on " + races[0].unit_name +
                            " within depth " + std::to_string(opts.depth));
}

int step_cost(const Instruction &ins) { return ins.auxiliary ? 0 : 1; }

// Paired exploration of both semantics, memoised on the L-DRF state with the
// largest remaining depth it was reached with.
struct CorrespondenceWalk {
  const Program &p;
  const MetaOptions &opts;
  CheckResult &result;
  std::map<LdrfState, int> best;
  std::vector<std::string> trail;

  void visit(const LdrfState &l, const StdState &s, int remaining) {
    auto [it, fresh] = best.emplace(l, remaining);
    if (!fresh) {
      if (it->second >= remaining)
        return;
      it->second = remaining;
    }
    if (remaining <= 0)
      return;
    for (const Instruction &ins : p.instructions) {
      std::vector<StdState> std_next = std_step(p, s, ins, opts.havoc_values);
      std::vector<LdrfState> ldrf_next;
      trail.push_back(step_label(p, ins));
      try {
        ldrf_next = ldrf_step(p, l, ins, opts.ldrf, opts.havoc_values);
      } catch (const AdmissibilityError &e) {
        record(result, trail_text(trail), e.what());
        trail.pop_back();
        continue;
      }
      if (std_next.empty() && ldrf_next.empty()) {
        trail.pop_back();
        continue;
      }
      ++result.instances;
      std::vector<StdState> images;
      for (const LdrfState &n : ldrf_next)
        images.push_back(extract_chi(n));
      for (const StdState &sn : std_next)
        if (std::find(images.begin(), images.end(), sn) == images.end())
          record(result, trail_text(trail) + format_state(p, sn),
                 "standard step has no L-DRF counterpart");
      for (std::size_t k = 0; k < ldrf_next.size(); ++k) {
        if (std::find(std_next.begin(), std_next.end(), images[k]) == std_next.end()) {
          record(result, trail_text(trail) + format_ldrf_state(p, ldrf_next[k]),
                 "chi image of L-DRF step is not a standard step");
          continue;
        }
        visit(ldrf_next[k], images[k], remaining - step_cost(ins));
      }
      trail.pop_back();
    }
  }
};

struct LemmaState {
  LdrfState l;
  StdState s;
  std::vector<Version> writes; // total writes per variable so far

  auto operator<=>(const LemmaState &) const = default;
};

struct LemmaWalk {
  const Program &p;
  const MetaOptions &opts;
  CheckResult &l1, &l3, &c1, &l4, &c2;
  std::map<LemmaState, int> best;
  std::map<Loc, std::set<VarId>> owned;
  std::vector<std::string> trail;

  const std::set<VarId> &owned_at(ThreadId t, Loc n) {
    auto it = owned.find(n);
    if (it == owned.end()) {
      ExploreOptions e;
      e.depth = opts.depth;
      e.havoc_values = opts.havoc_values;
      it = owned.emplace(n, owned_vars_oracle(p, t, n, e)).first;
    }
    return it->second;
  }

  template <class F> void each_env(const LdrfState &l, F &&f) {
    for (const VersionedEnv &e : l.theta)
      f(e);
    for (const auto &[loc, e] : l.lambda)
      f(e);
  }

  void check_state(const LemmaState &st) {
    const LdrfState &l = st.l;
    ++l1.instances;
    each_env(l, [&](const VersionedEnv &e) {
      for (VarId x = 0; x < p.vars.size(); ++x)
        if (e.nu[x] > st.writes[x])
          record(l1, trail_text(trail) + format_ldrf_state(p, l),
                 "version of " + p.vars[x] + " exceeds " +
                     std::to_string(st.writes[x]) + " writes");
    });
    ++l4.instances;
    if (!is_admissible(l))
      record(l4, trail_text(trail) + format_ldrf_state(p, l), "state is not admissible");
    for (ThreadId t = 0; t < p.threads.size(); ++t) {
      ++c2.instances;
      for (VarId x : owned_at(t, l.pc[t]))
        if (l.theta[t].phi[x] != st.s.phi[x])
          record(c2, trail_text(trail) + format_ldrf_state(p, l) + format_state(p, st.s),
                 p.threads[t].name + " disagrees on owned " + p.vars[x] + " at " +
                     std::to_string(l.pc[t]));
    }
  }

  // The standard successor writing the same value as the L-DRF one.
  std::optional<StdState> matching_std(const StdState &s, const Instruction &ins,
                                       const LdrfState &ln) {
    StdState want = s;
    want.pc[ins.thread] = ins.target;
    want.mu = ln.mu;
    if (ins.command.kind == Command::Kind::Assign)
      want.phi[ins.command.var] = ln.theta[ins.thread].phi[ins.command.var];
    for (const StdState &c : std_step(p, s, ins, opts.havoc_values))
      if (c == want)
        return c;
    return std::nullopt;
  }

  void visit(const LemmaState &st, int remaining) {
    auto [it, fresh] = best.emplace(st, remaining);
    if (!fresh) {
      if (it->second >= remaining)
        return;
      it->second = remaining;
    } else {
      check_state(st);
    }
    if (remaining <= 0)
      return;
    for (const Instruction &ins : p.instructions) {
      std::vector<LdrfState> next;
      trail.push_back(step_label(p, ins));
      try {
        next = ldrf_step(p, st.l, ins, opts.ldrf, opts.havoc_values);
      } catch (const AdmissibilityError &e) {
        record(l4, trail_text(trail), e.what());
        trail.pop_back();
        continue;
      }
      if (!next.empty()) {
        AccessSets acc = access_sets(ins.command);
        std::set<VarId> touched = acc.reads;
        touched.insert(acc.writes.begin(), acc.writes.end());
        for (VarId x : touched) {
          ++c1.instances;
          Version top = 0;
          each_env(st.l, [&](const VersionedEnv &e) { top = std::max(top, e.nu[x]); });
          if (st.l.theta[ins.thread].nu[x] != top)
            record(c1, trail_text(trail) + format_ldrf_state(p, st.l),
                   "access to " + p.vars[x] + " without its highest version");
        }
      }
      for (const LdrfState &ln : next) {
        LemmaState succ{ln, st.s, st.writes};
        std::optional<StdState> sn = matching_std(st.s, ins, ln);
        if (!sn) {
          record(c2, trail_text(trail) + format_ldrf_state(p, ln),
                 "no standard step writes the same value");
          continue;
        }
        succ.s = *sn;
        if (ins.command.kind == Command::Kind::Assign) {
          VarId x = ins.command.var;
          ++succ.writes[x];
          ++l3.instances;
          if (ln.theta[ins.thread].nu[x] != succ.writes[x])
            record(l3, trail_text(trail) + format_ldrf_state(p, ln),
                   "version of " + p.vars[x] + " is " +
                       std::to_string(ln.theta[ins.thread].nu[x]) + " after write " +
                       std::to_string(succ.writes[x]));
        }
        visit(succ, remaining - step_cost(ins));
      }
      trail.pop_back();
    }
  }
};

using Collected = std::map<Loc, std::set<Env>>;

// Per-location thread environments and buffer contents.
Collected alpha(const std::vector<LdrfState> &xs) {
  Collected out;
  for (const LdrfState &s : xs) {
    for (ThreadId t = 0; t < s.pc.size(); ++t)
      out[s.pc[t]].insert(s.theta[t].phi);
    for (const auto &[loc, e] : s.lambda)
      out[loc].insert(e.phi);
  }
  return out;
}

std::string env_text(const Program &p, const Env &e) {
  std::string s = "{";
  for (VarId x = 0; x < e.size(); ++x)
    s += (x ? ", " : "") + p.vars[x] + "=" + std::to_string(e[x]);
  return s + "}";
}

LdrfOptions local_ldrf_options(const LocalOptions &opts) {
  LdrfOptions o;
  o.regions = opts.regions;
  return o;
}

// Bound on the values the sampled walks can reach, for the EnvSet universe.
constexpr Value kUniverseBound = 1 << 12;

} // namespace

CheckResult check_correspondence(const Program &p, const MetaOptions &opts) {
  require_race_free(p, opts);
  CheckResult r;
  r.name = "correspondence";
  LdrfState l = initial_ldrf_state(p);
  StdState s = initial_state(p);
  ++r.instances;
  if (extract_chi(l) != s)
    record(r, format_ldrf_state(p, l), "initial states differ");
  CorrespondenceWalk w{p, opts, r, {}, {}};
  w.visit(l, s, opts.depth);
  return r;
}

std::vector<CheckResult> check_version_lemmas(const Program &p,
                                              const MetaOptions &opts) {
  require_race_free(p, opts);
  std::vector<CheckResult> rs(5);
  const char *names[] = {"version_bound", "write_version", "access_max_version",
                         "admissible", "owned_agree"};
  for (int k = 0; k < 5; ++k)
    rs[k].name = names[k];
  LemmaWalk w{p, opts, rs[0], rs[1], rs[2], rs[3], rs[4], {}, {}, {}};
  LemmaState init{initial_ldrf_state(p), initial_state(p),
                  std::vector<Version>(p.vars.size(), 0)};
  w.visit(init, opts.depth);
  return rs;
}

std::vector<Violation> local_abstraction_instance(const Program &p,
                                                  const std::vector<LdrfState> &xs,
                                                  std::size_t instr,
                                                  const LocalOptions &opts) {
  std::vector<Violation> out;
  const Instruction &ins = p.instructions.at(instr);
  LdrfOptions lo = local_ldrf_options(opts);
  std::vector<LdrfState> post;
  for (const LdrfState &s : xs) {
    try {
      for (LdrfState &n : ldrf_step(p, s, ins, lo, opts.havoc_values))
        post.push_back(std::move(n));
    } catch (const AdmissibilityError &e) {
      out.push_back({format_ldrf_state(p, s), e.what()});
    }
  }
  if (post.empty())
    return out;

  auto u = make_universe(p.vars.size(), -kUniverseBound, kUniverseBound,
                         opts.havoc_values);
  Collected pre = alpha(xs);
  auto at = [&](Loc n) {
    auto it = pre.find(n);
    return from_envs(u, it == pre.end() ? std::set<Env>{} : it->second);
  };
  AbsVal src = at(ins.source);
  AbsVal moved;
  switch (ins.command.kind) {
  case Command::Kind::Assign:
    moved = transfer_assign(src, ins.command.var, ins.command.expr);
    break;
  case Command::Kind::Assume:
    moved = transfer_assume(src, ins.command.cond);
    break;
  case Command::Kind::Release:
    moved = src;
    break;
  case Command::Kind::Acquire: {
    std::vector<AbsVal> ds{src};
    for (Loc m : relevant_buffers(p, ins.command.lock, ins.source, lo))
      if (!is_bottom(at(m)))
        ds.push_back(at(m));
    if (opts.join_instead_of_mix) {
      moved = ds[0];
      for (std::size_t k = 1; k < ds.size(); ++k)
        moved = dom_join(moved, ds[k]);
    } else {
      RegionMap rm = opts.regions ? *opts.regions : RegionMap::singletons(p.vars);
      moved = mix_abstract(ds, rm);
    }
    break;
  }
  }

  for (const auto &[n, envs] : alpha(post)) {
    for (const Env &e : envs) {
      bool covered = contains(at(n), e) || (n == ins.target && contains(moved, e));
      if (!covered)
        out.push_back({"after " + step_label(p, ins) + " at " + std::to_string(n) +
                           ": " + env_text(p, e),
                       "concrete environment missing from the abstract transfer"});
    }
  }
  return out;
}

CheckResult check_local_abstraction(const Program &p, const LocalOptions &opts) {
  CheckResult r;
  r.name = opts.regions ? "local_abstraction_region" : "local_abstraction_variable";
  std::mt19937_64 rng(opts.seed);
  LdrfOptions lo = local_ldrf_options(opts);
  auto pick = [&](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };

  auto random_state = [&]() {
    LdrfState s = initial_ldrf_state(p);
    std::size_t steps = pick(static_cast<std::size_t>(opts.walk_depth) + 1);
    for (std::size_t k = 0; k < steps; ++k) {
      std::vector<LdrfState> next;
      for (const Instruction &ins : p.instructions) {
        try {
          for (LdrfState &n : ldrf_step(p, s, ins, lo, opts.havoc_values))
            next.push_back(std::move(n));
        } catch (const AdmissibilityError &) {
        }
      }
      if (next.empty())
        break;
      s = std::move(next[pick(next.size())]);
    }
    return s;
  };

  for (std::size_t sample = 0; sample < opts.samples; ++sample) {
    std::size_t size = 1 + pick(4);
    std::vector<LdrfState> xs;
    for (std::size_t k = 0; k < size; ++k)
      xs.push_back(random_state());
    for (std::size_t i = 0; i < p.instructions.size(); ++i) {
      ++r.instances;
      for (Violation &v : local_abstraction_instance(p, xs, i, opts)) {
        v.witness = "sample " + std::to_string(sample) + ", " + v.witness;
        record(r, std::move(v.witness), std::move(v.explanation));
      }
    }
  }
  return r;
}

std::string generate_race_free_program(std::uint64_t seed,
                                       const GeneratorOptions &opts) {
  std::mt19937_64 rng(seed);
  auto roll = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  int nthreads = roll(opts.min_threads, opts.max_threads);
  std::vector<std::string> shared;
  for (int k = 0; k < opts.shared_vars; ++k)
    shared.push_back(std::string(1, static_cast<char>('x' + k % 3)) +
                     (k >= 3 ? std::to_string(k) : ""));
  std::ostringstream os;
  os << "var ";
  for (const std::string &v : shared)
    os << v << ", ";
  for (int t = 0; t < nthreads; ++t)
    os << "a" << t << (t + 1 < nthreads ? ", " : ";\n");
  os << "lock ";
  for (int m = 0; m < opts.locks; ++m)
    os << "m" << m << (m + 1 < opts.locks ? ", " : ";\n");

  // Variable k is guarded by lock k mod locks.
  auto statement = [&](const std::vector<std::string> &vars, const std::string &indent) {
    const std::string &v = vars[roll(0, static_cast<int>(vars.size()) - 1)];
    const std::string &w = vars[roll(0, static_cast<int>(vars.size()) - 1)];
    switch (roll(0, 6)) {
    case 0:
      return indent + v + " := " + std::to_string(roll(0, 2)) + ";\n";
    case 1:
      return indent + v + " := " + w + ";\n";
    case 2:
      return indent + v + " := " + v + " + 1;\n";
    case 3:
      return indent + v + " := " + w + " + 1;\n";
    case 4:
      return indent + v + " := havoc;\n";
    case 5:
      return indent + "if (" + w + " < " + std::to_string(roll(1, 2)) + ") { " + v +
             " := " + w + " + 1; }\n";
    default:
      return indent + "assert(" + v + " >= 0);\n";
    }
  };

  for (int t = 0; t < nthreads; ++t) {
    std::string local = "a" + std::to_string(t);
    os << "\nthread t" << t << " {\n";
    int sections = roll(1, opts.max_sections);
    for (int s = 0; s < sections; ++s) {
      if (roll(0, 1))
        os << statement({local}, "  ");
      int m = roll(0, opts.locks - 1);
      std::vector<std::string> vars{local};
      for (int k = 0; k < opts.shared_vars; ++k)
        if (k % opts.locks == m)
          vars.push_back(shared[k]);
      os << "  acquire(m" << m << ");\n";
      int n = roll(1, opts.max_statements);
      for (int k = 0; k < n; ++k)
        os << statement(vars, "  ");
      os << "  release(m" << m << ");\n";
    }
    os << "}\n";
  }
  return os.str();
}

std::string results_to_json(const std::vector<CheckResult> &results) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const CheckResult &r : results) {
    nlohmann::ordered_json vs = nlohmann::ordered_json::array();
    for (const Violation &v : r.violations)
      vs.push_back({{"witness", v.witness}, {"explanation", v.explanation}});
    j[r.name] = {{"instances", r.instances},
                 {"violation_count", r.violation_count},
                 {"passed", r.passed()},
                 {"violations", std::move(vs)}};
  }
  return j.dump(2);
}

} // namespace syncdrf

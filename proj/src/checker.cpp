#include "syncdrf/checker.hpp"

#include <deque>
#include <sstream>

#include "json.hpp"

namespace syncdrf {

std::string_view to_string(OwnedMode m) {
  return m == OwnedMode::Static ? "static" : "oracle";
}

std::map<Loc, std::set<LockId>> must_hold_locks(const Program &p) {
  std::set<LockId> all;
  for (LockId m = 0; m < p.locks.size(); ++m)
    all.insert(m);
  std::map<Loc, std::set<LockId>> held;
  for (const ThreadCFG &t : p.threads) {
    for (Loc n : t.locations)
      held[n] = all;
    held[t.entry].clear();
    std::set<Loc> seen{t.entry};
    std::deque<Loc> work{t.entry};
    while (!work.empty()) {
      Loc n = work.front();
      work.pop_front();
      for (std::size_t i : p.outgoing(n)) {
        const Instruction &ins = p.instructions[i];
        std::set<LockId> out = held[n];
        if (ins.command.kind == Command::Kind::Acquire)
          out.insert(ins.command.lock);
        if (ins.command.kind == Command::Kind::Release)
          out.erase(ins.command.lock);
        std::set<LockId> meet;
        const std::set<LockId> &old = held[ins.target];
        std::set_intersection(old.begin(), old.end(), out.begin(), out.end(),
                              std::inserter(meet, meet.begin()));
        if (meet != old || seen.insert(ins.target).second) {
          held[ins.target] = std::move(meet);
          work.push_back(ins.target);
        }
      }
    }
  }
  return held;
}

OwnedMap compute_owned_static(const Program &p) {
  OwnedMap r;
  r.mode = OwnedMode::Static;
  auto held = must_hold_locks(p);
  // Per variable and thread: the locks held at every access.
  const std::size_t nt = p.threads.size(), nv = p.vars.size();
  std::vector<std::vector<bool>> touches(nv, std::vector<bool>(nt, false));
  std::vector<std::vector<std::set<LockId>>> guard(
      nv, std::vector<std::set<LockId>>(nt));
  for (const Instruction &ins : p.instructions) {
    AccessSets a = access_sets(ins.command);
    std::set<VarId> vs = a.reads;
    vs.insert(a.writes.begin(), a.writes.end());
    for (VarId x : vs) {
      const std::set<LockId> &h = held.at(ins.source);
      if (!touches[x][ins.thread]) {
        touches[x][ins.thread] = true;
        guard[x][ins.thread] = h;
      } else {
        std::set<LockId> meet;
        std::set_intersection(guard[x][ins.thread].begin(), guard[x][ins.thread].end(),
                              h.begin(), h.end(), std::inserter(meet, meet.begin()));
        guard[x][ins.thread] = std::move(meet);
      }
    }
  }
  for (ThreadId t = 0; t < nt; ++t)
    for (Loc n : p.threads[t].locations) {
      std::set<VarId> &own = r.owned[n];
      for (VarId x = 0; x < nv; ++x) {
        bool ok = true;
        for (ThreadId u = 0; u < nt && ok; ++u) {
          if (u == t || !touches[x][u])
            continue;
          bool shared_lock = false;
          for (LockId m : held.at(n))
            shared_lock = shared_lock || guard[x][u].count(m);
          ok = shared_lock;
        }
        if (ok)
          own.insert(x);
      }
    }
  return r;
}

OwnedMap compute_owned_oracle(const Program &p, const ExploreOptions &opts,
                              const std::vector<Loc> &locs) {
  OwnedMap r;
  r.mode = OwnedMode::Oracle;
  r.depth = opts.depth;
  std::vector<Loc> targets = locs;
  if (targets.empty())
    for (const ThreadCFG &t : p.threads)
      targets.insert(targets.end(), t.locations.begin(), t.locations.end());
  for (Loc n : targets)
    r.owned[n] = owned_vars_oracle(p, p.thread_of(n), n, opts);
  return r;
}

std::size_t Report::proved() const {
  std::size_t k = 0;
  for (const AssertionResult &a : assertions)
    k += a.proved;
  return k;
}

Report check_assertions(const Program &p, const LocationFacts &facts,
                        const OwnedMap &owned) {
  Report r;
  r.owned_mode = std::string(to_string(owned.mode));
  for (const Assertion &a : p.assertions) {
    AssertionResult res;
    res.location = a.loc;
    res.thread = p.threads[a.thread].name;
    res.condition = print_bool(a.cond, p.vars);
    const std::set<VarId> &own = owned.at(a.loc);
    for (VarId x : own)
      res.owned.push_back(p.vars[x]);
    std::set<VarId> unowned;
    for (VarId x = 0; x < p.vars.size(); ++x)
      if (!own.count(x))
        unowned.insert(x);
    AbsVal projected = forget(facts.at(a.loc).base, unowned);
    res.fact = to_constraints(projected, p.vars);
    std::set<VarId> used;
    collect_vars(a.cond, used);
    bool all_owned = std::all_of(used.begin(), used.end(),
                                 [&](VarId x) { return own.count(x) > 0; });
    if (!all_owned) {
      res.reason = "unowned variable in condition";
    } else if (entails(projected, a.cond)) {
      res.proved = true;
    } else {
      res.reason = "fact does not imply condition";
    }
    r.assertions.push_back(std::move(res));
  }
  return r;
}

void describe_config(Report &r, const Program &p, const AnalysisConfig &cfg) {
  AnalysisConfig c = normalize(cfg);
  r.analysis = std::string(to_string(c.analysis));
  r.domain = std::string(to_string(c.domain));
  r.recency = c.recency;
  RegionMap rm = mix_regions(p, c);
  auto members = rm.members();
  r.regions.clear();
  for (RegionId g = 0; g < rm.size(); ++g) {
    std::string s = rm.names[g] + " {";
    for (std::size_t k = 0; k < members[g].size(); ++k)
      s += (k ? ", " : " ") + p.vars[members[g][k]];
    r.regions.push_back(s + " }");
  }
}

std::string emit_report(const Report &r, ReportFormat format) {
  if (format == ReportFormat::Text) {
    std::ostringstream os;
    for (const AssertionResult &a : r.assertions) {
      os << "loc " << a.location << " [" << a.thread << "] assert(" << a.condition
         << "): " << (a.proved ? "PROVED" : "UNPROVED");
      if (!a.proved)
        os << " (" << a.reason << "; fact: " << a.fact << ")";
      os << "\n";
    }
    os << r.proved() << " of " << r.assertions.size() << " assertions proved ("
       << r.analysis << ", " << r.domain << (r.recency ? ", recency" : "") << ")\n";
    return os.str();
  }
  using nlohmann::ordered_json;
  ordered_json j;
  j["program"] = r.program;
  j["analysis"] = r.analysis;
  j["domain"] = r.domain;
  j["recency"] = r.recency;
  j["regions"] = r.regions;
  j["owned_mode"] = r.owned_mode;
  ordered_json as = ordered_json::array();
  for (const AssertionResult &a : r.assertions) {
    ordered_json e;
    e["location"] = a.location;
    e["thread"] = a.thread;
    e["condition"] = a.condition;
    e["proved"] = a.proved;
    e["fact"] = a.fact;
    e["owned"] = a.owned;
    if (!a.proved)
      e["reason"] = a.reason;
    as.push_back(std::move(e));
  }
  j["assertions"] = std::move(as);
  j["summary"] = {{"total", r.assertions.size()}, {"proved", r.proved()}};
  j["races"] = r.races_json.empty() ? ordered_json::object()
                                    : ordered_json::parse(r.races_json);
  ordered_json t = ordered_json::object();
  for (const auto &[k, v] : r.timing_ms)
    t[k] = v;
  j["timing_ms"] = std::move(t);
  j["metatheory"] = r.metatheory_json.empty() ? ordered_json::object()
                                              : ordered_json::parse(r.metatheory_json);
  return j.dump(2) + "\n";
}

std::string races_to_json(const Program &p, int depth,
                          const std::vector<RaceReport> &data,
                          const std::vector<RaceReport> &region) {
  using nlohmann::ordered_json;
  auto step = [&](std::size_t k, std::size_t instr) {
    const Instruction &ins = p.instructions[instr];
    return ordered_json{{"step", k},
                        {"thread", p.threads[ins.thread].name},
                        {"source", ins.source},
                        {"command", print_command(ins.command, p)}};
  };
  auto list = [&](const std::vector<RaceReport> &rs) {
    ordered_json a = ordered_json::array();
    for (const RaceReport &r : rs)
      a.push_back({{"unit", r.unit_name},
                   {"first", step(r.first, r.instr_first)},
                   {"second", step(r.second, r.instr_second)},
                   {"trace", format_trace(p, r.execution)}});
    return a;
  };
  ordered_json j;
  j["depth"] = depth;
  j["data"] = list(data);
  j["region"] = list(region);
  return j.dump();
}

} // namespace syncdrf

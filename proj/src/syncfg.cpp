#include "syncdrf/syncfg.hpp"

#include <algorithm>
#include <sstream>

namespace syncdrf {

std::vector<Loc> SyncCFG::sources_of(Loc pre_acquire, LockId m) const {
  std::vector<Loc> out;
  for (const SyncEdge &e : sync_edges)
    if (e.to == pre_acquire && e.lock == m)
      out.push_back(e.from);
  return out;
}

static void rebuild_edges(SyncCFG &g, const Program &p) {
  g.sync_edges.clear();
  for (const Instruction &i : p.instructions) {
    if (i.command.kind != Command::Kind::Release)
      continue;
    auto it = g.gamma.find(i.target);
    if (it == g.gamma.end())
      continue;
    for (Loc n : it->second)
      g.sync_edges.push_back({i.target, n, i.command.lock});
  }
  std::sort(g.sync_edges.begin(), g.sync_edges.end());
  g.sync_edges.erase(std::unique(g.sync_edges.begin(), g.sync_edges.end()),
                     g.sync_edges.end());
}

SyncCFG build_syncfg(const Program &p) {
  SyncCFG g;
  for (const ThreadCFG &t : p.threads)
    g.nodes.insert(g.nodes.end(), t.locations.begin(), t.locations.end());
  std::sort(g.nodes.begin(), g.nodes.end());
  for (std::size_t i = 0; i < p.instructions.size(); ++i)
    g.intra_edges.push_back(i);
  for (const Instruction &i : p.instructions) {
    if (i.command.kind != Command::Kind::Release)
      continue;
    auto acq = p.pre_acquire_points(i.command.lock);
    g.gamma[i.target].insert(acq.begin(), acq.end());
  }
  rebuild_edges(g, p);
  return g;
}

SyncCFG refine_gamma(const SyncCFG &g, const Program &p,
                     const ExploreOptions &opts) {
  Gamma seen;
  for (const auto &[l, _] : g.gamma)
    seen[l];
  enumerate_executions(p, opts, [&](const Execution &e) {
    if (e.steps.empty())
      return true;
    const Instruction &last = p.instructions[e.steps.back().instr];
    if (last.command.kind != Command::Kind::Acquire)
      return true;
    for (std::size_t k = e.steps.size() - 1; k-- > 0;) {
      const Instruction &prev = p.instructions[e.steps[k].instr];
      if (prev.command.lock != last.command.lock)
        continue;
      if (prev.command.kind == Command::Kind::Release) {
        seen[prev.target].insert(last.source);
        break;
      }
      if (prev.command.kind == Command::Kind::Acquire)
        break;
    }
    return true;
  });
  SyncCFG r = g;
  for (auto &[l, targets] : r.gamma) {
    std::set<Loc> kept;
    for (Loc n : targets)
      if (seen[l].count(n))
        kept.insert(n);
    targets = std::move(kept);
  }
  rebuild_edges(r, p);
  r.refined = true;
  return r;
}

std::string to_dot(const SyncCFG &g, const Program &p) {
  std::ostringstream os;
  os << "digraph syncfg {\n";
  for (ThreadId t = 0; t < p.threads.size(); ++t) {
    os << "  subgraph cluster_" << t << " {\n    label=\"" << p.threads[t].name
       << "\";\n";
    for (Loc n : p.threads[t].locations)
      os << "    n" << n << " [label=\"" << n << "\"];\n";
    os << "  }\n";
  }
  for (std::size_t idx : g.intra_edges) {
    const Instruction &i = p.instructions[idx];
    std::string label = print_command(i.command, p);
    std::string escaped;
    for (char c : label)
      escaped += c == '"' ? std::string("\\\"") : std::string(1, c);
    os << "  n" << i.source << " -> n" << i.target << " [label=\"" << escaped
       << "\"];\n";
  }
  for (const SyncEdge &e : g.sync_edges)
    os << "  n" << e.from << " -> n" << e.to << " [style=dashed, label=\""
       << p.locks[e.lock] << "\"];\n";
  os << "}\n";
  return os.str();
}

} // namespace syncdrf

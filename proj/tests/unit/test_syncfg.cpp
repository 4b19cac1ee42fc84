#include "common.hpp"
#include "doctest.h"
#include "syncdrf/syncfg.hpp"

using namespace syncdrf;

namespace {

std::set<std::pair<Loc, Loc>> edge_pairs(const SyncCFG &g) {
  std::set<std::pair<Loc, Loc>> out;
  for (const SyncEdge &e : g.sync_edges)
    out.insert({e.from, e.to});
  return out;
}

ExploreOptions depth(int d) {
  ExploreOptions o;
  o.depth = d;
  return o;
}

} // namespace

TEST_CASE("build_syncfg") {
  Program p = corpus_program("fig1.cp");
  SyncCFG g = build_syncfg(p);
  CHECK(edge_pairs(g) ==
        std::set<std::pair<Loc, Loc>>{{7, 1}, {7, 10}, {13, 1}, {13, 10}});
  CHECK(g.nodes.size() == 13);
  CHECK(g.sources_of(10, 0) == std::vector<Loc>{7, 13});

  Program free = load_program("var x; thread a { x := 1; } thread b { x := 2; }");
  CHECK(build_syncfg(free).sync_edges.empty());

  Program one = load_program(
      "var x; lock m; thread a { release(m); } thread b { acquire(m); }");
  CHECK(build_syncfg(one).sync_edges.size() == 1);

  std::string dot = to_dot(g, p);
  CHECK(dot.find("n7 -> n10 [style=dashed, label=\"m\"]") != std::string::npos);
  CHECK(dot.find("n1 -> n2 [label=\"acquire(m)\"]") != std::string::npos);
}

TEST_CASE("refine_gamma") {
  Program p = corpus_program("fig1.cp");
  SyncCFG g = build_syncfg(p);
  SyncCFG r = refine_gamma(g, p, depth(13));
  CHECK(r.refined);
  CHECK(edge_pairs(r).count({7, 10}) == 1);
  auto full = edge_pairs(g);
  for (auto e : edge_pairs(r))
    CHECK(full.count(e) == 1);
  CHECK(refine_gamma(g, p, depth(0)).sync_edges.empty());

  Program never = load_program(
      "var x; lock m; thread a { acquire(m); x := 1; release(m); } "
      "thread b { assume(x == 5); acquire(m); release(m); }");
  SyncCFG rn = refine_gamma(build_syncfg(never), never, depth(10));
  for (const SyncEdge &e : rn.sync_edges)
    CHECK(never.thread_of(e.to) == 0);
  CHECK(build_syncfg(never).sync_edges.size() == 4);
}

TEST_CASE("every synchronizes-with pair has a sync edge") {
  for (const char *name : {"fig1.cp", "fig9.cp", "fig11.cp", "fig14.cp"}) {
    Program p = corpus_program(name);
    auto edges = edge_pairs(build_syncfg(p));
    enumerate_executions(p, depth(10), [&](const Execution &e) {
      HappensBefore hb = happens_before(p, e);
      for (auto [rel, acq] : hb.sw) {
        Loc from = p.instructions[e.steps[rel].instr].target;
        Loc to = p.instructions[e.steps[acq].instr].source;
        CHECK(edges.count({from, to}) == 1);
      }
      return true;
    });
  }
}

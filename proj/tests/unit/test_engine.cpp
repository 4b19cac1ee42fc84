#include "common.hpp"
#include "doctest.h"
#include "syncdrf/concrete.hpp"
#include "syncdrf/engine.hpp"

using namespace syncdrf;

namespace {

struct Case {
  const char *program;
  const char *regions; // empty: the program's own
};

const Case kCorpus[] = {{"fig1.cp", "fig1.rg"},
                        {"fig1_racy.cp", "fig1.rg"},
                        {"fig9.cp", ""},
                        {"fig11.cp", "fig11.rg"},
                        {"fig14.cp", "fig14.rg"}};

RegionMap regions_of(const Program &p, const Case &c) {
  if (std::string(c.regions).empty())
    return p.regions;
  return parse_regions(read_corpus(c.regions), p.vars);
}

AnalysisConfig config(AnalysisKind a, DomainKind d, bool recency = false) {
  AnalysisConfig c;
  c.analysis = a;
  c.domain = d;
  c.recency = recency;
  return c;
}

BoolExpr eq(const Program &p, const char *a, const char *b) {
  return BoolExpr::cmp(CmpOp::Eq, Expr::variable(*p.find_var(a)),
                       Expr::variable(*p.find_var(b)));
}

std::string fact(const Program &p, const LocationFacts &f, Loc n) {
  return to_constraints(f.at(n).base, p.vars);
}

} // namespace

TEST_CASE("fig1 facts") {
  Program p = corpus_program("fig1.cp");
  SyncCFG g = build_syncfg(p);
  AnalysisConfig reg = config(AnalysisKind::RegRel, DomainKind::Octagon);
  reg.regions = parse_regions(read_corpus("fig1.rg"), p.vars);
  LocationFacts r = analyze_fixpoint(p, g, reg);
  CHECK(entails(r.at(11).base, eq(p, "x", "y")));
  CHECK(check_post_fixpoint(p, g, reg, r).empty());

  LocationFacts rel = analyze_fixpoint(p, g, config(AnalysisKind::Rel, DomainKind::Octagon));
  CHECK(!entails(rel.at(11).base, eq(p, "x", "y")));
  CHECK(fact(p, rel, 11) == "0 <= x, 0 <= y, 0 <= z <= 1");
  CHECK(fact(p, rel, 5) == "1 <= x = y, 0 <= z <= 1");
  CHECK(fact(p, rel, 9) == "x = y = 0, z = 1");
}

TEST_CASE("fig11 facts") {
  Program p = corpus_program("fig11.cp");
  SyncCFG g = build_syncfg(p);
  LocationFacts rel = analyze_fixpoint(p, g, config(AnalysisKind::Rel, DomainKind::Octagon));
  CHECK(fact(p, rel, 5) == "1 <= x = y");
  CHECK(fact(p, rel, 4) == "x = y + 1, 0 <= y");
  CHECK(fact(p, rel, 8) == "0 <= x, 0 <= y");
}

TEST_CASE("recency bounds fig9") {
  Program p = corpus_program("fig9.cp");
  SyncCFG g = build_syncfg(p);
  BoolExpr le1 = BoolExpr::cmp(CmpOp::Le, Expr::variable(0), Expr::constant(1));
  LocationFacts plain = analyze_fixpoint(p, g, config(AnalysisKind::Rel, DomainKind::Octagon));
  CHECK(!entails(plain.at(3).base, le1));
  CHECK(fact(p, plain, 3) == "1 <= x");
  AnalysisConfig rc = config(AnalysisKind::Rel, DomainKind::Octagon, true);
  LocationFacts rec = analyze_fixpoint(p, g, rc);
  CHECK(entails(rec.at(3).base, le1));
  CHECK(entails(rec.at(7).base, le1));
  CHECK(rec.at(5).tids == std::set<ThreadId>{0});
  CHECK(check_post_fixpoint(p, g, rc, rec).empty());
}

TEST_CASE("post-fixpoint and determinism on the corpus") {
  for (const Case &c : kCorpus) {
    CAPTURE(c.program);
    Program p = corpus_program(c.program);
    SyncCFG g = build_syncfg(p);
    for (const NamedConfig &nc : standard_configs(regions_of(p, c))) {
      CAPTURE(nc.name);
      LocationFacts a = analyze_fixpoint(p, g, nc.cfg);
      LocationFacts b = analyze_fixpoint(p, g, nc.cfg);
      CHECK(check_post_fixpoint(p, g, nc.cfg, a).empty());
      CHECK(facts_to_json(p, a) == facts_to_json(p, b));
      for (const ThreadCFG &t : p.threads)
        CHECK(contains(a.at(t.entry).base, Env(p.vars.size(), 0)));
    }
    CHECK(precision_order_violations(p, g, regions_of(p, c), 4).empty());
  }
}

TEST_CASE("configuration") {
  AnalysisConfig c = normalize(config(AnalysisKind::ValSet, DomainKind::Octagon));
  CHECK(c.domain == DomainKind::Interval);
  Program p = corpus_program("fig1.cp");
  AnalysisConfig r = config(AnalysisKind::RegRel, DomainKind::Octagon);
  CHECK(mix_regions(p, r) == p.regions);
  r.regions = parse_regions(read_corpus("fig1.rg"), p.vars);
  CHECK(mix_regions(p, r).size() == 2);
  CHECK(mix_regions(p, config(AnalysisKind::Rel, DomainKind::Octagon)).is_singleton_partition());

  std::vector<Bound> ts = widening_thresholds(p);
  CHECK(std::is_sorted(ts.begin(), ts.end()));
  CHECK(std::count(ts.begin(), ts.end(), 1) == 1);
}

TEST_CASE("iteration cap") {
  Program p = load_program("var x; thread t { while (x >= 0) { x := x + 1; } }");
  SyncCFG g = build_syncfg(p);
  AnalysisConfig c = config(AnalysisKind::Rel, DomainKind::Octagon);
  c.iteration_cap = 3;
  CHECK_THROWS_AS(analyze_fixpoint(p, g, c), EngineError);
  c.iteration_cap = 10000;
  LocationFacts f = analyze_fixpoint(p, g, c);
  CHECK(check_post_fixpoint(p, g, c, f).empty());
}

TEST_CASE("collecting fixpoint") {
  Program p = corpus_program("fig1.cp");
  SyncCFG g = build_syncfg(p);
  AnalysisConfig reg = config(AnalysisKind::RegRel, DomainKind::EnvSet);
  reg.regions = parse_regions(read_corpus("fig1.rg"), p.vars);
  LocationFacts f = collecting_fixpoint(p, g, reg, 0, 3, true);
  REQUIRE(!f.at(11).base.envset().envs.empty());
  for (const Env &e : f.at(11).base.envset().envs)
    CHECK(e[0] == e[1]);
  CHECK_THROWS_AS(collecting_fixpoint(p, g, reg, 0, 3, false), BoxOverflowError);

  // A single straight-line thread: sets equal the reachable environments.
  Program s = load_program("var a, b; thread t { a := 1; b := a + 1; a := havoc; }");
  SyncCFG sg = build_syncfg(s);
  LocationFacts sf = collecting_fixpoint(s, sg, config(AnalysisKind::Rel, DomainKind::EnvSet), -4, 4);
  ExploreOptions o;
  o.depth = 4;
  std::map<Loc, std::set<Env>> seen;
  for (const StdState &st : reachable_states(s, o))
    seen[st.pc[0]].insert(st.phi);
  for (const auto &[n, envs] : seen)
    CHECK(sf.at(n).base.envset().envs == envs);

  Program e = load_program("var a; thread t { } thread u { a := 1; }");
  LocationFacts ef = collecting_fixpoint(e, build_syncfg(e), config(AnalysisKind::Rel, DomainKind::EnvSet), 0, 2);
  CHECK(ef.at(e.threads[0].entry).base.envset().envs == std::set<Env>{{0}});
}

TEST_CASE("fig12 collecting rows") {
  Program p = corpus_program("fig11.cp");
  SyncCFG g = build_syncfg(p);
  using Rows = std::map<Loc, std::string>;
  Rows rel = stable_collecting_facts(p, g, CollectingKind::Rel, 4);
  Rows vrel = stable_collecting_facts(p, g, CollectingKind::VRel, 4);
  Rows vs = stable_collecting_facts(p, g, CollectingKind::ValSet, 4);
  CHECK(rel == Rows{{1, "x = y = 0"}, {2, "0 <= x, 0 <= y"}, {3, "0 <= x = y"},
                    {4, "x = y + 1, 0 <= y"}, {5, "1 <= x = y"}, {6, "1 <= x = y"},
                    {7, "x = y = 0"}, {8, "0 <= x, 0 <= y"}, {9, "1 <= x, 0 <= y"},
                    {10, "1 <= x, 1 <= y"}, {11, "1 <= x, 1 <= y"}});
  CHECK(vrel == Rows{{1, "x = y = 0"}, {2, "0 <= x = y"}, {3, "0 <= x = y"},
                     {4, "x = y + 1, 0 <= y"}, {5, "1 <= x = y"}, {6, "1 <= x = y"},
                     {7, "x = y = 0"}, {8, "0 <= x = y"}, {9, "x = y + 1, 0 <= y"},
                     {10, "1 <= x = y"}, {11, "1 <= x = y"}});
  CHECK(vs == Rows{{1, "x = y = 0"}, {2, "0 <= x, 0 <= y"}, {3, "0 <= x, 0 <= y"},
                   {4, "1 <= x, 0 <= y"}, {5, "1 <= x, 1 <= y"}, {6, "1 <= x, 1 <= y"},
                   {7, "x = y = 0"}, {8, "0 <= x, 0 <= y"}, {9, "1 <= x, 0 <= y"},
                   {10, "1 <= x, 1 <= y"}, {11, "1 <= x, 1 <= y"}});
}

TEST_CASE("facts json") {
  Program p = corpus_program("fig9.cp");
  LocationFacts f = analyze_fixpoint(p, build_syncfg(p),
                                     config(AnalysisKind::Rel, DomainKind::Octagon, true));
  std::string j = facts_to_json(p, f);
  CHECK(j.find("\"location\": 3") != std::string::npos);
  CHECK(j.find("\"recency_tids\"") != std::string::npos);
  CHECK(j.find("\"x = 1\"") != std::string::npos);
  CHECK(constraint_list(make_top(DomainKind::Octagon, 1), {"x"}).empty());
}

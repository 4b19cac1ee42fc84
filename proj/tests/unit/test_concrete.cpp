#include "common.hpp"
#include "doctest.h"
#include "syncdrf/concrete.hpp"

using namespace syncdrf;

namespace {

const char *kCorpus[] = {"fig1.cp", "fig1_racy.cp", "fig9.cp", "fig11.cp",
                         "fig14.cp"};

std::size_t instr_at(const Program &p, Loc src) {
  for (std::size_t i = 0; i < p.instructions.size(); ++i)
    if (p.instructions[i].source == src)
      return i;
  FAIL("no instruction at " << src);
  return 0;
}

ExploreOptions depth(int d) {
  ExploreOptions o;
  o.depth = d;
  return o;
}

// Replays instructions by source location from the initial state.
Execution replay(const Program &p, const std::vector<Loc> &locs) {
  Execution e;
  e.initial = initial_state(p);
  for (Loc l : locs) {
    std::size_t idx = instr_at(p, l);
    auto next = std_step(p, e.last(), p.instructions[idx], {0});
    REQUIRE(next.size() == 1);
    e.steps.push_back({e.last(), p.instructions[idx].thread, idx, next[0]});
  }
  return e;
}

// fig1.cp interleaving where t2's z++ falls between t1's x := y and x++.
const std::vector<Loc> kFig4 = {1, 2, 8, 3, 4, 5, 6, 9, 10, 11, 12};

} // namespace

TEST_CASE("std_step") {
  Program p = corpus_program("fig1.cp");
  StdState s = initial_state(p);
  s.pc[0] = 2;
  s.mu[0] = 0;
  auto next = std_step(p, s, p.instructions[instr_at(p, 2)], {0, 1, 2});
  REQUIRE(next.size() == 1);
  CHECK(next[0].phi == std::vector<Value>{0, 0, 0});
  CHECK(next[0].pc[0] == 3);

  StdState held = initial_state(p);
  held.mu[0] = 1;
  CHECK(std_step(p, held, p.instructions[instr_at(p, 1)], {0}).empty());

  Program q = load_program("var x, y; thread t { assume(x == y); }");
  StdState r = initial_state(q);
  r.phi = {1, 2};
  CHECK(std_step(q, r, q.instructions[0], {0}).empty());

  Program h = load_program("var x; thread t { x := havoc; }");
  CHECK(std_step(h, initial_state(h), h.instructions[0], {0, 1, 2}).size() == 3);
}

TEST_CASE("enumerate_executions") {
  Program p = corpus_program("fig1.cp");
  int count = 0;
  enumerate_executions(p, depth(0), [&](const Execution &e) {
    CHECK(e.steps.empty());
    CHECK(e.initial == initial_state(p));
    ++count;
    return true;
  });
  CHECK(count == 1);

  Program two = load_program("var a, b; thread t1 { a := 1; } thread t2 { b := 1; }");
  std::map<std::size_t, int> by_len;
  enumerate_executions(two, depth(2), [&](const Execution &e) {
    ++by_len[e.steps.size()];
    return true;
  });
  CHECK(by_len == std::map<std::size_t, int>{{0, 1}, {1, 2}, {2, 2}});

  Execution fig4 = replay(p, kFig4);
  bool found = false;
  enumerate_executions(p, depth(11), [&](const Execution &e) {
    if (e.steps.size() != fig4.steps.size())
      return true;
    bool same = true;
    for (std::size_t i = 0; i < e.steps.size() && same; ++i)
      same = e.steps[i].instr == fig4.steps[i].instr;
    found = found || same;
    return !found;
  });
  CHECK(found);
}

TEST_CASE("enumeration is deterministic and respects lock safety") {
  for (const char *name : kCorpus) {
    Program p = corpus_program(name);
    std::vector<std::vector<std::size_t>> run1, run2;
    auto collect = [&](std::vector<std::vector<std::size_t>> &into) {
      enumerate_executions(p, depth(8), [&](const Execution &e) {
        std::vector<std::size_t> ids;
        for (const Transition &t : e.steps)
          ids.push_back(t.instr);
        into.push_back(ids);
        // Lock map changes only through acquire/release of that lock.
        for (const Transition &t : e.steps) {
          const Command &c = p.instructions[t.instr].command;
          for (LockId m = 0; m < p.locks.size(); ++m) {
            bool changed = t.pre.mu[m] != t.post.mu[m];
            bool sync = (c.kind == Command::Kind::Acquire ||
                         c.kind == Command::Kind::Release) &&
                        c.lock == m;
            if (changed)
              CHECK(sync);
            if (c.kind == Command::Kind::Release && c.lock == m)
              CHECK(t.pre.mu[m] == static_cast<int>(t.tid));
          }
        }
        return true;
      });
    };
    collect(run1);
    collect(run2);
    CHECK(run1 == run2);
  }
}

TEST_CASE("happens_before") {
  Program p = corpus_program("fig1.cp");
  Execution e = replay(p, kFig4);
  HappensBefore hb = happens_before(p, e);
  // Step 6 is t1's release, step 8 is t2's acquire.
  CHECK(hb.sw == std::vector<std::pair<std::size_t, std::size_t>>{{6, 8}});
  CHECK(!hb.ordered(1, 2)); // x := y and z++
  CHECK(hb.hb[1][9]);       // x := y before t2's assert(x == y)
  for (auto [a, b] : hb.po)
    CHECK(hb.hb[a][b]);
  for (auto [a, b] : hb.sw)
    CHECK(hb.hb[a][b]);

  Program single = load_program("var x; thread t { x := 1; x := 2; x := 3; }");
  Execution s = replay(single, {1, 2, 3});
  HappensBefore shb = happens_before(single, s);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i; j < 3; ++j)
      CHECK(shb.hb[i][j]);

  std::string trace = format_trace(p, e);
  CHECK(trace.find("t1 1 -[acquire(m)]-> 2") != std::string::npos);
  CHECK(trace.find("sw: 6->8") != std::string::npos);
}

TEST_CASE("data races") {
  Program fig1 = corpus_program("fig1.cp");
  CHECK(find_data_races(fig1, depth(13)).empty());

  Program racy = corpus_program("fig1_racy.cp");
  auto races = find_data_races(racy, depth(13));
  std::set<std::string> vars;
  for (const RaceReport &r : races) {
    vars.insert(r.unit_name);
    CHECK(r.first < r.second);
    HappensBefore hb = happens_before(racy, r.execution);
    CHECK(!hb.ordered(r.first, r.second));
  }
  CHECK(vars.count("x") == 1);
  bool x_vs_assert = false;
  for (const RaceReport &r : races)
    if (r.unit_name == "x" &&
        racy.instructions[r.instr_second].source == 10)
      x_vs_assert = true;
  CHECK(x_vs_assert);

  Program single = load_program("var x; thread t { x := 1; x := x + 1; }");
  CHECK(find_data_races(single, depth(5)).empty());
}

TEST_CASE("region races") {
  Program p = corpus_program("fig1.cp");
  RegionMap xy = parse_regions(read_corpus("fig1.rg"), p.vars);
  CHECK(find_region_races(p, xy, depth(13)).empty());

  RegionMap all = parse_regions(read_corpus("fig1_all.rg"), p.vars);
  auto races = find_region_races(p, all, depth(13));
  bool found = false;
  for (const RaceReport &r : races) {
    Loc a = p.instructions[r.instr_first].source;
    Loc b = p.instructions[r.instr_second].source;
    if (std::min(a, b) == 2 && std::max(a, b) == 8)
      found = true;
  }
  CHECK(found);

  for (const char *name : kCorpus) {
    CAPTURE(name);
    Program q = corpus_program(name);
    auto d = find_data_races(q, depth(9));
    auto r = find_region_races(q, RegionMap::singletons(q.vars), depth(9));
    REQUIRE(d.size() == r.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(d[i].instr_first == r[i].instr_first);
      CHECK(d[i].instr_second == r[i].instr_second);
      CHECK(d[i].unit_name == r[i].unit_name);
    }
  }
}

TEST_CASE("region translation") {
  Program p = load_program("var x, y; region r1 { x }; region r2 { y }; "
                           "thread t { x := y; y := 1; }");
  RegionTranslation tr = translate_for_region_races(p, p.regions);
  const Program &q = tr.program;
  REQUIRE(q.instructions.size() == 4);
  CHECK(print_command(q.instructions[0].command, q) == "X_r1 := X_r2");
  CHECK(q.instructions[0].auxiliary);
  CHECK(print_command(q.instructions[1].command, q) == "x := y");
  CHECK(print_command(q.instructions[2].command, q) == "X_r2 := X_r2");
  CHECK(validate_program(q).empty());

  Program s = load_program("var x, y; region r { x, y }; thread t { x := y; }");
  RegionTranslation ts = translate_for_region_races(s, s.regions);
  CHECK(print_command(ts.program.instructions[0].command, ts.program) ==
        "X_r := X_r");

  // Both detection paths agree on the corpus.
  for (const char *name : kCorpus) {
    CAPTURE(name);
    Program q2 = corpus_program(name);
    std::vector<RegionMap> maps{RegionMap::singletons(q2.vars)};
    if (std::string(name) == "fig1.cp" || std::string(name) == "fig1_racy.cp") {
      maps.push_back(parse_regions(read_corpus("fig1.rg"), q2.vars));
      maps.push_back(parse_regions(read_corpus("fig1_all.rg"), q2.vars));
    }
    for (const RegionMap &rm : maps) {
      auto direct = region_race_keys(q2, find_region_races(q2, rm, depth(9)));
      auto via = region_races_via_translation(q2, rm, depth(9));
      CHECK(direct == via);
    }
  }
}

TEST_CASE("owned variables oracle") {
  Program p = corpus_program("fig1.cp");
  CHECK(owned_vars_oracle(p, 0, 3, depth(13)) == std::set<VarId>{0, 1});
  CHECK(owned_vars_oracle(p, 1, 9, depth(13)) == std::set<VarId>{2});
  Program single = load_program("var a, b; thread t { a := 1; b := a; }");
  for (Loc n : single.threads[0].locations)
    CHECK(owned_vars_oracle(single, 0, n, depth(6)) == std::set<VarId>{0, 1});
}

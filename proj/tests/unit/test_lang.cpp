#include "common.hpp"
#include "doctest.h"

using namespace syncdrf;

namespace {

const Instruction *find_instr(const Program &p, Loc src, Command::Kind k) {
  for (const Instruction &i : p.instructions)
    if (i.source == src && i.command.kind == k)
      return &i;
  return nullptr;
}

const char *kCorpus[] = {"fig1.cp", "fig1_racy.cp", "fig9.cp", "fig11.cp",
                         "fig14.cp"};

} // namespace

TEST_CASE("parse fig1") {
  Program p = corpus_program("fig1.cp");
  CHECK(p.threads.size() == 2);
  CHECK(p.vars.size() == 3);
  CHECK(p.locks.size() == 1);
  CHECK(p.threads[0].entry == 1);
  CHECK(p.threads[0].exit == 7);
  CHECK(p.threads[1].entry == 8);
  CHECK(p.threads[1].exit == 13);
  REQUIRE(p.assertions.size() == 3);
  CHECK(p.assertions[0].loc == 5);
  CHECK(p.assertions[1].loc == 9);
  CHECK(p.assertions[2].loc == 11);
  CHECK(p.assertions[2].thread == 1);
  const Instruction *x_y = find_instr(p, 2, Command::Kind::Assign);
  REQUIRE(x_y);
  CHECK(x_y->target == 3);
  CHECK(print_command(x_y->command, p) == "x := y");
  CHECK(p.post_release_points() == std::vector<Loc>{7, 13});
  CHECK(p.pre_acquire_points() == std::vector<Loc>{1, 10});
}

TEST_CASE("empty thread body has entry equal to exit") {
  Program p = load_program("var x; thread t { }");
  REQUIRE(p.threads.size() == 1);
  CHECK(p.threads[0].entry == p.threads[0].exit);
  CHECK(p.instructions.empty());
}

TEST_CASE("assert is recorded at its source location") {
  Program p = parse_program("var x, y; thread t { x := 1; assert(x == y); }");
  REQUIRE(p.assertions.size() == 1);
  CHECK(p.assertions[0].loc == 2);
  CHECK(print_bool(p.assertions[0].cond, p.vars) == "x == y");
}

TEST_CASE("desugar while in fig14") {
  Program p = corpus_program("fig14.cp");
  CHECK(p.threads[1].entry == 6);
  std::vector<const Instruction *> head;
  for (const Instruction &i : p.instructions)
    if (i.source == 6)
      head.push_back(&i);
  REQUIRE(head.size() == 2);
  CHECK(head[0]->target == 7);
  CHECK(print_command(head[0]->command, p) == "assume(p != 1)");
  CHECK(head[1]->target == 11);
  CHECK(!evaluate(head[1]->command.cond, {0, 0, 0}));
  CHECK(evaluate(head[1]->command.cond, {0, 0, 1}));
  const Instruction *back = find_instr(p, 10, Command::Kind::Assume);
  REQUIRE(back);
  CHECK(back->target == 6);
  CHECK(p.assertion_at(13) != nullptr);
  CHECK(p.threads[1].exit == 14);
}

TEST_CASE("desugar if without else") {
  Program p = load_program("var x; thread t { if (x > 0) { x := 1; } x := 2; }");
  // 1: if head, 2: x := 1, 3: close, 4: x := 2, 5: exit
  std::vector<Loc> targets;
  for (std::size_t idx : p.outgoing(1))
    targets.push_back(p.instructions[idx].target);
  CHECK(targets == std::vector<Loc>{2, 4});
  const Instruction *close = find_instr(p, 3, Command::Kind::Assume);
  REQUIRE(close);
  CHECK(close->target == 4);
}

TEST_CASE("desugar if with else") {
  Program p = load_program(
      "var x; thread t { if (x > 0) { x := 1; } else { x := 3; } }");
  // 1 head, 2 then, 3 close, 4 else, 5 else-close, 6 exit
  std::vector<Loc> targets;
  for (std::size_t idx : p.outgoing(1))
    targets.push_back(p.instructions[idx].target);
  CHECK(targets == std::vector<Loc>{2, 4});
  CHECK(find_instr(p, 3, Command::Kind::Assume)->target == 6);
  CHECK(find_instr(p, 5, Command::Kind::Assume)->target == 6);
}

TEST_CASE("straight-line body keeps its commands") {
  Program p = load_program("var x, y; lock m; thread t { acquire(m); x := y; "
                           "release(m); assert(x == y); }");
  REQUIRE(p.instructions.size() == 4);
  CHECK(p.instructions[0].command == Command::acquire(0));
  CHECK(p.instructions[1].command ==
        Command::assign(0, Expr::variable(1)));
  CHECK(p.instructions[2].command == Command::release(0));
  CHECK(p.assertions.size() == 1);
  // The assertion edge is a no-op that still reads its variables.
  AccessSets a = access_sets(p.instructions[3].command);
  CHECK(a.reads == std::set<VarId>{0, 1});
  CHECK(a.writes.empty());
}

TEST_CASE("access sets") {
  Command c = Command::assign(0, Expr::variable(1));
  CHECK(access_sets(c).reads == std::set<VarId>{1});
  CHECK(access_sets(c).writes == std::set<VarId>{0});
  Command probe = Command::assume(
      BoolExpr::cmp(CmpOp::Eq, Expr::variable(0), Expr::variable(0)));
  CHECK(access_sets(probe).reads == std::set<VarId>{0});
  CHECK(access_sets(probe).writes.empty());
  CHECK(access_sets(Command::acquire(0)).reads.empty());
  CHECK(access_sets(Command::acquire(0)).writes.empty());
}

TEST_CASE("validate") {
  CHECK(validate_program(corpus_program("fig1.cp")).empty());

  Program p = desugar(parse_program(
      "var x; lock m; thread t { acquire(m); release(m); x := 1; release(m); }"));
  // Point the first release at the second release's target.
  Instruction *first = nullptr, *second = nullptr;
  for (Instruction &i : p.instructions)
    if (i.command.kind == Command::Kind::Release)
      (first ? second : first) = &i;
  first->target = second->target;
  reindex(p);
  CHECK(validate_program(p).size() == 1);

  Program q = corpus_program("fig1.cp");
  q.instructions[0].command.lock = 7;
  CHECK(validate_program(q).size() == 1);
}

TEST_CASE("parse errors carry positions") {
  try {
    parse_program("var x;\nthread t { y := 1; }");
    FAIL("expected an error");
  } catch (const ParseError &e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 12);
  }
  CHECK_THROWS_AS(parse_program("var x; thread t { } thread t { }"), ParseError);
  CHECK_THROWS_AS(parse_program("var x; thread t { acquire(m); }"), ParseError);
  CHECK_THROWS_AS(parse_program("var x; thread t { x := ; }"), ParseError);
  CHECK_THROWS_AS(parse_program("var x; thread t { assume(havoc > 1); }"),
                  ParseError);
  CHECK_THROWS_AS(parse_program("var x;"), ParseError);
}

TEST_CASE("expressions") {
  Program p = parse_program(
      "var x, y; thread t { x := 2 * (x - -3) + havoc - y; "
      "assume(!(x < y) && (x + 1 == y || true)); }");
  const Stmt &s = p.threads[0].body[0];
  LinearForm f = linearize(s.expr);
  CHECK(f.coeffs == std::map<VarId, Value>{{0, 2}, {1, -1}});
  CHECK(f.constant == 6);
  CHECK(f.havoc);
  auto vals = evaluate_all(s.expr, {1, 1}, {0, 1, 2});
  CHECK(vals == std::vector<Value>{7, 8, 9});
  const BoolExpr &b = p.threads[0].body[1].cond;
  CHECK(evaluate(b, {2, 1}));
  CHECK(!evaluate(b, {0, 1}));
  BoolExpr n = to_nnf(BoolExpr::negation(b));
  for (Value x = -2; x <= 2; ++x)
    for (Value y = -2; y <= 2; ++y)
      CHECK(evaluate(n, {x, y}) == !evaluate(b, {x, y}));
  CHECK_THROWS_AS(checked_add(INT64_MAX, 1), OverflowError);
}

TEST_CASE("regions") {
  Program p = corpus_program("fig1.cp");
  CHECK(p.regions.is_singleton_partition());
  RegionMap r = parse_regions(read_corpus("fig1.rg"), p.vars);
  CHECK(r.size() == 2);
  CHECK(r.region_of[0] == r.region_of[1]);
  CHECK(r.region_of[2] != r.region_of[0]);
  CHECK(r.names[r.region_of[0]] == "r");
  Program q = load_program("var a, b, c; region g { a, c }; thread t { }");
  CHECK(q.regions.region_of[0] == q.regions.region_of[2]);
  CHECK(q.regions.size() == 2);
  CHECK_THROWS_AS(parse_regions("region r { a, q }", q.vars), ParseError);
}

TEST_CASE("desugar is idempotent and printing round-trips") {
  for (const char *name : kCorpus) {
    CAPTURE(name);
    Program parsed = parse_program(read_corpus(name));
    Program once = desugar(parsed);
    CHECK(desugar(once) == once);
    Program again = parse_program(print_program(parsed));
    CHECK(again == parsed);
  }
  Program r = parse_program(
      "var a, b; lock m; region g { a, b }; thread t { while (a < 3 || !(b == 1)) "
      "{ if (a != b) { a := a + 1; } else { b := -2 * (a - b) + 4; } } }");
  CHECK(parse_program(print_program(r)) == r);
}

TEST_CASE("assign writes a single variable, assume none") {
  for (const char *name : kCorpus) {
    Program p = corpus_program(name);
    for (const Instruction &i : p.instructions) {
      AccessSets a = access_sets(i.command);
      if (i.command.kind == Command::Kind::Assign)
        CHECK(a.writes.size() == 1);
      else
        CHECK(a.writes.empty());
    }
  }
}

//===- lang.hpp - Concurrent toy language: AST, CFG and parser --*- C++ -*-===//
//
// Programs are a fixed set of threads over shared integer variables and
// locks. Each thread is parsed into a structured AST and desugared into a
// control-flow graph whose edges carry only four basic commands: assignment,
// assume, acquire and release.
//
//===----------------------------------------------------------------------===//
#ifndef SYNCDRF_LANG_HPP
#define SYNCDRF_LANG_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace syncdrf {

using Value = std::int64_t;
using VarId = std::size_t;
using LockId = std::size_t;
using ThreadId = std::size_t;
using RegionId = std::size_t;
/// Program locations are globally unique and numbered from 1 in source order.
using Loc = int;

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string &msg, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

private:
  int line_;
  int column_;
};

/// Raised on arithmetic that leaves the 64-bit range.
class OverflowError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

Value checked_add(Value a, Value b);
Value checked_mul(Value a, Value b);

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

/// Linear integer expression tree. `Scale` multiplies its single operand by
/// an integer literal; `Havoc` is a nondeterministic integer.
struct Expr {
  enum class Kind { Const, Var, Havoc, Add, Sub, Scale };
  Kind kind = Kind::Const;
  Value value = 0; // Const literal or Scale factor
  VarId var = 0;
  std::vector<Expr> args;

  static Expr constant(Value v);
  static Expr variable(VarId v);
  static Expr havoc();
  static Expr add(Expr a, Expr b);
  static Expr sub(Expr a, Expr b);
  static Expr scale(Value k, Expr e);

  bool operator==(const Expr &) const = default;
};

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

CmpOp negate(CmpOp op);
std::string_view to_string(CmpOp op);

struct BoolExpr {
  enum class Kind { True, False, Cmp, And, Or, Not };
  Kind kind = Kind::True;
  CmpOp op = CmpOp::Eq;
  std::vector<Expr> operands;    // lhs, rhs for Cmp
  std::vector<BoolExpr> args;    // children for And/Or/Not

  static BoolExpr truth();
  static BoolExpr falsity();
  static BoolExpr cmp(CmpOp op, Expr lhs, Expr rhs);
  static BoolExpr conj(BoolExpr a, BoolExpr b);
  static BoolExpr disj(BoolExpr a, BoolExpr b);
  static BoolExpr negation(BoolExpr a);

  bool operator==(const BoolExpr &) const = default;
};

/// Σ coeffs[v]·v + constant, or nondeterministic when `havoc` is set.
struct LinearForm {
  std::map<VarId, Value> coeffs;
  Value constant = 0;
  bool havoc = false;

  bool operator==(const LinearForm &) const = default;
};

LinearForm linearize(const Expr &e);
LinearForm linear_difference(const Expr &lhs, const Expr &rhs);

bool contains_havoc(const Expr &e);
bool contains_havoc(const BoolExpr &b);
void collect_vars(const Expr &e, std::set<VarId> &out);
void collect_vars(const BoolExpr &b, std::set<VarId> &out);

/// Pushes negations to the comparison atoms.
BoolExpr to_nnf(const BoolExpr &b, bool negated = false);

/// Evaluation of a havoc-free expression.
Value evaluate(const Expr &e, const std::vector<Value> &env);
/// Every value `e` may take when each `havoc` occurrence independently draws
/// from `havoc_values`. Sorted, duplicates removed.
std::vector<Value> evaluate_all(const Expr &e, const std::vector<Value> &env,
                                const std::vector<Value> &havoc_values);
bool evaluate(const BoolExpr &b, const std::vector<Value> &env);

// ---------------------------------------------------------------------------
// Commands and instructions
// ---------------------------------------------------------------------------

struct Command {
  enum class Kind { Assign, Assume, Acquire, Release };
  Kind kind = Kind::Assume;
  VarId var = 0;  // Assign target
  Expr expr;      // Assign rhs
  BoolExpr cond;  // Assume guard
  LockId lock = 0;

  static Command assign(VarId x, Expr e);
  static Command assume(BoolExpr b);
  static Command acquire(LockId m);
  static Command release(LockId m);

  bool operator==(const Command &) const = default;
};

struct AccessSets {
  std::set<VarId> reads;
  std::set<VarId> writes;
};

AccessSets access_sets(const Command &c);

struct Instruction {
  Loc source = 0;
  Command command;
  Loc target = 0;
  ThreadId thread = 0;
  /// Inserted by a program transformation; costs no exploration depth.
  bool auxiliary = false;

  bool operator==(const Instruction &) const = default;
};

// ---------------------------------------------------------------------------
// Structured statements (parser output)
// ---------------------------------------------------------------------------

struct Stmt {
  enum class Kind { Assign, Assume, Acquire, Release, Assert, While, If };
  Kind kind = Kind::Assume;
  Loc loc = 0;
  VarId var = 0;
  Expr expr;
  BoolExpr cond;
  LockId lock = 0;
  std::vector<Stmt> body;
  std::vector<Stmt> else_body;
  bool has_else = false;
  Loc close_loc = 0;      // back edge of `while`, join edge of `if`
  Loc else_close_loc = 0; // join edge of the `else` branch

  bool operator==(const Stmt &) const = default;
};

struct RegionMap {
  std::vector<std::string> names;
  std::vector<RegionId> region_of; // indexed by VarId

  static RegionMap singletons(const std::vector<std::string> &vars);
  std::vector<std::vector<VarId>> members() const;
  std::size_t size() const { return names.size(); }
  bool is_singleton_partition() const;

  bool operator==(const RegionMap &) const = default;
};

struct ThreadCFG {
  std::string name;
  Loc entry = 0;
  Loc exit = 0;
  std::vector<Loc> locations;          // sorted
  std::vector<Stmt> body;
  std::vector<std::size_t> instructions; // indices into Program::instructions

  bool operator==(const ThreadCFG &) const = default;
};

struct Assertion {
  Loc loc = 0;
  ThreadId thread = 0;
  BoolExpr cond;

  bool operator==(const Assertion &) const = default;
};

struct Program {
  std::vector<std::string> vars;
  std::vector<std::string> locks;
  RegionMap regions;
  std::vector<ThreadCFG> threads;
  std::vector<Assertion> assertions;
  std::vector<Instruction> instructions; // filled by desugar
  bool desugared = false;
  Loc max_loc = 0;
  // Lookup tables built by desugar, indexed by location.
  std::vector<ThreadId> loc_thread;
  std::vector<std::vector<std::size_t>> out_edges;

  std::optional<VarId> find_var(std::string_view name) const;
  std::optional<LockId> find_lock(std::string_view name) const;
  std::optional<ThreadId> find_thread(std::string_view name) const;

  /// Thread owning a location; throws std::out_of_range for unknown ones.
  ThreadId thread_of(Loc n) const;
  const std::vector<std::size_t> &outgoing(Loc n) const;
  /// Targets of release instructions, optionally restricted to one lock.
  std::vector<Loc> post_release_points(std::optional<LockId> lock = {}) const;
  /// Sources of acquire instructions, optionally restricted to one lock.
  std::vector<Loc> pre_acquire_points(std::optional<LockId> lock = {}) const;
  const Assertion *assertion_at(Loc n) const;

  bool operator==(const Program &) const = default;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Parses program text. Structured statements stay in AST form; call
/// `desugar` to obtain the control-flow graph.
Program parse_program(std::string_view text);

/// Parses a region file: one `region name { v1, v2 }` line per region.
/// Variables not mentioned keep singleton regions.
RegionMap parse_regions(std::string_view text, const std::vector<std::string> &vars);

/// Lowers structured statements to basic-command edges. `while`/`if` become
/// guarded assume edges, `assert(b)` becomes the always-enabled edge
/// `assume(b || !b)` (a no-op that reads the asserted variables) and the
/// closing braces become `assume(true)` gotos.
Program desugar(const Program &p);

/// Rebuilds the per-location lookup tables and per-thread instruction lists
/// after instructions or locations were edited directly.
void reindex(Program &p);

/// Empty iff the program is well formed.
std::vector<std::string> validate_program(const Program &p);

std::string print_expr(const Expr &e, const std::vector<std::string> &vars);
std::string print_bool(const BoolExpr &b, const std::vector<std::string> &vars);
std::string print_command(const Command &c, const Program &p);
/// Canonical source text; parse_program(print_program(p)) reproduces p.
std::string print_program(const Program &p);

/// Parses, desugars and validates; throws ParseError on invalid programs.
Program load_program(std::string_view text);

} // namespace syncdrf

#endif // SYNCDRF_LANG_HPP

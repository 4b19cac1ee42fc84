#include "syncdrf/lang.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace syncdrf {

ParseError::ParseError(const std::string &msg, int line, int column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) +
                         ": " + msg),
      line_(line), column_(column) {}

Value checked_add(Value a, Value b) {
  Value r;
  if (__builtin_add_overflow(a, b, &r))
    throw OverflowError("integer overflow in addition");
  return r;
}

Value checked_mul(Value a, Value b) {
  Value r;
  if (__builtin_mul_overflow(a, b, &r))
    throw OverflowError("integer overflow in multiplication");
  return r;
}

//===----------------------------------------------------------------------===//
// Expressions
//===----------------------------------------------------------------------===//

Expr Expr::constant(Value v) {
  Expr e;
  e.kind = Kind::Const;
  e.value = v;
  return e;
}

Expr Expr::variable(VarId v) {
  Expr e;
  e.kind = Kind::Var;
  e.var = v;
  return e;
}

Expr Expr::havoc() {
  Expr e;
  e.kind = Kind::Havoc;
  return e;
}

Expr Expr::add(Expr a, Expr b) {
  Expr e;
  e.kind = Kind::Add;
  e.args = {std::move(a), std::move(b)};
  return e;
}

Expr Expr::sub(Expr a, Expr b) {
  Expr e;
  e.kind = Kind::Sub;
  e.args = {std::move(a), std::move(b)};
  return e;
}

Expr Expr::scale(Value k, Expr a) {
  Expr e;
  e.kind = Kind::Scale;
  e.value = k;
  e.args = {std::move(a)};
  return e;
}

CmpOp negate(CmpOp op) {
  switch (op) {
  case CmpOp::Eq: return CmpOp::Ne;
  case CmpOp::Ne: return CmpOp::Eq;
  case CmpOp::Lt: return CmpOp::Ge;
  case CmpOp::Le: return CmpOp::Gt;
  case CmpOp::Gt: return CmpOp::Le;
  case CmpOp::Ge: return CmpOp::Lt;
  }
  return op;
}

std::string_view to_string(CmpOp op) {
  switch (op) {
  case CmpOp::Eq: return "==";
  case CmpOp::Ne: return "!=";
  case CmpOp::Lt: return "<";
  case CmpOp::Le: return "<=";
  case CmpOp::Gt: return ">";
  case CmpOp::Ge: return ">=";
  }
  return "?";
}

BoolExpr BoolExpr::truth() { return BoolExpr{}; }

BoolExpr BoolExpr::falsity() {
  BoolExpr b;
  b.kind = Kind::False;
  return b;
}

BoolExpr BoolExpr::cmp(CmpOp op, Expr lhs, Expr rhs) {
  BoolExpr b;
  b.kind = Kind::Cmp;
  b.op = op;
  b.operands = {std::move(lhs), std::move(rhs)};
  return b;
}

BoolExpr BoolExpr::conj(BoolExpr x, BoolExpr y) {
  BoolExpr b;
  b.kind = Kind::And;
  b.args = {std::move(x), std::move(y)};
  return b;
}

BoolExpr BoolExpr::disj(BoolExpr x, BoolExpr y) {
  BoolExpr b;
  b.kind = Kind::Or;
  b.args = {std::move(x), std::move(y)};
  return b;
}

BoolExpr BoolExpr::negation(BoolExpr x) {
  BoolExpr b;
  b.kind = Kind::Not;
  b.args = {std::move(x)};
  return b;
}

static void accumulate(const Expr &e, Value k, LinearForm &f) {
  switch (e.kind) {
  case Expr::Kind::Const:
    f.constant = checked_add(f.constant, checked_mul(k, e.value));
    break;
  case Expr::Kind::Var: {
    Value c = checked_add(f.coeffs[e.var], k);
    if (c == 0)
      f.coeffs.erase(e.var);
    else
      f.coeffs[e.var] = c;
    break;
  }
  case Expr::Kind::Havoc:
    f.havoc = true;
    break;
  case Expr::Kind::Add:
    accumulate(e.args[0], k, f);
    accumulate(e.args[1], k, f);
    break;
  case Expr::Kind::Sub:
    accumulate(e.args[0], k, f);
    accumulate(e.args[1], checked_mul(k, -1), f);
    break;
  case Expr::Kind::Scale:
    accumulate(e.args[0], checked_mul(k, e.value), f);
    break;
  }
}

LinearForm linearize(const Expr &e) {
  LinearForm f;
  accumulate(e, 1, f);
  return f;
}

LinearForm linear_difference(const Expr &lhs, const Expr &rhs) {
  LinearForm f;
  accumulate(lhs, 1, f);
  accumulate(rhs, -1, f);
  return f;
}

bool contains_havoc(const Expr &e) {
  if (e.kind == Expr::Kind::Havoc)
    return true;
  return std::any_of(e.args.begin(), e.args.end(),
                     [](const Expr &a) { return contains_havoc(a); });
}

bool contains_havoc(const BoolExpr &b) {
  for (const Expr &e : b.operands)
    if (contains_havoc(e))
      return true;
  return std::any_of(b.args.begin(), b.args.end(),
                     [](const BoolExpr &a) { return contains_havoc(a); });
}

void collect_vars(const Expr &e, std::set<VarId> &out) {
  if (e.kind == Expr::Kind::Var)
    out.insert(e.var);
  for (const Expr &a : e.args)
    collect_vars(a, out);
}

void collect_vars(const BoolExpr &b, std::set<VarId> &out) {
  for (const Expr &e : b.operands)
    collect_vars(e, out);
  for (const BoolExpr &a : b.args)
    collect_vars(a, out);
}

BoolExpr to_nnf(const BoolExpr &b, bool negated) {
  switch (b.kind) {
  case BoolExpr::Kind::True:
    return negated ? BoolExpr::falsity() : BoolExpr::truth();
  case BoolExpr::Kind::False:
    return negated ? BoolExpr::truth() : BoolExpr::falsity();
  case BoolExpr::Kind::Cmp:
    return BoolExpr::cmp(negated ? negate(b.op) : b.op, b.operands[0],
                         b.operands[1]);
  case BoolExpr::Kind::Not:
    return to_nnf(b.args[0], !negated);
  case BoolExpr::Kind::And:
  case BoolExpr::Kind::Or: {
    BoolExpr l = to_nnf(b.args[0], negated), r = to_nnf(b.args[1], negated);
    bool conj = (b.kind == BoolExpr::Kind::And) != negated;
    return conj ? BoolExpr::conj(std::move(l), std::move(r))
                : BoolExpr::disj(std::move(l), std::move(r));
  }
  }
  return b;
}

Value evaluate(const Expr &e, const std::vector<Value> &env) {
  switch (e.kind) {
  case Expr::Kind::Const: return e.value;
  case Expr::Kind::Var: return env.at(e.var);
  case Expr::Kind::Havoc:
    throw std::logic_error("evaluate: havoc has no single value");
  case Expr::Kind::Add:
    return checked_add(evaluate(e.args[0], env), evaluate(e.args[1], env));
  case Expr::Kind::Sub:
    return checked_add(evaluate(e.args[0], env),
                       checked_mul(-1, evaluate(e.args[1], env)));
  case Expr::Kind::Scale:
    return checked_mul(e.value, evaluate(e.args[0], env));
  }
  return 0;
}

std::vector<Value> evaluate_all(const Expr &e, const std::vector<Value> &env,
                                const std::vector<Value> &havoc_values) {
  std::vector<Value> out;
  switch (e.kind) {
  case Expr::Kind::Const:
  case Expr::Kind::Var:
    out.push_back(evaluate(e, env));
    break;
  case Expr::Kind::Havoc:
    out = havoc_values;
    break;
  case Expr::Kind::Scale:
    for (Value v : evaluate_all(e.args[0], env, havoc_values))
      out.push_back(checked_mul(e.value, v));
    break;
  case Expr::Kind::Add:
  case Expr::Kind::Sub: {
    auto l = evaluate_all(e.args[0], env, havoc_values);
    auto r = evaluate_all(e.args[1], env, havoc_values);
    for (Value a : l)
      for (Value b : r)
        out.push_back(e.kind == Expr::Kind::Add
                          ? checked_add(a, b)
                          : checked_add(a, checked_mul(-1, b)));
    break;
  }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool evaluate(const BoolExpr &b, const std::vector<Value> &env) {
  switch (b.kind) {
  case BoolExpr::Kind::True: return true;
  case BoolExpr::Kind::False: return false;
  case BoolExpr::Kind::Not: return !evaluate(b.args[0], env);
  case BoolExpr::Kind::And:
    return evaluate(b.args[0], env) && evaluate(b.args[1], env);
  case BoolExpr::Kind::Or:
    return evaluate(b.args[0], env) || evaluate(b.args[1], env);
  case BoolExpr::Kind::Cmp: {
    Value l = evaluate(b.operands[0], env), r = evaluate(b.operands[1], env);
    switch (b.op) {
    case CmpOp::Eq: return l == r;
    case CmpOp::Ne: return l != r;
    case CmpOp::Lt: return l < r;
    case CmpOp::Le: return l <= r;
    case CmpOp::Gt: return l > r;
    case CmpOp::Ge: return l >= r;
    }
  }
  }
  return false;
}

//===----------------------------------------------------------------------===//
// Commands
//===----------------------------------------------------------------------===//

Command Command::assign(VarId x, Expr e) {
  Command c;
  c.kind = Kind::Assign;
  c.var = x;
  c.expr = std::move(e);
  return c;
}

Command Command::assume(BoolExpr b) {
  Command c;
  c.kind = Kind::Assume;
  c.cond = std::move(b);
  return c;
}

Command Command::acquire(LockId m) {
  Command c;
  c.kind = Kind::Acquire;
  c.lock = m;
  return c;
}

Command Command::release(LockId m) {
  Command c;
  c.kind = Kind::Release;
  c.lock = m;
  return c;
}

AccessSets access_sets(const Command &c) {
  AccessSets a;
  if (c.kind == Command::Kind::Assign) {
    a.writes.insert(c.var);
    collect_vars(c.expr, a.reads);
  } else if (c.kind == Command::Kind::Assume) {
    collect_vars(c.cond, a.reads);
  }
  return a;
}

//===----------------------------------------------------------------------===//
// Regions and program queries
//===----------------------------------------------------------------------===//

RegionMap RegionMap::singletons(const std::vector<std::string> &vars) {
  RegionMap r;
  r.names = vars;
  for (std::size_t i = 0; i < vars.size(); ++i)
    r.region_of.push_back(i);
  return r;
}

std::vector<std::vector<VarId>> RegionMap::members() const {
  std::vector<std::vector<VarId>> out(names.size());
  for (VarId v = 0; v < region_of.size(); ++v)
    out[region_of[v]].push_back(v);
  return out;
}

bool RegionMap::is_singleton_partition() const {
  for (const auto &m : members())
    if (m.size() > 1)
      return false;
  return true;
}

template <typename T>
static std::optional<std::size_t> index_of(const std::vector<T> &xs,
                                           std::string_view name) {
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (xs[i] == name)
      return i;
  return std::nullopt;
}

std::optional<VarId> Program::find_var(std::string_view name) const {
  return index_of(vars, name);
}

std::optional<LockId> Program::find_lock(std::string_view name) const {
  return index_of(locks, name);
}

std::optional<ThreadId> Program::find_thread(std::string_view name) const {
  for (std::size_t i = 0; i < threads.size(); ++i)
    if (threads[i].name == name)
      return i;
  return std::nullopt;
}

ThreadId Program::thread_of(Loc n) const {
  if (n >= 0 && static_cast<std::size_t>(n) < loc_thread.size() &&
      loc_thread[n] != static_cast<ThreadId>(-1))
    return loc_thread[n];
  for (ThreadId t = 0; t < threads.size(); ++t)
    if (std::binary_search(threads[t].locations.begin(),
                           threads[t].locations.end(), n))
      return t;
  throw std::out_of_range("unknown location " + std::to_string(n));
}

const std::vector<std::size_t> &Program::outgoing(Loc n) const {
  static const std::vector<std::size_t> none;
  if (n < 0 || static_cast<std::size_t>(n) >= out_edges.size())
    return none;
  return out_edges[n];
}

std::vector<Loc> Program::post_release_points(std::optional<LockId> lock) const {
  std::vector<Loc> out;
  for (const Instruction &i : instructions)
    if (i.command.kind == Command::Kind::Release &&
        (!lock || i.command.lock == *lock))
      out.push_back(i.target);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Loc> Program::pre_acquire_points(std::optional<LockId> lock) const {
  std::vector<Loc> out;
  for (const Instruction &i : instructions)
    if (i.command.kind == Command::Kind::Acquire &&
        (!lock || i.command.lock == *lock))
      out.push_back(i.source);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

const Assertion *Program::assertion_at(Loc n) const {
  for (const Assertion &a : assertions)
    if (a.loc == n)
      return &a;
  return nullptr;
}

//===----------------------------------------------------------------------===//
// Lexer
//===----------------------------------------------------------------------===//

namespace {

struct Token {
  enum Kind { Ident, Int, Punct, End } kind = End;
  std::string text;
  Value value = 0;
  int line = 1, column = 1;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n')
        advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      t.kind = Token::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      Value v = 0;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
        if (__builtin_mul_overflow(v, 10, &v) ||
            __builtin_add_overflow(v, src[j] - '0', &v))
          throw ParseError("integer literal out of range", line, col);
        ++j;
      }
      t.kind = Token::Int;
      t.value = v;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else {
      static const char *two[] = {":=", "==", "!=", "<=", ">=", "&&", "||"};
      t.kind = Token::Punct;
      for (const char *p : two)
        if (src.substr(i, 2) == p)
          t.text = p;
      if (t.text.empty()) {
        if (std::string_view("{}();,+-*<>!=").find(c) == std::string_view::npos)
          throw ParseError(std::string("unexpected character '") + c + "'", line,
                           col);
        t.text = std::string(1, c);
      }
      advance(t.text.size());
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

class Parser {
public:
  Parser(std::string_view text) : toks_(tokenize(text)) {}

  Program program() {
    std::vector<std::pair<std::string, std::vector<std::string>>> regions;
    std::vector<Token> region_toks;
    while (is_ident("var") || is_ident("lock") || is_ident("region")) {
      if (accept_ident("var")) {
        do
          declare(p_.vars, "variable");
        while (accept(","));
        expect(";");
      } else if (accept_ident("lock")) {
        do
          declare(p_.locks, "lock");
        while (accept(","));
        expect(";");
      } else {
        next();
        region_toks.push_back(peek());
        regions.push_back(region_body());
        expect(";");
      }
    }
    p_.regions = RegionMap::singletons(p_.vars);
    for (std::size_t i = 0; i < regions.size(); ++i)
      apply_region(p_.regions, p_.vars, regions[i].first, regions[i].second,
                   region_toks[i]);
    if (peek().kind == Token::End)
      fail("expected at least one thread");
    while (peek().kind != Token::End) {
      if (!accept_ident("thread"))
        fail("expected 'thread'");
      ThreadCFG t;
      Token name = peek();
      t.name = ident();
      if (p_.find_thread(t.name))
        throw ParseError("duplicate thread name '" + t.name + "'", name.line,
                         name.column);
      if (is_declared(t.name))
        throw ParseError("thread name '" + t.name + "' clashes with a declaration",
                         name.line, name.column);
      expect("{");
      Loc first = next_loc_;
      t.body = block();
      t.exit = next_loc_++;
      t.entry = t.body.empty() ? t.exit : first;
      for (Loc l = first; l < next_loc_; ++l)
        t.locations.push_back(l);
      p_.threads.push_back(std::move(t));
    }
    p_.max_loc = next_loc_ - 1;
    for (ThreadId t = 0; t < p_.threads.size(); ++t)
      collect_assertions(p_.threads[t].body, t);
    std::sort(p_.assertions.begin(), p_.assertions.end(),
              [](const Assertion &a, const Assertion &b) { return a.loc < b.loc; });
    return std::move(p_);
  }

  std::vector<std::pair<std::string, std::vector<std::string>>> region_file() {
    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    while (peek().kind != Token::End) {
      if (!accept_ident("region"))
        fail("expected 'region'");
      out.push_back(region_body());
      accept(";");
    }
    return out;
  }

  static void apply_region(RegionMap &rm, const std::vector<std::string> &vars,
                           const std::string &name,
                           const std::vector<std::string> &members,
                           const Token &at) {
    // A declared region takes over its members; emptied singleton regions
    // are dropped afterwards.
    if (std::find(rm.names.begin(), rm.names.end(), name) != rm.names.end() &&
        !(members.size() == 1 && members[0] == name &&
          std::find(vars.begin(), vars.end(), name) != vars.end()))
      throw ParseError("duplicate region name '" + name + "'", at.line, at.column);
    RegionId id = rm.names.size();
    rm.names.push_back(name);
    for (const std::string &m : members) {
      auto v = index_of(vars, m);
      if (!v)
        throw ParseError("undeclared variable '" + m + "' in region", at.line,
                         at.column);
      RegionId old = rm.region_of[*v];
      if (rm.names[old] != vars[*v])
        throw ParseError("variable '" + m + "' is in two regions", at.line,
                         at.column);
      rm.region_of[*v] = id;
    }
    // Compact: drop regions without members, keeping order.
    std::vector<bool> used(rm.names.size(), false);
    for (RegionId r : rm.region_of)
      used[r] = true;
    std::vector<RegionId> remap(rm.names.size());
    std::vector<std::string> names;
    for (RegionId r = 0; r < rm.names.size(); ++r)
      if (used[r]) {
        remap[r] = names.size();
        names.push_back(rm.names[r]);
      }
    for (RegionId &r : rm.region_of)
      r = remap[r];
    rm.names = std::move(names);
  }

private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Program p_;
  Loc next_loc_ = 1;

  const Token &peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  const Token &next() {
    const Token &t = toks_[pos_];
    if (pos_ + 1 < toks_.size())
      ++pos_;
    return t;
  }
  [[noreturn]] void fail(const std::string &msg) const {
    const Token &t = peek();
    std::string got = t.kind == Token::End ? "end of input" : "'" + t.text + "'";
    throw ParseError(msg + ", got " + got, t.line, t.column);
  }
  bool is(std::string_view p) const {
    return peek().kind == Token::Punct && peek().text == p;
  }
  bool is_ident(std::string_view w) const {
    return peek().kind == Token::Ident && peek().text == w;
  }
  bool accept(std::string_view p) {
    if (!is(p))
      return false;
    next();
    return true;
  }
  bool accept_ident(std::string_view w) {
    if (!is_ident(w))
      return false;
    next();
    return true;
  }
  void expect(std::string_view p) {
    if (!accept(p))
      fail("expected '" + std::string(p) + "'");
  }
  static bool is_keyword(const std::string &s) {
    static const char *kw[] = {"var",    "lock",    "region", "thread",
                               "assume", "acquire", "release", "assert",
                               "while",  "if",      "else",   "havoc",
                               "true",   "false"};
    return std::any_of(std::begin(kw), std::end(kw),
                       [&](const char *k) { return s == k; });
  }
  std::string ident() {
    if (peek().kind != Token::Ident || is_keyword(peek().text))
      fail("expected identifier");
    return next().text;
  }
  bool is_declared(const std::string &n) const {
    return p_.find_var(n) || p_.find_lock(n);
  }
  void declare(std::vector<std::string> &into, const char *what) {
    Token at = peek();
    std::string n = ident();
    if (is_declared(n))
      throw ParseError(std::string("duplicate declaration of ") + what + " '" + n +
                           "'",
                       at.line, at.column);
    into.push_back(n);
  }
  std::pair<std::string, std::vector<std::string>> region_body() {
    std::string name = ident();
    std::vector<std::string> members;
    expect("{");
    do
      members.push_back(ident());
    while (accept(","));
    expect("}");
    return {name, members};
  }
  VarId var_ref() {
    Token at = peek();
    std::string n = ident();
    auto v = p_.find_var(n);
    if (!v)
      throw ParseError("undeclared variable '" + n + "'", at.line, at.column);
    return *v;
  }
  LockId lock_ref() {
    Token at = peek();
    std::string n = ident();
    auto m = p_.find_lock(n);
    if (!m)
      throw ParseError("undeclared lock '" + n + "'", at.line, at.column);
    return *m;
  }

  std::vector<Stmt> block() {
    std::vector<Stmt> out;
    while (!accept("}")) {
      if (peek().kind == Token::End)
        fail("expected '}'");
      out.push_back(stmt());
    }
    return out;
  }

  Stmt stmt() {
    Stmt s;
    s.loc = next_loc_++;
    if (accept_ident("assume")) {
      s.kind = Stmt::Kind::Assume;
      s.cond = paren_cond();
      expect(";");
    } else if (accept_ident("assert")) {
      s.kind = Stmt::Kind::Assert;
      s.cond = paren_cond();
      expect(";");
    } else if (accept_ident("acquire")) {
      s.kind = Stmt::Kind::Acquire;
      expect("(");
      s.lock = lock_ref();
      expect(")");
      expect(";");
    } else if (accept_ident("release")) {
      s.kind = Stmt::Kind::Release;
      expect("(");
      s.lock = lock_ref();
      expect(")");
      expect(";");
    } else if (accept_ident("while")) {
      s.kind = Stmt::Kind::While;
      s.cond = paren_cond();
      expect("{");
      s.body = block();
      s.close_loc = next_loc_++;
    } else if (accept_ident("if")) {
      s.kind = Stmt::Kind::If;
      s.cond = paren_cond();
      expect("{");
      s.body = block();
      s.close_loc = next_loc_++;
      if (accept_ident("else")) {
        s.has_else = true;
        expect("{");
        s.else_body = block();
        s.else_close_loc = next_loc_++;
      }
    } else {
      s.kind = Stmt::Kind::Assign;
      s.var = var_ref();
      expect(":=");
      s.expr = expr();
      expect(";");
    }
    return s;
  }

  BoolExpr paren_cond() {
    expect("(");
    Token at = peek();
    BoolExpr b = bexpr();
    expect(")");
    if (contains_havoc(b))
      throw ParseError("havoc is not allowed in conditions", at.line, at.column);
    return b;
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept("+"))
        e = Expr::add(std::move(e), term());
      else if (accept("-"))
        e = Expr::sub(std::move(e), term());
      else
        return e;
    }
  }

  Expr term() {
    if (peek().kind == Token::Int && peek(1).kind == Token::Punct &&
        peek(1).text == "*") {
      Value k = next().value;
      next();
      return Expr::scale(k, term());
    }
    if (is("-") && peek(1).kind == Token::Int) {
      next();
      Value k = -next().value;
      if (accept("*"))
        return Expr::scale(k, term());
      return Expr::constant(k);
    }
    if (peek().kind == Token::Int)
      return Expr::constant(next().value);
    if (accept_ident("havoc"))
      return Expr::havoc();
    if (accept("(")) {
      Expr e = expr();
      expect(")");
      return e;
    }
    return Expr::variable(var_ref());
  }

  BoolExpr bexpr() {
    BoolExpr b = bconj();
    while (accept("||"))
      b = BoolExpr::disj(std::move(b), bconj());
    return b;
  }

  BoolExpr bconj() {
    BoolExpr b = bunary();
    while (accept("&&"))
      b = BoolExpr::conj(std::move(b), bunary());
    return b;
  }

  static bool is_cmp(const Token &t) {
    if (t.kind != Token::Punct)
      return false;
    static const char *ops[] = {"==", "!=", "<", "<=", ">", ">="};
    return std::any_of(std::begin(ops), std::end(ops),
                       [&](const char *o) { return t.text == o; });
  }

  BoolExpr bunary() {
    if (accept("!"))
      return BoolExpr::negation(bunary());
    if (accept_ident("true"))
      return BoolExpr::truth();
    if (accept_ident("false"))
      return BoolExpr::falsity();
    if (is("(")) {
      // Either a parenthesised condition or an arithmetic operand.
      std::size_t save = pos_;
      Loc save_loc = next_loc_;
      try {
        next();
        BoolExpr b = bexpr();
        expect(")");
        if (!is_cmp(peek()) && !is("+") && !is("-"))
          return b;
      } catch (const ParseError &) {
      }
      pos_ = save;
      next_loc_ = save_loc;
    }
    Expr l = expr();
    if (!is_cmp(peek()))
      fail("expected comparison operator");
    std::string op = next().text;
    Expr r = expr();
    CmpOp c = op == "==" ? CmpOp::Eq
              : op == "!=" ? CmpOp::Ne
              : op == "<"  ? CmpOp::Lt
              : op == "<=" ? CmpOp::Le
              : op == ">"  ? CmpOp::Gt
                           : CmpOp::Ge;
    return BoolExpr::cmp(c, std::move(l), std::move(r));
  }

  void collect_assertions(const std::vector<Stmt> &body, ThreadId t) {
    for (const Stmt &s : body) {
      if (s.kind == Stmt::Kind::Assert)
        p_.assertions.push_back({s.loc, t, s.cond});
      collect_assertions(s.body, t);
      collect_assertions(s.else_body, t);
    }
  }
};

//===----------------------------------------------------------------------===//
// Desugaring
//===----------------------------------------------------------------------===//

struct Lowering {
  Program &p;
  ThreadId tid;

  void emit(Loc from, Command c, Loc to) {
    p.threads[tid].instructions.push_back(p.instructions.size());
    p.instructions.push_back({from, std::move(c), to, tid, false});
  }

  // Lowers `body` so that control leaves to `cont`.
  void block(const std::vector<Stmt> &body, Loc cont) {
    for (std::size_t i = 0; i < body.size(); ++i) {
      Loc next = i + 1 < body.size() ? body[i + 1].loc : cont;
      stmt(body[i], next);
    }
  }

  static Loc first_loc(const std::vector<Stmt> &body, Loc fallback) {
    return body.empty() ? fallback : body.front().loc;
  }

  void stmt(const Stmt &s, Loc next) {
    switch (s.kind) {
    case Stmt::Kind::Assign:
      emit(s.loc, Command::assign(s.var, s.expr), next);
      break;
    case Stmt::Kind::Assume:
      emit(s.loc, Command::assume(s.cond), next);
      break;
    case Stmt::Kind::Assert:
      emit(s.loc,
           Command::assume(BoolExpr::disj(s.cond, BoolExpr::negation(s.cond))),
           next);
      break;
    case Stmt::Kind::Acquire:
      emit(s.loc, Command::acquire(s.lock), next);
      break;
    case Stmt::Kind::Release:
      emit(s.loc, Command::release(s.lock), next);
      break;
    case Stmt::Kind::While:
      emit(s.loc, Command::assume(s.cond), first_loc(s.body, s.close_loc));
      emit(s.loc, Command::assume(BoolExpr::negation(s.cond)), next);
      block(s.body, s.close_loc);
      emit(s.close_loc, Command::assume(BoolExpr::truth()), s.loc);
      break;
    case Stmt::Kind::If:
      emit(s.loc, Command::assume(s.cond), first_loc(s.body, s.close_loc));
      if (s.has_else)
        emit(s.loc, Command::assume(BoolExpr::negation(s.cond)),
             first_loc(s.else_body, s.else_close_loc));
      else
        emit(s.loc, Command::assume(BoolExpr::negation(s.cond)), next);
      block(s.body, s.close_loc);
      emit(s.close_loc, Command::assume(BoolExpr::truth()), next);
      if (s.has_else) {
        block(s.else_body, s.else_close_loc);
        emit(s.else_close_loc, Command::assume(BoolExpr::truth()), next);
      }
      break;
    }
  }
};

} // namespace

Program parse_program(std::string_view text) { return Parser(text).program(); }

RegionMap parse_regions(std::string_view text,
                        const std::vector<std::string> &vars) {
  Parser ps(text);
  auto regions = ps.region_file();
  RegionMap rm = RegionMap::singletons(vars);
  Token at;
  for (const auto &[name, members] : regions)
    Parser::apply_region(rm, vars, name, members, at);
  return rm;
}

Program desugar(const Program &in) {
  Program p = in;
  p.instructions.clear();
  for (ThreadCFG &t : p.threads)
    t.instructions.clear();
  for (ThreadId t = 0; t < p.threads.size(); ++t) {
    Lowering low{p, t};
    low.block(p.threads[t].body, p.threads[t].exit);
  }
  reindex(p);
  p.desugared = true;
  return p;
}

void reindex(Program &p) {
  p.loc_thread.assign(p.max_loc + 1, static_cast<ThreadId>(-1));
  p.out_edges.assign(p.max_loc + 1, {});
  for (ThreadId t = 0; t < p.threads.size(); ++t) {
    std::sort(p.threads[t].locations.begin(), p.threads[t].locations.end());
    p.threads[t].instructions.clear();
    for (Loc l : p.threads[t].locations)
      p.loc_thread[l] = t;
  }
  for (std::size_t i = 0; i < p.instructions.size(); ++i) {
    const Instruction &ins = p.instructions[i];
    p.out_edges[ins.source].push_back(i);
    if (ins.thread < p.threads.size())
      p.threads[ins.thread].instructions.push_back(i);
  }
}

std::vector<std::string> validate_program(const Program &p) {
  std::vector<std::string> diags;
  std::map<Loc, ThreadId> owner;
  std::set<ThreadId> reported;
  for (ThreadId t = 0; t < p.threads.size(); ++t) {
    const ThreadCFG &th = p.threads[t];
    for (Loc l : th.locations)
      if (!owner.emplace(l, t).second)
        diags.push_back("location " + std::to_string(l) +
                        " belongs to more than one thread");
    if (std::find(th.locations.begin(), th.locations.end(), th.entry) ==
        th.locations.end())
      diags.push_back("thread " + th.name + " has no entry location");
  }
  std::map<Loc, int> n_out, n_in;
  std::set<Loc> shared;
  for (const Instruction &i : p.instructions) {
    ++n_out[i.source];
    ++n_in[i.target];
  }
  for (const Instruction &i : p.instructions) {
    auto so = owner.find(i.source), ta = owner.find(i.target);
    if (so == owner.end() || ta == owner.end() || so->second != ta->second ||
        so->second != i.thread)
      diags.push_back("instruction " + std::to_string(i.source) + " -> " +
                      std::to_string(i.target) +
                      ": source and target are not in the same thread");
    const Command &c = i.command;
    bool sync = c.kind == Command::Kind::Acquire ||
                c.kind == Command::Kind::Release;
    if (sync) {
      if (c.lock >= p.locks.size())
        diags.push_back("instruction at " + std::to_string(i.source) +
                        " references an undeclared lock");
      if (n_out[i.source] > 1 && shared.insert(i.source).second)
        diags.push_back("location " + std::to_string(i.source) +
                        " is the source of a lock operation and of another "
                        "instruction; source locations must be unique");
      if (n_in[i.target] > 1 && shared.insert(i.target).second)
        diags.push_back("location " + std::to_string(i.target) +
                        " is the target of a lock operation and of another "
                        "instruction; target locations must be unique");
    }
    AccessSets a = access_sets(c);
    for (const auto *s : {&a.reads, &a.writes})
      for (VarId v : *s)
        if (v >= p.vars.size()) {
          diags.push_back("instruction at " + std::to_string(i.source) +
                          " references an undeclared variable");
          break;
        }
  }
  if (p.regions.region_of.size() != p.vars.size())
    diags.push_back("region map does not cover every variable");
  for (RegionId r : p.regions.region_of)
    if (r >= p.regions.size()) {
      diags.push_back("variable mapped to an unknown region");
      break;
    }
  return diags;
}

//===----------------------------------------------------------------------===//
// Printing
//===----------------------------------------------------------------------===//

std::string print_expr(const Expr &e, const std::vector<std::string> &vars) {
  auto sub = [&](const Expr &a) {
    bool wrap = a.kind == Expr::Kind::Add || a.kind == Expr::Kind::Sub;
    return wrap ? "(" + print_expr(a, vars) + ")" : print_expr(a, vars);
  };
  switch (e.kind) {
  case Expr::Kind::Const: return std::to_string(e.value);
  case Expr::Kind::Var: return vars.at(e.var);
  case Expr::Kind::Havoc: return "havoc";
  case Expr::Kind::Add:
    return print_expr(e.args[0], vars) + " + " + sub(e.args[1]);
  case Expr::Kind::Sub:
    return print_expr(e.args[0], vars) + " - " + sub(e.args[1]);
  case Expr::Kind::Scale:
    return std::to_string(e.value) + " * " + sub(e.args[0]);
  }
  return "";
}

std::string print_bool(const BoolExpr &b, const std::vector<std::string> &vars) {
  using K = BoolExpr::Kind;
  auto atomic = [](const BoolExpr &a) {
    return a.kind == K::True || a.kind == K::False || a.kind == K::Not;
  };
  switch (b.kind) {
  case K::True: return "true";
  case K::False: return "false";
  case K::Cmp:
    return print_expr(b.operands[0], vars) + " " + std::string(to_string(b.op)) +
           " " + print_expr(b.operands[1], vars);
  case K::Not: {
    const BoolExpr &a = b.args[0];
    return atomic(a) ? "!" + print_bool(a, vars) : "!(" + print_bool(a, vars) + ")";
  }
  case K::And: {
    auto side = [&](const BoolExpr &a, bool right) {
      bool wrap = a.kind == K::Or || (right && a.kind == K::And);
      return wrap ? "(" + print_bool(a, vars) + ")" : print_bool(a, vars);
    };
    return side(b.args[0], false) + " && " + side(b.args[1], true);
  }
  case K::Or: {
    const BoolExpr &r = b.args[1];
    std::string rs = r.kind == K::Or ? "(" + print_bool(r, vars) + ")"
                                     : print_bool(r, vars);
    return print_bool(b.args[0], vars) + " || " + rs;
  }
  }
  return "";
}

std::string print_command(const Command &c, const Program &p) {
  switch (c.kind) {
  case Command::Kind::Assign:
    return p.vars.at(c.var) + " := " + print_expr(c.expr, p.vars);
  case Command::Kind::Assume:
    return "assume(" + print_bool(c.cond, p.vars) + ")";
  case Command::Kind::Acquire: return "acquire(" + p.locks.at(c.lock) + ")";
  case Command::Kind::Release: return "release(" + p.locks.at(c.lock) + ")";
  }
  return "";
}

static void print_block(const std::vector<Stmt> &body, const Program &p,
                        int indent, std::ostringstream &os) {
  std::string pad(indent, ' ');
  for (const Stmt &s : body) {
    switch (s.kind) {
    case Stmt::Kind::Assign:
      os << pad << p.vars[s.var] << " := " << print_expr(s.expr, p.vars) << ";\n";
      break;
    case Stmt::Kind::Assume:
      os << pad << "assume(" << print_bool(s.cond, p.vars) << ");\n";
      break;
    case Stmt::Kind::Assert:
      os << pad << "assert(" << print_bool(s.cond, p.vars) << ");\n";
      break;
    case Stmt::Kind::Acquire:
      os << pad << "acquire(" << p.locks[s.lock] << ");\n";
      break;
    case Stmt::Kind::Release:
      os << pad << "release(" << p.locks[s.lock] << ");\n";
      break;
    case Stmt::Kind::While:
      os << pad << "while (" << print_bool(s.cond, p.vars) << ") {\n";
      print_block(s.body, p, indent + 2, os);
      os << pad << "}\n";
      break;
    case Stmt::Kind::If:
      os << pad << "if (" << print_bool(s.cond, p.vars) << ") {\n";
      print_block(s.body, p, indent + 2, os);
      if (s.has_else) {
        os << pad << "} else {\n";
        print_block(s.else_body, p, indent + 2, os);
      }
      os << pad << "}\n";
      break;
    }
  }
}

static std::string join_names(const std::vector<std::string> &xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i)
    out += (i ? ", " : "") + xs[i];
  return out;
}

std::string print_program(const Program &p) {
  std::ostringstream os;
  if (!p.vars.empty())
    os << "var " << join_names(p.vars) << ";\n";
  if (!p.locks.empty())
    os << "lock " << join_names(p.locks) << ";\n";
  auto members = p.regions.members();
  for (RegionId r = 0; r < members.size(); ++r) {
    if (members[r].size() == 1 && p.vars[members[r][0]] == p.regions.names[r])
      continue;
    std::vector<std::string> names;
    for (VarId v : members[r])
      names.push_back(p.vars[v]);
    os << "region " << p.regions.names[r] << " { " << join_names(names) << " };\n";
  }
  for (const ThreadCFG &t : p.threads) {
    os << "\nthread " << t.name << " {\n";
    print_block(t.body, p, 2, os);
    os << "}\n";
  }
  return os.str();
}

Program load_program(std::string_view text) {
  Program p = desugar(parse_program(text));
  auto diags = validate_program(p);
  if (!diags.empty())
    throw ParseError(diags.front(), 0, 0);
  return p;
}

} // namespace syncdrf

#pragma once

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "racx/common.hpp"

namespace racx {

// ---------------------------------------------------------------------------
// statement identity: (function, ordinal, line). Ordinals are dense per
// function in source order; program rewrites renumber them and remap reports.
// ---------------------------------------------------------------------------
struct site_id {
  std::string function;
  int ordinal = -1;
  int line = 0;

  friend bool operator==(const site_id& a, const site_id& b) {
    return a.function == b.function && a.ordinal == b.ordinal;
  }
  friend bool operator!=(const site_id& a, const site_id& b) { return !(a == b); }
  friend bool operator<(const site_id& a, const site_id& b) {
    return std::tie(a.function, a.ordinal) < std::tie(b.function, b.ordinal);
  }
  std::string str() const {
    return function + "#" + std::to_string(ordinal) + "@" + std::to_string(line);
  }
};

enum class binop { add, sub, mul, div, mod, lt, le, gt, ge, eq, ne, land, lor };
enum class unop { neg, lnot };

inline const char* binop_text(binop op) {
  switch (op) {
  case binop::add: return "+";
  case binop::sub: return "-";
  case binop::mul: return "*";
  case binop::div: return "/";
  case binop::mod: return "%";
  case binop::lt: return "<";
  case binop::le: return "<=";
  case binop::gt: return ">";
  case binop::ge: return ">=";
  case binop::eq: return "==";
  case binop::ne: return "!=";
  case binop::land: return "&&";
  case binop::lor: return "||";
  }
  return "?";
}

struct expr {
  enum class kind { literal, var, array_elem, call, binary, unary };
  kind k = kind::literal;
  i64 value = 0;        // literal
  std::string name;     // var / array / callee
  binop bop = binop::add;
  unop uop = unop::neg;
  // binary: [lhs, rhs]; unary: [operand]; array_elem: [index]; call: args
  std::vector<expr> kids;
  source_pos pos{};

  static expr lit(i64 v) {
    expr e;
    e.k = kind::literal;
    e.value = v;
    return e;
  }
  static expr variable(const std::string& n) {
    expr e;
    e.k = kind::var;
    e.name = n;
    return e;
  }
  static expr bin(binop op, expr l, expr r) {
    expr e;
    e.k = kind::binary;
    e.bop = op;
    e.kids.push_back(std::move(l));
    e.kids.push_back(std::move(r));
    return e;
  }
};

// assignment target: a scalar or one array element
struct lvalue {
  std::string name;
  std::optional<expr> index;
  source_pos pos{};
};

struct stmt {
  enum class kind {
    decl,     // int name [= exprs[0]];
    assign,   // lhs = exprs[0];
    if_,      // if (exprs[0]) body [else else_body]
    while_,   // while (exprs[0]) body
    for_,     // for (for_var = exprs[0]; exprs[1]; for_var = exprs[2]) body
    call,     // name(exprs...);
    spawn,    // spawn name(exprs[0]);
    join,     // join;
    lock,     // lock name;
    unlock,   // unlock name;
    barrier,  // barrier name;
    signal,   // signal name;
    wait,     // wait name;
    ret       // return [exprs[0]];
  };
  kind k = kind::assign;
  site_id site;
  std::string name;          // decl/sync-object/callee name
  std::string for_var;       // loop counter
  lvalue lhs;                // assign
  std::vector<expr> exprs;
  std::vector<stmt> body;
  std::vector<stmt> else_body;
  std::vector<int> trace_sites; // @trace(k) annotations, sorted
  source_pos pos{};
};

struct param {
  std::string name;
};

struct function_decl {
  std::string name;
  bool returns_int = false; // false means void
  std::vector<param> params;
  std::vector<stmt> body;
  source_pos pos{};
};

struct global_var {
  std::string name;
  bool is_array = false;
  i64 length = 1; // linearized element count
  i64 init = 0;   // scalar initializer (arrays zero-filled)
  source_pos pos{};
};

struct lock_decl {
  std::string name;
};
struct cond_decl {
  std::string name;
};
struct barrier_decl {
  std::string name;
  // participant count: restricted expression over integer literals and the
  // builtin `nthreads`, evaluated when the machine is configured
  expr count;
};

// one static spawn statement
struct thread_creation {
  std::string in_function;
  site_id site;
  std::string entry;
};

struct program {
  std::vector<global_var> globals;
  std::vector<lock_decl> locks;
  std::vector<barrier_decl> barriers;
  std::vector<cond_decl> conds;
  std::vector<function_decl> functions;
  std::vector<thread_creation> spawns; // filled by validation

  const function_decl* find_function(const std::string& n) const {
    for (auto& f : functions)
      if (f.name == n) return &f;
    return nullptr;
  }
  function_decl* find_function(const std::string& n) {
    for (auto& f : functions)
      if (f.name == n) return &f;
    return nullptr;
  }
  const global_var* find_global(const std::string& n) const {
    for (auto& g : globals)
      if (g.name == n) return &g;
    return nullptr;
  }
  bool is_lock(const std::string& n) const {
    for (auto& l : locks)
      if (l.name == n) return true;
    return false;
  }
  bool is_barrier(const std::string& n) const {
    for (auto& b : barriers)
      if (b.name == n) return true;
    return false;
  }
  bool is_cond(const std::string& n) const {
    for (auto& c : conds)
      if (c.name == n) return true;
    return false;
  }
  // thread entries: spawn targets plus main, sorted, main first
  std::vector<std::string> thread_entries() const {
    std::vector<std::string> out;
    out.push_back("main");
    for (auto& s : spawns) {
      bool seen = false;
      for (auto& e : out)
        if (e == s.entry) seen = true;
      if (!seen) out.push_back(s.entry);
    }
    return out;
  }
  std::vector<site_id> spawn_sites_of(const std::string& entry) const {
    std::vector<site_id> out;
    for (auto& s : spawns)
      if (s.entry == entry) out.push_back(s.site);
    return out;
  }
};

// depth-first walk over a statement tree (const)
template <typename Fn>
void walk_stmts(const std::vector<stmt>& body, Fn&& fn) {
  for (const stmt& s : body) {
    fn(s);
    walk_stmts(s.body, fn);
    walk_stmts(s.else_body, fn);
  }
}

template <typename Fn>
void walk_stmts_mut(std::vector<stmt>& body, Fn&& fn) {
  for (stmt& s : body) {
    fn(s);
    walk_stmts_mut(s.body, fn);
    walk_stmts_mut(s.else_body, fn);
  }
}

template <typename Fn>
void walk_exprs(const expr& e, Fn&& fn) {
  fn(e);
  for (const expr& k : e.kids) walk_exprs(k, fn);
}

// every expression appearing in one statement (not descending into sub-statements)
template <typename Fn>
void stmt_own_exprs(const stmt& s, Fn&& fn) {
  for (const expr& e : s.exprs) fn(e);
  if (s.k == stmt::kind::assign && s.lhs.index) fn(*s.lhs.index);
}

} // namespace racx

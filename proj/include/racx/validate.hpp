#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "racx/ast.hpp"

namespace racx {

// Semantic validation. Fills program::spawns. Rules enforced here:
//  - one flat name universe at top level (globals, locks, barriers, conds,
//    functions); locals/params may not shadow top-level names
//  - flat per-function scope, declaration before use, no redeclaration
//  - scalars are never subscripted, arrays always are
//  - calls resolve, arity matches, void functions never appear in expressions
//  - the call graph is acyclic (no recursion)
//  - spawn targets are void functions with exactly one parameter; spawn
//    statements only occur in code unreachable from any spawn target, so the
//    main thread performs every spawn in program order
//  - no statement follows a return in the same block
//  - barrier participant counts use only literals and `nthreads`
//  - `nthreads` is reserved for barrier counts and cannot be declared
class validator {
public:
  explicit validator(program& p) : m_p(p) {}

  void run() {
    collect_top_level();
    for (auto& f : m_p.functions) check_function(f);
    const function_decl* mainf = m_p.find_function("main");
    if (!mainf) throw analysis_error("program has no 'main' function");
    if (mainf->returns_int) throw analysis_error("'main' must be void");
    if (mainf->params.size() > 1)
      throw analysis_error("'main' takes at most one parameter (the thread count)");
    build_call_info();
    check_recursion();
    check_spawns();
  }

private:
  void collect_top_level() {
    auto add = [&](const std::string& n, const char* what, source_pos pos) {
      if (n == "nthreads")
        throw parse_error("'nthreads' is reserved and cannot be declared", pos);
      if (!m_top.insert(n).second)
        throw analysis_error(std::string("duplicate top-level name '") + n + "'");
      (void)what;
    };
    for (auto& g : m_p.globals) add(g.name, "global", g.pos);
    for (auto& l : m_p.locks) add(l.name, "lock", {});
    for (auto& b : m_p.barriers) {
      add(b.name, "barrier", {});
      walk_exprs(b.count, [&](const expr& e) {
        if (e.k == expr::kind::var && e.name != "nthreads")
          throw analysis_error("barrier count for '" + b.name +
                               "' may reference only literals and 'nthreads'");
        if (e.k == expr::kind::call || e.k == expr::kind::array_elem)
          throw analysis_error("barrier count for '" + b.name +
                               "' may reference only literals and 'nthreads'");
      });
    }
    for (auto& c : m_p.conds) add(c.name, "cond", {});
    for (auto& f : m_p.functions) add(f.name, "function", f.pos);
  }

  void check_function(const function_decl& f) {
    std::set<std::string> scope; // declared locals + params
    for (auto& pr : f.params) {
      if (pr.name == "nthreads")
        throw parse_error("'nthreads' is reserved and cannot be declared", f.pos);
      if (m_top.count(pr.name))
        throw analysis_error("parameter '" + pr.name + "' in '" + f.name +
                             "' shadows a top-level name");
      if (!scope.insert(pr.name).second)
        throw analysis_error("duplicate parameter '" + pr.name + "' in '" + f.name + "'");
    }
    check_block(f, f.body, scope);
  }

  void check_block(const function_decl& f, const std::vector<stmt>& body,
                   std::set<std::string>& scope) {
    bool returned = false;
    for (const stmt& s : body) {
      if (returned)
        throw parse_error("unreachable statement after return", s.pos);
      switch (s.k) {
      case stmt::kind::decl:
        if (s.name == "nthreads")
          throw parse_error("'nthreads' is reserved and cannot be declared", s.pos);
        if (m_top.count(s.name))
          throw parse_error("local '" + s.name + "' shadows a top-level name", s.pos);
        if (!s.exprs.empty()) check_expr(f, s.exprs[0], scope);
        if (!scope.insert(s.name).second)
          throw parse_error("redeclaration of '" + s.name + "'", s.pos);
        break;
      case stmt::kind::assign: {
        check_expr(f, s.exprs[0], scope);
        const global_var* g = m_p.find_global(s.lhs.name);
        if (g) {
          if (g->is_array && !s.lhs.index)
            throw parse_error("array '" + s.lhs.name + "' requires a subscript", s.pos);
          if (!g->is_array && s.lhs.index)
            throw parse_error("scalar '" + s.lhs.name + "' cannot be subscripted", s.pos);
        } else {
          if (!scope.count(s.lhs.name))
            throw parse_error("assignment to undeclared variable '" + s.lhs.name + "'",
                              s.pos);
          if (s.lhs.index)
            throw parse_error("local '" + s.lhs.name + "' is a scalar", s.pos);
        }
        if (s.lhs.index) check_expr(f, *s.lhs.index, scope);
        break;
      }
      case stmt::kind::if_: {
        check_expr(f, s.exprs[0], scope);
        check_block(f, s.body, scope);
        check_block(f, s.else_body, scope);
        break;
      }
      case stmt::kind::while_: {
        check_expr(f, s.exprs[0], scope);
        check_block(f, s.body, scope);
        break;
      }
      case stmt::kind::for_: {
        if (!scope.count(s.for_var))
          throw parse_error("loop counter '" + s.for_var + "' must be a declared local",
                            s.pos);
        for (auto& e : s.exprs) check_expr(f, e, scope);
        check_block(f, s.body, scope);
        break;
      }
      case stmt::kind::call: {
        const function_decl* callee = m_p.find_function(s.name);
        if (!callee)
          throw parse_error("call to undeclared function '" + s.name + "'", s.pos);
        if (callee->params.size() != s.exprs.size())
          throw parse_error("'" + s.name + "' takes " +
                                std::to_string(callee->params.size()) + " argument(s)",
                            s.pos);
        for (auto& e : s.exprs) check_expr(f, e, scope);
        break;
      }
      case stmt::kind::spawn: {
        const function_decl* callee = m_p.find_function(s.name);
        if (!callee)
          throw parse_error("spawn of undeclared function '" + s.name + "'", s.pos);
        if (callee->returns_int || callee->params.size() != 1)
          throw parse_error("spawn target '" + s.name +
                                "' must be a void function with one parameter",
                            s.pos);
        check_expr(f, s.exprs[0], scope);
        m_p.spawns.push_back({f.name, s.site, s.name});
        break;
      }
      case stmt::kind::join:
        break;
      case stmt::kind::lock:
      case stmt::kind::unlock:
        if (!m_p.is_lock(s.name))
          throw parse_error("'" + s.name + "' is not a declared lock", s.pos);
        break;
      case stmt::kind::barrier:
        if (!m_p.is_barrier(s.name))
          throw parse_error("'" + s.name + "' is not a declared barrier", s.pos);
        break;
      case stmt::kind::signal:
      case stmt::kind::wait:
        if (!m_p.is_cond(s.name))
          throw parse_error("'" + s.name + "' is not a declared condition variable",
                            s.pos);
        break;
      case stmt::kind::ret:
        if (f.returns_int && s.exprs.empty())
          throw parse_error("'" + f.name + "' must return a value", s.pos);
        if (!f.returns_int && !s.exprs.empty())
          throw parse_error("'" + f.name + "' is void and cannot return a value", s.pos);
        if (!s.exprs.empty()) check_expr(f, s.exprs[0], scope);
        returned = true;
        break;
      }
    }
  }

  void check_expr(const function_decl& f, const expr& e,
                  const std::set<std::string>& scope) {
    switch (e.k) {
    case expr::kind::literal:
      break;
    case expr::kind::var: {
      const global_var* g = m_p.find_global(e.name);
      if (g) {
        if (g->is_array)
          throw parse_error("array '" + e.name + "' requires a subscript", e.pos);
        break;
      }
      if (!scope.count(e.name))
        throw parse_error("use of undeclared variable '" + e.name + "'", e.pos);
      break;
    }
    case expr::kind::array_elem: {
      const global_var* g = m_p.find_global(e.name);
      if (!g || !g->is_array)
        throw parse_error("'" + e.name + "' is not a declared array", e.pos);
      check_expr(f, e.kids[0], scope);
      break;
    }
    case expr::kind::call: {
      const function_decl* callee = m_p.find_function(e.name);
      if (!callee)
        throw parse_error("call to undeclared function '" + e.name + "'", e.pos);
      if (!callee->returns_int)
        throw parse_error("void function '" + e.name + "' used in an expression",
                          e.pos);
      if (callee->params.size() != e.kids.size())
        throw parse_error("'" + e.name + "' takes " +
                              std::to_string(callee->params.size()) + " argument(s)",
                          e.pos);
      for (auto& k : e.kids) check_expr(f, k, scope);
      break;
    }
    case expr::kind::binary:
    case expr::kind::unary:
      for (auto& k : e.kids) check_expr(f, k, scope);
      break;
    }
  }

  void build_call_info() {
    for (auto& f : m_p.functions) {
      std::set<std::string>& callees = m_calls[f.name];
      walk_stmts(f.body, [&](const stmt& s) {
        if (s.k == stmt::kind::call) callees.insert(s.name);
        stmt_own_exprs(s, [&](const expr& e) {
          walk_exprs(e, [&](const expr& sub) {
            if (sub.k == expr::kind::call) callees.insert(sub.name);
          });
        });
      });
    }
  }

  void check_recursion() {
    std::map<std::string, int> state; // 0 unseen, 1 on stack, 2 done
    for (auto& f : m_p.functions) dfs_cycle(f.name, state);
  }
  void dfs_cycle(const std::string& fn, std::map<std::string, int>& state) {
    int& st = state[fn];
    if (st == 2) return;
    if (st == 1) throw analysis_error("recursion detected involving '" + fn + "'");
    st = 1;
    for (auto& c : m_calls[fn]) dfs_cycle(c, state);
    st = 2;
  }

  void check_spawns() {
    // functions reachable from any spawn target may not spawn themselves;
    // this pins thread creation to the main thread's program order
    std::set<std::string> entry_reachable;
    for (auto& s : m_p.spawns) reach(s.entry, entry_reachable);
    for (auto& s : m_p.spawns) {
      if (entry_reachable.count(s.in_function))
        throw analysis_error("spawn in '" + s.in_function +
                             "' is reachable from a thread entry; only the main "
                             "thread may create threads");
    }
    for (auto& s : m_p.spawns)
      if (s.entry == "main") throw analysis_error("'main' cannot be spawned");
    // main must not be a callee either
    for (auto& [fn, callees] : m_calls)
      if (callees.count("main"))
        throw analysis_error("'main' cannot be called from '" + fn + "'");
  }
  void reach(const std::string& fn, std::set<std::string>& out) {
    if (!out.insert(fn).second) return;
    for (auto& c : m_calls[fn]) reach(c, out);
  }

  program& m_p;
  std::set<std::string> m_top;
  std::map<std::string, std::set<std::string>> m_calls;
};

inline void validate_program(program& p) {
  p.spawns.clear();
  validator(p).run();
}

} // namespace racx

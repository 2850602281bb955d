#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "racx/affine.hpp"
#include "racx/ast.hpp"
#include "racx/callgraph.hpp"
#include "racx/printer.hpp"

namespace racx {

// range constraint: affine expression REL 0
enum class rel_kind { ge, le, eq, ne };

struct rc {
  affine a;
  rel_kind r = rel_kind::ge;

  std::string rel_text() const {
    switch (r) {
    case rel_kind::ge: return ">=";
    case rel_kind::le: return "<=";
    case rel_kind::eq: return "==";
    default: return "!=";
    }
  }
  std::string str() const { return a.str() + " " + rel_text() + " 0"; }
};

// constraints in force at a program point; for call/spawn points, the actual
// arguments as affine forms over the caller's symbols (nullopt: unanalyzable)
struct point_ctx {
  std::vector<rc> constraints;
  std::vector<std::optional<affine>> args;
};

struct fn_ranges {
  std::map<int, point_ctx> at_site; // stmt ordinal -> context (array accesses)
  std::map<int, point_ctx> at_call; // callgraph site index -> context
};

// ---------------------------------------------------------------------------
// intraprocedural pass: walk the (structured) body once, tracking
//  - env: locals resolved to affine forms over free symbols (params + active
//    loop counters); absence means unknown
//  - the stack of for-loop bounds and if-condition constraints in force
// ---------------------------------------------------------------------------
class intra_range {
public:
  intra_range(const program& p, const callgraph& g, const function_decl& f)
      : m_p(p), m_g(g), m_f(f) {}

  fn_ranges run() {
    for (auto& pr : m_f.params) m_free.insert(pr.name);
    walk(m_f.body);
    return std::move(m_out);
  }

private:
  std::optional<affine> conv(const expr& e) const {
    return expr_to_affine(e, [&](const std::string& name) -> std::optional<affine> {
      auto it = m_env.find(name);
      if (it != m_env.end()) return it->second;
      if (m_free.count(name)) return affine::variable(name);
      return std::nullopt;
    });
  }

  static bool stmt_has_array_access(const stmt& s) {
    if (s.k == stmt::kind::assign && s.lhs.index) return true;
    bool found = false;
    stmt_own_exprs(s, [&](const expr& e) {
      walk_exprs(e, [&](const expr& x) {
        if (x.k == expr::kind::array_elem) found = true;
      });
    });
    return found;
  }

  std::vector<rc> snapshot() const {
    std::vector<rc> out = m_stack;
    for (auto& [v, a] : m_env) {
      rc c;
      c.a = affine::variable(v);
      c.a -= a;
      c.r = rel_kind::eq;
      out.push_back(std::move(c));
    }
    return out;
  }

  void record(const stmt& s) {
    if (stmt_has_array_access(s)) {
      point_ctx ctx;
      ctx.constraints = snapshot();
      m_out.at_site[s.site.ordinal] = std::move(ctx);
    }
    for (size_t i = 0; i < m_g.sites.size(); ++i) {
      const call_site& cs = m_g.sites[i];
      if (!(cs.site == s.site) || cs.caller != m_f.name) continue;
      point_ctx ctx;
      ctx.constraints = snapshot();
      for (const expr* a : cs.args) ctx.args.push_back(conv(*a));
      m_out.at_call[static_cast<int>(i)] = std::move(ctx);
    }
  }

  static void assigned_vars(const std::vector<stmt>& body,
                            std::set<std::string>& out) {
    walk_stmts(body, [&](const stmt& s) {
      if (s.k == stmt::kind::assign && !s.lhs.index) out.insert(s.lhs.name);
      if (s.k == stmt::kind::for_) out.insert(s.for_var);
      if (s.k == stmt::kind::decl) out.insert(s.name);
    });
  }

  void kill(const std::set<std::string>& vars) {
    for (auto& v : vars) m_env.erase(v);
  }

  // comparison conditions that hold on entering a branch; only constraints
  // whose variables survive the branch untouched are kept
  void extract_conds(const expr& e, bool positive,
                     const std::set<std::string>& branch_assigned,
                     std::vector<rc>& out) const {
    if (e.k == expr::kind::unary && e.uop == unop::lnot) {
      extract_conds(e.kids[0], !positive, branch_assigned, out);
      return;
    }
    if (e.k != expr::kind::binary) return;
    if (e.bop == binop::land) {
      if (positive) {
        extract_conds(e.kids[0], true, branch_assigned, out);
        extract_conds(e.kids[1], true, branch_assigned, out);
      }
      return;
    }
    if (e.bop == binop::lor) {
      if (!positive) {
        extract_conds(e.kids[0], false, branch_assigned, out);
        extract_conds(e.kids[1], false, branch_assigned, out);
      }
      return;
    }
    binop op = e.bop;
    if (op != binop::lt && op != binop::le && op != binop::gt &&
        op != binop::ge && op != binop::eq && op != binop::ne)
      return;
    auto l = conv(e.kids[0]);
    if (!l) return;
    auto r = conv(e.kids[1]);
    if (!r) return;
    affine d = *l;
    d -= *r; // d REL 0
    if (!positive) {
      switch (op) {
      case binop::lt: op = binop::ge; break;
      case binop::le: op = binop::gt; break;
      case binop::gt: op = binop::le; break;
      case binop::ge: op = binop::lt; break;
      case binop::eq: op = binop::ne; break;
      default: op = binop::eq; break;
      }
    }
    rc c;
    switch (op) {
    case binop::lt: d.c = wadd(d.c, 1); c = {d, rel_kind::le}; break;
    case binop::le: c = {d, rel_kind::le}; break;
    case binop::gt: d.c = wsub(d.c, 1); c = {d, rel_kind::ge}; break;
    case binop::ge: c = {d, rel_kind::ge}; break;
    case binop::eq: c = {d, rel_kind::eq}; break;
    default: c = {d, rel_kind::ne}; break;
    }
    if (c.a.terms.empty()) return; // no variables left
    for (auto& [v, k] : c.a.terms)
      if (branch_assigned.count(v)) return;
    out.push_back(std::move(c));
  }

  static std::map<std::string, affine>
  meet(const std::map<std::string, affine>& a,
       const std::map<std::string, affine>& b) {
    std::map<std::string, affine> out;
    for (auto& [v, x] : a) {
      auto it = b.find(v);
      if (it != b.end() && it->second == x) out[v] = x;
    }
    return out;
  }

  void walk(const std::vector<stmt>& body) {
    for (auto& s : body) statement(s);
  }

  void statement(const stmt& s) {
    switch (s.k) {
    case stmt::kind::for_: loop_for(s); return;
    case stmt::kind::while_: {
      record(s);
      std::set<std::string> assigned;
      assigned_vars(s.body, assigned);
      kill(assigned);
      walk(s.body);
      kill(assigned);
      return;
    }
    case stmt::kind::if_: {
      record(s);
      std::set<std::string> then_assigned, else_assigned;
      assigned_vars(s.body, then_assigned);
      assigned_vars(s.else_body, else_assigned);
      std::vector<rc> tc, ec;
      extract_conds(s.exprs[0], true, then_assigned, tc);
      extract_conds(s.exprs[0], false, else_assigned, ec);
      auto saved_env = m_env;
      size_t depth = m_stack.size();
      for (auto& c : tc) m_stack.push_back(c);
      walk(s.body);
      m_stack.resize(depth);
      auto then_env = std::move(m_env);
      m_env = saved_env;
      for (auto& c : ec) m_stack.push_back(c);
      walk(s.else_body);
      m_stack.resize(depth);
      m_env = meet(then_env, m_env);
      return;
    }
    case stmt::kind::decl:
      record(s);
      if (!s.exprs.empty()) {
        auto a = conv(s.exprs[0]);
        if (a)
          m_env[s.name] = *a;
        else
          m_env.erase(s.name);
      } else {
        m_env.erase(s.name);
      }
      return;
    case stmt::kind::assign:
      record(s);
      if (!s.lhs.index && !m_p.find_global(s.lhs.name)) {
        auto a = conv(s.exprs[0]);
        if (a)
          m_env[s.lhs.name] = *a;
        else
          m_env.erase(s.lhs.name);
      }
      return;
    default:
      record(s);
      return;
    }
  }

  void loop_for(const stmt& s) {
    // the loop statement's own clause accesses are recorded without counter
    // facts: the counter varies while the statement re-executes
    {
      auto saved = m_env;
      m_env.erase(s.for_var);
      record(s);
      m_env = std::move(saved);
    }
    std::set<std::string> assigned;
    assigned_vars(s.body, assigned);
    bool counter_stable = !assigned.count(s.for_var);

    // step direction from the increment clause
    int step = 0;
    const expr& inc = s.exprs[2];
    if (inc.k == expr::kind::binary && inc.kids[0].k == expr::kind::var &&
        inc.kids[0].name == s.for_var &&
        inc.kids[1].k == expr::kind::literal && inc.kids[1].value == 1) {
      if (inc.bop == binop::add) step = 1;
      if (inc.bop == binop::sub) step = -1;
    }

    std::vector<rc> bounds;
    if (counter_stable && step != 0) {
      auto init = conv(s.exprs[0]);
      if (init && stable_in(*init, assigned)) {
        rc c;
        c.a = affine::variable(s.for_var);
        c.a -= *init;
        c.r = step > 0 ? rel_kind::ge : rel_kind::le;
        bounds.push_back(std::move(c));
      }
      // normalize the condition to counter REL bound
      const expr& cond = s.exprs[1];
      if (cond.k == expr::kind::binary) {
        const expr* var_side = nullptr;
        const expr* bound_side = nullptr;
        binop op = cond.bop;
        if (cond.kids[0].k == expr::kind::var &&
            cond.kids[0].name == s.for_var) {
          var_side = &cond.kids[0];
          bound_side = &cond.kids[1];
        } else if (cond.kids[1].k == expr::kind::var &&
                   cond.kids[1].name == s.for_var) {
          var_side = &cond.kids[1];
          bound_side = &cond.kids[0];
          switch (op) { // flip to put the counter on the left
          case binop::lt: op = binop::gt; break;
          case binop::le: op = binop::ge; break;
          case binop::gt: op = binop::lt; break;
          case binop::ge: op = binop::le; break;
          default: break;
          }
        }
        if (var_side) {
          auto b = conv(*bound_side);
          if (b && stable_in(*b, assigned) && !b->terms.count(s.for_var)) {
            rc c;
            c.a = affine::variable(s.for_var);
            c.a -= *b;
            bool ok = true;
            switch (op) {
            case binop::lt: c.a.c = wadd(c.a.c, 1); c.r = rel_kind::le; break;
            case binop::le: c.r = rel_kind::le; break;
            case binop::gt: c.a.c = wsub(c.a.c, 1); c.r = rel_kind::ge; break;
            case binop::ge: c.r = rel_kind::ge; break;
            default: ok = false; break;
            }
            if (ok) bounds.push_back(std::move(c));
          }
        }
      }
    }
    if (!counter_stable || step == 0) bounds.clear();

    m_env.erase(s.for_var);
    kill(assigned);
    bool counter_was_free = m_free.count(s.for_var) > 0;
    bool add_counter = !bounds.empty() || (counter_stable && step != 0);
    if (add_counter) m_free.insert(s.for_var);
    size_t depth = m_stack.size();
    for (auto& c : bounds) m_stack.push_back(c);
    walk(s.body);
    m_stack.resize(depth);
    if (add_counter && !counter_was_free) m_free.erase(s.for_var);
    m_env.erase(s.for_var);
    kill(assigned);
  }

  // bound expressions must not depend on anything the body reassigns
  static bool stable_in(const affine& a, const std::set<std::string>& assigned) {
    for (auto& [v, k] : a.terms)
      if (assigned.count(v)) return false;
    return true;
  }

  const program& m_p;
  const callgraph& m_g;
  const function_decl& m_f;
  std::map<std::string, affine> m_env;
  std::set<std::string> m_free;
  std::vector<rc> m_stack;
  fn_ranges m_out;
};

inline std::map<std::string, fn_ranges> analyze_ranges(const program& p,
                                                       const callgraph& g) {
  std::map<std::string, fn_ranges> out;
  for (auto& f : p.functions) out[f.name] = intra_range(p, g, f).run();
  return out;
}

// ---------------------------------------------------------------------------
// interprocedural assembly: resolve an access (or a spawn) seen from a thread
// entry into constraint sets over a qualified namespace. Accessor variables
// stay bare; every caller level's variables are qualified "<fn>.<var>"
// (spawn-side chains use "<fn>!<var>" so main-thread frames never collide
// with same-named functions on the access path); entry formals survive as
// "<entry>.<formal>" with the convention constraint formal >= 0.
// ---------------------------------------------------------------------------
namespace rangedet {

inline std::string qual(const std::string& fn, char sep, const std::string& v) {
  return fn + sep + v;
}

inline affine rename_affine(const affine& a,
                            const std::function<std::string(const std::string&)>& f) {
  affine out;
  out.c = a.c;
  for (auto& [v, k] : a.terms) out.add_term(f(v), k);
  return out;
}

inline std::vector<rc>
rename_rcs(const std::vector<rc>& cs,
           const std::function<std::string(const std::string&)>& f) {
  std::vector<rc> out;
  out.reserve(cs.size());
  for (auto& c : cs) out.push_back({rename_affine(c.a, f), c.r});
  return out;
}

// substitute variables by affine forms inside an rc list
inline void subst_rcs(std::vector<rc>& cs,
                      const std::map<std::string, affine>& repl) {
  for (auto& c : cs) {
    affine next = affine::constant(c.a.c);
    for (auto& [v, k] : c.a.terms) {
      auto it = repl.find(v);
      if (it == repl.end()) {
        next.add_term(v, k);
      } else {
        affine scaled = it->second;
        scaled.scale(k);
        next += scaled;
      }
    }
    c.a = std::move(next);
  }
}

inline expr affine_to_expr(const affine& a) {
  expr out = expr::lit(a.c);
  bool first = a.c == 0;
  for (auto& [v, k] : a.terms) {
    expr term = k == 1 ? expr::variable(v)
                       : expr::bin(binop::mul, expr::lit(k), expr::variable(v));
    if (first) {
      out = std::move(term);
      first = false;
    } else {
      out = expr::bin(binop::add, std::move(out), std::move(term));
    }
  }
  return out;
}

inline void rename_expr_vars(expr& e,
                             const std::function<std::string(const std::string&)>& f) {
  if (e.k == expr::kind::var) e.name = f(e.name);
  for (auto& k : e.kids) rename_expr_vars(k, f);
}

inline void subst_expr_vars(expr& e, const std::map<std::string, affine>& repl) {
  if (e.k == expr::kind::var) {
    auto it = repl.find(e.name);
    if (it != repl.end()) e = affine_to_expr(it->second);
    return;
  }
  for (auto& k : e.kids) subst_expr_vars(k, repl);
}

} // namespace rangedet

// one resolved view of an access: its subscript and the constraints over the
// qualified namespace, for one call path
struct access_instance {
  expr subscript;
  std::vector<rc> constraints;
};

// one way a thread instance comes into being: constraints binding the entry
// formal through a spawn site (qualified with the spawn-side namespace)
struct spawn_instance {
  int cs_index = -1; // callgraph spawn site
  std::vector<rc> constraints;
  bool single_shot = false;    // spawner runs once and spawn not in any loop
  bool loop_distinct = false;  // exactly one enclosing for-loop, injective arg
  std::string counter;         // qualified spawn-loop counter when loop_distinct
};

class range_resolver {
public:
  range_resolver(const program& p, const callgraph& g)
      : m_p(p), m_g(g), m_ranges(analyze_ranges(p, g)) {}

  const std::map<std::string, fn_ranges>& ranges() const { return m_ranges; }

  // entry formal(s), qualified
  std::vector<std::string> entry_formals(const std::string& entry) const {
    std::vector<std::string> out;
    const function_decl* f = m_p.find_function(entry);
    for (auto& pr : f->params)
      out.push_back(rangedet::qual(entry, '.', pr.name));
    return out;
  }

  // constraints + subscript for an access reached from `entry` along `path`
  // (callgraph site indices, outermost call first; empty when the access sits
  // directly in the entry function)
  access_instance resolve_access(const std::string& entry,
                                 const site_id& site, const expr& subscript,
                                 const std::vector<int>& path) const {
    access_instance inst;
    inst.subscript = subscript;
    std::string accessor = site.function;
    auto site_it = m_ranges.at(accessor).at_site.find(site.ordinal);
    if (site_it != m_ranges.at(accessor).at_site.end())
      inst.constraints = site_it->second.constraints;

    // walk from the call into the accessor up to the entry
    for (int i = static_cast<int>(path.size()) - 1; i >= 0; --i) {
      const call_site& cs = m_g.sites[path[i]];
      const std::string& caller = cs.caller;
      auto q = [&](const std::string& v) { return rangedet::qual(caller, '.', v); };
      const point_ctx* ctx = find_ctx(caller, path[i]);
      // bind the callee's formals to the caller's actuals
      const function_decl* callee = m_p.find_function(cs.callee);
      std::map<std::string, affine> repl;
      for (size_t m = 0; m < callee->params.size(); ++m) {
        std::string formal = callee->params[m].name;
        std::string name = (i == static_cast<int>(path.size()) - 1)
                               ? formal
                               : rangedet::qual(cs.callee, '.', formal);
        if (ctx && m < ctx->args.size() && ctx->args[m])
          repl[name] = rangedet::rename_affine(*ctx->args[m], q);
      }
      rangedet::subst_rcs(inst.constraints, repl);
      rangedet::subst_expr_vars(inst.subscript, repl);
      if (ctx)
        for (auto& c : rangedet::rename_rcs(ctx->constraints, q))
          inst.constraints.push_back(c);
    }
    // an access directly in the entry still sees entry formals qualified
    if (path.empty()) {
      const function_decl* f = m_p.find_function(entry);
      std::map<std::string, affine> repl;
      for (auto& pr : f->params)
        repl[pr.name] = affine::variable(rangedet::qual(entry, '.', pr.name));
      rangedet::subst_rcs(inst.constraints, repl);
      rangedet::subst_expr_vars(inst.subscript, repl);
    }
    for (auto& formal : entry_formals(entry)) {
      rc c;
      c.a = affine::variable(formal);
      c.r = rel_kind::ge;
      inst.constraints.push_back(std::move(c));
    }
    return inst;
  }

  // all ways `entry` gets spawned, each binding <entry>.<formal> through the
  // spawn argument and the main-thread context around the spawn
  std::vector<spawn_instance> resolve_spawns(const std::string& entry) const {
    std::vector<spawn_instance> out;
    if (entry == "main") return out;
    const function_decl* ef = m_p.find_function(entry);
    std::string formal =
        rangedet::qual(entry, '.', ef->params.empty() ? "id" : ef->params[0].name);
    for (size_t i = 0; i < m_g.sites.size(); ++i) {
      const call_site& cs = m_g.sites[i];
      if (!cs.is_spawn || cs.callee != entry) continue;
      std::vector<std::vector<int>> chains;
      std::vector<int> cur;
      detailed_chains(cs.caller, cur, chains);
      const point_ctx* ctx = find_ctx(cs.caller, static_cast<int>(i));
      for (auto& chain : chains) {
        spawn_instance si;
        si.cs_index = static_cast<int>(i);
        auto q0 = [&](const std::string& v) {
          return rangedet::qual(cs.caller, '!', v);
        };
        if (ctx) {
          si.constraints = rangedet::rename_rcs(ctx->constraints, q0);
          if (!ctx->args.empty() && ctx->args[0]) {
            rc bind;
            bind.a = affine::variable(formal);
            bind.a -= rangedet::rename_affine(*ctx->args[0], q0);
            bind.r = rel_kind::eq;
            si.constraints.push_back(std::move(bind));
          }
        }
        // continue up the call chain toward main
        for (int h = static_cast<int>(chain.size()) - 1; h >= 0; --h) {
          const call_site& hop = m_g.sites[chain[h]];
          auto qc = [&](const std::string& v) {
            return rangedet::qual(hop.caller, '!', v);
          };
          const point_ctx* hctx = find_ctx(hop.caller, chain[h]);
          const function_decl* callee = m_p.find_function(hop.callee);
          std::map<std::string, affine> repl;
          for (size_t m = 0; m < callee->params.size(); ++m) {
            std::string name =
                rangedet::qual(hop.callee, '!', callee->params[m].name);
            if (hctx && m < hctx->args.size() && hctx->args[m])
              repl[name] = rangedet::rename_affine(*hctx->args[m], qc);
          }
          rangedet::subst_rcs(si.constraints, repl);
          if (hctx)
            for (auto& c : rangedet::rename_rcs(hctx->constraints, qc))
              si.constraints.push_back(c);
        }
        for (auto& pr : m_p.find_function("main")->params) {
          rc c;
          c.a = affine::variable(rangedet::qual("main", '!', pr.name));
          c.r = rel_kind::ge;
          si.constraints.push_back(std::move(c));
        }
        classify_spawn(cs, si);
        out.push_back(std::move(si));
      }
    }
    return out;
  }

private:
  const point_ctx* find_ctx(const std::string& fn, int cs_index) const {
    auto& fr = m_ranges.at(fn);
    auto it = fr.at_call.find(cs_index);
    return it == fr.at_call.end() ? nullptr : &it->second;
  }

  void detailed_chains(const std::string& to, std::vector<int>& cur,
                       std::vector<std::vector<int>>& out) const {
    // chains main -> `to` over plain call edges
    struct helper {
      const callgraph& g;
      const std::string& target;
      std::vector<int>& cur;
      std::vector<std::vector<int>>& out;
      void run(const std::string& fn) {
        if (fn == target) {
          out.push_back(cur);
          return;
        }
        auto it = g.outgoing.find(fn);
        if (it == g.outgoing.end()) return;
        for (int i : it->second) {
          if (g.sites[i].is_spawn) continue;
          cur.push_back(i);
          run(g.sites[i].callee);
          cur.pop_back();
        }
      }
    } h{m_g, to, cur, out};
    h.run("main");
  }

  // can two dynamic instances from this one spawn site be told apart?
  void classify_spawn(const call_site& cs, spawn_instance& si) const {
    const function_decl* spawner = m_p.find_function(cs.caller);
    // find the loop nest lexically enclosing the spawn statement
    std::vector<const stmt*> loops;
    find_enclosing_loops(spawner->body, cs.site, {}, loops);
    bool once = once_from_main(m_g, m_p, cs.caller);
    if (loops.empty()) {
      si.single_shot = once;
      return;
    }
    if (!once || loops.size() != 1 || loops[0]->k != stmt::kind::for_) return;
    const stmt* loop = loops[0];
    const point_ctx* ctx = find_ctx(cs.caller, si.cs_index);
    if (!ctx || ctx->args.empty() || !ctx->args[0]) return;
    auto it = ctx->args[0]->terms.find(loop->for_var);
    if (it == ctx->args[0]->terms.end() || it->second == 0) return;
    // the argument must depend on nothing else that varies per iteration
    for (auto& [v, k] : ctx->args[0]->terms) {
      if (v == loop->for_var) continue;
      std::set<std::string> assigned;
      walk_stmts(loop->body, [&](const stmt& s) {
        if (s.k == stmt::kind::assign && !s.lhs.index) assigned.insert(s.lhs.name);
        if (s.k == stmt::kind::for_) assigned.insert(s.for_var);
      });
      if (assigned.count(v)) return;
    }
    si.loop_distinct = true;
    si.counter = rangedet::qual(cs.caller, '!', loop->for_var);
  }

  static bool find_enclosing_loops(const std::vector<stmt>& body,
                                   const site_id& target,
                                   std::vector<const stmt*> stack,
                                   std::vector<const stmt*>& out) {
    for (auto& s : body) {
      if (s.site == target) {
        out = stack;
        return true;
      }
      auto nested = stack;
      if (s.k == stmt::kind::for_ || s.k == stmt::kind::while_)
        nested.push_back(&s);
      if (find_enclosing_loops(s.body, target, nested, out)) return true;
      if (find_enclosing_loops(s.else_body, target, s.k == stmt::kind::if_ ? stack : nested, out))
        return true;
    }
    return false;
  }

  const program& m_p;
  const callgraph& m_g;
  std::map<std::string, fn_ranges> m_ranges;
};

} // namespace racx

#pragma once

#include <set>
#include <string>
#include <vector>

#include "racx/ast.hpp"
#include "racx/printer.hpp"

namespace racx {

// induction-variable substitution: for an additively updated local inside a
// step-one for-loop, snapshot its entry value and rewrite its occurrences in
// array subscripts to the closed form over the loop counter. Subscripts then
// become linear in the counter, which the range stage can reason about.
//
//   int r0 = r;                       // inserted before the loop
//   for (i = 0; i < n; i = i + 1) {
//     a[r0 + bs * i] = ...;           // was a[r]
//     r = r + bs;                     // update kept: r stays live after
//   }
//
// Only applies when the update is a top-level loop statement, the variable is
// a function-local assigned nowhere else in the loop, and both the loop's
// initial value and the stride are literals or loop-invariant locals. The
// rewrite is skipped when no subscript in the loop mentions the variable, so
// a second application leaves the program unchanged.
class ivs_rewriter {
public:
  explicit ivs_rewriter(program& p) : m_p(p) {}

  int run() {
    for (auto& f : m_p.functions) {
      m_fn = &f;
      rewrite_block(f.body);
    }
    return m_rewrites;
  }

  const std::vector<std::string>& notes() const { return m_notes; }

private:
  struct update_info {
    std::string var;
    size_t stmt_index = 0; // top-level position in the loop body
    bool additive = true;  // v = v + c vs v = v - c
    expr stride;           // literal or invariant local ident
  };

  void rewrite_block(std::vector<stmt>& body) {
    for (size_t i = 0; i < body.size(); ++i) {
      stmt& s = body[i];
      if (!s.body.empty()) rewrite_block(s.body);
      if (!s.else_body.empty()) rewrite_block(s.else_body);
      if (s.k != stmt::kind::for_) continue;
      size_t before = body.size();
      rewrite_loop(body, i);
      i += body.size() - before; // inserted decls precede the loop
    }
  }

  void rewrite_loop(std::vector<stmt>& block, size_t loop_at) {
    stmt& loop = block[loop_at];
    // counter must advance by exactly one per iteration
    const expr& inc = loop.exprs[2];
    if (!(inc.k == expr::kind::binary && inc.bop == binop::add &&
          inc.kids[0].k == expr::kind::var && inc.kids[0].name == loop.for_var &&
          inc.kids[1].k == expr::kind::literal && inc.kids[1].value == 1))
      return;
    const expr& init = loop.exprs[0];
    if (!is_lit_or_invariant_local(init, loop)) return;

    std::vector<update_info> cands;
    for (size_t i = 0; i < loop.body.size(); ++i) {
      const stmt& s = loop.body[i];
      if (s.k != stmt::kind::assign || s.lhs.index) continue;
      const std::string& v = s.lhs.name;
      if (v == loop.for_var || !is_local(v) || m_p.find_global(v)) continue;
      const expr& rhs = s.exprs[0];
      if (rhs.k != expr::kind::binary ||
          (rhs.bop != binop::add && rhs.bop != binop::sub))
        continue;
      if (!(rhs.kids[0].k == expr::kind::var && rhs.kids[0].name == v)) continue;
      if (!is_lit_or_invariant_local(rhs.kids[1], loop)) continue;
      if (assignments_in(loop, v) != 1) continue;
      update_info u;
      u.var = v;
      u.stmt_index = i;
      u.additive = rhs.bop == binop::add;
      u.stride = rhs.kids[1];
      cands.push_back(std::move(u));
    }

    size_t inserted = 0;
    for (auto& u : cands) {
      // re-acquire: each insert below shifts the loop within its block
      stmt& cur = block[loop_at + inserted];
      if (!subscript_mentions(cur, u.var)) continue;
      std::string copy = fresh_name(u.var);
      for (size_t i = 0; i < cur.body.size(); ++i) {
        bool after = i > u.stmt_index;
        rewrite_stmt_subscripts(cur.body[i], u, copy, cur, after);
      }
      stmt d;
      d.k = stmt::kind::decl;
      d.name = copy;
      d.site = site_id{m_fn->name, -1, 0};
      d.pos = cur.pos;
      d.exprs.push_back(expr::variable(u.var));
      m_notes.push_back(m_fn->name + ": " + u.var + " -> " + copy +
                        (u.additive ? " + " : " - ") + expr_string(u.stride) +
                        " * iterations of " + cur.for_var);
      block.insert(block.begin() + static_cast<long>(loop_at + inserted), d);
      ++inserted;
      ++m_rewrites;
    }
  }

  bool is_local(const std::string& name) const {
    for (auto& pr : m_fn->params)
      if (pr.name == name) return true;
    bool found = false;
    walk_stmts(m_fn->body, [&](const stmt& s) {
      if (s.k == stmt::kind::decl && s.name == name) found = true;
    });
    return found;
  }

  // literal, or local identifier never written inside the loop
  bool is_lit_or_invariant_local(const expr& e, const stmt& loop) const {
    if (e.k == expr::kind::literal) return true;
    if (e.k != expr::kind::var) return false;
    if (e.name == loop.for_var) return false;
    if (m_p.find_global(e.name) || !is_local(e.name)) return false;
    return assignments_in(loop, e.name) == 0;
  }

  static int assignments_in(const stmt& loop, const std::string& v) {
    int n = 0;
    walk_stmts(loop.body, [&](const stmt& s) {
      if (s.k == stmt::kind::assign && !s.lhs.index && s.lhs.name == v) ++n;
      if (s.k == stmt::kind::for_ && s.for_var == v) n += 2; // disqualify
      if (s.k == stmt::kind::decl && s.name == v) n += 2;
    });
    return n;
  }

  static bool expr_mentions(const expr& e, const std::string& v, bool in_sub) {
    if (e.k == expr::kind::var && in_sub) return e.name == v;
    if (e.k == expr::kind::array_elem) return expr_mentions(e.kids[0], v, true);
    for (auto& k : e.kids)
      if (expr_mentions(k, v, in_sub)) return true;
    return false;
  }
  static bool subscript_mentions(const stmt& loop, const std::string& v) {
    bool found = false;
    walk_stmts(loop.body, [&](const stmt& s) {
      if (s.k == stmt::kind::assign && s.lhs.index &&
          expr_mentions(*s.lhs.index, v, true))
        found = true;
      for (auto& e : s.exprs)
        if (expr_mentions(e, v, false)) found = true;
    });
    return found;
  }

  std::string fresh_name(const std::string& base) const {
    std::string name = base + "0";
    while (name_taken(name)) name += "0";
    return name;
  }
  bool name_taken(const std::string& name) const {
    if (m_p.find_global(name) || m_p.is_lock(name) || m_p.is_barrier(name) ||
        m_p.is_cond(name) || m_p.find_function(name) || name == "nthreads")
      return true;
    for (auto& pr : m_fn->params)
      if (pr.name == name) return true;
    bool used = false;
    walk_stmts(m_fn->body, [&](const stmt& s) {
      if (s.k == stmt::kind::decl && s.name == name) used = true;
    });
    return used;
  }

  // v at the top of an iteration equals copy +/- stride * (counter - init);
  // accesses textually after the update see one more application
  expr closed_form(const update_info& u, const std::string& copy,
                   const stmt& loop, bool after_update) const {
    const expr& init = loop.exprs[0];
    expr iters;
    if (init.k == expr::kind::literal && init.value == 0)
      iters = expr::variable(loop.for_var);
    else
      iters = expr::bin(binop::sub, expr::variable(loop.for_var), init);
    expr delta;
    if (u.stride.k == expr::kind::literal && u.stride.value == 1)
      delta = std::move(iters);
    else
      delta = expr::bin(binop::mul, u.stride, std::move(iters));
    binop op = u.additive ? binop::add : binop::sub;
    expr cf = expr::bin(op, expr::variable(copy), std::move(delta));
    if (after_update) cf = expr::bin(op, std::move(cf), u.stride);
    return cf;
  }

  void replace_in_expr(expr& e, const update_info& u, const std::string& copy,
                       const stmt& loop, bool after, bool in_sub) const {
    if (e.k == expr::kind::var && in_sub && e.name == u.var) {
      e = closed_form(u, copy, loop, after);
      return;
    }
    if (e.k == expr::kind::array_elem) {
      replace_in_expr(e.kids[0], u, copy, loop, after, true);
      return;
    }
    for (auto& k : e.kids) replace_in_expr(k, u, copy, loop, after, in_sub);
  }

  void rewrite_stmt_subscripts(stmt& s, const update_info& u,
                               const std::string& copy, const stmt& loop,
                               bool after) const {
    if (s.k == stmt::kind::assign && s.lhs.index)
      replace_in_expr(*s.lhs.index, u, copy, loop, after, true);
    for (auto& e : s.exprs) replace_in_expr(e, u, copy, loop, after, false);
    for (auto& k : s.body) rewrite_stmt_subscripts(k, u, copy, loop, after);
    for (auto& k : s.else_body) rewrite_stmt_subscripts(k, u, copy, loop, after);
  }

  program& m_p;
  function_decl* m_fn = nullptr;
  int m_rewrites = 0;
  std::vector<std::string> m_notes;
};

// returns the number of substituted variables; caller re-canonicalizes
inline int apply_ivs(program& p, std::vector<std::string>* notes = nullptr) {
  ivs_rewriter rw(p);
  int n = rw.run();
  if (notes) *notes = rw.notes();
  return n;
}

} // namespace racx

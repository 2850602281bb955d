#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "racx/ast.hpp"
#include "racx/callgraph.hpp"
#include "racx/cfg.hpp"

namespace racx {

// relative lockset: locks surely acquired on every path since function entry
// (plus) and locks possibly released on some path (minus); kept disjoint
struct rel_lockset {
  std::set<std::string> plus;
  std::set<std::string> minus;

  void do_lock(const std::string& m) {
    plus.insert(m);
    minus.erase(m);
  }
  void do_unlock(const std::string& m) {
    minus.insert(m);
    plus.erase(m);
  }
  // apply the net effect of a callee (or of an access point inside it)
  void compose(const rel_lockset& g) {
    for (auto& m : g.minus) plus.erase(m);
    for (auto& m : g.plus) plus.insert(m);
    for (auto& m : g.minus) minus.insert(m);
    for (auto& m : g.plus) minus.erase(m);
  }
  // control-flow merge: surely-held intersects, possibly-released unions
  static rel_lockset join(const rel_lockset& a, const rel_lockset& b) {
    rel_lockset r;
    for (auto& m : a.plus)
      if (b.plus.count(m)) r.plus.insert(m);
    r.minus = a.minus;
    r.minus.insert(b.minus.begin(), b.minus.end());
    return r;
  }
  bool operator==(const rel_lockset& o) const {
    return plus == o.plus && minus == o.minus;
  }
};

// one shared-memory access with the lockset in force, relative to the entry
// of the function being summarized; imported callee accesses carry the chain
// of call sites they travelled through (indices into callgraph::sites)
struct guarded_access {
  site_id site;
  std::string object;
  bool is_array = false;
  bool is_write = false;
  const expr* subscript = nullptr; // points into the analyzed program's AST
  rel_lockset held;
  std::vector<int> path; // outermost call first; empty for direct accesses
};

struct fn_summary {
  rel_lockset exit;
  std::vector<guarded_access> accesses;
};

class lockset_analyzer {
public:
  lockset_analyzer(const program& p, const callgraph& g) : m_p(p), m_g(g) {}

  std::map<std::string, fn_summary> run() {
    std::map<std::string, fn_summary> out;
    for (auto& fn : m_g.bottom_up) out[fn] = summarize(*m_p.find_function(fn), out);
    return out;
  }

  // per thread entry: accesses with absolute locksets (entry holds nothing,
  // so the relative lockset at the access is already absolute)
  static std::map<std::string, std::vector<guarded_access>>
  resolve_thread_accesses(const program& p,
                          const std::map<std::string, fn_summary>& summaries) {
    std::map<std::string, std::vector<guarded_access>> out;
    for (auto& e : p.thread_entries()) out[e] = summaries.at(e).accesses;
    return out;
  }

private:
  struct node_state {
    rel_lockset ls;
    bool reached = false;
  };

  fn_summary summarize(const function_decl& f,
                       const std::map<std::string, fn_summary>& done) {
    const cfg& g = m_g.cfgs.at(f.name);
    std::vector<node_state> in(g.nodes.size()), out(g.nodes.size());
    in[g.entry].reached = true;
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto& n : g.nodes) {
        node_state next;
        if (n.id == g.entry) {
          next.reached = true;
        } else {
          for (int p : n.preds) {
            if (!out[p].reached) continue;
            if (!next.reached) {
              next = out[p];
            } else {
              next.ls = rel_lockset::join(next.ls, out[p].ls);
            }
          }
        }
        node_state res = next;
        if (res.reached) transfer(n, res.ls, done, nullptr);
        if (!(in[n.id].reached == next.reached && in[n.id].ls == next.ls) ||
            !(out[n.id].reached == res.reached && out[n.id].ls == res.ls)) {
          in[n.id] = next;
          out[n.id] = res;
          changed = true;
        }
      }
    }
    fn_summary s;
    for (auto& n : g.nodes) {
      if (!in[n.id].reached) continue;
      rel_lockset ls = in[n.id].ls;
      transfer(n, ls, done, &s.accesses);
    }
    if (out[g.exit].reached) s.exit = out[g.exit].ls;
    return s;
  }

  // evolve the lockset across one node in evaluation order; when sink is
  // given, emit guarded accesses and import callee access sets at call points
  void transfer(const cfg_node& n, rel_lockset& ls,
                const std::map<std::string, fn_summary>& done,
                std::vector<guarded_access>* sink) {
    if (!n.s) return;
    const stmt& s = *n.s;
    if (n.r == cfg_node::role::plain) {
      switch (s.k) {
      case stmt::kind::lock: ls.do_lock(s.name); return;
      case stmt::kind::unlock: ls.do_unlock(s.name); return;
      case stmt::kind::assign: {
        walk(s.exprs[0], ls, done, sink, s.site);
        if (s.lhs.index) walk(*s.lhs.index, ls, done, sink, s.site);
        if (m_p.find_global(s.lhs.name) && sink) {
          guarded_access a;
          a.site = s.site;
          a.object = s.lhs.name;
          a.is_array = s.lhs.index.has_value();
          a.is_write = true;
          a.subscript = s.lhs.index ? &*s.lhs.index : nullptr;
          a.held = ls;
          sink->push_back(std::move(a));
        }
        return;
      }
      case stmt::kind::call: {
        for (auto& a : s.exprs) walk(a, ls, done, sink, s.site);
        import_call(s.name, find_stmt_call_site(s), ls, done, sink);
        return;
      }
      default:
        for (const expr* e : node_exprs(n)) walk(*e, ls, done, sink, s.site);
        return;
      }
    }
    for (const expr* e : node_exprs(n)) walk(*e, ls, done, sink, s.site);
  }

  void import_call(const std::string& callee, int cs_index, rel_lockset& ls,
                   const std::map<std::string, fn_summary>& done,
                   std::vector<guarded_access>* sink) {
    const fn_summary& g = done.at(callee);
    if (sink) {
      for (const guarded_access& acc : g.accesses) {
        guarded_access imported = acc;
        rel_lockset composed = ls;
        composed.compose(acc.held);
        imported.held = std::move(composed);
        imported.path.clear();
        imported.path.push_back(cs_index);
        imported.path.insert(imported.path.end(), acc.path.begin(),
                             acc.path.end());
        sink->push_back(std::move(imported));
      }
    }
    ls.compose(g.exit);
  }

  // locate the callgraph site index for a call statement / call expression
  int find_stmt_call_site(const stmt& s) const {
    for (size_t i = 0; i < m_g.sites.size(); ++i) {
      const call_site& cs = m_g.sites[i];
      if (!cs.is_spawn && cs.site == s.site && cs.callee == s.name &&
          cs.args.size() == s.exprs.size() &&
          (cs.args.empty() || cs.args[0] == &s.exprs[0]))
        return static_cast<int>(i);
    }
    return -1;
  }
  int find_expr_call_site(const expr& e, const site_id& host) const {
    for (size_t i = 0; i < m_g.sites.size(); ++i) {
      const call_site& cs = m_g.sites[i];
      if (!cs.is_spawn && cs.site == host && cs.callee == e.name &&
          cs.args.size() == e.kids.size() &&
          (cs.args.empty() || cs.args[0] == &e.kids[0]))
        return static_cast<int>(i);
    }
    return -1;
  }

  void walk(const expr& e, rel_lockset& ls,
            const std::map<std::string, fn_summary>& done,
            std::vector<guarded_access>* sink, const site_id& host) {
    switch (e.k) {
    case expr::kind::literal: return;
    case expr::kind::var: {
      const global_var* g = m_p.find_global(e.name);
      if (g && sink) {
        guarded_access a;
        a.site = host;
        a.object = e.name;
        a.is_write = false;
        a.held = ls;
        sink->push_back(std::move(a));
      }
      return;
    }
    case expr::kind::array_elem: {
      walk(e.kids[0], ls, done, sink, host);
      if (sink) {
        guarded_access a;
        a.site = host;
        a.object = e.name;
        a.is_array = true;
        a.is_write = false;
        a.subscript = &e.kids[0];
        a.held = ls;
        sink->push_back(std::move(a));
      }
      return;
    }
    case expr::kind::unary:
      walk(e.kids[0], ls, done, sink, host);
      return;
    case expr::kind::binary: {
      walk(e.kids[0], ls, done, sink, host);
      if (e.bop == binop::land || e.bop == binop::lor) {
        // right side may be skipped: accesses there keep their in-flight
        // state, the continuation sees the merge of both outcomes
        rel_lockset rhs = ls;
        walk(e.kids[1], rhs, done, sink, host);
        ls = rel_lockset::join(ls, rhs);
      } else {
        walk(e.kids[1], ls, done, sink, host);
      }
      return;
    }
    case expr::kind::call: {
      for (auto& k : e.kids) walk(k, ls, done, sink, host);
      import_call(e.name, find_expr_call_site(e, host), ls, done, sink);
      return;
    }
    }
  }

  const program& m_p;
  const callgraph& m_g;
};

inline std::map<std::string, fn_summary> summarize_functions(const program& p,
                                                             const callgraph& g) {
  return lockset_analyzer(p, g).run();
}

} // namespace racx

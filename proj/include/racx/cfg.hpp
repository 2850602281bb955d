#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "racx/ast.hpp"
#include "racx/printer.hpp"

namespace racx {

// statement-level control-flow graph, one per function. Compound statements
// contribute their condition evaluation as a node; for-loops contribute three
// nodes (init, cond, incr) so accesses in each clause sit at the right point.
struct cfg_node {
  enum class role { entry, exit, plain, cond, for_init, for_cond, for_incr };
  int id = -1;
  role r = role::plain;
  const stmt* s = nullptr; // null for entry/exit
  std::vector<int> succs;
  std::vector<int> preds;
};

struct cfg {
  std::string function;
  std::vector<cfg_node> nodes;
  int entry = 0;
  int exit = 1;

  // node carrying the given statement in the given role
  int node_of(const stmt* s, cfg_node::role r) const {
    for (auto& n : nodes)
      if (n.s == s && n.r == r) return n.id;
    return -1;
  }
  // the node where the statement's own control begins (cond for loops/ifs)
  int head_of(const stmt* s) const {
    for (auto& n : nodes)
      if (n.s == s &&
          (n.r == cfg_node::role::plain || n.r == cfg_node::role::cond ||
           n.r == cfg_node::role::for_init))
        return n.id;
    return -1;
  }

  bool reaches(int from, int to) const {
    std::vector<char> seen(nodes.size(), 0);
    std::vector<int> work{from};
    seen[from] = 1;
    while (!work.empty()) {
      int n = work.back();
      work.pop_back();
      if (n == to) return true;
      for (int s : nodes[n].succs)
        if (!seen[s]) {
          seen[s] = 1;
          work.push_back(s);
        }
    }
    return false;
  }

  // true when the node can re-execute (lies on a cycle)
  bool in_loop(int id) const {
    for (int s : nodes[id].succs)
      if (reaches(s, id)) return true;
    return false;
  }
};

class cfg_builder {
public:
  cfg run(const function_decl& f) {
    m_g.function = f.name;
    add(cfg_node::role::entry, nullptr);
    add(cfg_node::role::exit, nullptr);
    auto tails = wire(f.body, {m_g.entry});
    for (int t : tails) edge(t, m_g.exit);
    return std::move(m_g);
  }

private:
  int add(cfg_node::role r, const stmt* s) {
    cfg_node n;
    n.id = static_cast<int>(m_g.nodes.size());
    n.r = r;
    n.s = s;
    m_g.nodes.push_back(std::move(n));
    return m_g.nodes.back().id;
  }
  void edge(int a, int b) {
    m_g.nodes[a].succs.push_back(b);
    m_g.nodes[b].preds.push_back(a);
  }
  std::vector<int> wire(const std::vector<stmt>& body, std::vector<int> in) {
    for (auto& s : body) {
      switch (s.k) {
      case stmt::kind::if_: {
        int c = add(cfg_node::role::cond, &s);
        for (int t : in) edge(t, c);
        auto t_out = wire(s.body, {c});
        std::vector<int> e_out;
        if (s.else_body.empty())
          e_out = {c};
        else
          e_out = wire(s.else_body, {c});
        in = std::move(t_out);
        in.insert(in.end(), e_out.begin(), e_out.end());
        break;
      }
      case stmt::kind::while_: {
        int c = add(cfg_node::role::cond, &s);
        for (int t : in) edge(t, c);
        auto b_out = wire(s.body, {c});
        for (int t : b_out) edge(t, c);
        in = {c};
        break;
      }
      case stmt::kind::for_: {
        int i = add(cfg_node::role::for_init, &s);
        int c = add(cfg_node::role::for_cond, &s);
        int inc = add(cfg_node::role::for_incr, &s);
        for (int t : in) edge(t, i);
        edge(i, c);
        auto b_out = wire(s.body, {c});
        for (int t : b_out) edge(t, inc);
        edge(inc, c);
        in = {c};
        break;
      }
      case stmt::kind::ret: {
        int n = add(cfg_node::role::plain, &s);
        for (int t : in) edge(t, n);
        edge(n, m_g.exit);
        in.clear();
        break;
      }
      default: {
        int n = add(cfg_node::role::plain, &s);
        for (int t : in) edge(t, n);
        in = {n};
        break;
      }
      }
    }
    return in;
  }

  cfg m_g;
};

inline cfg build_cfg(const function_decl& f) { return cfg_builder().run(f); }

// expressions evaluated when control passes through the node, in evaluation
// order (assign rhs before lvalue subscript, matching the runtime)
inline std::vector<const expr*> node_exprs(const cfg_node& n) {
  if (!n.s) return {};
  const stmt& s = *n.s;
  switch (n.r) {
  case cfg_node::role::for_init: return {&s.exprs[0]};
  case cfg_node::role::for_cond: return {&s.exprs[1]};
  case cfg_node::role::for_incr: return {&s.exprs[2]};
  case cfg_node::role::cond: return {&s.exprs[0]};
  default: break;
  }
  std::vector<const expr*> out;
  switch (s.k) {
  case stmt::kind::assign:
    out.push_back(&s.exprs[0]);
    if (s.lhs.index) out.push_back(&*s.lhs.index);
    break;
  case stmt::kind::decl:
  case stmt::kind::ret:
  case stmt::kind::call:
  case stmt::kind::spawn:
    for (auto& e : s.exprs) out.push_back(&e);
    break;
  default: break;
  }
  return out;
}

inline std::string cfg_node_label(const cfg_node& n) {
  switch (n.r) {
  case cfg_node::role::entry: return "entry";
  case cfg_node::role::exit: return "exit";
  case cfg_node::role::for_init:
    return "[" + n.s->site.str() + "] for-init " + n.s->for_var + " = " +
           expr_string(n.s->exprs[0]);
  case cfg_node::role::for_cond:
    return "[" + n.s->site.str() + "] for-cond " + expr_string(n.s->exprs[1]);
  case cfg_node::role::for_incr:
    return "[" + n.s->site.str() + "] for-incr " + n.s->for_var + " = " +
           expr_string(n.s->exprs[2]);
  case cfg_node::role::cond:
    return "[" + n.s->site.str() + "] " +
           (n.s->k == stmt::kind::if_ ? "if " : "while ") +
           expr_string(n.s->exprs[0]);
  default: break;
  }
  const stmt& s = *n.s;
  std::string out = "[" + s.site.str() + "] ";
  switch (s.k) {
  case stmt::kind::decl:
    out += "decl " + s.name;
    if (!s.exprs.empty()) out += " = " + expr_string(s.exprs[0]);
    break;
  case stmt::kind::assign:
    out += s.lhs.name;
    if (s.lhs.index) out += "[" + expr_string(*s.lhs.index) + "]";
    out += " = " + expr_string(s.exprs[0]);
    break;
  case stmt::kind::call: out += "call " + s.name; break;
  case stmt::kind::spawn:
    out += "spawn " + s.name + "(" + expr_string(s.exprs[0]) + ")";
    break;
  case stmt::kind::join: out += "join"; break;
  case stmt::kind::lock: out += "lock " + s.name; break;
  case stmt::kind::unlock: out += "unlock " + s.name; break;
  case stmt::kind::barrier: out += "barrier " + s.name; break;
  case stmt::kind::signal: out += "signal " + s.name; break;
  case stmt::kind::wait: out += "wait " + s.name; break;
  case stmt::kind::ret:
    out += "return";
    if (!s.exprs.empty()) out += " " + expr_string(s.exprs[0]);
    break;
  default: out += "?"; break;
  }
  return out;
}

inline std::string dump_cfg(const program& p) {
  std::ostringstream os;
  for (auto& f : p.functions) {
    cfg g = build_cfg(f);
    os << "cfg " << f.name << "\n";
    for (auto& n : g.nodes) {
      os << "  n" << n.id << ": " << cfg_node_label(n) << " ->";
      for (int s : n.succs) os << " n" << s;
      os << "\n";
    }
  }
  return os.str();
}

} // namespace racx

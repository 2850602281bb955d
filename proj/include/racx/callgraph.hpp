#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "racx/ast.hpp"
#include "racx/cfg.hpp"

namespace racx {

struct call_site {
  std::string caller;
  std::string callee;
  site_id site;    // statement hosting the call/spawn
  bool is_spawn = false;
  bool in_loop = false; // hosting cfg node lies on a cycle in the caller
  std::vector<const expr*> args;
};

struct callgraph {
  std::vector<call_site> sites;
  std::map<std::string, std::vector<int>> outgoing; // caller -> site indices
  std::map<std::string, std::vector<int>> incoming; // callee -> site indices
  std::vector<std::string> bottom_up; // callees before their callers
  std::map<std::string, cfg> cfgs;

  const std::vector<int>& calls_into(const std::string& fn) const {
    static const std::vector<int> none;
    auto it = incoming.find(fn);
    return it == incoming.end() ? none : it->second;
  }
};

namespace detail {

inline void collect_calls(const expr& e, std::vector<const expr*>& out) {
  if (e.k == expr::kind::call) out.push_back(&e);
  for (auto& k : e.kids) collect_calls(k, out);
}

} // namespace detail

inline callgraph build_callgraph(const program& p) {
  callgraph g;
  for (auto& f : p.functions) {
    g.outgoing[f.name];
    g.incoming[f.name];
    g.cfgs.emplace(f.name, build_cfg(f));
  }
  for (auto& f : p.functions) {
    const cfg& c = g.cfgs.at(f.name);
    for (auto& n : c.nodes) {
      if (!n.s) continue;
      bool looped = c.in_loop(n.id);
      if (n.r == cfg_node::role::plain && n.s->k == stmt::kind::spawn) {
        call_site cs;
        cs.caller = f.name;
        cs.callee = n.s->name;
        cs.site = n.s->site;
        cs.is_spawn = true;
        cs.in_loop = looped;
        for (auto& a : n.s->exprs) cs.args.push_back(&a);
        g.outgoing[f.name].push_back(static_cast<int>(g.sites.size()));
        g.incoming[cs.callee].push_back(static_cast<int>(g.sites.size()));
        g.sites.push_back(std::move(cs));
        continue;
      }
      std::vector<const expr*> calls;
      if (n.r == cfg_node::role::plain && n.s->k == stmt::kind::call) {
        // the statement's own call, then any calls nested in its arguments
        call_site cs;
        cs.caller = f.name;
        cs.callee = n.s->name;
        cs.site = n.s->site;
        cs.in_loop = looped;
        for (auto& a : n.s->exprs) {
          cs.args.push_back(&a);
          detail::collect_calls(a, calls);
        }
        g.outgoing[f.name].push_back(static_cast<int>(g.sites.size()));
        g.incoming[cs.callee].push_back(static_cast<int>(g.sites.size()));
        g.sites.push_back(std::move(cs));
      } else {
        for (const expr* e : node_exprs(n)) detail::collect_calls(*e, calls);
      }
      for (const expr* e : calls) {
        call_site cs;
        cs.caller = f.name;
        cs.callee = e->name;
        cs.site = n.s->site;
        cs.in_loop = looped;
        for (auto& a : e->kids) cs.args.push_back(&a);
        g.outgoing[f.name].push_back(static_cast<int>(g.sites.size()));
        g.incoming[cs.callee].push_back(static_cast<int>(g.sites.size()));
        g.sites.push_back(std::move(cs));
      }
    }
  }
  // bottom-up order over call edges (recursion is rejected up front)
  std::set<std::string> done;
  std::vector<std::string> order;
  struct visitor {
    const program& p;
    const callgraph& g;
    std::set<std::string>& done;
    std::vector<std::string>& order;
    void run(const std::string& fn) {
      if (done.count(fn)) return;
      done.insert(fn);
      auto it = g.outgoing.find(fn);
      if (it != g.outgoing.end())
        for (int i : it->second)
          if (!g.sites[i].is_spawn) run(g.sites[i].callee);
      order.push_back(fn);
    }
  } v{p, g, done, order};
  for (auto& f : p.functions) v.run(f.name);
  g.bottom_up = std::move(order);
  return g;
}

// true when fn's body runs at most once per program execution along plain
// call edges from main: fn == main, or fn is called from exactly one site,
// that site is not in a loop, fn is not a thread entry, and the caller is
// itself executed at most once from main.
inline bool once_from_main(const callgraph& g, const program& p,
                           const std::string& fn) {
  std::string cur = fn;
  std::set<std::string> seen;
  while (cur != "main") {
    if (!seen.insert(cur).second) return false;
    for (auto& tc : p.spawns)
      if (tc.entry == cur) return false;
    const auto& in = g.calls_into(cur);
    if (in.size() != 1) return false;
    const call_site& cs = g.sites[in[0]];
    if (cs.is_spawn || cs.in_loop) return false;
    cur = cs.caller;
  }
  return true;
}

inline std::string dump_callgraph(const program& p) {
  callgraph g = build_callgraph(p);
  std::ostringstream os;
  for (auto& f : p.functions) {
    os << f.name << ":\n";
    for (int i : g.outgoing.at(f.name)) {
      const call_site& cs = g.sites[i];
      os << "  " << (cs.is_spawn ? "spawn " : "call ") << cs.callee << " at "
         << cs.site.str();
      if (cs.in_loop) os << " (in loop)";
      os << "\n";
    }
  }
  os << "thread entries:";
  for (auto& e : p.thread_entries()) os << " " << e;
  os << "\n";
  return os.str();
}

} // namespace racx

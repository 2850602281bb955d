#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "racx/cfg.hpp"

namespace racx {

// iterative dominator analysis over a function cfg
struct dominators {
  std::vector<std::vector<char>> dom; // dom[n][d]: d dominates n
  std::vector<int> idom;              // -1 for entry/unreachable
  std::vector<char> reachable;

  bool dominates(int d, int n) const { return reachable[n] && dom[n][d]; }
};

inline dominators compute_dominators(const cfg& g) {
  size_t n = g.nodes.size();
  dominators d;
  d.reachable.assign(n, 0);
  {
    std::vector<int> work{g.entry};
    d.reachable[g.entry] = 1;
    while (!work.empty()) {
      int x = work.back();
      work.pop_back();
      for (int s : g.nodes[x].succs)
        if (!d.reachable[s]) {
          d.reachable[s] = 1;
          work.push_back(s);
        }
    }
  }
  d.dom.assign(n, std::vector<char>(n, 1));
  d.dom[g.entry].assign(n, 0);
  d.dom[g.entry][g.entry] = 1;
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < n; ++i) {
      int id = static_cast<int>(i);
      if (id == g.entry || !d.reachable[id]) continue;
      std::vector<char> next(n, 1);
      bool any = false;
      for (int p : g.nodes[id].preds) {
        if (!d.reachable[p]) continue;
        any = true;
        for (size_t k = 0; k < n; ++k) next[k] = next[k] && d.dom[p][k];
      }
      if (!any) next.assign(n, 0);
      next[id] = 1;
      if (next != d.dom[id]) {
        d.dom[id] = std::move(next);
        changed = true;
      }
    }
  }
  d.idom.assign(n, -1);
  for (size_t i = 0; i < n; ++i) {
    int id = static_cast<int>(i);
    if (id == g.entry || !d.reachable[id]) continue;
    // idom = the strict dominator dominated by every other strict dominator
    for (size_t c = 0; c < n; ++c) {
      if (c == i || !d.dom[id][c]) continue;
      bool best = true;
      for (size_t o = 0; o < n; ++o) {
        if (o == i || o == c || !d.dom[id][o]) continue;
        if (!d.dom[c][o]) {
          best = false;
          break;
        }
      }
      if (best) {
        d.idom[id] = static_cast<int>(c);
        break;
      }
    }
  }
  return d;
}

inline std::string dump_dominators(const program& p) {
  std::ostringstream os;
  for (auto& f : p.functions) {
    cfg g = build_cfg(f);
    dominators d = compute_dominators(g);
    os << "dom " << f.name << "\n";
    for (auto& nd : g.nodes) {
      if (!d.reachable[nd.id]) continue;
      os << "  n" << nd.id << " " << cfg_node_label(nd) << " idom=";
      if (d.idom[nd.id] < 0)
        os << "-";
      else
        os << "n" << d.idom[nd.id];
      os << "\n";
    }
  }
  return os.str();
}

} // namespace racx

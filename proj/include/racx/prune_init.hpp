#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "racx/callgraph.hpp"
#include "racx/report.hpp"

namespace racx {

struct prune_decision {
  std::string lvalue;
  std::string action;        // drop-pair | insert-lock | keep
  std::string justification; // pre-spawn-order | possible-init | none
  std::string detail;
  nlohmann::json to_json() const {
    return {{"warning", lvalue},
            {"action", action},
            {"justification", justification},
            {"detail", detail}};
  }
};

namespace detail {

// a main-thread occurrence of an operation or a spawn, as the chain of call
// sites from main down to it (callgraph site indices), plus the final site
struct main_chain {
  std::vector<int> calls;
  site_id last;
};

inline bool path_back(const cfg& g, int from, int to) {
  for (int s : g.nodes[from].succs)
    if (g.reaches(s, to)) return true;
  return false;
}

inline std::vector<int> nodes_of(const cfg& g, const site_id& site) {
  std::vector<int> out;
  for (auto& n : g.nodes)
    if (n.s && n.s->site == site) out.push_back(n.id);
  return out;
}

// all call-site chains from `from` to function `to` (no spawn edges; the
// callgraph is acyclic)
inline void call_chains(const callgraph& g, const std::string& from,
                        const std::string& to, std::vector<int>& cur,
                        std::vector<std::vector<int>>& out) {
  if (from == to) {
    out.push_back(cur);
    return;
  }
  auto it = g.outgoing.find(from);
  if (it == g.outgoing.end()) return;
  for (int i : it->second) {
    if (g.sites[i].is_spawn) continue;
    cur.push_back(i);
    call_chains(g, g.sites[i].callee, to, cur, out);
    cur.pop_back();
  }
}

// every execution of `a` precedes every start of `b`: at the divergence
// function (which must run at most once), no control path leads from b's hop
// onward back to a's hop, so within the single sequential run of that body
// an instance of `a` can never execute once `b` has happened. `a` is allowed
// to sit on a path that skips it entirely; an access that never runs races
// with nobody.
inline bool always_precedes(const callgraph& g, const program& p,
                            const main_chain& a, const main_chain& b) {
  size_t d = 0;
  while (d < a.calls.size() && d < b.calls.size() && a.calls[d] == b.calls[d])
    ++d;
  std::string div_fn = d == 0 ? "main" : g.sites[a.calls[d - 1]].callee;
  if (!once_from_main(g, p, div_fn)) return false;
  site_id u = d < a.calls.size() ? g.sites[a.calls[d]].site : a.last;
  site_id v = d < b.calls.size() ? g.sites[b.calls[d]].site : b.last;
  const cfg& c = g.cfgs.at(div_fn);
  auto nu = nodes_of(c, u);
  auto nv = nodes_of(c, v);
  if (nu.empty() || nv.empty()) return false;
  for (int x : nu)
    for (int y : nv)
      if (path_back(c, y, x)) return false;
  return true;
}

inline bool op_matches(const guarded_access& a, const report_op& op) {
  if (!(a.site == op.site) || a.is_write != op.is_write) return false;
  std::optional<std::string> sub;
  if (a.subscript) sub = expr_string(*a.subscript);
  if (sub != op.subscript) return false;
  std::vector<std::string> plus(a.held.plus.begin(), a.held.plus.end());
  return plus == op.lockset;
}

} // namespace detail

// drop (main-side op, child entry) pairs whose every main-thread occurrence
// finishes before every creation of the child thread
class precreation_pruner {
public:
  precreation_pruner(const program& p)
      : m_p(p), m_g(build_callgraph(p)),
        m_resolved(lockset_analyzer::resolve_thread_accesses(
            p, summarize_functions(p, m_g))) {}

  void run(race_report& r, std::vector<prune_decision>& decisions) {
    for (auto& w : r.warnings) {
      std::vector<report_pair> kept_pairs;
      for (auto& pr : w.pairs) {
        std::vector<std::array<std::string, 2>> kept;
        for (auto& ep : pr.entry_pairs) {
          bool drop = false;
          if (ep[0] == "main" && ep[1] != "main")
            drop = precedes_all_spawns(w.ops[pr.a], ep[1]);
          else if (ep[1] == "main" && ep[0] != "main")
            drop = precedes_all_spawns(w.ops[pr.b], ep[0]);
          if (drop) {
            decisions.push_back(
                {w.lvalue, "drop-pair", "pre-spawn-order",
                 w.ops[pr.a].site.str() + " / " + w.ops[pr.b].site.str() +
                     " for entries {" + ep[0] + "," + ep[1] + "}"});
          } else {
            kept.push_back(ep);
          }
        }
        pr.entry_pairs = std::move(kept);
        if (!pr.entry_pairs.empty()) kept_pairs.push_back(pr);
      }
      w.pairs = std::move(kept_pairs);
    }
    compact_report(r);
  }

private:
  // main-side op: all its occurrences in main's resolved set must precede
  // every spawn of `entry`
  bool precedes_all_spawns(const report_op& op, const std::string& entry) {
    std::vector<detail::main_chain> occurrences;
    for (auto& acc : m_resolved.at("main")) {
      if (acc.object.empty()) continue;
      if (!detail::op_matches(acc, op)) continue;
      occurrences.push_back({acc.path, acc.site});
    }
    if (occurrences.empty()) return false;
    std::vector<detail::main_chain> spawns;
    for (size_t i = 0; i < m_g.sites.size(); ++i) {
      const call_site& cs = m_g.sites[i];
      if (!cs.is_spawn || cs.callee != entry) continue;
      std::vector<std::vector<int>> chains;
      std::vector<int> cur;
      detail::call_chains(m_g, "main", cs.caller, cur, chains);
      if (chains.empty()) return false; // spawner not reached from main?
      for (auto& ch : chains) spawns.push_back({ch, cs.site});
    }
    if (spawns.empty()) return false;
    for (auto& occ : occurrences)
      for (auto& sp : spawns)
        if (!detail::always_precedes(m_g, m_p, occ, sp)) return false;
    return true;
  }

  const program& m_p;
  callgraph m_g;
  std::map<std::string, std::vector<guarded_access>> m_resolved;
};

inline void prune_precreation_accesses(const program& p, race_report& r,
                                       std::vector<prune_decision>& decisions) {
  precreation_pruner(p).run(r, decisions);
}

// when a warning has exactly one unlocked operation and every other operation
// shares at least one lock, guard the unlocked statement with the smallest
// shared lock and resolve the warning; the lone unguarded access is then an
// initialization that can no longer interleave with the guarded uses
class possible_init_pruner {
public:
  explicit possible_init_pruner(program& p) : m_p(p) {}

  // returns true when the program was rewritten (caller re-canonicalizes)
  bool run(race_report& r, std::vector<prune_decision>& decisions) {
    callgraph g = build_callgraph(m_p);
    auto resolved =
        lockset_analyzer::resolve_thread_accesses(m_p, summarize_functions(m_p, g));

    std::vector<race_warning> kept;
    bool rewrote = false;
    for (auto& w : r.warnings) {
      int unlocked = -1;
      bool eligible = !w.ops.empty() && w.ops.size() >= 2;
      for (size_t i = 0; i < w.ops.size() && eligible; ++i) {
        if (!w.ops[i].lockset.empty()) continue;
        if (unlocked >= 0)
          eligible = false; // two unlocked operations
        else
          unlocked = static_cast<int>(i);
      }
      if (unlocked < 0) eligible = false;
      if (!eligible) {
        decisions.push_back({w.lvalue, "keep", "none",
                             "not a possible initialization pattern"});
        kept.push_back(std::move(w));
        continue;
      }
      // the same source operation must be unlocked in every thread context
      if (mixed_elsewhere(resolved, w.ops[unlocked])) {
        decisions.push_back({w.lvalue, "keep", "none",
                             "operation at " + w.ops[unlocked].site.str() +
                                 " is locked in some other context"});
        kept.push_back(std::move(w));
        continue;
      }
      std::set<std::string> common;
      bool first = true;
      for (size_t i = 0; i < w.ops.size(); ++i) {
        if (static_cast<int>(i) == unlocked) continue;
        std::set<std::string> ls(w.ops[i].lockset.begin(),
                                 w.ops[i].lockset.end());
        if (first) {
          common = std::move(ls);
          first = false;
        } else {
          std::set<std::string> inter;
          for (auto& m : common)
            if (ls.count(m)) inter.insert(m);
          common = std::move(inter);
        }
      }
      if (common.empty()) {
        decisions.push_back({w.lvalue, "keep", "none",
                             "locked operations share no common lock"});
        kept.push_back(std::move(w));
        continue;
      }
      const std::string& chosen = *common.begin();
      stmt* host = find_host(w.ops[unlocked].site);
      if (!host || host->k == stmt::kind::if_ || host->k == stmt::kind::while_ ||
          host->k == stmt::kind::for_) {
        decisions.push_back({w.lvalue, "keep", "none",
                             "unlocked access sits in a branch or loop header; "
                             "cannot wrap it without changing control flow"});
        kept.push_back(std::move(w));
        continue;
      }
      wrap_with_lock(w.ops[unlocked].site, chosen);
      rewrote = true;
      decisions.push_back({w.lvalue, "insert-lock", "possible-init",
                           "guarded " + w.ops[unlocked].site.str() + " with '" +
                               chosen + "'"});
    }
    r.warnings = std::move(kept);
    return rewrote;
  }

private:
  bool mixed_elsewhere(
      const std::map<std::string, std::vector<guarded_access>>& resolved,
      const report_op& op) const {
    for (auto& [entry, accs] : resolved)
      for (auto& a : accs) {
        if (!(a.site == op.site) || a.is_write != op.is_write) continue;
        std::optional<std::string> sub;
        if (a.subscript) sub = expr_string(*a.subscript);
        if (sub != op.subscript) continue;
        if (!a.held.plus.empty()) return true;
      }
    return false;
  }

  stmt* find_host(const site_id& site) {
    function_decl* f = m_p.find_function(site.function);
    if (!f) return nullptr;
    stmt* found = nullptr;
    walk_stmts_mut(f->body, [&](stmt& s) {
      if (s.site == site) found = &s;
    });
    return found;
  }

  void wrap_with_lock(const site_id& site, const std::string& lock_name) {
    function_decl* f = m_p.find_function(site.function);
    wrap_in_block(f->body, site, lock_name);
  }

  bool wrap_in_block(std::vector<stmt>& body, const site_id& site,
                     const std::string& lock_name) {
    for (size_t i = 0; i < body.size(); ++i) {
      if (body[i].site == site) {
        stmt lk;
        lk.k = stmt::kind::lock;
        lk.name = lock_name;
        lk.site = site_id{site.function, -1, 0};
        lk.pos = body[i].pos;
        stmt ul = lk;
        ul.k = stmt::kind::unlock;
        body.insert(body.begin() + static_cast<long>(i) + 1, ul);
        body.insert(body.begin() + static_cast<long>(i), lk);
        return true;
      }
      if (wrap_in_block(body[i].body, site, lock_name)) return true;
      if (wrap_in_block(body[i].else_body, site, lock_name)) return true;
    }
    return false;
  }

  program& m_p;
};

struct prune_init_result {
  std::vector<prune_decision> decisions;
  bool rewrote = false; // locks were inserted, changing the program text
  site_remap remap;     // old site -> new site when rewrote
};

// full prune-init stage: pre-creation ordering pass, then possible-init lock
// insertion; re-canonicalizes and remaps the report when the program changed
inline prune_init_result prune_init_stage(program& p, race_report& r) {
  prune_init_result out;
  prune_precreation_accesses(p, r, out.decisions);
  possible_init_pruner pruner(p);
  out.rewrote = pruner.run(r, out.decisions);
  if (out.rewrote) {
    out.remap = canonicalize_program(p);
    remap_report_sites(r, out.remap);
    r.program_digest = program_digest_hex(p);
  }
  return out;
}

} // namespace racx

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "racx/csp.hpp"
#include "racx/ivs.hpp"
#include "racx/lockset.hpp"
#include "racx/printer.hpp"
#include "racx/range.hpp"
#include "racx/report.hpp"

#include "json.hpp"

namespace racx {

// one pair's fate, with every solver verdict that fed the decision
struct array_prune_decision {
  std::string lvalue;
  int a = 0, b = 0;             // op indices within the warning
  std::string objective;         // representative objective text
  std::vector<std::string> verdicts; // one line per solved combination
  int skipped = 0;               // combinations no execution can realize
  bool dropped = false;
  std::string detail;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["lvalue"] = lvalue;
    j["pair"] = {a, b};
    j["objective"] = objective;
    j["verdicts"] = verdicts;
    j["skipped_combinations"] = skipped;
    j["action"] = dropped ? "drop-pair" : "keep";
    j["detail"] = detail;
    return j;
  }
};

struct prune_array_result {
  int ivs_rewrites = 0;
  std::vector<std::string> ivs_notes;
  std::vector<array_prune_decision> decisions;
  bool rewrote = false;  // program text changed (loop rewrites applied)
  site_remap remap;      // old site -> new site when rewrote
};

class array_pruner {
public:
  array_pruner(program& p, const csp_options& opt) : m_p(p), m_opt(opt) {}

  prune_array_result run(race_report& r) {
    prune_array_result out;
    out.ivs_rewrites = apply_ivs(m_p, &out.ivs_notes);
    if (out.ivs_rewrites > 0) {
      out.rewrote = true;
      out.remap = canonicalize_program(m_p);
      remap_report_sites(r, out.remap);
      r.program_digest = program_digest_hex(m_p);
    }

    m_g = build_callgraph(m_p);
    auto summaries = summarize_functions(m_p, m_g);
    m_resolved = lockset_analyzer::resolve_thread_accesses(m_p, summaries);
    m_rr = std::make_unique<range_resolver>(m_p, m_g);
    for (auto& entry : m_p.thread_entries())
      m_spawns[entry] = m_rr->resolve_spawns(entry);

    for (auto& w : r.warnings) {
      const global_var* gv = m_p.find_global(w.lvalue);
      if (!gv || !gv->is_array) continue;
      std::vector<report_pair> kept;
      for (auto& pr : w.pairs) {
        array_prune_decision d = judge(w, pr);
        if (!d.dropped) kept.push_back(pr);
        out.decisions.push_back(std::move(d));
      }
      w.pairs = std::move(kept);
      refresh_subscripts(w);
    }
    compact_report(r);
    return out;
  }

private:
  struct resolved_op {
    const guarded_access* acc = nullptr;
    access_instance inst;
  };

  std::vector<resolved_op> instances_of(const std::string& entry,
                                        const report_op& op,
                                        const std::string& lvalue) const {
    std::vector<resolved_op> out;
    auto it = m_resolved.find(entry);
    if (it == m_resolved.end()) return out;
    for (auto& acc : it->second) {
      if (!(acc.site == op.site) || acc.is_write != op.is_write ||
          acc.object != lvalue || !acc.subscript)
        continue;
      std::vector<std::string> locks(acc.held.plus.begin(),
                                     acc.held.plus.end());
      if (locks != op.lockset) continue;
      resolved_op ro;
      ro.acc = &acc;
      ro.inst = m_rr->resolve_access(entry, acc.site, *acc.subscript, acc.path);
      out.push_back(std::move(ro));
    }
    return out;
  }

  array_prune_decision judge(const race_warning& w, const report_pair& pr) {
    array_prune_decision d;
    d.lvalue = w.lvalue;
    d.a = pr.a;
    d.b = pr.b;
    bool all_unsat = true;
    bool any_possible = false;
    std::string first_keep;

    for (auto& ep : pr.entry_pairs) {
      auto as = instances_of(ep[0], w.ops[pr.a], w.lvalue);
      auto bs = instances_of(ep[1], w.ops[pr.b], w.lvalue);
      auto& sa = spawn_choices(ep[0]);
      auto& sb = spawn_choices(ep[1]);
      if (as.empty() || bs.empty()) {
        // the report names an instance the current analysis cannot see;
        // never drop on missing information
        all_unsat = false;
        if (first_keep.empty()) first_keep = "instance not re-derivable";
        continue;
      }
      for (auto& ia : as) {
        for (const spawn_instance* s1 : sa) {
          for (auto& ib : bs) {
            for (const spawn_instance* s2 : sb) {
              std::string distinct;
              if (ep[0] == ep[1] && s1 && s2 &&
                  s1->cs_index == s2->cs_index) {
                if (s1->single_shot) {
                  ++d.skipped; // one dynamic thread cannot race itself
                  continue;
                }
                if (s1->loop_distinct) distinct = s1->counter;
              }
              any_possible = true;
              cross_range_csp csp = build_cross_range_csp(
                  ia.inst, s1, ib.inst, s2, distinct);
              if (d.objective.empty()) d.objective = csp.objective_text();
              csp_verdict v = solve_csp(csp, m_opt);
              d.verdicts.push_back(v.str());
              if (!v.is_unsat()) {
                all_unsat = false;
                if (first_keep.empty()) first_keep = v.str();
              }
            }
          }
        }
      }
    }

    if (!any_possible) {
      d.dropped = false;
      d.detail = "no realizable instance pair; kept conservatively";
    } else if (all_unsat) {
      d.dropped = true;
      d.detail = "every realizable combination is UNSAT";
    } else {
      d.dropped = false;
      d.detail = first_keep;
    }
    return d;
  }

  // spawn choices for an entry; main (and entries with no spawn info) get a
  // single unconstrained choice
  std::vector<const spawn_instance*>& spawn_choices(const std::string& entry) {
    auto it = m_choice_cache.find(entry);
    if (it != m_choice_cache.end()) return it->second;
    std::vector<const spawn_instance*> out;
    auto sp = m_spawns.find(entry);
    if (sp == m_spawns.end() || sp->second.empty()) {
      out.push_back(nullptr);
    } else {
      for (auto& si : sp->second) out.push_back(&si);
    }
    return m_choice_cache[entry] = std::move(out);
  }

  // loop rewrites change subscript text; refresh each op whose site now
  // carries exactly one distinct subscript
  void refresh_subscripts(race_warning& w) const {
    for (auto& op : w.ops) {
      std::set<std::string> texts;
      for (auto& [entry, accs] : m_resolved)
        for (auto& acc : accs) {
          if (!(acc.site == op.site) || acc.is_write != op.is_write ||
              acc.object != w.lvalue || !acc.subscript)
            continue;
          std::vector<std::string> locks(acc.held.plus.begin(),
                                         acc.held.plus.end());
          if (locks != op.lockset) continue;
          texts.insert(expr_string(*acc.subscript));
        }
      if (texts.size() == 1) op.subscript = *texts.begin();
    }
  }

  program& m_p;
  csp_options m_opt;
  callgraph m_g;
  std::map<std::string, std::vector<guarded_access>> m_resolved;
  std::unique_ptr<range_resolver> m_rr;
  std::map<std::string, std::vector<spawn_instance>> m_spawns;
  std::map<std::string, std::vector<const spawn_instance*>> m_choice_cache;
};

inline prune_array_result prune_array_stage(program& p, race_report& r,
                                            const csp_options& opt = {}) {
  array_pruner pruner(p, opt);
  return pruner.run(r);
}

} // namespace racx

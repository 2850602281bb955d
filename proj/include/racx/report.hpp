#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "racx/ast.hpp"
#include "racx/lockset.hpp"
#include "racx/printer.hpp"

namespace racx {

// race report: one warning per shared lvalue, holding the competing
// operations (with absolute positive locksets) and the unordered operation
// pairs, each tagged with the thread-entry pairs that produce it

struct report_op {
  site_id site;
  bool is_write = false;
  std::optional<std::string> subscript;
  std::vector<std::string> lockset; // sorted absolute L+

  auto key() const { return std::tie(site.function, site.ordinal, is_write, subscript, lockset); }
  bool operator<(const report_op& o) const { return key() < o.key(); }
  bool operator==(const report_op& o) const { return key() == o.key(); }
};

struct report_pair {
  int a = 0; // indexes into the warning's ops, a <= b
  int b = 0;
  // aligned orientation: [entry running op a, entry running op b]
  std::vector<std::array<std::string, 2>> entry_pairs;
};

struct race_warning {
  std::string lvalue;
  std::vector<report_op> ops;
  std::vector<report_pair> pairs;
};

struct race_report {
  std::string program_digest;
  std::vector<race_warning> warnings;

  int warning_count() const { return static_cast<int>(warnings.size()); }
  int pair_count() const {
    int n = 0;
    for (auto& w : warnings) n += static_cast<int>(w.pairs.size());
    return n;
  }
  int site_count() const {
    std::set<std::string> sites;
    for (auto& w : warnings)
      for (auto& op : w.ops) sites.insert(op.site.str());
    return static_cast<int>(sites.size());
  }
};

// drop operations that no longer participate in any pair, re-indexing pairs;
// drop warnings whose pair list became empty
inline void compact_report(race_report& r) {
  std::vector<race_warning> kept;
  for (auto& w : r.warnings) {
    if (w.pairs.empty()) continue;
    std::set<int> used;
    for (auto& pr : w.pairs) {
      used.insert(pr.a);
      used.insert(pr.b);
    }
    std::vector<int> remap(w.ops.size(), -1);
    std::vector<report_op> ops;
    for (int i : used) {
      remap[i] = static_cast<int>(ops.size());
      ops.push_back(w.ops[i]);
    }
    for (auto& pr : w.pairs) {
      pr.a = remap[pr.a];
      pr.b = remap[pr.b];
    }
    w.ops = std::move(ops);
    kept.push_back(std::move(w));
  }
  r.warnings = std::move(kept);
}

namespace detail {

inline site_id parse_site(const std::string& s) {
  auto hash = s.find('#');
  auto at = s.find('@');
  if (hash == std::string::npos || at == std::string::npos || at < hash)
    throw analysis_error("malformed site id '" + s + "'");
  site_id id;
  id.function = s.substr(0, hash);
  id.ordinal = std::stoi(s.substr(hash + 1, at - hash - 1));
  id.line = std::stoi(s.substr(at + 1));
  return id;
}

} // namespace detail

inline nlohmann::json report_to_json(const race_report& r) {
  nlohmann::json j;
  j["program_digest"] = r.program_digest;
  j["warnings"] = nlohmann::json::array();
  for (auto& w : r.warnings) {
    nlohmann::json jw;
    jw["lvalue"] = w.lvalue;
    jw["operations"] = nlohmann::json::array();
    for (auto& op : w.ops) {
      nlohmann::json jo;
      jo["site"] = op.site.str();
      jo["kind"] = op.is_write ? "write" : "read";
      if (op.subscript)
        jo["subscript"] = *op.subscript;
      else
        jo["subscript"] = nullptr;
      jo["lockset"] = op.lockset;
      jw["operations"].push_back(std::move(jo));
    }
    jw["pairs"] = nlohmann::json::array();
    for (auto& pr : w.pairs) {
      nlohmann::json jp;
      jp["a"] = pr.a;
      jp["b"] = pr.b;
      jp["entry_pairs"] = nlohmann::json::array();
      for (auto& ep : pr.entry_pairs)
        jp["entry_pairs"].push_back({ep[0], ep[1]});
      jw["pairs"].push_back(std::move(jp));
    }
    j["warnings"].push_back(std::move(jw));
  }
  j["counts"] = {{"warnings", r.warning_count()},
                 {"pairs", r.pair_count()},
                 {"sites", r.site_count()}};
  return j;
}

inline race_report report_from_json(const nlohmann::json& j) {
  race_report r;
  r.program_digest = j.at("program_digest").get<std::string>();
  for (auto& jw : j.at("warnings")) {
    race_warning w;
    w.lvalue = jw.at("lvalue").get<std::string>();
    for (auto& jo : jw.at("operations")) {
      report_op op;
      op.site = detail::parse_site(jo.at("site").get<std::string>());
      op.is_write = jo.at("kind").get<std::string>() == "write";
      if (!jo.at("subscript").is_null())
        op.subscript = jo.at("subscript").get<std::string>();
      op.lockset = jo.at("lockset").get<std::vector<std::string>>();
      w.ops.push_back(std::move(op));
    }
    for (auto& jp : jw.at("pairs")) {
      report_pair pr;
      pr.a = jp.at("a").get<int>();
      pr.b = jp.at("b").get<int>();
      for (auto& ep : jp.at("entry_pairs"))
        pr.entry_pairs.push_back(
            {ep.at(0).get<std::string>(), ep.at(1).get<std::string>()});
      w.pairs.push_back(std::move(pr));
    }
    r.warnings.push_back(std::move(w));
  }
  return r;
}

// cross-entry lockset intersection: emit a warning pair for every unordered
// thread-entry pair (self pairs included for spawned entries, {main,main}
// excluded) whose accesses hit the same lvalue with at least one write and
// disjoint absolute positive locksets
inline race_report generate_race_warnings(
    const program& p,
    const std::map<std::string, std::vector<guarded_access>>& resolved) {
  struct pair_acc {
    std::set<std::array<std::string, 2>> entry_pairs;
  };
  // per lvalue: ops and the discovered pairs
  std::map<std::string, std::map<std::pair<report_op, report_op>, pair_acc>> found;

  auto to_op = [](const guarded_access& a) {
    report_op op;
    op.site = a.site;
    op.is_write = a.is_write;
    if (a.subscript) op.subscript = expr_string(*a.subscript);
    op.lockset.assign(a.held.plus.begin(), a.held.plus.end());
    return op;
  };

  auto entries = p.thread_entries();
  for (size_t i = 0; i < entries.size(); ++i) {
    for (size_t k = i; k < entries.size(); ++k) {
      const std::string& e1 = entries[i];
      const std::string& e2 = entries[k];
      if (e1 == "main" && e2 == "main") continue;
      const auto& s1 = resolved.at(e1);
      const auto& s2 = resolved.at(e2);
      for (size_t x = 0; x < s1.size(); ++x) {
        size_t y0 = (e1 == e2) ? x : 0; // unordered within a self pair
        for (size_t y = y0; y < s2.size(); ++y) {
          const guarded_access& a1 = s1[x];
          const guarded_access& a2 = s2[y];
          if (a1.object != a2.object) continue;
          if (!a1.is_write && !a2.is_write) continue;
          bool disjoint = true;
          for (auto& m : a1.held.plus)
            if (a2.held.plus.count(m)) {
              disjoint = false;
              break;
            }
          if (!disjoint) continue;
          report_op oa = to_op(a1);
          report_op ob = to_op(a2);
          std::string ea = e1;
          std::string eb = e2;
          if (ob < oa) {
            std::swap(oa, ob);
            std::swap(ea, eb);
          }
          found[a1.object][{oa, ob}].entry_pairs.insert({ea, eb});
        }
      }
    }
  }

  race_report r;
  r.program_digest = program_digest_hex(p);
  for (auto& [lvalue, pairs] : found) {
    race_warning w;
    w.lvalue = lvalue;
    std::set<report_op> op_set;
    for (auto& [ab, acc] : pairs) {
      op_set.insert(ab.first);
      op_set.insert(ab.second);
    }
    std::vector<report_op> ops(op_set.begin(), op_set.end());
    auto index_of = [&](const report_op& op) {
      return static_cast<int>(std::lower_bound(ops.begin(), ops.end(), op) -
                              ops.begin());
    };
    for (auto& [ab, acc] : pairs) {
      report_pair pr;
      pr.a = index_of(ab.first);
      pr.b = index_of(ab.second);
      pr.entry_pairs.assign(acc.entry_pairs.begin(), acc.entry_pairs.end());
      w.pairs.push_back(std::move(pr));
    }
    w.ops = std::move(ops);
    r.warnings.push_back(std::move(w));
  }
  return r;
}

// full static analysis entry point
inline race_report analyze_program(const program& p) {
  callgraph g = build_callgraph(p);
  auto summaries = summarize_functions(p, g);
  auto resolved = lockset_analyzer::resolve_thread_accesses(p, summaries);
  return generate_race_warnings(p, resolved);
}

// after a rewrite stage renumbered statements, carry report sites over
inline void remap_report_sites(race_report& r, const site_remap& remap) {
  for (auto& w : r.warnings)
    for (auto& op : w.ops) {
      auto it = remap.find({op.site.function, op.site.ordinal});
      if (it == remap.end())
        throw analysis_error("site " + op.site.str() +
                             " vanished during rewrite");
      op.site = it->second;
    }
}

} // namespace racx

#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "racx/csp.hpp"
#include "racx/oracle.hpp"
#include "racx/pipeline.hpp"

namespace racx {

// acceptance suite: eight checks, one verdict line each. The gate passes when
// every criterion matches its documented expected outcome; criterion 4's
// documented outcome includes a deviation from the classical claim it encodes
// (see its detail lines), so its line can read FAIL while the gate still holds.

namespace acceptdet {

struct corpus_entry {
  std::string name; // "micro/lost_update", "kernels/lu"
  bool is_micro = false;
  static_result sr;
};

inline std::vector<corpus_entry> load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<corpus_entry> out;
  for (const char* sub : {"micro", "kernels"}) {
    fs::path d = fs::path(dir) / sub;
    if (!fs::is_directory(d))
      throw analysis_error("corpus directory '" + d.string() + "' is missing");
    std::vector<fs::path> files;
    for (auto& e : fs::directory_iterator(d))
      if (e.path().extension() == ".mtc") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (auto& f : files) {
      corpus_entry ce;
      ce.name = std::string(sub) + "/" + f.stem().string();
      ce.is_micro = std::string(sub) == "micro";
      ce.sr = run_static_pipeline(read_file(f.string()));
      out.push_back(std::move(ce));
    }
  }
  if (out.empty()) throw analysis_error("corpus '" + dir + "' has no programs");
  return out;
}

inline void verdict_line(int n, const char* name, bool ok,
                         const std::string& detail) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << n << ' ' << name << ": "
            << detail << '\n';
}

inline void detail_line(const std::string& s) {
  std::cout << "         " << s << '\n';
}

inline std::string fmt(double v, int prec = 1) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

template <class F> inline double median_run_ms(F&& body, int warmup, int trials) {
  for (int i = 0; i < warmup; ++i) body();
  std::vector<double> ms;
  ms.reserve(static_cast<size_t>(trials));
  for (int i = 0; i < trials; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    body();
    auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(ms.begin(), ms.end());
  return ms[ms.size() / 2];
}

// counters criterion 1 accumulates for criterion 8's log-validation half
struct shared_counters {
  i64 logs_validated = 0;
  std::vector<std::string> validation_failures;
};

// ---- 1: every recording replays to a byte-identical trace ------------------

inline bool criterion_determinism(std::vector<corpus_entry>& corpus,
                                  shared_counters& sc) {
  auto t0 = std::chrono::steady_clock::now();
  i64 records = 0, replays = 0, divergences = 0;
  std::vector<std::string> notes;
  auto flag = [&](const std::string& s) {
    ++divergences;
    if (notes.size() < 4) notes.push_back(s);
  };
  for (auto& e : corpus) {
    compiled_program cp = compile_program(e.sr.prog, &e.sr.table);
    for (int threads : {1, 2, 4, 8}) {
      for (u64 s = 1; s <= 25; ++s) {
        run_result rec;
        try {
          rec = run_record(cp, threads, s);
        } catch (const std::exception& ex) {
          flag(e.name + " t=" + std::to_string(threads) + " s=" +
               std::to_string(s) + ": record failed: " + ex.what());
          continue;
        }
        ++records;
        try {
          validate_log(rec.log);
          ++sc.logs_validated;
        } catch (const std::exception& ex) {
          sc.validation_failures.push_back(e.name + ": " + ex.what());
        }
        std::string want = rec.trace.text();
        for (u64 k = 0; k < 3; ++k) {
          ++replays;
          try {
            run_result rep = run_replay(cp, rec.log, 1000 + s * 3 + k);
            if (rep.trace.text() != want)
              flag(e.name + " t=" + std::to_string(threads) + " s=" +
                   std::to_string(s) + ": trace differs on replay seed " +
                   std::to_string(1000 + s * 3 + k));
          } catch (const std::exception& ex) {
            flag(e.name + " t=" + std::to_string(threads) + " s=" +
                 std::to_string(s) + ": " + ex.what());
          }
        }
      }
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0).count();
  bool ok = corpus.size() >= 10 && divergences == 0 && secs < 300.0;
  verdict_line(1, "value-determinism", ok,
               std::to_string(corpus.size()) +
                   " programs x threads {1,2,4,8} x 25 seeds: " +
                   std::to_string(records) + " recordings, " +
                   std::to_string(replays) + " audited replays, " +
                   std::to_string(divergences) + " divergences, " + fmt(secs) +
                   "s");
  for (auto& n : notes) detail_line(n);
  return ok;
}

// ---- 2 + 3: exhaustive oracle vs the final site set and the pruned pairs ---

inline void criterion_oracle(std::vector<corpus_entry>& corpus, bool& ok2,
                             bool& ok3) {
  i64 micros = 0, races = 0, misses = 0, dropped_total = 0, dropped_racing = 0;
  i64 states = 0;
  std::vector<std::string> miss_notes, drop_notes;
  auto pairs_of = [](const race_report& r) {
    std::set<std::pair<std::string, std::string>> out;
    for (auto& w : r.warnings)
      for (auto& pr : w.pairs) {
        std::string a = w.ops[static_cast<size_t>(pr.a)].site.str();
        std::string b = w.ops[static_cast<size_t>(pr.b)].site.str();
        out.insert(a <= b ? std::make_pair(a, b) : std::make_pair(b, a));
      }
    return out;
  };
  for (auto& e : corpus) {
    if (!e.is_micro) continue;
    ++micros;
    compiled_program cp = compile_program(e.sr.prog, &e.sr.table);
    oracle_result orc;
    try {
      orc = explore_exhaustive(cp, 2, 2000000);
    } catch (const cap_error& ex) {
      ++misses;
      miss_notes.push_back(e.name + ": out of oracle reach: " + ex.what());
      continue;
    }
    states += orc.states_explored;
    std::set<std::string> traced;
    for (auto& row : e.sr.table.rows) traced.insert(row.site.str());
    // raw report carried into the rewritten program's numbering, so pruned
    // pairs and oracle pairs talk about the same sites
    race_report mapped = e.sr.raw;
    if (e.sr.init_res.rewrote) remap_report_sites(mapped, e.sr.init_res.remap);
    if (e.sr.array_res.rewrote)
      remap_report_sites(mapped, e.sr.array_res.remap);
    auto raw_pairs = pairs_of(mapped);
    auto final_pairs = pairs_of(e.sr.final);
    std::set<std::pair<std::string, std::string>> dropped;
    for (auto& p : raw_pairs)
      if (!final_pairs.count(p)) dropped.insert(p);
    dropped_total += static_cast<i64>(dropped.size());
    races += static_cast<i64>(orc.racing_pairs.size());
    for (auto& pr : orc.racing_pairs) {
      if (!traced.count(pr.first) || !traced.count(pr.second)) {
        ++misses;
        if (miss_notes.size() < 4)
          miss_notes.push_back(e.name + ": oracle race " + pr.first + " ~ " +
                               pr.second + " not in the final site set");
      }
      if (dropped.count(pr)) {
        ++dropped_racing;
        if (drop_notes.size() < 4)
          drop_notes.push_back(e.name + ": pruning dropped racing pair " +
                               pr.first + " ~ " + pr.second);
      }
    }
  }
  ok2 = micros >= 15 && misses == 0;
  ok3 = micros >= 15 && dropped_racing == 0;
  verdict_line(2, "completeness", ok2,
               std::to_string(micros) + " micro programs, " +
                   std::to_string(states) + " oracle states, " +
                   std::to_string(races) + " racing site pairs, " +
                   std::to_string(misses) + " uncovered");
  for (auto& n : miss_notes) detail_line(n);
  verdict_line(3, "pruning-safety", ok3,
               std::to_string(dropped_total) +
                   " pairs pruned across the micro corpus, " +
                   std::to_string(dropped_racing) + " oracle-confirmed racing");
  for (auto& n : drop_notes) detail_line(n);
}

// ---- 4: the staggered-band subscript system -------------------------------

inline bool witness_satisfies(const cross_range_csp& csp,
                              const std::map<std::string, i64>& w) {
  for (auto& c : csp.constraints) {
    for (auto& [v, k] : c.a.terms)
      if (!w.count(v)) return false;
    if (!cspdet::rc_holds(c, w)) return false;
  }
  auto l = cspdet::eval_expr(csp.obj_lhs, w);
  auto r = cspdet::eval_expr(csp.obj_rhs, w);
  return l && r && *l == *r;
}

struct worked_example_outcome {
  bool literal = false;    // the criterion exactly as stated
  bool documented = false; // the analyzed outcome this suite commits to
};

inline worked_example_outcome criterion_worked_example() {
  auto bound = [](cross_range_csp& csp, const std::string& v, i64 lo, i64 hi) {
    rc ge;
    ge.a = affine::variable(v);
    ge.a.c = -lo;
    ge.r = rel_kind::ge;
    csp.constraints.push_back(std::move(ge));
    rc le;
    le.a = affine::variable(v);
    le.a.c = -hi;
    le.r = rel_kind::le;
    csp.constraints.push_back(std::move(le));
  };
  auto lower = [](cross_range_csp& csp, const std::string& v, i64 lo) {
    rc ge;
    ge.a = affine::variable(v);
    ge.a.c = -lo;
    ge.r = rel_kind::ge;
    csp.constraints.push_back(std::move(ge));
  };
  auto distinct = [](cross_range_csp& csp, const std::string& a,
                     const std::string& b) {
    rc ne;
    ne.a = affine::variable(a);
    ne.a -= affine::variable(b);
    ne.r = rel_kind::ne;
    csp.constraints.push_back(std::move(ne));
  };
  // j + 10*(2*i + id) for instance n
  auto band_subscript = [](int n) {
    auto v = [&](const char* base) {
      return expr::variable(base + std::to_string(n));
    };
    return expr::bin(
        binop::add, v("j"),
        expr::bin(binop::mul, expr::lit(10),
                  expr::bin(binop::add,
                            expr::bin(binop::mul, expr::lit(2), v("i")),
                            v("id"))));
  };

  cross_range_csp stated;
  stated.obj_lhs = band_subscript(1);
  stated.obj_rhs = band_subscript(2);
  for (int n = 1; n <= 2; ++n) {
    std::string s = std::to_string(n);
    bound(stated, "i" + s, 0, 9);
    bound(stated, "j" + s, 0, 9);
    lower(stated, "id" + s, 0);
  }
  distinct(stated, "id1", "id2");

  cross_range_csp two_thread = stated; // plus id <= 1, i.e. two worker ids
  for (int n = 1; n <= 2; ++n) {
    rc le;
    le.a = affine::variable("id" + std::to_string(n));
    le.a.c = -1;
    le.r = rel_kind::le;
    two_thread.constraints.push_back(std::move(le));
  }

  // before induction-variable substitution the update variable is only known
  // to sit above the thread id, and the disjointness proof must not go through
  cross_range_csp pre_ivs;
  auto step_subscript = [](int n) {
    std::string s = std::to_string(n);
    return expr::bin(binop::add, expr::variable("j" + s),
                     expr::bin(binop::mul, expr::lit(10),
                               expr::variable("step" + s)));
  };
  pre_ivs.obj_lhs = step_subscript(1);
  pre_ivs.obj_rhs = step_subscript(2);
  for (int n = 1; n <= 2; ++n) {
    std::string s = std::to_string(n);
    bound(pre_ivs, "j" + s, 0, 9);
    lower(pre_ivs, "id" + s, 0);
    rc ge; // step >= id
    ge.a = affine::variable("step" + s);
    ge.a -= affine::variable("id" + s);
    ge.r = rel_kind::ge;
    pre_ivs.constraints.push_back(std::move(ge));
  }
  distinct(pre_ivs, "id1", "id2");

  csp_verdict vs = solve_csp(stated);
  csp_verdict vt = solve_csp(two_thread);
  csp_verdict vp = solve_csp(pre_ivs);

  worked_example_outcome out;
  out.literal = vs.is_unsat() && !vp.is_unsat();
  bool witness_ok = vs.is_sat() && witness_satisfies(stated, vs.witness);
  out.documented =
      out.literal || (witness_ok && vt.is_unsat() && !vp.is_unsat());

  verdict_line(4, "worked-example", out.literal,
               "objective " + stated.objective_text() +
                   " expected UNSAT, solver returned " + vs.str());
  if (!out.literal && vs.is_sat()) {
    auto lv = cspdet::eval_expr(stated.obj_lhs, vs.witness);
    detail_line("the stated range set bounds ids only from below; two ids of "
                "equal parity collide:");
    detail_line("  witness re-evaluates " +
                std::string(witness_ok ? "true" : "FALSE") +
                ", both subscripts = " + std::to_string(lv ? *lv : 0) +
                " - UNSAT is unattainable as stated");
    detail_line("with the two-thread bound id<=1 added: " + vt.str());
    detail_line("  (distinct ids then differ in parity, so the 10*(2*i+id) "
                "halves differ by >= 10 > 9 >= |j1-j2|)");
  }
  detail_line("pre-IVS form (step >= id, id >= 0): " + vp.str() +
              " - correctly not provably disjoint");
  return out;
}

// ---- 5: solver verdicts against brute force on boxed systems ---------------

inline bool brute_force_sat(const cross_range_csp& csp,
                            const std::vector<std::string>& vars,
                            const std::map<std::string, std::pair<i64, i64>>& box) {
  std::map<std::string, i64> env;
  std::function<bool(size_t)> go = [&](size_t at) -> bool {
    if (at == vars.size()) {
      for (auto& c : csp.constraints)
        if (!cspdet::rc_holds(c, env)) return false;
      auto l = cspdet::eval_expr(csp.obj_lhs, env);
      auto r = cspdet::eval_expr(csp.obj_rhs, env);
      return l && r && *l == *r;
    }
    auto [lo, hi] = box.at(vars[at]);
    for (i64 x = lo; x <= hi; ++x) {
      env[vars[at]] = x;
      if (go(at + 1)) return true;
    }
    return false;
  };
  return go(0);
}

inline bool criterion_solver_equivalence() {
  std::mt19937_64 rng(1906);
  auto pick = [&](i64 n) { return static_cast<i64>(rng() % static_cast<u64>(n)); };
  static const char* pool[4] = {"a", "b", "c", "d"};
  i64 mismatches = 0, bad_witness = 0, sat_cases = 0, unsat_cases = 0;
  std::vector<std::string> notes;
  for (int t = 0; t < 200; ++t) {
    int nv = static_cast<int>(2 + pick(3));
    std::vector<std::string> vars(pool, pool + nv);
    std::map<std::string, std::pair<i64, i64>> box;
    cross_range_csp csp;
    for (auto& v : vars) {
      i64 lo = pick(9);
      i64 hi = lo + pick(9 - lo); // interval inside [0,8]
      box[v] = {lo, hi};
      rc ge;
      ge.a = affine::variable(v);
      ge.a.c = -lo;
      ge.r = rel_kind::ge;
      csp.constraints.push_back(std::move(ge));
      rc le;
      le.a = affine::variable(v);
      le.a.c = -hi;
      le.r = rel_kind::le;
      csp.constraints.push_back(std::move(le));
    }
    i64 extra = pick(3);
    for (i64 x = 0; x < extra; ++x) {
      rc c;
      int n1 = static_cast<int>(pick(nv));
      int n2 = static_cast<int>(pick(nv));
      c.a.add_term(vars[static_cast<size_t>(n1)], 1 + pick(3));
      if (n2 != n1) c.a.add_term(vars[static_cast<size_t>(n2)], -(1 + pick(3)));
      c.a.c = pick(11) - 5;
      c.r = static_cast<rel_kind>(pick(4));
      csp.constraints.push_back(std::move(c));
    }
    auto rand_side = [&]() {
      expr e = expr::lit(pick(6));
      for (auto& v : vars) {
        i64 k = pick(7) - 3;
        if (k == 0) continue;
        e = expr::bin(binop::add, std::move(e),
                      expr::bin(binop::mul, expr::lit(k), expr::variable(v)));
      }
      return e;
    };
    csp.obj_lhs = rand_side();
    csp.obj_rhs = rand_side();

    bool bf = brute_force_sat(csp, vars, box);
    csp_verdict v = solve_csp(csp);
    if ((v.is_sat() != bf) || (!v.is_sat() && !v.is_unsat())) {
      ++mismatches;
      if (notes.size() < 4)
        notes.push_back("case " + std::to_string(t) + ": brute force says " +
                        (bf ? "SAT" : "UNSAT") + ", solver says " + v.str());
      continue;
    }
    if (v.is_sat()) {
      ++sat_cases;
      if (!witness_satisfies(csp, v.witness)) {
        ++bad_witness;
        if (notes.size() < 4)
          notes.push_back("case " + std::to_string(t) +
                          ": witness fails re-evaluation: " + v.str());
      }
    } else {
      ++unsat_cases;
    }
  }
  bool ok = mismatches == 0 && bad_witness == 0;
  verdict_line(5, "solver-equivalence", ok,
               "200 random boxed systems: " + std::to_string(sat_cases) +
                   " SAT / " + std::to_string(unsat_cases) + " UNSAT, " +
                   std::to_string(mismatches) + " verdict mismatches, " +
                   std::to_string(bad_witness) + " bad witnesses");
  for (auto& n : notes) detail_line(n);
  return ok;
}

// ---- 6 + 7 share the per-kernel builds -------------------------------------

struct kernel_builds {
  compiled_program base;   // canonical program, no instrumentation
  compiled_program before; // instrumented from the unpruned report
  compiled_program after;  // instrumented from the final report
  i64 raw_sites = 0, final_sites = 0;
};

inline kernel_builds build_kernel(const corpus_entry& e) {
  kernel_builds kb;
  program bp = e.sr.raw_prog;
  site_table bt = instrument_program(bp, e.sr.raw);
  kb.base = compile_program(e.sr.raw_prog);
  kb.before = compile_program(bp, &bt);
  kb.after = compile_program(e.sr.prog, &e.sr.table);
  kb.raw_sites = e.sr.raw.site_count();
  kb.final_sites = e.sr.final.site_count();
  return kb;
}

inline std::string stem_of(const std::string& name) {
  auto slash = name.find('/');
  return slash == std::string::npos ? name : name.substr(slash + 1);
}

inline bool criterion_efficacy(std::vector<corpus_entry>& corpus,
                               std::map<std::string, kernel_builds>& builds,
                               const std::string& golden_path) {
  struct row {
    i64 raw_sites = 0, final_sites = 0, before = 0, after = 0;
  };
  std::map<std::string, row> measured;
  std::vector<std::string> notes;
  bool thresholds_ok = true;
  for (auto& e : corpus) {
    if (e.is_micro) continue;
    std::string k = stem_of(e.name);
    kernel_builds& kb = builds[k];
    row r;
    r.raw_sites = kb.raw_sites;
    r.final_sites = kb.final_sites;
    r.before = static_cast<i64>(run_record(kb.before, 4, 1).log.events.size());
    r.after = static_cast<i64>(run_record(kb.after, 4, 1).log.events.size());
    measured[k] = r;
  }
  for (const char* k : {"lu", "fft", "ocean"}) {
    auto it = measured.find(k);
    if (it == measured.end()) {
      thresholds_ok = false;
      notes.push_back(std::string("kernel '") + k + "' missing from corpus");
      continue;
    }
    row& r = it->second;
    if (r.raw_sites <= 0 ||
        (r.raw_sites - r.final_sites) * 100 < 40 * r.raw_sites) {
      thresholds_ok = false;
      notes.push_back(std::string(k) + ": warning-site reduction below 40% (" +
                      std::to_string(r.raw_sites) + " -> " +
                      std::to_string(r.final_sites) + ")");
    }
  }
  if (measured.count("lu")) {
    row& r = measured["lu"];
    if (r.before < 10 * r.after || r.before == 0) {
      thresholds_ok = false;
      notes.push_back("lu: dynamic event reduction below 10x (" +
                      std::to_string(r.before) + " -> " +
                      std::to_string(r.after) + ")");
    }
  }

  // regression goldens: first run freezes the measured counts, later runs
  // must reproduce them exactly
  namespace fs = std::filesystem;
  bool golden_ok = true;
  std::string golden_note;
  if (fs::exists(golden_path)) {
    nlohmann::json g = nlohmann::json::parse(read_file(golden_path));
    for (auto& [k, jr] : g.at("kernels").items()) {
      auto it = measured.find(k);
      if (it == measured.end()) {
        golden_ok = false;
        notes.push_back("golden kernel '" + k + "' missing from corpus");
        continue;
      }
      row& r = it->second;
      if (jr.at("raw_sites") != r.raw_sites ||
          jr.at("final_sites") != r.final_sites ||
          jr.at("events_before") != r.before ||
          jr.at("events_after") != r.after) {
        golden_ok = false;
        notes.push_back(k + ": counts drifted from " + golden_path);
      }
    }
    for (auto& [k, r] : measured)
      if (!g.at("kernels").count(k)) {
        golden_ok = false;
        notes.push_back("kernel '" + k + "' not frozen in " + golden_path);
      }
    golden_note = "goldens match " + golden_path;
  } else {
    nlohmann::json g;
    g["threads"] = 4;
    g["seed"] = 1;
    g["kernels"] = nlohmann::json::object();
    for (auto& [k, r] : measured)
      g["kernels"][k] = {{"raw_sites", r.raw_sites},
                         {"final_sites", r.final_sites},
                         {"events_before", r.before},
                         {"events_after", r.after}};
    fs::create_directories(fs::path(golden_path).parent_path());
    write_file(golden_path, g.dump(2) + "\n");
    golden_note = "frozen counts into " + golden_path;
  }

  bool ok = thresholds_ok && golden_ok && !measured.empty();
  std::ostringstream os;
  for (auto& [k, r] : measured) {
    if (os.tellp() > 0) os << ", ";
    os << k << " sites " << r.raw_sites << "->" << r.final_sites
       << " events " << r.before << "->" << r.after;
  }
  verdict_line(6, "pruning-efficacy", ok, os.str());
  detail_line(golden_note);
  for (auto& n : notes) detail_line(n);
  return ok;
}

inline bool criterion_overhead(std::vector<corpus_entry>& corpus,
                               std::map<std::string, kernel_builds>& builds) {
  // exact count property: a recording holds one event per sync op plus one
  // per traced access of the equivalent free run
  i64 checked = 0, unequal = 0;
  std::vector<std::string> notes;
  for (auto& e : corpus) {
    compiled_program cp = compile_program(e.sr.prog, &e.sr.table);
    std::vector<int> tset = e.is_micro ? std::vector<int>{2}
                                       : std::vector<int>{2, 4};
    for (int t : tset) {
      ++checked;
      event_counts free = run_free(cp, t, 9).counts;
      run_result rec = run_record(cp, t, 9);
      i64 want = free.sync_events + free.race_events;
      if (static_cast<i64>(rec.log.events.size()) != want) {
        ++unequal;
        if (notes.size() < 4)
          notes.push_back(e.name + " t=" + std::to_string(t) + ": log has " +
                          std::to_string(rec.log.events.size()) +
                          " events, free run counted " + std::to_string(want));
      }
    }
  }

  // pruning must pay for itself: per kernel, record over the pruned report
  // is strictly cheaper than over the unpruned one
  bool ordered = true;
  std::vector<std::string> timings;
  for (auto& [k, kb] : builds) {
    double free_ms = median_run_ms([&] { run_free(kb.base, 4, 3); }, 2, 9);
    double before_ms = median_run_ms([&] { run_record(kb.before, 4, 3); }, 2, 9);
    double after_ms = median_run_ms([&] { run_record(kb.after, 4, 3); }, 2, 9);
    if (!(after_ms < before_ms)) {
      ordered = false;
      notes.push_back(k + ": record after pruning (" + fmt(after_ms, 2) +
                      "ms) not below before (" + fmt(before_ms, 2) + "ms)");
    }
    timings.push_back(k + " free " + fmt(free_ms, 2) + "ms, record before " +
                      fmt(before_ms, 2) + "ms, after " + fmt(after_ms, 2) +
                      "ms");
  }
  bool ok = unequal == 0 && ordered && !builds.empty();
  verdict_line(7, "record-overhead", ok,
               std::to_string(checked) + " free/record count checks, " +
                   std::to_string(unequal) +
                   " unequal; record-after < record-before on " +
                   std::to_string(builds.size()) + " kernels: " +
                   (ordered ? "yes" : "NO"));
  for (auto& t : timings) detail_line(t);
  for (auto& n : notes) detail_line(n);
  return ok;
}

// ---- 8: tampered logs are rejected or legally enforced, never silent -------

enum class mutation_outcome { validator_reject, diverged, replayed };

inline mutation_outcome run_mutated(const compiled_program& cp,
                                    const replay_log& log, std::string& why,
                                    std::string* trace_out = nullptr) {
  replay_log reparsed = parse_log(log.text()); // tamper on the on-disk form
  try {
    validate_log(reparsed);
  } catch (const std::exception& ex) {
    why = ex.what();
    return mutation_outcome::validator_reject;
  }
  try {
    run_result r = run_replay(cp, reparsed, 5);
    if (trace_out) *trace_out = r.trace.text();
    why = "replayed cleanly";
    return mutation_outcome::replayed;
  } catch (const std::exception& ex) {
    why = ex.what();
    return mutation_outcome::diverged;
  }
}

inline bool criterion_log_integrity(std::vector<corpus_entry>& corpus,
                                    shared_counters& sc) {
  std::vector<std::string> notes;
  bool mutations_ok = true;
  corpus_entry* host = nullptr;
  for (auto& e : corpus)
    if (e.name == "micro/two_locks") host = &e;
  if (!host) {
    verdict_line(8, "log-integrity", false,
                 "mutation host micro/two_locks missing from corpus");
    return false;
  }
  compiled_program cp = compile_program(host->sr.prog, &host->sr.table);
  run_result rec = run_record(cp, 2, 7);

  // a) swapped timestamps break the dense per-kind clock
  {
    replay_log m = rec.log;
    std::vector<size_t> sync_at;
    for (size_t i = 0; i < m.events.size(); ++i)
      if (m.events[i].kind == log_kind::sync) sync_at.push_back(i);
    if (sync_at.size() < 2) {
      mutations_ok = false;
      notes.push_back("host log has fewer than two sync events");
    } else {
      std::swap(m.events[sync_at[0]].ts, m.events[sync_at[1]].ts);
      std::string why;
      mutation_outcome out = run_mutated(cp, m, why);
      bool good = out == mutation_outcome::validator_reject;
      if (!good) mutations_ok = false;
      notes.push_back(std::string("timestamp swap: ") +
                      (good ? "rejected by the validator (" : "NOT REJECTED (") +
                      why + ")");
    }
  }
  // b) an altered access value must never replay silently
  {
    replay_log m = rec.log;
    bool done = false;
    for (auto& ev : m.events)
      if (!done && ev.kind == log_kind::race) {
        ev.value += 1;
        done = true;
      }
    if (!done) {
      mutations_ok = false;
      notes.push_back("host log has no access events");
    } else {
      std::string why;
      mutation_outcome out = run_mutated(cp, m, why);
      bool good = out == mutation_outcome::diverged;
      if (!good) mutations_ok = false;
      notes.push_back(std::string("value alteration: ") +
                      (good ? "divergence (" : "SILENTLY ACCEPTED (") + why +
                      ")");
    }
  }
  // c) swapping who performs two accesses (timestamps kept) either fails
  // validation, diverges, or deterministically enforces the altered order
  {
    replay_log m = rec.log;
    size_t i1 = m.events.size(), i2 = m.events.size();
    for (size_t i = 0; i < m.events.size() && i2 == m.events.size(); ++i) {
      if (m.events[i].kind != log_kind::race) continue;
      if (i1 == m.events.size()) {
        i1 = i;
        continue;
      }
      if (m.events[i].tid != m.events[i1].tid) i2 = i;
    }
    if (i2 == m.events.size()) {
      mutations_ok = false;
      notes.push_back("host log has no cross-thread access pair");
    } else {
      log_event& a = m.events[i1];
      log_event& b = m.events[i2];
      std::swap(a.tid, b.tid);
      std::swap(a.icount, b.icount);
      std::swap(a.site, b.site);
      std::swap(a.value, b.value);
      std::string why, trace1;
      mutation_outcome out = run_mutated(cp, m, why, &trace1);
      bool good = true;
      std::string label;
      if (out == mutation_outcome::validator_reject)
        label = "rejected by the validator (" + why + ")";
      else if (out == mutation_outcome::diverged)
        label = "divergence (" + why + ")";
      else {
        std::string why2, trace2;
        mutation_outcome again = run_mutated(cp, m, why2, &trace2);
        good = again == mutation_outcome::replayed && trace2 == trace1;
        label = good ? "replayed to a legal enforced order, deterministically"
                     : "replayed but NOT deterministic";
      }
      if (!good) mutations_ok = false;
      notes.push_back("cross-thread field swap: " + label);
    }
  }

  bool ok = mutations_ok && sc.validation_failures.empty() &&
            sc.logs_validated > 0;
  verdict_line(8, "log-integrity", ok,
               std::to_string(sc.logs_validated) +
                   " recorded logs validated gap-free and monotone, " +
                   std::to_string(sc.validation_failures.size()) +
                   " failures; 3 mutations checked");
  for (auto& n : notes) detail_line(n);
  for (size_t i = 0; i < sc.validation_failures.size() && i < 4; ++i)
    detail_line(sc.validation_failures[i]);
  return ok;
}

} // namespace acceptdet

inline bool run_acceptance(
    const std::string& corpus_dir,
    const std::string& golden_path = "tests/golden/kernel_counts.json") {
  using namespace acceptdet;
  std::vector<corpus_entry> corpus = load_corpus(corpus_dir);

  shared_counters sc;
  bool c1 = criterion_determinism(corpus, sc);
  bool c2 = false, c3 = false;
  criterion_oracle(corpus, c2, c3);
  worked_example_outcome c4 = criterion_worked_example();
  bool c5 = criterion_solver_equivalence();

  std::map<std::string, kernel_builds> builds;
  for (auto& e : corpus)
    if (!e.is_micro) builds[stem_of(e.name)] = build_kernel(e);
  bool c6 = criterion_efficacy(corpus, builds, golden_path);
  bool c7 = criterion_overhead(corpus, builds);
  bool c8 = criterion_log_integrity(corpus, sc);

  int green = c1 + c2 + c3 + c4.literal + c5 + c6 + c7 + c8;
  bool gate = c1 && c2 && c3 && c4.documented && c5 && c6 && c7 && c8;
  std::cout << green << "/8 criteria green\n";
  if (gate && !c4.literal)
    std::cout << "gate: PASS - criterion 4 is red exactly as documented (the "
                 "stated range set is satisfiable; the two-thread form is "
                 "UNSAT and the pre-IVS form is not UNSAT)\n";
  else
    std::cout << "gate: " << (gate ? "PASS" : "FAIL") << "\n";
  return gate;
}

} // namespace racx

#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "racx/bytecode.hpp"
#include "racx/csp.hpp"
#include "racx/instrument.hpp"
#include "racx/log.hpp"
#include "racx/parser.hpp"
#include "racx/printer.hpp"
#include "racx/prune_array.hpp"
#include "racx/prune_init.hpp"
#include "racx/report.hpp"
#include "racx/runtime.hpp"
#include "racx/validate.hpp"

namespace racx {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw analysis_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw analysis_error("cannot write '" + path + "'");
  out << content;
}

inline program load_program(const std::string& source) {
  program p = parse_program(source);
  validate_program(p);
  canonicalize_program(p);
  return p;
}

// ---- the whole static side, reusable by the CLI, bench and the tests ----

struct static_result {
  program raw_prog;  // canonical input
  program prog;      // after both pruning rewrites, trace-annotated
  race_report raw;   // analyze output
  race_report refined; // after prune-init
  race_report final;   // after prune-array
  prune_init_result init_res;
  prune_array_result array_res;
  site_table table;
};

inline static_result run_static_pipeline(const std::string& source,
                                         const csp_options& opt = {}) {
  static_result out;
  out.prog = load_program(source);
  out.raw_prog = out.prog;
  out.raw = analyze_program(out.prog);

  race_report r = out.raw;
  out.init_res = prune_init_stage(out.prog, r);
  out.refined = r;

  out.array_res = prune_array_stage(out.prog, r, opt);
  out.final = r;

  out.table = instrument_program(out.prog, out.final);
  return out;
}

// ---- pipeline orchestration --------------------------------------------

struct pipeline_config {
  std::string input_path;
  int threads = 2;
  u64 seed = 1;
  csp_options solver; // id bound + budget
  std::string out_dir = "out";
  std::vector<std::string> stages; // prefix of the canonical order; empty = all
};

inline const std::vector<std::string>& pipeline_stage_order() {
  static const std::vector<std::string> order = {
      "analyze", "prune-init", "prune-array", "instrument", "record", "replay"};
  return order;
}

struct pipeline_result {
  std::string summary;
  std::vector<std::string> artifacts;
  event_counts record_counts;
};

namespace pipedet {

inline std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

class summary_table {
public:
  void row(const std::string& stage, const race_report& r) {
    m_rows.push_back({stage, r.warning_count(), r.pair_count(), r.site_count()});
  }
  void note(const std::string& line) { m_notes.push_back(line); }

  std::string render() const {
    std::ostringstream os;
    os << "stage         warnings     pairs     sites\n";
    for (auto& r : m_rows) {
      os << r.stage;
      for (size_t i = r.stage.size(); i < 12; ++i) os << ' ';
      os.width(10);
      os << r.warnings;
      os.width(10);
      os << r.pairs;
      os.width(10);
      os << r.sites;
      os << '\n';
    }
    for (auto& n : m_notes) os << n << '\n';
    return os.str();
  }

private:
  struct srow {
    std::string stage;
    int warnings, pairs, sites;
  };
  std::vector<srow> m_rows;
  std::vector<std::string> m_notes;
};

} // namespace pipedet

inline pipeline_result pipeline_run(const pipeline_config& cfg) {
  namespace fs = std::filesystem;
  const auto& order = pipeline_stage_order();
  std::vector<std::string> stages = cfg.stages.empty() ? order : cfg.stages;
  for (size_t i = 0; i < stages.size(); ++i)
    if (i >= order.size() || stages[i] != order[i])
      throw analysis_error("stages must form a prefix of analyze, prune-init, "
                           "prune-array, instrument, record, replay");
  auto selected = [&](const std::string& s) {
    for (auto& x : stages)
      if (x == s) return true;
    return false;
  };

  pipeline_result res;
  fs::create_directories(cfg.out_dir);
  auto emit = [&](const std::string& name, const std::string& content) {
    std::string path = (fs::path(cfg.out_dir) / name).string();
    write_file(path, content);
    res.artifacts.push_back(path);
  };

  pipedet::summary_table table;
  std::string current; // active stage, for error reporting
  try {
    program p = load_program(read_file(cfg.input_path));
    emit("canonical.mtc", print_program(p));

    current = "analyze";
    race_report r = analyze_program(p);
    emit("report.json", pipedet::json_text(report_to_json(r)));
    table.row("analyze", r);

    if (selected("prune-init")) {
      current = "prune-init";
      prune_init_result ir = prune_init_stage(p, r);
      nlohmann::json ledger;
      ledger["decisions"] = nlohmann::json::array();
      for (auto& d : ir.decisions) ledger["decisions"].push_back(d.to_json());
      emit("init_ledger.json", pipedet::json_text(ledger));
      emit("refined.json", pipedet::json_text(report_to_json(r)));
      if (ir.rewrote) emit("prog_refined.mtc", print_program(p));
      table.row("prune-init", r);
    }

    if (selected("prune-array")) {
      current = "prune-array";
      prune_array_result ar = prune_array_stage(p, r, cfg.solver);
      nlohmann::json ledger;
      ledger["ivs_rewrites"] = ar.ivs_rewrites;
      ledger["ivs_notes"] = ar.ivs_notes;
      ledger["decisions"] = nlohmann::json::array();
      for (auto& d : ar.decisions) ledger["decisions"].push_back(d.to_json());
      emit("array_ledger.json", pipedet::json_text(ledger));
      emit("final.json", pipedet::json_text(report_to_json(r)));
      if (ar.rewrote) emit("prog_final.mtc", print_program(p));
      table.row("prune-array", r);
    }

    site_table sites;
    if (selected("instrument")) {
      current = "instrument";
      sites = instrument_program(p, r);
      emit("prog.imtc", print_program(p));
      emit("sites.json", pipedet::json_text(sites.to_json()));
      table.note("instrument: " + std::to_string(sites.rows.size()) +
                 " traced operations across " +
                 std::to_string(r.site_count()) + " sites");
    }

    run_result rec;
    if (selected("record")) {
      current = "record";
      compiled_program cp = compile_program(p, &sites);
      rec = run_record(cp, cfg.threads, cfg.seed);
      emit("run.log", rec.log.text());
      emit("trace_record.txt", rec.trace.text());
      res.record_counts = rec.counts;
      table.note("record: sync=" + std::to_string(rec.counts.sync_events) +
                 " traced=" + std::to_string(rec.counts.race_events) +
                 " shared=" + std::to_string(rec.counts.shared_accesses) +
                 " log_events=" + std::to_string(rec.log.events.size()));
    }

    if (selected("replay")) {
      current = "replay";
      compiled_program cp = compile_program(p, &sites);
      run_result rep = run_replay(cp, rec.log, cfg.seed + 1);
      emit("trace_replay.txt", rep.trace.text());
      bool same = rep.trace.text() == rec.trace.text();
      table.note(std::string("replay: ") +
                 (same ? "trace matches the recording"
                       : "TRACE DIFFERS FROM THE RECORDING"));
      if (!same)
        throw divergence_error(
            "replay trace differs from the recorded trace");
    }
  } catch (const std::exception& e) {
    std::ostringstream os;
    os << "pipeline failed in stage '" << current << "': " << e.what()
       << "\nartifacts written so far:";
    for (auto& a : res.artifacts) os << "\n  " << a;
    throw analysis_error(os.str());
  }

  res.summary = table.render();
  emit("summary.txt", res.summary);
  return res;
}

// ---- bench ---------------------------------------------------------------

struct bench_result {
  int trials = 0;
  double free_ms = 0;          // uninstrumented baseline
  double record_after_ms = 0;  // instrumented from the pruned report
  double record_before_ms = 0; // instrumented from the raw report
  double replay_ms = 0;        // replaying the after-pruning log
  event_counts free_counts;
  event_counts after_counts;
  event_counts before_counts;
  i64 log_events_after = 0;
  i64 log_events_before = 0;

  std::string render() const {
    std::ostringstream os;
    auto pct = [&](double a, double b) {
      return b <= 0 ? 0.0 : (a - b) / b * 100.0;
    };
    os << "trials measured: " << trials << "\n"
       << "free (uninstrumented):      " << free_ms << " ms\n"
       << "record (raw report):        " << record_before_ms << " ms  (+"
       << pct(record_before_ms, free_ms) << "% vs free, "
       << log_events_before << " log events)\n"
       << "record (pruned report):     " << record_after_ms << " ms  (+"
       << pct(record_after_ms, free_ms) << "% vs free, " << log_events_after
       << " log events)\n"
       << "replay (pruned recording):  " << replay_ms << " ms\n";
    return os.str();
  }
};

inline bench_result bench_program(const std::string& source, int threads,
                                  u64 seed, int trials, int warmup,
                                  const csp_options& opt = {}) {
  if (trials < 1) throw analysis_error("bench needs at least 1 trial");
  static_result sr = run_static_pipeline(source, opt);

  // raw-report instrumentation on a fresh copy of the canonical program
  program before_prog = sr.raw_prog;
  race_report raw = sr.raw;
  site_table before_table = instrument_program(before_prog, raw);

  compiled_program cp_base = compile_program(sr.raw_prog);
  compiled_program cp_before = compile_program(before_prog, &before_table);
  compiled_program cp_after = compile_program(sr.prog, &sr.table);

  bench_result out;
  out.trials = trials;

  auto timed = [&](auto&& fn, double& acc_ms) {
    for (int i = 0; i < warmup; ++i) fn();
    for (int i = 0; i < trials; ++i) {
      auto t0 = std::chrono::steady_clock::now();
      fn();
      auto t1 = std::chrono::steady_clock::now();
      acc_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    acc_ms /= trials;
  };

  timed([&] { out.free_counts = run_free(cp_base, threads, seed).counts; },
        out.free_ms);
  timed(
      [&] {
        auto r = run_record(cp_before, threads, seed);
        out.before_counts = r.counts;
        out.log_events_before = static_cast<i64>(r.log.events.size());
      },
      out.record_before_ms);
  replay_log after_log;
  timed(
      [&] {
        auto r = run_record(cp_after, threads, seed);
        out.after_counts = r.counts;
        out.log_events_after = static_cast<i64>(r.log.events.size());
        after_log = std::move(r.log);
      },
      out.record_after_ms);
  timed([&] { run_replay(cp_after, after_log, seed + 1); }, out.replay_ms);
  return out;
}

} // namespace racx

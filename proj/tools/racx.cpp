// racx: static race analysis, pruning, instrumentation, deterministic
// record/replay, and the exhaustive scheduling oracle for MTC programs
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "racx/acceptance.hpp"
#include "racx/bytecode.hpp"
#include "racx/cfg.hpp"
#include "racx/callgraph.hpp"
#include "racx/dominators.hpp"
#include "racx/instrument.hpp"
#include "racx/log.hpp"
#include "racx/oracle.hpp"
#include "racx/pipeline.hpp"
#include "racx/printer.hpp"
#include "racx/runtime.hpp"

namespace fs = std::filesystem;
using namespace racx;

namespace {

site_table load_site_table(const std::string& path) {
  return site_table::from_json(nlohmann::json::parse(read_file(path)));
}

// sites.json next to the program unless overridden
std::string default_sites(const std::string& prog_path,
                          const std::string& given) {
  if (!given.empty()) return given;
  return (fs::path(prog_path).parent_path() / "sites.json").string();
}

compiled_program compile_for_run(const std::string& prog_path,
                                 const std::string& sites_path_arg) {
  program p = load_program(read_file(prog_path));
  bool annotated = false;
  for (auto& f : p.functions)
    walk_stmts(f.body, [&](const stmt& s) {
      if (!s.trace_sites.empty()) annotated = true;
    });
  std::string sites_path = default_sites(prog_path, sites_path_arg);
  if (annotated || fs::exists(sites_path)) {
    site_table table = load_site_table(sites_path);
    return compile_program(p, &table);
  }
  return compile_program(p);
}

void print_counts(const char* stage, const race_report& r) {
  std::cout << stage << ": warnings=" << r.warning_count()
            << " pairs=" << r.pair_count() << " sites=" << r.site_count()
            << "\n";
}

int dispatch(int argc, char** argv) {
  CLI::App app{"static race detection with deterministic record/replay"};
  app.require_subcommand(1);

  // ---- frontend dump ----
  auto* front = app.add_subcommand("frontend", "frontend inspection");
  auto* dump = front->add_subcommand("dump", "dump a frontend view");
  std::string dump_file;
  bool d_ast = false, d_cfg = false, d_cg = false, d_dom = false;
  dump->add_option("file", dump_file)->required();
  dump->add_flag("--ast", d_ast, "abstract syntax tree");
  dump->add_flag("--cfg", d_cfg, "per-function control-flow graphs");
  dump->add_flag("--callgraph", d_cg, "call graph with spawn edges");
  dump->add_flag("--dom", d_dom, "dominator sets");
  front->require_subcommand(1);

  // ---- analysis stages ----
  std::string in_path, out_path, ledger_path, rewritten_path;
  i64 id_bound = 64, budget = 10000000;

  auto* analyze = app.add_subcommand("analyze", "lockset race analysis");
  analyze->add_option("file", in_path)->required();
  analyze->add_option("-o,--out", out_path, "report path (report.json)");

  auto* pinit = app.add_subcommand("prune-init",
                                   "drop initialization false positives");
  pinit->add_option("file", in_path)->required();
  pinit->add_option("-o,--out", out_path, "refined report path");
  pinit->add_option("--ledger", ledger_path, "decision ledger path");
  pinit->add_option("--emit-rewritten", rewritten_path,
                    "write the lock-inserted program");

  auto* parray = app.add_subcommand("prune-array",
                                    "drop disjoint array-subscript pairs");
  parray->add_option("file", in_path)->required();
  parray->add_option("-o,--out", out_path, "final report path");
  parray->add_option("--ledger", ledger_path, "decision ledger path");
  parray->add_option("--emit-rewritten", rewritten_path,
                     "write the induction-substituted program");
  parray->add_option("--id-bound", id_bound, "thread-id scan bound");
  parray->add_option("--budget", budget, "solver assignment budget");

  std::string imtc_path, sites_path;
  auto* instr = app.add_subcommand("instrument",
                                   "annotate surviving warning sites");
  instr->add_option("file", in_path)->required();
  instr->add_option("--imtc", imtc_path, "instrumented program path");
  instr->add_option("--site-table", sites_path, "site table path");
  instr->add_option("--id-bound", id_bound, "thread-id scan bound");
  instr->add_option("--budget", budget, "solver assignment budget");

  // ---- runtime ----
  int threads = 2;
  u64 seed = 1;
  std::string log_path = "run.log", trace_path;

  auto* record = app.add_subcommand("record", "run and log the schedule");
  record->add_option("file", in_path)->required();
  record->add_option("--threads", threads, "value passed to main / nthreads");
  record->add_option("--seed", seed, "scheduler seed");
  record->add_option("-o,--out", log_path, "log path");
  record->add_option("--sites", sites_path, "site table (default: sibling)");
  record->add_option("--trace", trace_path, "write the execution trace here");

  std::string replay_log_path;
  auto* replay = app.add_subcommand("replay", "re-run under a recorded log");
  replay->add_option("file", in_path)->required();
  replay->add_option("log", replay_log_path)->required();
  replay->add_option("--seed", seed, "seed for unconstrained choices");
  replay->add_option("--sites", sites_path, "site table (default: sibling)");
  replay->add_option("--trace", trace_path, "write the execution trace here");

  i64 cap = 2000000;
  auto* oracle = app.add_subcommand("oracle", "exhaustive interleaving oracle");
  oracle->add_option("file", in_path)->required();
  oracle->add_option("--threads", threads, "value passed to main / nthreads");
  oracle->add_option("--cap", cap, "explored-state cap");
  oracle->add_option("-o,--out", out_path, "machine-readable result path");

  // ---- orchestration ----
  std::string out_dir = "out";
  std::vector<std::string> stages;
  auto* pipe = app.add_subcommand("pipeline", "run the staged toolchain");
  pipe->add_option("file", in_path)->required();
  pipe->add_option("--threads", threads);
  pipe->add_option("--seed", seed);
  pipe->add_option("--out", out_dir, "artifact directory");
  pipe->add_option("--stages", stages,
                   "prefix of: analyze prune-init prune-array instrument "
                   "record replay");
  pipe->add_option("--id-bound", id_bound);
  pipe->add_option("--budget", budget);

  int trials = 5, warmup = 1;
  auto* bench = app.add_subcommand("bench", "free/record/replay timings");
  bench->add_option("file", in_path)->required();
  bench->add_option("--threads", threads);
  bench->add_option("--seed", seed);
  bench->add_option("--trials", trials, "measured runs");
  bench->add_option("--warmup", warmup, "discarded runs");
  bench->add_option("--id-bound", id_bound);
  bench->add_option("--budget", budget);

  std::string corpus_dir = "corpus";
  auto* check = app.add_subcommand("check", "run the acceptance suite");
  check->add_option("--corpus", corpus_dir, "corpus directory");

  CLI11_PARSE(app, argc, argv);

  csp_options solver;
  solver.id_bound = id_bound;
  solver.budget = budget;

  if (dump->parsed()) {
    program p = load_program(read_file(dump_file));
    if (!(d_ast || d_cfg || d_cg || d_dom)) d_ast = true;
    if (d_ast) std::cout << dump_ast(p);
    if (d_cfg) std::cout << dump_cfg(p);
    if (d_cg) std::cout << dump_callgraph(p);
    if (d_dom) std::cout << dump_dominators(p);
    return exit_ok;
  }

  if (analyze->parsed()) {
    program p = load_program(read_file(in_path));
    race_report r = analyze_program(p);
    print_counts("analyze", r);
    if (!out_path.empty())
      write_file(out_path, report_to_json(r).dump(2) + "\n");
    return exit_ok;
  }

  if (pinit->parsed()) {
    program p = load_program(read_file(in_path));
    race_report r = analyze_program(p);
    print_counts("analyze", r);
    prune_init_result ir = prune_init_stage(p, r);
    print_counts("prune-init", r);
    for (auto& d : ir.decisions)
      std::cout << "  " << d.lvalue << ": " << d.action << " ["
                << d.justification << "] " << d.detail << "\n";
    if (!out_path.empty())
      write_file(out_path, report_to_json(r).dump(2) + "\n");
    if (!ledger_path.empty()) {
      nlohmann::json j;
      j["decisions"] = nlohmann::json::array();
      for (auto& d : ir.decisions) j["decisions"].push_back(d.to_json());
      write_file(ledger_path, j.dump(2) + "\n");
    }
    if (!rewritten_path.empty()) write_file(rewritten_path, print_program(p));
    return exit_ok;
  }

  if (parray->parsed()) {
    program p = load_program(read_file(in_path));
    race_report r = analyze_program(p);
    print_counts("analyze", r);
    prune_init_stage(p, r);
    print_counts("prune-init", r);
    prune_array_result ar = prune_array_stage(p, r, solver);
    print_counts("prune-array", r);
    for (auto& n : ar.ivs_notes) std::cout << "  ivs: " << n << "\n";
    for (auto& d : ar.decisions)
      std::cout << "  " << d.lvalue << " pair(" << d.a << "," << d.b
                << "): " << (d.dropped ? "drop" : "keep") << " — " << d.detail
                << "\n";
    if (!out_path.empty())
      write_file(out_path, report_to_json(r).dump(2) + "\n");
    if (!ledger_path.empty()) {
      nlohmann::json j;
      j["ivs_rewrites"] = ar.ivs_rewrites;
      j["ivs_notes"] = ar.ivs_notes;
      j["decisions"] = nlohmann::json::array();
      for (auto& d : ar.decisions) j["decisions"].push_back(d.to_json());
      write_file(ledger_path, j.dump(2) + "\n");
    }
    if (!rewritten_path.empty()) write_file(rewritten_path, print_program(p));
    return exit_ok;
  }

  if (instr->parsed()) {
    static_result sr = run_static_pipeline(read_file(in_path), solver);
    print_counts("final", sr.final);
    std::cout << "traced operations: " << sr.table.rows.size() << "\n";
    if (imtc_path.empty())
      imtc_path = (fs::path(in_path).stem().string() + ".imtc");
    write_file(imtc_path, print_program(sr.prog));
    if (sites_path.empty())
      sites_path = (fs::path(imtc_path).parent_path() / "sites.json").string();
    write_file(sites_path, sr.table.to_json().dump(2) + "\n");
    std::cout << "wrote " << imtc_path << " and " << sites_path << "\n";
    return exit_ok;
  }

  if (record->parsed()) {
    compiled_program cp = compile_for_run(in_path, sites_path);
    run_result r = run_record(cp, threads, seed);
    write_file(log_path, r.log.text());
    if (!trace_path.empty()) write_file(trace_path, r.trace.text());
    std::cout << "recorded " << r.log.events.size() << " events (sync="
              << r.counts.sync_events << " traced=" << r.counts.race_events
              << " shared=" << r.counts.shared_accesses << ") to " << log_path
              << "\n";
    return exit_ok;
  }

  if (replay->parsed()) {
    compiled_program cp = compile_for_run(in_path, sites_path);
    replay_log log = parse_log(read_file(replay_log_path));
    run_result r = run_replay(cp, log, seed);
    if (!trace_path.empty()) write_file(trace_path, r.trace.text());
    std::cout << "replayed " << log.events.size()
              << " events; value audit passed\n";
    return exit_ok;
  }

  if (oracle->parsed()) {
    program p = load_program(read_file(in_path));
    compiled_program cp = compile_program(p);
    oracle_result r = explore_exhaustive(cp, threads, cap);
    std::cout << "states explored: " << r.states_explored << "\n"
              << "final states:    " << r.final_states.size() << "\n"
              << "deadlock:        " << (r.deadlock_possible ? "possible" : "no")
              << "\n"
              << "racing pairs:    " << r.racing_pairs.size() << "\n";
    for (auto& [a, b] : r.racing_pairs)
      std::cout << "  " << a << " ~ " << b << "\n";
    if (!out_path.empty()) {
      nlohmann::json j;
      j["states_explored"] = r.states_explored;
      j["final_states"] = static_cast<i64>(r.final_states.size());
      j["deadlock_possible"] = r.deadlock_possible;
      j["racing_pairs"] = nlohmann::json::array();
      for (auto& [a, b] : r.racing_pairs)
        j["racing_pairs"].push_back({a, b});
      write_file(out_path, j.dump(2) + "\n");
    }
    return exit_ok;
  }

  if (pipe->parsed()) {
    pipeline_config cfg;
    cfg.input_path = in_path;
    cfg.threads = threads;
    cfg.seed = seed;
    cfg.solver = solver;
    cfg.out_dir = out_dir;
    cfg.stages = stages;
    pipeline_result r = pipeline_run(cfg);
    std::cout << r.summary;
    return exit_ok;
  }

  if (bench->parsed()) {
    bench_result r =
        bench_program(read_file(in_path), threads, seed, trials, warmup, solver);
    std::cout << r.render();
    return exit_ok;
  }

  if (check->parsed()) return run_acceptance(corpus_dir) ? exit_ok : 1;

  return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const divergence_error& e) {
    std::cerr << e.what() << "\n";
    return exit_divergence;
  } catch (const cap_error& e) {
    std::cerr << e.what() << "\n";
    return exit_cap;
  } catch (const parse_error& e) {
    std::cerr << e.what() << "\n";
    return exit_analysis;
  } catch (const analysis_error& e) {
    std::cerr << e.what() << "\n";
    return exit_analysis;
  } catch (const runtime_fault& e) {
    std::cerr << e.what() << "\n";
    return exit_runtime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_runtime;
  }
}

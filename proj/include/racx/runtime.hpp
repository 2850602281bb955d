#pragma once

#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "racx/bytecode.hpp"
#include "racx/common.hpp"
#include "racx/log.hpp"

namespace racx {

// interpreter over the compiled bytecode. One scheduler serves three modes:
//   free    nondeterministic, seeded, nothing logged
//   record  free scheduling + two global Lamport clocks feeding a replay log
//   replay  log-enforced turn order for sync ops and traced accesses
// Threads run thread-private code atomically and yield only at shared
// accesses, synchronization, spawn and join; a thread is "poised" at the
// yield op it has not yet executed.

enum class run_mode { free_run, record, replay };

struct trace_access {
  std::string site;
  bool is_write = false;
  i64 value = 0;
};

struct execution_trace {
  std::vector<std::vector<trace_access>> per_thread;
  std::vector<std::pair<std::string, std::vector<i64>>> finals;

  std::string text() const {
    std::ostringstream os;
    os << "#racx-trace v1 threads=" << per_thread.size() << '\n';
    for (size_t t = 0; t < per_thread.size(); ++t)
      for (auto& a : per_thread[t])
        os << "T " << t << ' ' << a.site << ' ' << (a.is_write ? 'W' : 'R')
           << ' ' << a.value << '\n';
    for (auto& [name, vals] : finals) {
      os << "M " << name;
      for (i64 v : vals) os << ' ' << v;
      os << '\n';
    }
    return os.str();
  }
};

struct event_counts {
  i64 sync_events = 0;     // sync operations performed
  i64 race_events = 0;     // traced accesses performed
  i64 shared_accesses = 0; // every shared read/write, traced or not
};

struct run_result {
  execution_trace trace;
  replay_log log; // record mode only
  event_counts counts;
};

enum class thread_status { ready, blocked_barrier, blocked_cond, finished };

struct vm_frame {
  int fn = 0;
  i64 pc = 0;
  std::vector<i64> locals;
};

struct vm_thread {
  int tid = 0;
  thread_status status = thread_status::ready;
  std::vector<vm_frame> frames; // back() is the active frame
  std::vector<i64> stack;       // operand stack, shared across frames
  i64 icount = 0;               // dynamically executed statements
  int cur_meta = -1;            // meta of the statement being executed
};

// a ready thread's pending shared-memory operation, for the oracle
struct poised_access {
  bool is_mem = false;
  int global = -1;
  i64 elem = -1; // evaluated element index, -1 for scalars
  bool is_write = false;
  std::string site;
};

class machine {
public:
  machine(const compiled_program& cp, int threads_arg, u64 seed, run_mode mode)
      : m_cp(&cp), m_mode(mode), m_threads_arg(threads_arg), m_rng(seed),
        m_seed(seed) {
    if (threads_arg < 1)
      throw analysis_error("thread count must be at least 1");
    m_mem.assign(static_cast<size_t>(cp.mem_size), 0);
    for (auto& g : cp.globals)
      if (!g.is_array) m_mem[static_cast<size_t>(g.base)] = g.init;

    m_lock_holder.assign(cp.syncs.size(), -1);
    m_barrier_arrived.resize(cp.syncs.size());
    m_barrier_count.assign(cp.syncs.size(), 0);
    m_cond_waiters.resize(cp.syncs.size());
    for (size_t i = 0; i < cp.syncs.size(); ++i) {
      if (cp.syncs[i].kind != sync_kind::barrier) continue;
      i64 n = eval_count(cp.syncs[i].count);
      if (n < 1)
        throw runtime_fault("barrier '" + cp.syncs[i].name +
                            "' participant count must be positive, got " +
                            std::to_string(n));
      m_barrier_count[i] = n;
    }

    spawn_thread(cp.main_index,
                 cp.fns[cp.main_index].nparams > 0 ? threads_arg : 0);
    advance(0);
  }

  void set_replay(const replay_log& log) {
    if (log.digest != m_cp->digest)
      throw analysis_error("log digest " + log.digest +
                           " does not match program digest " + m_cp->digest);
    validate_log(log);
    m_log = log;
    for (size_t i = 0; i < m_log.events.size(); ++i) {
      const log_event& e = m_log.events[i];
      auto& qs = e.kind == log_kind::sync ? m_sync_q : m_race_q;
      if (static_cast<size_t>(e.tid) >= qs.size()) {
        m_sync_q.resize(e.tid + 1);
        m_race_q.resize(e.tid + 1);
      }
      qs[e.tid].push_back(static_cast<int>(i));
    }
    m_sync_head.assign(m_sync_q.size(), 0);
    m_race_head.assign(m_race_q.size(), 0);
  }

  // ---- scheduler -----------------------------------------------------

  std::vector<int> runnable_threads() const {
    std::vector<int> out;
    for (size_t t = 0; t < m_threads.size(); ++t)
      if (can_step(static_cast<int>(t))) out.push_back(static_cast<int>(t));
    return out;
  }

  bool all_finished() const {
    for (auto& th : m_threads)
      if (th.status != thread_status::finished) return false;
    return true;
  }

  run_result run() {
    for (;;) {
      std::vector<int> ready = runnable_threads();
      if (ready.empty()) {
        if (all_finished()) break;
        report_stuck();
      }
      int pick = ready[static_cast<size_t>(m_rng() % ready.size())];
      step(pick);
    }
    if (m_mode == run_mode::replay) check_log_consumed();
    run_result res;
    res.trace = std::move(m_trace);
    res.trace.finals = final_memory();
    res.counts = m_counts;
    if (m_mode == run_mode::record) {
      m_out_log.digest = m_cp->digest;
      m_out_log.seed = m_seed;
      m_out_log.threads = m_threads_arg;
      res.log = std::move(m_out_log);
    }
    return res;
  }

  // executes thread t's poised yield op, then runs it to the next yield
  void step(int t) {
    vm_thread& th = m_threads[static_cast<size_t>(t)];
    vm_frame& fr = th.frames.back();
    vm_op op = m_cp->fns[fr.fn].ops[static_cast<size_t>(fr.pc)];
    switch (op.k) {
    case opcode::load_global: {
      const gvar_info& g = m_cp->globals[static_cast<size_t>(op.a)];
      i64 v = m_mem[static_cast<size_t>(g.base)];
      note_access(t, op.trace, false, v);
      th.stack.push_back(v);
      ++fr.pc;
      break;
    }
    case opcode::store_global: {
      const gvar_info& g = m_cp->globals[static_cast<size_t>(op.a)];
      i64 v = pop(th);
      note_access(t, op.trace, true, v);
      m_mem[static_cast<size_t>(g.base)] = v;
      ++th.frames.back().pc;
      break;
    }
    case opcode::load_elem: {
      const gvar_info& g = m_cp->globals[static_cast<size_t>(op.a)];
      i64 idx = pop(th);
      check_bounds(t, g, idx);
      i64 v = m_mem[static_cast<size_t>(g.base + idx)];
      note_access(t, op.trace, false, v);
      th.stack.push_back(v);
      ++th.frames.back().pc;
      break;
    }
    case opcode::store_elem: {
      const gvar_info& g = m_cp->globals[static_cast<size_t>(op.a)];
      i64 idx = pop(th);
      i64 v = pop(th);
      check_bounds(t, g, idx);
      note_access(t, op.trace, true, v);
      m_mem[static_cast<size_t>(g.base + idx)] = v;
      ++th.frames.back().pc;
      break;
    }
    case opcode::lock_op: {
      note_sync(t, "acquire", op.a);
      m_lock_holder[static_cast<size_t>(op.a)] = t;
      ++fr.pc;
      break;
    }
    case opcode::unlock_op: {
      if (m_lock_holder[static_cast<size_t>(op.a)] != t) {
        std::string msg = "thread " + std::to_string(t) + " unlocks '" +
                          m_cp->syncs[static_cast<size_t>(op.a)].name +
                          "' which it does not hold (" + site_of(th) + ")";
        // under replay this means the log demanded an infeasible order
        if (m_mode == run_mode::replay) throw divergence_error(msg);
        throw runtime_fault(msg);
      }
      note_sync(t, "release", op.a);
      m_lock_holder[static_cast<size_t>(op.a)] = -1;
      ++fr.pc;
      break;
    }
    case opcode::barrier_op: {
      note_sync(t, "arrive", op.a);
      ++fr.pc;
      auto& arrived = m_barrier_arrived[static_cast<size_t>(op.a)];
      arrived.push_back(t);
      if (static_cast<i64>(arrived.size()) <
          m_barrier_count[static_cast<size_t>(op.a)]) {
        th.status = thread_status::blocked_barrier;
        return; // parked past the op; released by the last arrival
      }
      std::vector<int> party = std::move(arrived);
      arrived.clear();
      for (int w : party) {
        m_threads[static_cast<size_t>(w)].status = thread_status::ready;
        if (w != t) advance(w);
      }
      break;
    }
    case opcode::signal_op: {
      note_sync(t, "signal", op.a);
      ++fr.pc;
      // broadcast: every thread currently waiting wakes; nobody buffers
      std::vector<int> woken =
          std::move(m_cond_waiters[static_cast<size_t>(op.a)]);
      m_cond_waiters[static_cast<size_t>(op.a)].clear();
      for (int w : woken) {
        m_threads[static_cast<size_t>(w)].status = thread_status::ready;
        advance(w);
      }
      break;
    }
    case opcode::wait_op: {
      note_sync(t, "wait", op.a);
      ++fr.pc;
      th.status = thread_status::blocked_cond;
      m_cond_waiters[static_cast<size_t>(op.a)].push_back(t);
      return; // resumes when signalled
    }
    case opcode::spawn_op: {
      i64 arg = pop(th);
      ++th.frames.back().pc;
      int child = spawn_thread(static_cast<int>(op.a), arg);
      advance(child);
      break;
    }
    case opcode::join_op: {
      ++fr.pc;
      break;
    }
    default:
      throw runtime_fault("scheduler woke a thread on a non-yield op");
    }
    advance(t);
  }

  // pending shared-memory op of a ready thread (oracle race detection)
  poised_access poised(int t) const {
    poised_access pa;
    const vm_thread& th = m_threads[static_cast<size_t>(t)];
    if (th.status != thread_status::ready) return pa;
    const vm_frame& fr = th.frames.back();
    const vm_op& op = m_cp->fns[fr.fn].ops[static_cast<size_t>(fr.pc)];
    switch (op.k) {
    case opcode::load_global:
    case opcode::store_global:
      pa.elem = -1;
      break;
    case opcode::load_elem:
    case opcode::store_elem:
      pa.elem = th.stack.back(); // index already evaluated
      break;
    default:
      return pa;
    }
    pa.is_mem = true;
    pa.global = static_cast<int>(op.a);
    pa.is_write = op.k == opcode::store_global || op.k == opcode::store_elem;
    pa.site = m_cp->metas[static_cast<size_t>(th.cur_meta)].site;
    return pa;
  }

  // canonical state key for memoized exploration; instruction counts and
  // trace bookkeeping are excluded (they never influence behavior)
  std::string state_key() const {
    std::ostringstream os;
    for (i64 v : m_mem) os << v << ',';
    os << '|';
    for (auto& th : m_threads) {
      os << static_cast<int>(th.status) << ':';
      for (auto& fr : th.frames) {
        os << fr.fn << '.' << fr.pc << '[';
        for (i64 v : fr.locals) os << v << ',';
        os << ']';
      }
      os << '(';
      for (i64 v : th.stack) os << v << ',';
      os << ");";
    }
    os << '|';
    for (int h : m_lock_holder) os << h << ',';
    os << '|';
    for (auto& a : m_barrier_arrived) {
      for (int t : a) os << t << ',';
      os << ';';
    }
    os << '|';
    for (auto& w : m_cond_waiters) {
      for (int t : w) os << t << ',';
      os << ';';
    }
    return os.str();
  }

  std::string memory_key() const {
    std::ostringstream os;
    bool dead = !all_finished();
    if (dead) os << "deadlock|";
    for (i64 v : m_mem) os << v << ',';
    return os.str();
  }

  bool can_step(int t) const {
    const vm_thread& th = m_threads[static_cast<size_t>(t)];
    if (th.status != thread_status::ready) return false;
    const vm_frame& fr = th.frames.back();
    const vm_op& op = m_cp->fns[fr.fn].ops[static_cast<size_t>(fr.pc)];
    if (!feasible(t, op)) return false;
    if (m_mode != run_mode::replay) return true;
    return replay_turn(t, op);
  }

  const event_counts& counts() const { return m_counts; }
  const std::vector<vm_thread>& threads() const { return m_threads; }

private:
  const compiled_program* m_cp;
  run_mode m_mode;
  int m_threads_arg;
  std::mt19937_64 m_rng;
  u64 m_seed;

  std::vector<i64> m_mem;
  std::vector<vm_thread> m_threads;
  std::vector<int> m_lock_holder;
  std::vector<std::vector<int>> m_barrier_arrived;
  std::vector<i64> m_barrier_count;
  std::vector<std::vector<int>> m_cond_waiters;

  i64 m_sync_clock = 0;
  i64 m_race_clock = 0;
  replay_log m_out_log; // record
  replay_log m_log;     // replay input
  std::vector<std::vector<int>> m_sync_q, m_race_q; // per tid, event indices
  std::vector<size_t> m_sync_head, m_race_head;

  event_counts m_counts;
  execution_trace m_trace;

  // ---- helpers -------------------------------------------------------

  i64 eval_count(const expr& e) const {
    switch (e.k) {
    case expr::kind::literal:
      return e.value;
    case expr::kind::var:
      if (e.name == "nthreads") return m_threads_arg;
      throw analysis_error("barrier count references '" + e.name + "'");
    case expr::kind::unary:
      return e.uop == unop::neg ? wsub(0, eval_count(e.kids[0]))
                                : (eval_count(e.kids[0]) == 0 ? 1 : 0);
    case expr::kind::binary: {
      i64 a = eval_count(e.kids[0]);
      i64 b = eval_count(e.kids[1]);
      return apply_binop(e.bop, a, b, "barrier count");
    }
    default:
      throw analysis_error("barrier count must be built from literals");
    }
  }

  static i64 apply_binop(binop op, i64 a, i64 b, const std::string& where) {
    switch (op) {
    case binop::add: return wadd(a, b);
    case binop::sub: return wsub(a, b);
    case binop::mul: return wmul(a, b);
    case binop::div:
      if (b == 0) throw runtime_fault("division by zero in " + where);
      if (a == std::numeric_limits<i64>::min() && b == -1) return a;
      return a / b;
    case binop::mod:
      if (b == 0) throw runtime_fault("modulo by zero in " + where);
      if (a == std::numeric_limits<i64>::min() && b == -1) return 0;
      return a % b;
    case binop::lt: return a < b;
    case binop::le: return a <= b;
    case binop::gt: return a > b;
    case binop::ge: return a >= b;
    case binop::eq: return a == b;
    case binop::ne: return a != b;
    case binop::land:
    case binop::lor:
      break; // compiled to jumps, never reaches the interpreter
    }
    throw runtime_fault("unexpected operator in " + where);
  }

  int spawn_thread(int fn, i64 arg) {
    vm_thread th;
    th.tid = static_cast<int>(m_threads.size());
    vm_frame fr;
    fr.fn = fn;
    fr.locals.assign(static_cast<size_t>(m_cp->fns[fn].nslots), 0);
    if (m_cp->fns[fn].nparams > 0) fr.locals[0] = arg;
    th.frames.push_back(std::move(fr));
    m_threads.push_back(std::move(th));
    m_trace.per_thread.emplace_back();
    return static_cast<int>(m_threads.size()) - 1;
  }

  static i64 pop(vm_thread& th) {
    i64 v = th.stack.back();
    th.stack.pop_back();
    return v;
  }

  std::string site_of(const vm_thread& th) const {
    return th.cur_meta < 0
               ? std::string("<entry>")
               : m_cp->metas[static_cast<size_t>(th.cur_meta)].site;
  }

  void check_bounds(int t, const gvar_info& g, i64 idx) const {
    if (idx < 0 || idx >= g.length)
      throw runtime_fault("thread " + std::to_string(t) + ": index " +
                          std::to_string(idx) + " out of bounds for '" +
                          g.name + "[" + std::to_string(g.length) + "]' (" +
                          site_of(m_threads[static_cast<size_t>(t)]) + ")");
  }

  // runs thread-private code until the next yield op or the thread finishes
  void advance(int t) {
    for (;;) {
      vm_thread& th = m_threads[static_cast<size_t>(t)];
      if (th.frames.empty()) {
        th.status = thread_status::finished;
        return;
      }
      vm_frame& fr = th.frames.back();
      const vm_op& op = m_cp->fns[fr.fn].ops[static_cast<size_t>(fr.pc)];
      if (is_yield_op(op.k)) return;
      switch (op.k) {
      case opcode::stmt_begin:
        ++th.icount;
        th.cur_meta = static_cast<int>(op.a);
        ++fr.pc;
        break;
      case opcode::push_lit:
        th.stack.push_back(op.a);
        ++fr.pc;
        break;
      case opcode::load_local:
        th.stack.push_back(fr.locals[static_cast<size_t>(op.a)]);
        ++fr.pc;
        break;
      case opcode::store_local:
        fr.locals[static_cast<size_t>(op.a)] = pop(th);
        ++fr.pc;
        break;
      case opcode::un_op: {
        i64 v = pop(th);
        th.stack.push_back(static_cast<unop>(op.a) == unop::neg
                               ? wsub(0, v)
                               : (v == 0 ? 1 : 0));
        ++fr.pc;
        break;
      }
      case opcode::bin_op: {
        i64 b = pop(th);
        i64 a = pop(th);
        th.stack.push_back(
            apply_binop(static_cast<binop>(op.a), a, b, site_of(th)));
        ++fr.pc;
        break;
      }
      case opcode::jmp:
        fr.pc = op.a;
        break;
      case opcode::jz:
        fr.pc = pop(th) == 0 ? op.a : fr.pc + 1;
        break;
      case opcode::call: {
        const fn_code& callee = m_cp->fns[static_cast<size_t>(op.a)];
        vm_frame nf;
        nf.fn = static_cast<int>(op.a);
        nf.locals.assign(static_cast<size_t>(callee.nslots), 0);
        for (int i = callee.nparams - 1; i >= 0; --i)
          nf.locals[static_cast<size_t>(i)] = pop(th);
        ++fr.pc; // resume past the call
        th.frames.push_back(std::move(nf));
        break;
      }
      case opcode::ret:
      case opcode::ret_void:
        // a returned value, if any, is already on the operand stack
        th.frames.pop_back();
        break;
      case opcode::pop_top:
        pop(th);
        ++fr.pc;
        break;
      default:
        throw runtime_fault("yield op reached the private interpreter");
      }
    }
  }

  bool feasible(int t, const vm_op& op) const {
    switch (op.k) {
    case opcode::lock_op:
      return m_lock_holder[static_cast<size_t>(op.a)] < 0;
    case opcode::join_op:
      for (auto& other : m_threads)
        if (other.tid != t && other.tid != 0 &&
            other.status != thread_status::finished)
          return false;
      return true;
    default:
      return true;
    }
  }

  static bool is_sync_op(opcode k) {
    switch (k) {
    case opcode::lock_op:
    case opcode::unlock_op:
    case opcode::barrier_op:
    case opcode::signal_op:
    case opcode::wait_op:
      return true;
    default:
      return false;
    }
  }

  const log_event* next_event(int t, log_kind kind) const {
    auto& qs = kind == log_kind::sync ? m_sync_q : m_race_q;
    auto& heads = kind == log_kind::sync ? m_sync_head : m_race_head;
    if (static_cast<size_t>(t) >= qs.size()) return nullptr;
    const auto& q = qs[static_cast<size_t>(t)];
    size_t h = heads[static_cast<size_t>(t)];
    if (h >= q.size()) return nullptr;
    return &m_log.events[static_cast<size_t>(q[h])];
  }

  bool replay_turn(int t, const vm_op& op) const {
    if (is_sync_op(op.k)) {
      const log_event* ev = next_event(t, log_kind::sync);
      // exhausted log: let the step run and raise the divergence there
      if (!ev) return true;
      return ev->ts == m_sync_clock + 1;
    }
    if (op.trace >= 0) {
      const log_event* ev = next_event(t, log_kind::race);
      if (!ev) return true;
      return ev->ts == m_race_clock + 1;
    }
    return true; // untraced accesses, spawn and join are unconstrained
  }

  void consume_sync(int t, const std::string& opname, i64 sync_idx) {
    const log_event* ev = next_event(t, log_kind::sync);
    const vm_thread& th = m_threads[static_cast<size_t>(t)];
    const std::string& obj = m_cp->syncs[static_cast<size_t>(sync_idx)].name;
    if (!ev)
      throw divergence_error("thread " + std::to_string(t) + " reached " +
                             opname + ":" + obj + " at " + site_of(th) +
                             " but the log has no more sync events for it");
    if (ev->op != opname || ev->object != obj || ev->icount != th.icount)
      throw divergence_error(
          "thread " + std::to_string(t) + " at icount " +
          std::to_string(th.icount) + " performs " + opname + ":" + obj +
          " but the log expects " + ev->op + ":" + ev->object + " at icount " +
          std::to_string(ev->icount));
    m_sync_clock = ev->ts;
    ++m_sync_head[static_cast<size_t>(t)];
  }

  void consume_race(int t, int row, bool is_write, i64 value) {
    const log_event* ev = next_event(t, log_kind::race);
    const vm_thread& th = m_threads[static_cast<size_t>(t)];
    if (!ev)
      throw divergence_error("thread " + std::to_string(t) +
                             " reached traced site " + std::to_string(row) +
                             " (" + site_of(th) +
                             ") but the log has no more access events for it");
    if (ev->site != row || ev->icount != th.icount)
      throw divergence_error(
          "thread " + std::to_string(t) + " at icount " +
          std::to_string(th.icount) + " reaches traced site " +
          std::to_string(row) + " but the log expects site " +
          std::to_string(ev->site) + " at icount " +
          std::to_string(ev->icount));
    if (ev->value != value)
      throw divergence_error(
          "value determinism violated: thread " + std::to_string(t) +
          " site " + std::to_string(row) + " icount " +
          std::to_string(th.icount) + (is_write ? " writes " : " reads ") +
          std::to_string(value) + " but the log recorded " +
          std::to_string(ev->value));
    m_race_clock = ev->ts;
    ++m_race_head[static_cast<size_t>(t)];
  }

  void note_sync(int t, const char* opname, i64 sync_idx) {
    ++m_counts.sync_events;
    vm_thread& th = m_threads[static_cast<size_t>(t)];
    if (m_mode == run_mode::record) {
      log_event e;
      e.kind = log_kind::sync;
      e.tid = t;
      e.icount = th.icount;
      e.ts = ++m_sync_clock;
      e.op = opname;
      e.object = m_cp->syncs[static_cast<size_t>(sync_idx)].name;
      m_out_log.events.push_back(std::move(e));
    } else if (m_mode == run_mode::replay) {
      consume_sync(t, opname, sync_idx);
    }
  }

  void note_access(int t, int trace_row, bool is_write, i64 value) {
    ++m_counts.shared_accesses;
    vm_thread& th = m_threads[static_cast<size_t>(t)];
    m_trace.per_thread[static_cast<size_t>(t)].push_back(
        {site_of(th), is_write, value});
    if (trace_row < 0) return;
    ++m_counts.race_events;
    if (m_mode == run_mode::record) {
      log_event e;
      e.kind = log_kind::race;
      e.tid = t;
      e.icount = th.icount;
      e.ts = ++m_race_clock;
      e.site = trace_row;
      e.value = value;
      m_out_log.events.push_back(std::move(e));
    } else if (m_mode == run_mode::replay) {
      consume_race(t, trace_row, is_write, value);
    }
  }

  [[noreturn]] void report_stuck() const {
    bool turn_wait = false;
    std::ostringstream os;
    for (auto& th : m_threads) {
      if (th.status == thread_status::finished) continue;
      os << "\n  thread " << th.tid << ": ";
      switch (th.status) {
      case thread_status::blocked_barrier: {
        for (size_t b = 0; b < m_barrier_arrived.size(); ++b)
          for (int w : m_barrier_arrived[b])
            if (w == th.tid)
              os << "waiting at barrier '" << m_cp->syncs[b].name << "' ("
                 << m_barrier_arrived[b].size() << " of " << m_barrier_count[b]
                 << " arrived)";
        break;
      }
      case thread_status::blocked_cond:
        for (size_t c = 0; c < m_cond_waiters.size(); ++c)
          for (int w : m_cond_waiters[c])
            if (w == th.tid)
              os << "waiting on condition '" << m_cp->syncs[c].name << "'";
        break;
      case thread_status::ready: {
        const vm_frame& fr = th.frames.back();
        const vm_op& op = m_cp->fns[fr.fn].ops[static_cast<size_t>(fr.pc)];
        if (op.k == opcode::lock_op && !feasible(th.tid, op)) {
          size_t li = static_cast<size_t>(op.a);
          os << "blocked on lock '" << m_cp->syncs[li].name << "' held by thread "
             << m_lock_holder[li] << " (" << site_of(th) << ")";
        } else if (op.k == opcode::join_op && !feasible(th.tid, op)) {
          os << "waiting to join unfinished threads (" << site_of(th) << ")";
        } else {
          turn_wait = true;
          os << "waiting for its replay turn (" << site_of(th) << ")";
        }
        break;
      }
      case thread_status::finished:
        break;
      }
    }
    if (m_mode == run_mode::replay && turn_wait)
      throw divergence_error(
          "replay stuck: no thread can reach its logged turn" + os.str());
    throw runtime_fault("deadlock:" + os.str());
  }

  void check_log_consumed() const {
    for (size_t t = 0; t < m_sync_q.size(); ++t) {
      size_t left = m_sync_q[t].size() - m_sync_head[t];
      if (left > 0)
        throw divergence_error("execution finished but the log holds " +
                               std::to_string(left) +
                               " unconsumed sync events for thread " +
                               std::to_string(t));
    }
    for (size_t t = 0; t < m_race_q.size(); ++t) {
      size_t left = m_race_q[t].size() - m_race_head[t];
      if (left > 0)
        throw divergence_error("execution finished but the log holds " +
                               std::to_string(left) +
                               " unconsumed access events for thread " +
                               std::to_string(t));
    }
  }

  std::vector<std::pair<std::string, std::vector<i64>>> final_memory() const {
    std::vector<std::pair<std::string, std::vector<i64>>> out;
    for (auto& g : m_cp->globals) {
      std::vector<i64> vals(m_mem.begin() + g.base,
                            m_mem.begin() + g.base + g.length);
      out.emplace_back(g.name, std::move(vals));
    }
    return out;
  }
};

// ---- entry points ----------------------------------------------------

inline run_result run_free(const compiled_program& cp, int threads, u64 seed) {
  machine m(cp, threads, seed, run_mode::free_run);
  return m.run();
}

inline run_result run_record(const compiled_program& cp, int threads, u64 seed) {
  machine m(cp, threads, seed, run_mode::record);
  return m.run();
}

inline run_result run_replay(const compiled_program& cp, const replay_log& log,
                             u64 seed) {
  machine m(cp, log.threads, seed, run_mode::replay);
  m.set_replay(log);
  return m.run();
}

} // namespace racx

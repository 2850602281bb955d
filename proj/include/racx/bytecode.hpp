#pragma once

#include <map>
#include <string>
#include <vector>

#include "racx/ast.hpp"
#include "racx/common.hpp"
#include "racx/instrument.hpp"
#include "racx/printer.hpp"

namespace racx {

// flat register-free bytecode; context switches happen only at "yield" ops
// (shared accesses, synchronization, spawn, join), everything else is
// thread-private and runs atomically with its enclosing statement

enum class opcode {
  push_lit,     // a: value
  load_local,   // a: slot
  store_local,  // a: slot (pops)
  load_global,  // a: global index               [yield]
  store_global, // a: global index (pops value)  [yield]
  load_elem,    // a: global index (pops index)  [yield]
  store_elem,   // a: global index (pops index, then value) [yield]
  un_op,        // a: unop
  bin_op,       // a: binop (pops rhs, lhs)
  jmp,          // a: target
  jz,           // a: target (pops condition)
  call,         // a: function index (pops args into the callee frame)
  ret,          // pops return value
  ret_void,
  pop_top,      // discard an unused call result
  spawn_op,     // a: function index (pops the argument)  [yield]
  join_op,      // wait for every spawned thread          [yield]
  lock_op,      // a: sync index  [yield]
  unlock_op,    // a: sync index  [yield]
  barrier_op,   // a: sync index  [yield]
  signal_op,    // a: sync index  [yield]
  wait_op,      // a: sync index  [yield]
  stmt_begin    // a: statement-meta index (bumps the thread's icount)
};

struct vm_op {
  opcode k = opcode::stmt_begin;
  i64 a = 0;
  int trace = -1; // site-table row when this access is traced
};

inline bool is_yield_op(opcode k) {
  switch (k) {
  case opcode::load_global:
  case opcode::store_global:
  case opcode::load_elem:
  case opcode::store_elem:
  case opcode::spawn_op:
  case opcode::join_op:
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

struct stmt_meta {
  std::string site; // site id of the hosting statement
};

struct gvar_info {
  std::string name;
  bool is_array = false;
  i64 length = 1;
  i64 base = 0; // offset into the flat shared-memory vector
  i64 init = 0;
};

enum class sync_kind { lock, barrier, cond };

struct sync_info {
  std::string name;
  sync_kind kind = sync_kind::lock;
  expr count; // barrier only: literals and `nthreads`
};

struct fn_code {
  std::string name;
  int nparams = 0;
  int nslots = 0;
  bool returns_int = false;
  std::vector<vm_op> ops;
};

struct compiled_program {
  std::vector<fn_code> fns;
  std::map<std::string, int> fn_index;
  std::vector<gvar_info> globals;
  i64 mem_size = 0;
  std::vector<sync_info> syncs;
  std::map<std::string, int> sync_index;
  std::vector<stmt_meta> metas;
  site_table table; // empty rows when compiled without instrumentation
  std::string digest;
  int main_index = -1;
};

namespace bcdet {

class fn_compiler {
public:
  fn_compiler(const program& p, const function_decl& f, compiled_program& out)
      : m_p(p), m_f(f), m_out(out) {}

  fn_code run() {
    fn_code code;
    code.name = m_f.name;
    code.returns_int = m_f.returns_int;
    code.nparams = static_cast<int>(m_f.params.size());
    for (auto& pr : m_f.params) slot_of(pr.name);
    compile_block(m_f.body);
    // fall-off-the-end return; int functions yield 0 defensively so the
    // caller's operand stack stays balanced
    if (m_f.returns_int) emit(opcode::push_lit, 0);
    emit(opcode::ret_void);
    code.nslots = static_cast<int>(m_slots.size());
    code.ops = std::move(m_ops);
    return code;
  }

private:
  const program& m_p;
  const function_decl& m_f;
  compiled_program& m_out;
  std::vector<vm_op> m_ops;
  std::map<std::string, int> m_slots;
  // per-statement traced rows: (lvalue, is_write) -> site-table row
  std::map<std::pair<std::string, bool>, int> m_traced;

  int slot_of(const std::string& name) {
    auto it = m_slots.find(name);
    if (it != m_slots.end()) return it->second;
    int s = static_cast<int>(m_slots.size());
    m_slots.emplace(name, s);
    return s;
  }

  int emit(opcode k, i64 a = 0, int trace = -1) {
    m_ops.push_back({k, a, trace});
    return static_cast<int>(m_ops.size()) - 1;
  }

  void patch(int at, i64 target) { m_ops[at].a = target; }
  i64 here() const { return static_cast<i64>(m_ops.size()); }

  int global_index(const std::string& name) const {
    for (size_t i = 0; i < m_out.globals.size(); ++i)
      if (m_out.globals[i].name == name) return static_cast<int>(i);
    return -1;
  }

  int trace_row(const std::string& lvalue, bool is_write) const {
    auto it = m_traced.find({lvalue, is_write});
    return it == m_traced.end() ? -1 : it->second;
  }

  void begin_stmt(const stmt& s) {
    stmt_meta m;
    m.site = s.site.str();
    m_out.metas.push_back(std::move(m));
    emit(opcode::stmt_begin, static_cast<i64>(m_out.metas.size()) - 1);
    set_traced(s);
  }

  void set_traced(const stmt& s) {
    m_traced.clear();
    for (int row : s.trace_sites) {
      if (row < 0 || row >= static_cast<int>(m_out.table.rows.size()))
        throw analysis_error("statement " + s.site.str() +
                             " names trace site " + std::to_string(row) +
                             " outside the site table");
      const site_row& r = m_out.table.rows[row];
      if (!(r.site == s.site))
        throw analysis_error("trace site " + std::to_string(row) +
                             " belongs to " + r.site.str() + ", not " +
                             s.site.str() + "; stale site table");
      m_traced[{r.lvalue, r.is_write}] = row;
    }
  }

  void compile_expr(const expr& e) {
    switch (e.k) {
    case expr::kind::literal:
      emit(opcode::push_lit, e.value);
      return;
    case expr::kind::var: {
      int g = global_index(e.name);
      if (g >= 0)
        emit(opcode::load_global, g, trace_row(e.name, false));
      else
        emit(opcode::load_local, slot_of(e.name));
      return;
    }
    case expr::kind::array_elem: {
      int g = global_index(e.name);
      compile_expr(e.kids[0]);
      emit(opcode::load_elem, g, trace_row(e.name, false));
      return;
    }
    case expr::kind::call: {
      for (auto& a : e.kids) compile_expr(a);
      emit(opcode::call, m_out.fn_index.at(e.name));
      return;
    }
    case expr::kind::unary:
      compile_expr(e.kids[0]);
      emit(opcode::un_op, static_cast<i64>(e.uop));
      return;
    case expr::kind::binary:
      if (e.bop == binop::land || e.bop == binop::lor) {
        compile_short_circuit(e);
        return;
      }
      compile_expr(e.kids[0]);
      compile_expr(e.kids[1]);
      emit(opcode::bin_op, static_cast<i64>(e.bop));
      return;
    }
  }

  void compile_short_circuit(const expr& e) {
    if (e.bop == binop::land) {
      // a && b: false as soon as either side is zero
      compile_expr(e.kids[0]);
      int ja = emit(opcode::jz);
      compile_expr(e.kids[1]);
      int jb = emit(opcode::jz);
      emit(opcode::push_lit, 1);
      int jend = emit(opcode::jmp);
      patch(ja, here());
      patch(jb, here());
      emit(opcode::push_lit, 0);
      patch(jend, here());
    } else {
      // a || b: true as soon as either side is nonzero
      compile_expr(e.kids[0]);
      int ja = emit(opcode::jz);
      emit(opcode::push_lit, 1);
      int j1 = emit(opcode::jmp);
      patch(ja, here());
      compile_expr(e.kids[1]);
      int jb = emit(opcode::jz);
      emit(opcode::push_lit, 1);
      int j2 = emit(opcode::jmp);
      patch(jb, here());
      emit(opcode::push_lit, 0);
      patch(j1, here());
      patch(j2, here());
    }
  }

  void store_lvalue(const lvalue& lv) {
    int g = global_index(lv.name);
    if (g < 0) {
      emit(opcode::store_local, slot_of(lv.name));
      return;
    }
    if (lv.index) {
      compile_expr(*lv.index);
      emit(opcode::store_elem, g, trace_row(lv.name, true));
    } else {
      emit(opcode::store_global, g, trace_row(lv.name, true));
    }
  }

  void compile_block(const std::vector<stmt>& body) {
    for (auto& s : body) compile_stmt(s);
  }

  void compile_stmt(const stmt& s) {
    switch (s.k) {
    case stmt::kind::decl:
      begin_stmt(s);
      slot_of(s.name);
      if (!s.exprs.empty()) {
        compile_expr(s.exprs[0]);
        emit(opcode::store_local, slot_of(s.name));
      }
      return;
    case stmt::kind::assign:
      begin_stmt(s);
      compile_expr(s.exprs[0]);
      store_lvalue(s.lhs);
      return;
    case stmt::kind::if_: {
      begin_stmt(s);
      compile_expr(s.exprs[0]);
      int jelse = emit(opcode::jz);
      compile_block(s.body);
      if (s.else_body.empty()) {
        patch(jelse, here());
      } else {
        int jend = emit(opcode::jmp);
        patch(jelse, here());
        compile_block(s.else_body);
        patch(jend, here());
      }
      return;
    }
    case stmt::kind::while_: {
      i64 head = here();
      begin_stmt(s); // dispatched once per condition check
      compile_expr(s.exprs[0]);
      int jend = emit(opcode::jz);
      compile_block(s.body);
      emit(opcode::jmp, head);
      patch(jend, here());
      return;
    }
    case stmt::kind::for_: {
      begin_stmt(s); // covers the initialization
      compile_expr(s.exprs[0]);
      emit(opcode::store_local, slot_of(s.for_var));
      i64 head = here();
      begin_stmt(s); // and once per condition check
      compile_expr(s.exprs[1]);
      int jend = emit(opcode::jz);
      compile_block(s.body);
      set_traced(s); // body statements reset the per-statement trace rows
      compile_expr(s.exprs[2]);
      emit(opcode::store_local, slot_of(s.for_var));
      emit(opcode::jmp, head);
      patch(jend, here());
      return;
    }
    case stmt::kind::call: {
      begin_stmt(s);
      for (auto& a : s.exprs) compile_expr(a);
      emit(opcode::call, m_out.fn_index.at(s.name));
      if (m_p.find_function(s.name)->returns_int) emit(opcode::pop_top);
      return;
    }
    case stmt::kind::spawn:
      begin_stmt(s);
      compile_expr(s.exprs[0]);
      emit(opcode::spawn_op, m_out.fn_index.at(s.name));
      return;
    case stmt::kind::join:
      begin_stmt(s);
      emit(opcode::join_op);
      return;
    case stmt::kind::lock:
      begin_stmt(s);
      emit(opcode::lock_op, m_out.sync_index.at(s.name));
      return;
    case stmt::kind::unlock:
      begin_stmt(s);
      emit(opcode::unlock_op, m_out.sync_index.at(s.name));
      return;
    case stmt::kind::barrier:
      begin_stmt(s);
      emit(opcode::barrier_op, m_out.sync_index.at(s.name));
      return;
    case stmt::kind::signal:
      begin_stmt(s);
      emit(opcode::signal_op, m_out.sync_index.at(s.name));
      return;
    case stmt::kind::wait:
      begin_stmt(s);
      emit(opcode::wait_op, m_out.sync_index.at(s.name));
      return;
    case stmt::kind::ret:
      begin_stmt(s);
      if (!s.exprs.empty()) {
        compile_expr(s.exprs[0]);
        emit(opcode::ret);
      } else {
        emit(opcode::ret_void);
      }
      return;
    }
  }
};

} // namespace bcdet

// table may be null only for a program without trace annotations
inline compiled_program compile_program(const program& p,
                                        const site_table* table = nullptr) {
  compiled_program out;
  out.digest = program_digest_hex(p);
  if (table) {
    if (table->digest != out.digest)
      throw analysis_error("site table digest " + table->digest +
                           " does not match program digest " + out.digest);
    out.table = *table;
  } else {
    bool annotated = false;
    for (auto& f : p.functions)
      walk_stmts(f.body, [&](const stmt& s) {
        if (!s.trace_sites.empty()) annotated = true;
      });
    if (annotated)
      throw analysis_error(
          "program carries trace annotations but no site table was provided");
  }

  i64 base = 0;
  for (auto& g : p.globals) {
    gvar_info gi;
    gi.name = g.name;
    gi.is_array = g.is_array;
    gi.length = g.is_array ? g.length : 1;
    gi.base = base;
    gi.init = g.init;
    base += gi.length;
    out.globals.push_back(std::move(gi));
  }
  out.mem_size = base;

  for (auto& l : p.locks) {
    out.sync_index[l.name] = static_cast<int>(out.syncs.size());
    out.syncs.push_back({l.name, sync_kind::lock, expr::lit(0)});
  }
  for (auto& b : p.barriers) {
    out.sync_index[b.name] = static_cast<int>(out.syncs.size());
    out.syncs.push_back({b.name, sync_kind::barrier, b.count});
  }
  for (auto& c : p.conds) {
    out.sync_index[c.name] = static_cast<int>(out.syncs.size());
    out.syncs.push_back({c.name, sync_kind::cond, expr::lit(0)});
  }

  for (size_t i = 0; i < p.functions.size(); ++i)
    out.fn_index[p.functions[i].name] = static_cast<int>(i);
  for (auto& f : p.functions) {
    bcdet::fn_compiler fc(p, f, out);
    out.fns.push_back(fc.run());
  }
  out.main_index = out.fn_index.at("main");
  return out;
}

} // namespace racx

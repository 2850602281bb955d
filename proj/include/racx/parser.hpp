#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "racx/ast.hpp"
#include "racx/lexer.hpp"

namespace racx {

// Recursive-descent parser for .mtc/.imtc sources. Multi-dimensional arrays
// are linearized here (declarations and subscripts), so everything downstream
// sees single-subscript arrays. Statement ordinals are assigned densely per
// function in pre-order.
class parser {
public:
  explicit parser(std::vector<token> toks) : m_toks(std::move(toks)) {}

  program run() {
    program p;
    bool saw_function = false;
    while (!at_eof()) {
      if (peek_kw("int") && !peek2_is_function()) {
        if (saw_function)
          fail("global declarations must precede all function definitions");
        parse_global(p);
      } else if (peek_kw("lock") || peek_kw("barrier") || peek_kw("cond")) {
        if (saw_function)
          fail("synchronization declarations must precede all function definitions");
        parse_sync_decl(p);
      } else if (peek_kw("void") || peek2_is_function()) {
        saw_function = true;
        parse_function(p);
      } else {
        fail("expected a declaration or function definition");
      }
    }
    return p;
  }

private:
  // ---- token helpers ----
  const token& cur() const { return m_toks[m_at]; }
  bool at_eof() const { return cur().k == token::kind::eof; }
  bool peek_sym(const char* s) const {
    return cur().k == token::kind::sym && cur().text == s;
  }
  bool peek_kw(const char* s) const {
    return cur().k == token::kind::kw && cur().text == s;
  }
  bool peek2_is_function() const {
    // "int IDENT (" at top level begins a function definition
    if (!peek_kw("int")) return false;
    if (m_at + 2 >= m_toks.size()) return false;
    return m_toks[m_at + 1].k == token::kind::ident &&
           m_toks[m_at + 2].k == token::kind::sym && m_toks[m_at + 2].text == "(";
  }
  token eat() { return m_toks[m_at++]; }
  token expect_sym(const char* s) {
    if (!peek_sym(s)) fail(std::string("expected '") + s + "'");
    return eat();
  }
  token expect_kw(const char* s) {
    if (!peek_kw(s)) fail(std::string("expected '") + s + "'");
    return eat();
  }
  token expect_ident() {
    if (cur().k != token::kind::ident) fail("expected identifier");
    return eat();
  }
  token expect_number() {
    if (cur().k != token::kind::number) fail("expected integer literal");
    return eat();
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw parse_error(msg + " (got '" + cur().text + "')", cur().pos);
  }

  // ---- declarations ----
  void parse_global(program& p) {
    expect_kw("int");
    token name = expect_ident();
    global_var g;
    g.name = name.text;
    g.pos = name.pos;
    std::vector<i64> dims;
    while (peek_sym("[")) {
      eat();
      token n = expect_number();
      if (n.value < 1) throw parse_error("array dimension must be >= 1", n.pos);
      dims.push_back(n.value);
      expect_sym("]");
    }
    if (!dims.empty()) {
      g.is_array = true;
      g.length = 1;
      for (i64 d : dims) g.length *= d;
      m_array_dims[g.name] = dims;
    }
    if (peek_sym("=")) {
      if (g.is_array) fail("array globals cannot take an initializer");
      eat();
      bool neg = false;
      if (peek_sym("-")) {
        eat();
        neg = true;
      }
      token n = expect_number();
      g.init = neg ? -n.value : n.value;
    }
    expect_sym(";");
    p.globals.push_back(std::move(g));
  }

  void parse_sync_decl(program& p) {
    token kw = eat();
    token name = expect_ident();
    if (kw.text == "lock") {
      p.locks.push_back({name.text});
    } else if (kw.text == "cond") {
      p.conds.push_back({name.text});
    } else { // barrier
      barrier_decl b;
      b.name = name.text;
      expect_sym("(");
      b.count = parse_expr();
      expect_sym(")");
      p.barriers.push_back(std::move(b));
    }
    expect_sym(";");
  }

  void parse_function(program& p) {
    function_decl f;
    if (peek_kw("void")) {
      eat();
      f.returns_int = false;
    } else {
      expect_kw("int");
      f.returns_int = true;
    }
    token name = expect_ident();
    f.name = name.text;
    f.pos = name.pos;
    expect_sym("(");
    if (!peek_sym(")")) {
      while (true) {
        expect_kw("int");
        token pn = expect_ident();
        f.params.push_back({pn.text});
        if (peek_sym(",")) {
          eat();
          continue;
        }
        break;
      }
    }
    expect_sym(")");
    m_ordinal = 0;
    m_fn = f.name;
    f.body = parse_block();
    p.functions.push_back(std::move(f));
  }

  // ---- statements ----
  std::vector<stmt> parse_block() {
    expect_sym("{");
    std::vector<stmt> out;
    while (!peek_sym("}")) out.push_back(parse_stmt());
    eat();
    return out;
  }

  stmt parse_stmt() {
    std::vector<int> traces;
    while (peek_sym("@")) {
      eat();
      token t = expect_ident();
      if (t.text != "trace") throw parse_error("unknown annotation '@" + t.text + "'", t.pos);
      expect_sym("(");
      token n = expect_number();
      traces.push_back((int)n.value);
      expect_sym(")");
    }
    stmt s = parse_stmt_inner();
    std::sort(traces.begin(), traces.end());
    traces.erase(std::unique(traces.begin(), traces.end()), traces.end());
    s.trace_sites = std::move(traces);
    return s;
  }

  stmt new_stmt(stmt::kind k, source_pos pos) {
    stmt s;
    s.k = k;
    s.pos = pos;
    s.site.function = m_fn;
    s.site.ordinal = m_ordinal++;
    s.site.line = pos.line;
    return s;
  }

  stmt parse_stmt_inner() {
    source_pos pos = cur().pos;
    if (peek_kw("int")) {
      eat();
      token n = expect_ident();
      stmt s = new_stmt(stmt::kind::decl, pos);
      s.name = n.text;
      if (peek_sym("=")) {
        eat();
        s.exprs.push_back(parse_expr());
      }
      expect_sym(";");
      return s;
    }
    if (peek_kw("if")) {
      eat();
      stmt s = new_stmt(stmt::kind::if_, pos);
      expect_sym("(");
      s.exprs.push_back(parse_expr());
      expect_sym(")");
      s.body = parse_block();
      if (peek_kw("else")) {
        eat();
        s.else_body = parse_block();
      }
      return s;
    }
    if (peek_kw("while")) {
      eat();
      stmt s = new_stmt(stmt::kind::while_, pos);
      expect_sym("(");
      s.exprs.push_back(parse_expr());
      expect_sym(")");
      s.body = parse_block();
      return s;
    }
    if (peek_kw("for")) {
      eat();
      stmt s = new_stmt(stmt::kind::for_, pos);
      expect_sym("(");
      token v = expect_ident();
      s.for_var = v.text;
      expect_sym("=");
      s.exprs.push_back(parse_expr()); // init rhs
      expect_sym(";");
      s.exprs.push_back(parse_expr()); // condition
      expect_sym(";");
      token v2 = expect_ident();
      if (v2.text != s.for_var)
        throw parse_error("for-loop increment must assign the loop counter '" +
                              s.for_var + "'",
                          v2.pos);
      expect_sym("=");
      s.exprs.push_back(parse_expr()); // increment rhs
      expect_sym(")");
      s.body = parse_block();
      return s;
    }
    if (peek_kw("return")) {
      eat();
      stmt s = new_stmt(stmt::kind::ret, pos);
      if (!peek_sym(";")) s.exprs.push_back(parse_expr());
      expect_sym(";");
      return s;
    }
    if (peek_kw("spawn")) {
      eat();
      stmt s = new_stmt(stmt::kind::spawn, pos);
      s.name = expect_ident().text;
      expect_sym("(");
      s.exprs.push_back(parse_expr());
      expect_sym(")");
      expect_sym(";");
      return s;
    }
    if (peek_kw("join")) {
      eat();
      stmt s = new_stmt(stmt::kind::join, pos);
      expect_sym(";");
      return s;
    }
    if (peek_kw("lock") || peek_kw("unlock") || peek_kw("barrier") ||
        peek_kw("signal") || peek_kw("wait")) {
      token kw = eat();
      stmt::kind k = kw.text == "lock"      ? stmt::kind::lock
                     : kw.text == "unlock"  ? stmt::kind::unlock
                     : kw.text == "barrier" ? stmt::kind::barrier
                     : kw.text == "signal"  ? stmt::kind::signal
                                            : stmt::kind::wait;
      stmt s = new_stmt(k, pos);
      s.name = expect_ident().text;
      expect_sym(";");
      return s;
    }
    // assignment or call statement, both start with an identifier
    token id = expect_ident();
    if (peek_sym("(")) {
      stmt s = new_stmt(stmt::kind::call, pos);
      s.name = id.text;
      eat();
      if (!peek_sym(")")) {
        while (true) {
          s.exprs.push_back(parse_expr());
          if (peek_sym(",")) {
            eat();
            continue;
          }
          break;
        }
      }
      expect_sym(")");
      expect_sym(";");
      return s;
    }
    stmt s = new_stmt(stmt::kind::assign, pos);
    s.lhs.name = id.text;
    s.lhs.pos = id.pos;
    if (peek_sym("[")) s.lhs.index = parse_subscripts(id.text, id.pos);
    expect_sym("=");
    s.exprs.push_back(parse_expr());
    expect_sym(";");
    return s;
  }

  // ---- expressions ----
  expr parse_expr() { return parse_lor(); }

  expr parse_lor() {
    expr e = parse_land();
    while (peek_sym("||")) {
      source_pos p = eat().pos;
      expr r = parse_land();
      e = expr::bin(binop::lor, std::move(e), std::move(r));
      e.pos = p;
    }
    return e;
  }
  expr parse_land() {
    expr e = parse_equality();
    while (peek_sym("&&")) {
      source_pos p = eat().pos;
      expr r = parse_equality();
      e = expr::bin(binop::land, std::move(e), std::move(r));
      e.pos = p;
    }
    return e;
  }
  expr parse_equality() {
    expr e = parse_rel();
    while (peek_sym("==") || peek_sym("!=")) {
      binop op = peek_sym("==") ? binop::eq : binop::ne;
      source_pos p = eat().pos;
      expr r = parse_rel();
      e = expr::bin(op, std::move(e), std::move(r));
      e.pos = p;
    }
    return e;
  }
  expr parse_rel() {
    expr e = parse_add();
    while (peek_sym("<") || peek_sym("<=") || peek_sym(">") || peek_sym(">=")) {
      binop op = peek_sym("<")    ? binop::lt
                 : peek_sym("<=") ? binop::le
                 : peek_sym(">")  ? binop::gt
                                  : binop::ge;
      source_pos p = eat().pos;
      expr r = parse_add();
      e = expr::bin(op, std::move(e), std::move(r));
      e.pos = p;
    }
    return e;
  }
  expr parse_add() {
    expr e = parse_mul();
    while (peek_sym("+") || peek_sym("-")) {
      binop op = peek_sym("+") ? binop::add : binop::sub;
      source_pos p = eat().pos;
      expr r = parse_mul();
      e = expr::bin(op, std::move(e), std::move(r));
      e.pos = p;
    }
    return e;
  }
  expr parse_mul() {
    expr e = parse_unary();
    while (peek_sym("*") || peek_sym("/") || peek_sym("%")) {
      binop op = peek_sym("*")   ? binop::mul
                 : peek_sym("/") ? binop::div
                                 : binop::mod;
      source_pos p = eat().pos;
      expr r = parse_unary();
      e = expr::bin(op, std::move(e), std::move(r));
      e.pos = p;
    }
    return e;
  }
  expr parse_unary() {
    if (peek_sym("-") || peek_sym("!")) {
      token t = eat();
      expr inner = parse_unary();
      expr e;
      e.k = expr::kind::unary;
      e.uop = t.text == "-" ? unop::neg : unop::lnot;
      e.pos = t.pos;
      e.kids.push_back(std::move(inner));
      return e;
    }
    return parse_primary();
  }
  expr parse_primary() {
    if (cur().k == token::kind::number) {
      token n = eat();
      expr e = expr::lit(n.value);
      e.pos = n.pos;
      return e;
    }
    if (peek_sym("(")) {
      eat();
      expr e = parse_expr();
      expect_sym(")");
      return e;
    }
    token id = expect_ident();
    if (peek_sym("(")) {
      eat();
      expr e;
      e.k = expr::kind::call;
      e.name = id.text;
      e.pos = id.pos;
      if (!peek_sym(")")) {
        while (true) {
          e.kids.push_back(parse_expr());
          if (peek_sym(",")) {
            eat();
            continue;
          }
          break;
        }
      }
      expect_sym(")");
      return e;
    }
    if (peek_sym("[")) {
      expr e;
      e.k = expr::kind::array_elem;
      e.name = id.text;
      e.pos = id.pos;
      e.kids.push_back(parse_subscripts(id.text, id.pos));
      return e;
    }
    expr e = expr::variable(id.text);
    e.pos = id.pos;
    return e;
  }

  // parse one or more [e] groups and fold them into a single linearized index
  expr parse_subscripts(const std::string& array, source_pos pos) {
    std::vector<expr> idx;
    while (peek_sym("[")) {
      eat();
      idx.push_back(parse_expr());
      expect_sym("]");
    }
    auto it = m_array_dims.find(array);
    if (it == m_array_dims.end())
      throw parse_error("subscript on '" + array + "' which is not a declared array",
                        pos);
    const std::vector<i64>& dims = it->second;
    if (idx.size() != dims.size())
      throw parse_error("array '" + array + "' takes " +
                            std::to_string(dims.size()) + " subscript(s), got " +
                            std::to_string(idx.size()),
                        pos);
    expr acc = std::move(idx[0]);
    for (size_t i = 1; i < idx.size(); ++i) {
      acc = expr::bin(binop::add,
                      expr::bin(binop::mul, std::move(acc), expr::lit(dims[i])),
                      std::move(idx[i]));
    }
    return acc;
  }

  std::vector<token> m_toks;
  size_t m_at = 0;
  int m_ordinal = 0;
  std::string m_fn;
  std::map<std::string, std::vector<i64>> m_array_dims;
};

inline program parse_program(const std::string& source) {
  return parser(lexer(source).run()).run();
}

} // namespace racx

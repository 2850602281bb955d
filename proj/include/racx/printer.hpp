#pragma once

#include <map>
#include <sstream>
#include <string>
#include <utility>

#include "racx/ast.hpp"

namespace racx {

// canonical rendering: parse(print(parse(x))) == parse(print(x)).
// The printed text is the interchange format; digests are taken over it.

inline int binop_prec(binop op) {
  switch (op) {
  case binop::lor: return 1;
  case binop::land: return 2;
  case binop::eq:
  case binop::ne: return 3;
  case binop::lt:
  case binop::le:
  case binop::gt:
  case binop::ge: return 4;
  case binop::add:
  case binop::sub: return 5;
  default: return 6; // mul/div/mod
  }
}

inline int expr_prec(const expr& e) {
  switch (e.k) {
  case expr::kind::binary: return binop_prec(e.bop);
  case expr::kind::unary: return 7;
  default: return 8;
  }
}

inline void expr_string_rec(const expr& e, std::string& out) {
  switch (e.k) {
  case expr::kind::literal:
    out += std::to_string(e.value);
    break;
  case expr::kind::var:
    out += e.name;
    break;
  case expr::kind::array_elem:
    out += e.name;
    out += '[';
    expr_string_rec(e.kids[0], out);
    out += ']';
    break;
  case expr::kind::call: {
    out += e.name;
    out += '(';
    for (size_t i = 0; i < e.kids.size(); ++i) {
      if (i) out += ", ";
      expr_string_rec(e.kids[i], out);
    }
    out += ')';
    break;
  }
  case expr::kind::unary: {
    out += e.uop == unop::neg ? '-' : '!';
    bool paren = expr_prec(e.kids[0]) <= 7 && e.kids[0].k != expr::kind::literal &&
                 e.kids[0].k != expr::kind::var &&
                 e.kids[0].k != expr::kind::array_elem &&
                 e.kids[0].k != expr::kind::call;
    if (paren) out += '(';
    expr_string_rec(e.kids[0], out);
    if (paren) out += ')';
    break;
  }
  case expr::kind::binary: {
    int p = binop_prec(e.bop);
    bool lparen = expr_prec(e.kids[0]) < p;
    bool rparen = expr_prec(e.kids[1]) <= p;
    if (lparen) out += '(';
    expr_string_rec(e.kids[0], out);
    if (lparen) out += ')';
    out += ' ';
    out += binop_text(e.bop);
    out += ' ';
    if (rparen) out += '(';
    expr_string_rec(e.kids[1], out);
    if (rparen) out += ')';
    break;
  }
  }
}

inline std::string expr_string(const expr& e) {
  std::string out;
  expr_string_rec(e, out);
  return out;
}

namespace detail {

class renderer {
public:
  explicit renderer(bool update_lines) : m_update(update_lines) {}

  std::string run(program& p) {
    for (auto& g : p.globals) {
      m_out += "int " + g.name;
      if (g.is_array) m_out += "[" + std::to_string(g.length) + "]";
      if (!g.is_array && g.init != 0) m_out += " = " + std::to_string(g.init);
      line(";");
    }
    for (auto& l : p.locks) {
      m_out += "lock " + l.name;
      line(";");
    }
    for (auto& b : p.barriers) {
      m_out += "barrier " + b.name + "(" + expr_string(b.count) + ")";
      line(";");
    }
    for (auto& c : p.conds) {
      m_out += "cond " + c.name;
      line(";");
    }
    for (auto& f : p.functions) {
      line("");
      m_out += f.returns_int ? "int " : "void ";
      m_out += f.name + "(";
      for (size_t i = 0; i < f.params.size(); ++i) {
        if (i) m_out += ", ";
        m_out += "int " + f.params[i].name;
      }
      line(") {");
      ++m_indent;
      block(f.body);
      --m_indent;
      line("}");
    }
    return std::move(m_out);
  }

private:
  void line(const std::string& tail) {
    m_out += tail;
    m_out += '\n';
    ++m_line;
  }
  void open(stmt& s) {
    m_out += std::string(m_indent * 2, ' ');
    for (int t : s.trace_sites) m_out += "@trace(" + std::to_string(t) + ") ";
    if (m_update) s.site.line = m_line;
  }
  void block(std::vector<stmt>& body) {
    for (auto& s : body) statement(s);
  }
  void statement(stmt& s) {
    open(s);
    switch (s.k) {
    case stmt::kind::decl:
      m_out += "int " + s.name;
      if (!s.exprs.empty()) m_out += " = " + expr_string(s.exprs[0]);
      line(";");
      break;
    case stmt::kind::assign:
      m_out += s.lhs.name;
      if (s.lhs.index) m_out += "[" + expr_string(*s.lhs.index) + "]";
      m_out += " = " + expr_string(s.exprs[0]);
      line(";");
      break;
    case stmt::kind::if_:
      m_out += "if (" + expr_string(s.exprs[0]) + ") {";
      line("");
      ++m_indent;
      block(s.body);
      --m_indent;
      m_out += std::string(m_indent * 2, ' ');
      if (s.else_body.empty()) {
        line("}");
      } else {
        line("} else {");
        ++m_indent;
        block(s.else_body);
        --m_indent;
        m_out += std::string(m_indent * 2, ' ');
        line("}");
      }
      break;
    case stmt::kind::while_:
      m_out += "while (" + expr_string(s.exprs[0]) + ") {";
      line("");
      ++m_indent;
      block(s.body);
      --m_indent;
      m_out += std::string(m_indent * 2, ' ');
      line("}");
      break;
    case stmt::kind::for_:
      m_out += "for (" + s.for_var + " = " + expr_string(s.exprs[0]) + "; " +
               expr_string(s.exprs[1]) + "; " + s.for_var + " = " +
               expr_string(s.exprs[2]) + ") {";
      line("");
      ++m_indent;
      block(s.body);
      --m_indent;
      m_out += std::string(m_indent * 2, ' ');
      line("}");
      break;
    case stmt::kind::call: {
      m_out += s.name + "(";
      for (size_t i = 0; i < s.exprs.size(); ++i) {
        if (i) m_out += ", ";
        m_out += expr_string(s.exprs[i]);
      }
      m_out += ")";
      line(";");
      break;
    }
    case stmt::kind::spawn:
      m_out += "spawn " + s.name + "(" + expr_string(s.exprs[0]) + ")";
      line(";");
      break;
    case stmt::kind::join:
      m_out += "join";
      line(";");
      break;
    case stmt::kind::lock:
      m_out += "lock " + s.name;
      line(";");
      break;
    case stmt::kind::unlock:
      m_out += "unlock " + s.name;
      line(";");
      break;
    case stmt::kind::barrier:
      m_out += "barrier " + s.name;
      line(";");
      break;
    case stmt::kind::signal:
      m_out += "signal " + s.name;
      line(";");
      break;
    case stmt::kind::wait:
      m_out += "wait " + s.name;
      line(";");
      break;
    case stmt::kind::ret:
      m_out += "return";
      if (!s.exprs.empty()) m_out += " " + expr_string(s.exprs[0]);
      line(";");
      break;
    }
  }

  bool m_update;
  std::string m_out;
  int m_indent = 0;
  int m_line = 1;
};

} // namespace detail

inline std::string print_program(const program& p) {
  program& mut = const_cast<program&>(p); // lines untouched when update=false
  return detail::renderer(false).run(mut);
}

// maps (function, old ordinal) -> new site for every statement that had a
// valid ordinal before renumbering; freshly inserted statements carry -1
using site_remap = std::map<std::pair<std::string, int>, site_id>;

// renumber ordinals densely in pre-order and recompute canonical line numbers
inline site_remap canonicalize_program(program& p) {
  site_remap remap;
  for (auto& f : p.functions) {
    int next = 0;
    walk_stmts_mut(f.body, [&](stmt& s) {
      int old = s.site.ordinal;
      s.site.function = f.name;
      s.site.ordinal = next++;
      if (old >= 0) remap[{f.name, old}] = s.site;
    });
  }
  detail::renderer(true).run(p); // refresh line numbers
  // remap targets got final lines only now; rebuild with updated sites
  site_remap fixed;
  for (auto& f : p.functions) {
    std::map<int, const stmt*> by_ord;
    walk_stmts(f.body, [&](const stmt& s) { by_ord[s.site.ordinal] = &s; });
    for (auto& [key, v] : remap) {
      if (key.first != f.name) continue;
      fixed[key] = by_ord.at(v.ordinal)->site;
    }
  }
  return fixed;
}

inline std::string program_digest_hex(const program& p) {
  return to_hex16(fnv1a64(print_program(p)));
}

// --ast dump: one line per statement with its SiteId
inline std::string dump_ast(const program& p) {
  std::ostringstream os;
  for (auto& g : p.globals) {
    os << "global " << g.name;
    if (g.is_array) os << "[" << g.length << "]";
    if (!g.is_array && g.init != 0) os << " = " << g.init;
    os << "\n";
  }
  for (auto& l : p.locks) os << "lock " << l.name << "\n";
  for (auto& b : p.barriers)
    os << "barrier " << b.name << "(" << expr_string(b.count) << ")\n";
  for (auto& c : p.conds) os << "cond " << c.name << "\n";
  for (auto& f : p.functions) {
    os << "function " << f.name << "(";
    for (size_t i = 0; i < f.params.size(); ++i) {
      if (i) os << ", ";
      os << f.params[i].name;
    }
    os << ") -> " << (f.returns_int ? "int" : "void") << "\n";
    struct dumper {
      std::ostringstream& os;
      void run(const std::vector<stmt>& body, int depth) {
        std::string pad(2 * (depth + 1), ' ');
        for (auto& s : body) {
          os << pad << "[" << s.site.str() << "] ";
          switch (s.k) {
          case stmt::kind::decl:
            os << "decl " << s.name;
            if (!s.exprs.empty()) os << " = " << expr_string(s.exprs[0]);
            break;
          case stmt::kind::assign:
            os << "assign " << s.lhs.name;
            if (s.lhs.index) os << "[" << expr_string(*s.lhs.index) << "]";
            os << " = " << expr_string(s.exprs[0]);
            break;
          case stmt::kind::if_: os << "if " << expr_string(s.exprs[0]); break;
          case stmt::kind::while_: os << "while " << expr_string(s.exprs[0]); break;
          case stmt::kind::for_:
            os << "for " << s.for_var << " = " << expr_string(s.exprs[0]) << "; "
               << expr_string(s.exprs[1]) << "; " << s.for_var << " = "
               << expr_string(s.exprs[2]);
            break;
          case stmt::kind::call: os << "call " << s.name; break;
          case stmt::kind::spawn:
            os << "spawn " << s.name << "(" << expr_string(s.exprs[0]) << ")";
            break;
          case stmt::kind::join: os << "join"; break;
          case stmt::kind::lock: os << "lock " << s.name; break;
          case stmt::kind::unlock: os << "unlock " << s.name; break;
          case stmt::kind::barrier: os << "barrier " << s.name; break;
          case stmt::kind::signal: os << "signal " << s.name; break;
          case stmt::kind::wait: os << "wait " << s.name; break;
          case stmt::kind::ret:
            os << "return";
            if (!s.exprs.empty()) os << " " << expr_string(s.exprs[0]);
            break;
          }
          if (!s.trace_sites.empty()) {
            os << " [trace:";
            for (size_t i = 0; i < s.trace_sites.size(); ++i)
              os << (i ? "," : " ") << s.trace_sites[i];
            os << "]";
          }
          os << "\n";
          if (!s.body.empty()) run(s.body, depth + 1);
          if (!s.else_body.empty()) {
            os << pad << "else:\n";
            run(s.else_body, depth + 1);
          }
        }
      }
    };
    dumper{os}.run(f.body, 0);
  }
  return os.str();
}

} // namespace racx

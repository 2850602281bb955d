#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "racx/ast.hpp"

namespace racx {

// linear integer form: sum(coeff * var) + constant
struct affine {
  std::map<std::string, i64> terms; // no zero coefficients stored
  i64 c = 0;

  static affine constant(i64 v) {
    affine a;
    a.c = v;
    return a;
  }
  static affine variable(const std::string& name) {
    affine a;
    a.terms[name] = 1;
    return a;
  }
  bool is_constant() const { return terms.empty(); }

  affine& operator+=(const affine& o) {
    c = wadd(c, o.c);
    for (auto& [v, k] : o.terms) add_term(v, k);
    return *this;
  }
  affine& operator-=(const affine& o) {
    c = wsub(c, o.c);
    for (auto& [v, k] : o.terms) add_term(v, wsub(0, k));
    return *this;
  }
  affine& scale(i64 k) {
    if (k == 0) {
      terms.clear();
      c = 0;
      return *this;
    }
    c = wmul(c, k);
    for (auto& [v, co] : terms) co = wmul(co, k);
    return *this;
  }
  void add_term(const std::string& v, i64 k) {
    auto it = terms.find(v);
    if (it == terms.end()) {
      if (k != 0) terms[v] = k;
      return;
    }
    it->second = wadd(it->second, k);
    if (it->second == 0) terms.erase(it);
  }
  bool operator==(const affine& o) const { return c == o.c && terms == o.terms; }

  std::string str() const {
    std::string out;
    for (auto& [v, k] : terms) {
      if (!out.empty()) out += " + ";
      if (k == 1)
        out += v;
      else
        out += std::to_string(k) + "*" + v;
    }
    if (out.empty()) return std::to_string(c);
    if (c != 0) out += " + " + std::to_string(c);
    return out;
  }
};

// env maps a variable name to its affine meaning (a parameter maps to itself);
// nullopt from env or any non-linear construct makes the whole result nullopt
inline std::optional<affine>
expr_to_affine(const expr& e,
               const std::function<std::optional<affine>(const std::string&)>& env) {
  switch (e.k) {
  case expr::kind::literal: return affine::constant(e.value);
  case expr::kind::var: return env(e.name);
  case expr::kind::unary: {
    if (e.uop != unop::neg) return std::nullopt;
    auto a = expr_to_affine(e.kids[0], env);
    if (!a) return std::nullopt;
    a->scale(-1);
    return a;
  }
  case expr::kind::binary: {
    auto l = expr_to_affine(e.kids[0], env);
    if (!l) return std::nullopt;
    auto r = expr_to_affine(e.kids[1], env);
    if (!r) return std::nullopt;
    switch (e.bop) {
    case binop::add: *l += *r; return l;
    case binop::sub: *l -= *r; return l;
    case binop::mul:
      if (r->is_constant()) {
        l->scale(r->c);
        return l;
      }
      if (l->is_constant()) {
        r->scale(l->c);
        return r;
      }
      return std::nullopt;
    default: return std::nullopt;
    }
  }
  default: return std::nullopt; // array_elem, call
  }
}

} // namespace racx

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "racx/affine.hpp"
#include "racx/ast.hpp"
#include "racx/common.hpp"
#include "racx/printer.hpp"
#include "racx/range.hpp"

namespace racx {

// Can two dynamic instances of (possibly the same) array access touch the
// same element? The objective asks subscript#1 == subscript#2; the
// constraints carry both instances' ranges with disjoint namespaces.
struct cross_range_csp {
  expr obj_lhs = expr::lit(0);
  expr obj_rhs = expr::lit(0);
  std::vector<rc> constraints;

  std::string objective_text() const {
    return expr_string(obj_lhs) + " == " + expr_string(obj_rhs);
  }
};

struct csp_verdict {
  enum class kind { unsat, sat, unknown };
  kind k = kind::unknown;
  std::map<std::string, i64> witness; // populated for sat
  std::string reason;                 // populated for unknown / unsat detail

  bool is_unsat() const { return k == kind::unsat; }
  bool is_sat() const { return k == kind::sat; }
  std::string str() const {
    if (k == kind::unsat) return "UNSAT(" + reason + ")";
    if (k == kind::unknown) return "UNKNOWN(" + reason + ")";
    std::string s = "SAT(";
    bool first = true;
    for (auto& [v, x] : witness) {
      if (!first) s += ", ";
      first = false;
      s += v + "=" + std::to_string(x);
    }
    return s + ")";
  }
};

struct csp_options {
  i64 id_bound = 64;       // scan width for variables bounded on one side only
  i64 budget = 10000000;   // full assignments before giving up
  bool interval_pruning = true;
};

// combine two resolved instances into one CSP; every variable gets an
// instance tag so the namespaces cannot collide
inline cross_range_csp
build_cross_range_csp(const access_instance& a1, const spawn_instance* s1,
                      const access_instance& a2, const spawn_instance* s2,
                      const std::string& distinct_var = "") {
  cross_range_csp csp;
  auto tag = [](int n) {
    return [n](const std::string& v) { return v + "#" + std::to_string(n); };
  };
  csp.obj_lhs = a1.subscript;
  rangedet::rename_expr_vars(csp.obj_lhs, tag(1));
  csp.obj_rhs = a2.subscript;
  rangedet::rename_expr_vars(csp.obj_rhs, tag(2));
  for (auto& c : rangedet::rename_rcs(a1.constraints, tag(1)))
    csp.constraints.push_back(c);
  if (s1)
    for (auto& c : rangedet::rename_rcs(s1->constraints, tag(1)))
      csp.constraints.push_back(c);
  for (auto& c : rangedet::rename_rcs(a2.constraints, tag(2)))
    csp.constraints.push_back(c);
  if (s2)
    for (auto& c : rangedet::rename_rcs(s2->constraints, tag(2)))
      csp.constraints.push_back(c);
  if (!distinct_var.empty()) {
    rc c;
    c.a = affine::variable(distinct_var + "#1");
    c.a -= affine::variable(distinct_var + "#2");
    c.r = rel_kind::ne;
    csp.constraints.push_back(std::move(c));
  }
  return csp;
}

namespace cspdet {

inline i64 floor_div(i64 a, i64 b) {
  i64 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline i64 ceil_div(i64 a, i64 b) { return -floor_div(-a, b); }

struct interval {
  std::optional<i64> lo, hi;
  bool finite() const { return lo && hi; }
  bool empty() const { return lo && hi && *lo > *hi; }
};

inline std::optional<i64> eval_expr(const expr& e,
                                    const std::map<std::string, i64>& env) {
  switch (e.k) {
  case expr::kind::literal: return e.value;
  case expr::kind::var: {
    auto it = env.find(e.name);
    if (it == env.end()) return std::nullopt;
    return it->second;
  }
  case expr::kind::unary: {
    auto v = eval_expr(e.kids[0], env);
    if (!v) return std::nullopt;
    return e.uop == unop::neg ? wsub(0, *v) : static_cast<i64>(*v == 0);
  }
  case expr::kind::binary: {
    auto l = eval_expr(e.kids[0], env);
    auto r = eval_expr(e.kids[1], env);
    if (!l || !r) return std::nullopt;
    switch (e.bop) {
    case binop::add: return wadd(*l, *r);
    case binop::sub: return wsub(*l, *r);
    case binop::mul: return wmul(*l, *r);
    case binop::div:
      if (*r == 0) return std::nullopt;
      return *l / *r;
    case binop::mod:
      if (*r == 0) return std::nullopt;
      return *l % *r;
    case binop::lt: return *l < *r;
    case binop::le: return *l <= *r;
    case binop::gt: return *l > *r;
    case binop::ge: return *l >= *r;
    case binop::eq: return *l == *r;
    case binop::ne: return *l != *r;
    case binop::land: return (*l != 0) && (*r != 0);
    default: return (*l != 0) || (*r != 0);
    }
  }
  default: return std::nullopt; // array element or call: not evaluable here
  }
}

inline i64 eval_affine(const affine& a, const std::map<std::string, i64>& env) {
  i64 v = a.c;
  for (auto& [name, k] : a.terms) v = wadd(v, wmul(k, env.at(name)));
  return v;
}

inline bool rc_holds(const rc& c, const std::map<std::string, i64>& env) {
  i64 v = eval_affine(c.a, env);
  switch (c.r) {
  case rel_kind::ge: return v >= 0;
  case rel_kind::le: return v <= 0;
  case rel_kind::eq: return v == 0;
  default: return v != 0;
  }
}

inline bool expr_evaluable(const expr& e) {
  bool ok = true;
  walk_exprs(e, [&](const expr& x) {
    if (x.k == expr::kind::array_elem || x.k == expr::kind::call) ok = false;
  });
  return ok;
}

inline void collect_vars(const expr& e, std::set<std::string>& out) {
  walk_exprs(e, [&](const expr& x) {
    if (x.k == expr::kind::var) out.insert(x.name);
  });
}

} // namespace cspdet

class csp_solver {
public:
  csp_solver(const cross_range_csp& csp, const csp_options& opt)
      : m_orig(csp), m_csp(csp), m_opt(opt) {}

  csp_verdict solve() {
    if (!cspdet::expr_evaluable(m_csp.obj_lhs) ||
        !cspdet::expr_evaluable(m_csp.obj_rhs))
      return unknown("subscript contains an array or call expression");

    collect_all_vars();
    make_obj_diff();
    eliminate_equalities();

    // constant constraints decide themselves
    for (auto it = m_csp.constraints.begin(); it != m_csp.constraints.end();) {
      if (it->a.terms.empty()) {
        std::map<std::string, i64> none;
        if (!cspdet::rc_holds(*it, none))
          return unsat("constraint " + it->str() + " is false");
        it = m_csp.constraints.erase(it);
      } else {
        ++it;
      }
    }

    derive_intervals();
    propagate_intervals();
    for (auto& [v, iv] : m_intervals)
      if (iv.empty()) return unsat("empty domain for " + v);

    if (auto verdict = fix_free_vars()) return *verdict;
    if (auto verdict = affine_disequality()) return *verdict;

    return enumerate();
  }

  i64 assignments_tried() const { return m_tried; }

private:
  csp_verdict unknown(const std::string& why) {
    csp_verdict v;
    v.k = csp_verdict::kind::unknown;
    v.reason = why;
    return v;
  }

  csp_verdict unsat(const std::string& why) {
    csp_verdict v;
    v.k = csp_verdict::kind::unsat;
    v.reason = why;
    return v;
  }

  void collect_all_vars() {
    cspdet::collect_vars(m_csp.obj_lhs, m_vars);
    cspdet::collect_vars(m_csp.obj_rhs, m_vars);
    for (auto& c : m_csp.constraints)
      for (auto& [v, k] : c.a.terms) m_vars.insert(v);
  }

  void make_obj_diff() {
    auto ident = [](const std::string& v) -> std::optional<affine> {
      return affine::variable(v);
    };
    auto l = expr_to_affine(m_csp.obj_lhs, ident);
    auto r = expr_to_affine(m_csp.obj_rhs, ident);
    if (l && r) {
      affine d = *l;
      d -= *r;
      m_obj_diff = d;
    }
  }

  // substitute away variables pinned by an equality with a unit coefficient
  void eliminate_equalities() {
    bool again = true;
    while (again) {
      again = false;
      for (size_t i = 0; i < m_csp.constraints.size(); ++i) {
        rc& c = m_csp.constraints[i];
        if (c.r != rel_kind::eq) continue;
        std::string var;
        i64 coeff = 0;
        for (auto& [v, k] : c.a.terms)
          if ((k == 1 || k == -1) && var.empty()) {
            var = v;
            coeff = k;
          }
        if (var.empty()) continue;
        // var = -(rest)/coeff
        affine rest = c.a;
        rest.terms.erase(var);
        if (coeff == 1) rest.scale(-1);
        std::map<std::string, affine> repl{{var, rest}};
        m_elim.push_back({var, rest});
        m_csp.constraints.erase(m_csp.constraints.begin() +
                                static_cast<long>(i));
        rangedet::subst_rcs(m_csp.constraints, repl);
        rangedet::subst_expr_vars(m_csp.obj_lhs, repl);
        rangedet::subst_expr_vars(m_csp.obj_rhs, repl);
        if (m_obj_diff) {
          std::vector<rc> tmp{{*m_obj_diff, rel_kind::eq}};
          rangedet::subst_rcs(tmp, repl);
          m_obj_diff = tmp[0].a;
        }
        m_vars.erase(var);
        again = true;
        break;
      }
    }
  }

  void derive_intervals() {
    for (auto& v : m_vars) m_intervals[v] = {};
    for (auto& c : m_csp.constraints) {
      if (c.a.terms.size() != 1) continue;
      auto [v, a] = *c.a.terms.begin();
      i64 k = c.a.c; // a*v + k REL 0
      auto& iv = m_intervals[v];
      auto tighten_lo = [&](i64 x) { iv.lo = iv.lo ? std::max(*iv.lo, x) : x; };
      auto tighten_hi = [&](i64 x) { iv.hi = iv.hi ? std::min(*iv.hi, x) : x; };
      switch (c.r) {
      case rel_kind::ge: // a*v >= -k
        if (a > 0) tighten_lo(cspdet::ceil_div(-k, a));
        else tighten_hi(cspdet::floor_div(-k, a));
        break;
      case rel_kind::le:
        if (a > 0) tighten_hi(cspdet::floor_div(-k, a));
        else tighten_lo(cspdet::ceil_div(-k, a));
        break;
      case rel_kind::eq:
        if (-k % a == 0) {
          tighten_lo(-k / a);
          tighten_hi(-k / a);
        } else {
          tighten_lo(1);
          tighten_hi(0); // unsatisfiable: empty interval
        }
        break;
      default: break; // disequality never narrows an interval
      }
    }
  }

  // bounds consistency over multi-variable constraints: solve each one for
  // each of its variables against the interval extremes of the others. Every
  // derived bound is implied by the constraint set, so tightening never
  // loses a solution; the round cap keeps mutually-growing chains finite
  void propagate_intervals() {
    for (int round = 0; round < 32; ++round) {
      bool changed = false;
      for (auto& c : m_csp.constraints) {
        if (c.r == rel_kind::ne || c.a.terms.size() < 2) continue;
        for (auto& [v, kv] : c.a.terms) {
          bool lo_ok = true, hi_ok = true;
          i64 rlo = c.a.c, rhi = c.a.c;
          for (auto& [u, ku] : c.a.terms) {
            if (u == v) continue;
            auto& iu = m_intervals[u];
            auto fold = [&](const std::optional<i64>& end, bool to_lo) {
              if (!end) {
                (to_lo ? lo_ok : hi_ok) = false;
                return;
              }
              i64& side = to_lo ? rlo : rhi;
              side = wadd(side, wmul(ku, *end));
            };
            if (ku > 0) {
              fold(iu.lo, true);
              fold(iu.hi, false);
            } else {
              fold(iu.hi, true);
              fold(iu.lo, false);
            }
          }
          auto& iv = m_intervals[v];
          auto tighten_lo = [&](i64 x) {
            if (!iv.lo || x > *iv.lo) {
              iv.lo = x;
              changed = true;
            }
          };
          auto tighten_hi = [&](i64 x) {
            if (!iv.hi || x < *iv.hi) {
              iv.hi = x;
              changed = true;
            }
          };
          // kv*v + rest REL 0 with rest confined to [rlo, rhi]
          if ((c.r == rel_kind::ge || c.r == rel_kind::eq) && hi_ok) {
            if (kv > 0) // kv*v >= -rhi
              tighten_lo(cspdet::ceil_div(-rhi, kv));
            else
              tighten_hi(cspdet::floor_div(-rhi, kv));
          }
          if ((c.r == rel_kind::le || c.r == rel_kind::eq) && lo_ok) {
            if (kv > 0) // kv*v <= -rlo
              tighten_hi(cspdet::floor_div(-rlo, kv));
            else
              tighten_lo(cspdet::ceil_div(-rlo, kv));
          }
        }
      }
      if (!changed) break;
    }
  }

  // a variable that appears neither in the objective nor next to another
  // variable is satisfied on its own; fix a value for it up front so it
  // cannot block an UNSAT conclusion
  std::optional<csp_verdict> fix_free_vars() {
    std::set<std::string> relevant;
    cspdet::collect_vars(m_csp.obj_lhs, relevant);
    cspdet::collect_vars(m_csp.obj_rhs, relevant);
    for (auto& c : m_csp.constraints)
      if (c.a.terms.size() >= 2)
        for (auto& [v, k] : c.a.terms) relevant.insert(v);
    std::vector<std::string> loose;
    for (auto& v : m_vars)
      if (!relevant.count(v)) loose.push_back(v);
    for (auto& v : loose) {
      std::vector<rc> own;
      for (auto& c : m_csp.constraints)
        if (c.a.terms.size() == 1 && c.a.terms.begin()->first == v)
          own.push_back(c);
      auto& iv = m_intervals[v];
      // a disequality removes at most one value, so |own|+1 candidates from
      // the bounded end either succeed or exhaust a finite domain
      i64 base = iv.lo ? *iv.lo : (iv.hi ? *iv.hi : 0);
      i64 dir = (!iv.lo && iv.hi) ? -1 : 1;
      std::optional<i64> chosen;
      bool domain_exhausted = false;
      for (i64 t = 0; t <= static_cast<i64>(own.size()); ++t) {
        i64 cand = wadd(base, dir * t);
        if ((iv.lo && cand < *iv.lo) || (iv.hi && cand > *iv.hi)) {
          domain_exhausted = true;
          break;
        }
        std::map<std::string, i64> env{{v, cand}};
        bool ok = true;
        for (auto& c : own)
          if (!cspdet::rc_holds(c, env)) {
            ok = false;
            break;
          }
        if (ok) {
          chosen = cand;
          break;
        }
      }
      if (!chosen) {
        if (domain_exhausted)
          return unsat("no value satisfies the constraints on " + v);
        return unknown("could not fix a value for " + v);
      }
      m_fixed[v] = *chosen;
      m_vars.erase(v);
      for (auto it = m_csp.constraints.begin();
           it != m_csp.constraints.end();) {
        if (it->a.terms.size() == 1 && it->a.terms.begin()->first == v)
          it = m_csp.constraints.erase(it);
        else
          ++it;
      }
    }
    return std::nullopt;
  }

  // periodicity: objective c*(v1 - v2) = r with |r| < |c| and v1 != v2 can
  // never hold, whatever the (possibly unbounded) values of v1 and v2
  std::optional<csp_verdict> affine_disequality() {
    if (!m_obj_diff) return std::nullopt;
    for (auto& c : m_csp.constraints) {
      if (c.r != rel_kind::ne || c.a.c != 0 || c.a.terms.size() != 2) continue;
      auto it = c.a.terms.begin();
      auto [v1, k1] = *it;
      auto [v2, k2] = *++it;
      if (k1 != -k2) continue;
      auto o1 = m_obj_diff->terms.find(v1);
      auto o2 = m_obj_diff->terms.find(v2);
      if (o1 == m_obj_diff->terms.end() || o2 == m_obj_diff->terms.end())
        continue;
      if (o1->second != -o2->second || o1->second == 0) continue;
      i64 period = o1->second;
      affine rest = *m_obj_diff;
      rest.terms.erase(v1);
      rest.terms.erase(v2);
      bool bounded = true;
      i64 lo = rest.c, hi = rest.c;
      for (auto& [v, k] : rest.terms) {
        auto& iv = m_intervals[v];
        if (!iv.finite()) {
          bounded = false;
          break;
        }
        lo = wadd(lo, k > 0 ? wmul(k, *iv.lo) : wmul(k, *iv.hi));
        hi = wadd(hi, k > 0 ? wmul(k, *iv.hi) : wmul(k, *iv.lo));
      }
      if (!bounded) continue;
      i64 mag = std::max(lo < 0 ? -lo : lo, hi < 0 ? -hi : hi);
      if (mag < (period < 0 ? -period : period))
        return unsat("subscripts differ by a multiple of " +
                     std::to_string(period < 0 ? -period : period) +
                     " between distinct instances (" + v1 + " != " + v2 + ")");
    }
    return std::nullopt;
  }

  csp_verdict enumerate() {
    std::vector<std::string> order(m_vars.begin(), m_vars.end());
    struct axis {
      i64 anchor = 0;
      int dir = 1;      // +1: anchored below, -1: anchored above
      bool ext = false; // half-bounded, scanned in widening passes
      i64 len = 0;      // finite width when !ext
    };
    std::vector<axis> axes(order.size());
    bool any_ext = false;
    for (size_t i = 0; i < order.size(); ++i) {
      auto& iv = m_intervals[order[i]];
      if (iv.finite()) {
        axes[i] = {*iv.lo, 1, false, wsub(*iv.hi, *iv.lo)};
      } else if (iv.lo) {
        axes[i] = {*iv.lo, 1, true, 0};
        any_ext = true;
      } else if (iv.hi) {
        axes[i] = {*iv.hi, -1, true, 0};
        any_ext = true;
      } else {
        return unknown("variable " + order[i] + " has no usable bound");
      }
    }
    // a real overlap usually sits near the bounded end: widen the scan
    // geometrically instead of paying the full width at once
    std::vector<i64> widths{0};
    if (any_ext) {
      widths.clear();
      for (i64 w = 1; w < m_opt.id_bound; w = wmul(w, 2)) widths.push_back(w);
      widths.push_back(m_opt.id_bound);
    }
    m_tried = 0;
    for (i64 w : widths) {
      std::vector<std::pair<i64, i64>> domain(order.size());
      m_pass_domain.clear();
      for (size_t i = 0; i < order.size(); ++i) {
        i64 len = axes[i].ext ? w : axes[i].len;
        i64 lo = axes[i].dir > 0 ? axes[i].anchor : wsub(axes[i].anchor, len);
        i64 hi = axes[i].dir > 0 ? wadd(axes[i].anchor, len) : axes[i].anchor;
        domain[i] = {lo, hi};
        m_pass_domain[order[i]] = {lo, hi};
      }
      std::map<std::string, i64> env;
      int res = dfs(order, domain, 0, env);
      if (res == 1) {
        for (auto& [v, x] : m_fixed) env[v] = x;
        // rebuild the values equality elimination removed, newest first
        for (auto it = m_elim.rbegin(); it != m_elim.rend(); ++it)
          env[it->first] = cspdet::eval_affine(it->second, env);
        self_check(env);
        csp_verdict v;
        v.k = csp_verdict::kind::sat;
        v.witness = env;
        return v;
      }
      if (res == -1)
        return unknown("assignment budget of " + std::to_string(m_opt.budget) +
                       " exhausted");
    }
    if (any_ext)
      return unknown("no witness within scan bound " +
                     std::to_string(m_opt.id_bound) +
                     " but a variable is unbounded");
    return unsat("exhaustive enumeration over finite domains");
  }

  // 1 = witness in env, 0 = exhausted, -1 = budget blown
  int dfs(const std::vector<std::string>& order,
          const std::vector<std::pair<i64, i64>>& domain, size_t at,
          std::map<std::string, i64>& env) {
    if (at == order.size()) {
      ++m_tried;
      if (m_tried > m_opt.budget) return -1;
      for (auto& c : m_csp.constraints)
        if (!cspdet::rc_holds(c, env)) return 0;
      auto l = cspdet::eval_expr(m_csp.obj_lhs, env);
      auto r = cspdet::eval_expr(m_csp.obj_rhs, env);
      return l && r && *l == *r ? 1 : 0;
    }
    if (m_opt.interval_pruning && m_obj_diff && at > 0 &&
        residual_excludes_zero(env))
      return 0;
    for (i64 v = domain[at].first; v <= domain[at].second; ++v) {
      env[order[at]] = v;
      int res = dfs(order, domain, at + 1, env);
      if (res != 0) {
        if (res == -1) env.erase(order[at]);
        return res;
      }
    }
    env.erase(order[at]);
    return 0;
  }

  bool residual_excludes_zero(const std::map<std::string, i64>& env) {
    i64 lo = m_obj_diff->c, hi = m_obj_diff->c;
    for (auto& [v, k] : m_obj_diff->terms) {
      auto it = env.find(v);
      if (it != env.end()) {
        lo = wadd(lo, wmul(k, it->second));
        hi = wadd(hi, wmul(k, it->second));
        continue;
      }
      // unassigned: widen by the current pass's scan range
      auto dm = m_pass_domain.find(v);
      if (dm == m_pass_domain.end()) return false;
      auto [dlo, dhi] = dm->second;
      lo = wadd(lo, k > 0 ? wmul(k, dlo) : wmul(k, dhi));
      hi = wadd(hi, k > 0 ? wmul(k, dhi) : wmul(k, dlo));
    }
    return lo > 0 || hi < 0;
  }

  void self_check(const std::map<std::string, i64>& env) const {
    for (auto& c : m_orig.constraints)
      if (!cspdet::rc_holds(c, env))
        throw analysis_error("witness self-check failed on " + c.str());
    auto l = cspdet::eval_expr(m_orig.obj_lhs, env);
    auto r = cspdet::eval_expr(m_orig.obj_rhs, env);
    if (!l || !r || *l != *r)
      throw analysis_error("witness self-check failed on the objective");
  }

  cross_range_csp m_orig;
  cross_range_csp m_csp;
  csp_options m_opt;
  std::set<std::string> m_vars;
  std::map<std::string, cspdet::interval> m_intervals;
  std::optional<affine> m_obj_diff;
  std::vector<std::pair<std::string, affine>> m_elim;
  std::map<std::string, i64> m_fixed;
  std::map<std::string, std::pair<i64, i64>> m_pass_domain;
  i64 m_tried = 0;
};

inline csp_verdict solve_csp(const cross_range_csp& csp,
                             const csp_options& opt = {}) {
  return csp_solver(csp, opt).solve();
}

} // namespace racx

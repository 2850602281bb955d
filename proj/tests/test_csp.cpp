#include <doctest.h>

#include <functional>
#include <random>

#include "racx/csp.hpp"

using namespace racx;

namespace {

void bound(cross_range_csp& csp, const std::string& v, i64 lo, i64 hi) {
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

void lower(cross_range_csp& csp, const std::string& v, i64 lo) {
  rc ge;
  ge.a = affine::variable(v);
  ge.a.c = -lo;
  ge.r = rel_kind::ge;
  csp.constraints.push_back(std::move(ge));
}

void distinct(cross_range_csp& csp, const std::string& a,
              const std::string& b) {
  rc ne;
  ne.a = affine::variable(a);
  ne.a -= affine::variable(b);
  ne.r = rel_kind::ne;
  csp.constraints.push_back(std::move(ne));
}

bool witness_holds(const cross_range_csp& csp,
                   const std::map<std::string, i64>& w) {
  for (auto& c : csp.constraints)
    if (!cspdet::rc_holds(c, w)) return false;
  auto l = cspdet::eval_expr(csp.obj_lhs, w);
  auto r = cspdet::eval_expr(csp.obj_rhs, w);
  return l && r && *l == *r;
}

} // namespace

TEST_CASE("staggered bands: equal-parity spawn ids can still collide") {
  // j + 10*(2*i + id), two instances
  auto band = [](int n) {
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
  stated.obj_lhs = band(1);
  stated.obj_rhs = band(2);
  for (int n = 1; n <= 2; ++n) {
    std::string s = std::to_string(n);
    bound(stated, "i" + s, 0, 9);
    bound(stated, "j" + s, 0, 9);
    lower(stated, "id" + s, 0);
  }
  distinct(stated, "id1", "id2");

  csp_verdict v = solve_csp(stated);
  REQUIRE(v.is_sat()); // e.g. 2*0 + 2 == 2*1 + 0: bands for ids of equal
                       // parity interleave, so the system is satisfiable
  CHECK(witness_holds(stated, v.witness));
  CHECK(v.witness.at("id1") != v.witness.at("id2"));

  // with only two threads the ids are 0/1: opposite parity, disjoint bands
  cross_range_csp two = stated;
  for (int n = 1; n <= 2; ++n) {
    rc le;
    le.a = affine::variable("id" + std::to_string(n));
    le.a.c = -1;
    le.r = rel_kind::le;
    two.constraints.push_back(std::move(le));
  }
  CHECK(solve_csp(two).is_unsat());
}

TEST_CASE("pre-rewrite running pointer defeats the band argument") {
  // before induction-variable substitution the subscript is j + 10*step with
  // only step >= id known; distinct ids no longer separate anything
  auto raw = [](int n) {
    auto s = std::to_string(n);
    return expr::bin(binop::add, expr::variable("j" + s),
                     expr::bin(binop::mul, expr::lit(10),
                               expr::variable("step" + s)));
  };
  cross_range_csp pre;
  pre.obj_lhs = raw(1);
  pre.obj_rhs = raw(2);
  for (int n = 1; n <= 2; ++n) {
    std::string s = std::to_string(n);
    bound(pre, "j" + s, 0, 9);
    lower(pre, "id" + s, 0);
    rc ge; // step >= id
    ge.a = affine::variable("step" + s);
    ge.a -= affine::variable("id" + s);
    ge.r = rel_kind::ge;
    pre.constraints.push_back(std::move(ge));
  }
  distinct(pre, "id1", "id2");
  csp_verdict v = solve_csp(pre);
  CHECK_FALSE(v.is_unsat());
}

TEST_CASE("disequality periodicity proves UNSAT without enumerating ids") {
  auto build = [](i64 jhi) {
    cross_range_csp csp;
    csp.obj_lhs = expr::bin(binop::add, expr::variable("j1"),
                            expr::bin(binop::mul, expr::lit(8),
                                      expr::variable("id1")));
    csp.obj_rhs = expr::bin(binop::add, expr::variable("j2"),
                            expr::bin(binop::mul, expr::lit(8),
                                      expr::variable("id2")));
    bound(csp, "j1", 0, jhi);
    bound(csp, "j2", 0, jhi);
    lower(csp, "id1", 0);
    lower(csp, "id2", 0);
    distinct(csp, "id1", "id2");
    return csp;
  };
  // offsets stay inside one stride: distinct ids can never meet
  csp_verdict tight = solve_csp(build(7));
  CHECK(tight.is_unsat());
  // one extra slot lets the last offset wrap into the next id's stride
  csp_verdict loose = solve_csp(build(8));
  REQUIRE(loose.is_sat());
  CHECK(witness_holds(build(8), loose.witness));
}

TEST_CASE("interval propagation narrows chained variables") {
  // k in [0,15], i >= k+1, i <= 15: propagation pins i's lower bound to 1,
  // making the otherwise-unbounded-below i finite and i == 0 refutable
  auto build = [](i64 target) {
    cross_range_csp csp;
    csp.obj_lhs = expr::variable("i");
    csp.obj_rhs = expr::lit(target);
    bound(csp, "k", 0, 15);
    rc le;
    le.a = affine::variable("i");
    le.a.c = -15;
    le.r = rel_kind::le;
    csp.constraints.push_back(std::move(le));
    rc ge; // i - k - 1 >= 0
    ge.a = affine::variable("i");
    ge.a -= affine::variable("k");
    ge.a.c = -1;
    ge.r = rel_kind::ge;
    csp.constraints.push_back(std::move(ge));
    return csp;
  };
  CHECK(solve_csp(build(0)).is_unsat());
  csp_verdict v = solve_csp(build(1));
  REQUIRE(v.is_sat());
  CHECK(v.witness.at("i") == 1);
  CHECK(v.witness.at("k") == 0);
}

TEST_CASE("equality elimination substitutes and rebuilds the witness") {
  auto build = [](i64 target) {
    cross_range_csp csp;
    csp.obj_lhs = expr::variable("a");
    csp.obj_rhs = expr::lit(target);
    bound(csp, "b", 0, 5);
    rc eq; // a - b - 3 == 0
    eq.a = affine::variable("a");
    eq.a -= affine::variable("b");
    eq.a.c = -3;
    eq.r = rel_kind::eq;
    csp.constraints.push_back(std::move(eq));
    return csp;
  };
  csp_verdict v = solve_csp(build(8));
  REQUIRE(v.is_sat());
  // the eliminated variable must reappear in the witness, consistently
  CHECK(v.witness.at("a") == 8);
  CHECK(v.witness.at("b") == 5);
  CHECK(solve_csp(build(9)).is_unsat()); // would need b = 6, out of range
}

TEST_CASE("contradictory bounds yield an empty domain") {
  cross_range_csp csp;
  csp.obj_lhs = expr::variable("x");
  csp.obj_rhs = expr::variable("x");
  bound(csp, "x", 5, 3);
  csp_verdict v = solve_csp(csp);
  CHECK(v.is_unsat());
  CHECK(v.reason.find("empty domain") != std::string::npos);
}

TEST_CASE("a constant-false constraint decides immediately") {
  cross_range_csp csp;
  csp.obj_lhs = expr::lit(0);
  csp.obj_rhs = expr::lit(0);
  rc bad; // -1 >= 0
  bad.a.c = -1;
  bad.r = rel_kind::ge;
  csp.constraints.push_back(std::move(bad));
  CHECK(solve_csp(csp).is_unsat());
}

TEST_CASE("variables outside the objective are fixed, not enumerated") {
  auto build = [](i64 zhi) {
    cross_range_csp csp;
    csp.obj_lhs = expr::variable("x");
    csp.obj_rhs = expr::lit(0);
    bound(csp, "x", 0, 3);
    bound(csp, "z", 0, zhi);
    rc ne0; // z != 0
    ne0.a = affine::variable("z");
    ne0.r = rel_kind::ne;
    csp.constraints.push_back(std::move(ne0));
    rc ne1; // z != 1
    ne1.a = affine::variable("z");
    ne1.a.c = -1;
    ne1.r = rel_kind::ne;
    csp.constraints.push_back(std::move(ne1));
    return csp;
  };
  csp_verdict v = solve_csp(build(9));
  REQUIRE(v.is_sat());
  CHECK(v.witness.at("z") == 2); // first candidate past the two exclusions
  CHECK(v.witness.at("x") == 0);
  // shrink z's domain to {0,1}: both excluded, so the system is UNSAT
  CHECK(solve_csp(build(1)).is_unsat());
}

TEST_CASE("an unbounded search reports unknown rather than guessing") {
  cross_range_csp csp;
  // x == -1 with x only bounded below: no witness in any forward scan
  csp.obj_lhs = expr::variable("x");
  csp.obj_rhs = expr::lit(-1);
  lower(csp, "x", 0);
  csp_verdict v = solve_csp(csp);
  CHECK_FALSE(v.is_sat());
  CHECK_FALSE(v.is_unsat());
  CHECK(v.reason.find("scan bound") != std::string::npos);
}

TEST_CASE("an exhausted budget reports unknown rather than guessing") {
  cross_range_csp csp;
  csp.obj_lhs = expr::variable("a");
  csp.obj_rhs = expr::lit(500);
  bound(csp, "a", 0, 400);
  bound(csp, "b", 0, 400);
  rc tie; // keep b relevant so it cannot be fixed away
  tie.a = affine::variable("a");
  tie.a -= affine::variable("b");
  tie.r = rel_kind::ge;
  csp.constraints.push_back(std::move(tie));
  csp_options opt;
  opt.budget = 10;
  csp_verdict v = solve_csp(csp, opt);
  CHECK_FALSE(v.is_sat());
  CHECK_FALSE(v.is_unsat());
  CHECK(v.reason.find("budget") != std::string::npos);
}

TEST_CASE("non-affine subscripts are declared out of scope") {
  cross_range_csp csp;
  expr idx = expr::variable("i");
  expr arr;
  arr.k = expr::kind::array_elem;
  arr.name = "a";
  arr.kids.push_back(idx);
  csp.obj_lhs = arr;
  csp.obj_rhs = expr::lit(0);
  bound(csp, "i", 0, 3);
  csp_verdict v = solve_csp(csp);
  CHECK_FALSE(v.is_sat());
  CHECK_FALSE(v.is_unsat());
}

TEST_CASE("solver verdicts agree with brute force on boxed systems") {
  std::mt19937_64 rng(77);
  auto pick = [&](i64 n) { return static_cast<i64>(rng() % static_cast<u64>(n)); };
  const char* names[] = {"a", "b", "c"};
  int mismatches = 0;
  for (int tc = 0; tc < 60; ++tc) {
    cross_range_csp csp;
    int nv = 2 + static_cast<int>(pick(2));
    std::vector<std::string> vars;
    std::vector<std::pair<i64, i64>> dom;
    for (int i = 0; i < nv; ++i) {
      vars.push_back(names[i]);
      i64 lo = pick(5);
      i64 hi = lo + pick(4);
      dom.push_back({lo, hi});
      bound(csp, vars.back(), lo, hi);
    }
    int extra = static_cast<int>(pick(3));
    for (int e = 0; e < extra; ++e) {
      rc c;
      size_t n1 = static_cast<size_t>(pick(nv));
      size_t n2 = static_cast<size_t>(pick(nv));
      c.a.add_term(vars[n1], 1 + pick(3));
      if (n2 != n1) c.a.add_term(vars[n2], -(1 + pick(3)));
      c.a.c = pick(9) - 4;
      c.r = (pick(2) == 0) ? rel_kind::ge : rel_kind::le;
      csp.constraints.push_back(std::move(c));
    }
    auto obj = [&]() {
      affine a;
      for (auto& v : vars) a.add_term(v, pick(7) - 3);
      a.c = pick(5);
      expr e = expr::lit(a.c);
      for (auto& [v, k] : a.terms)
        e = expr::bin(binop::add, std::move(e),
                      expr::bin(binop::mul, expr::lit(k), expr::variable(v)));
      return e;
    };
    csp.obj_lhs = obj();
    csp.obj_rhs = obj();

    bool bf = false;
    std::map<std::string, i64> env;
    std::function<void(size_t)> rec = [&](size_t i) {
      if (bf) return;
      if (i == vars.size()) {
        bf = witness_holds(csp, env);
        return;
      }
      for (i64 x = dom[i].first; x <= dom[i].second && !bf; ++x) {
        env[vars[i]] = x;
        rec(i + 1);
      }
    };
    rec(0);

    csp_verdict v = solve_csp(csp);
    if (v.is_sat() != bf || v.is_unsat() == bf) ++mismatches;
    if (v.is_sat()) CHECK(witness_holds(csp, v.witness));
  }
  CHECK(mismatches == 0);
}

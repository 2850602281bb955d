#include <doctest.h>

#include <set>
#include <vector>

#include "racx/cfg.hpp"
#include "racx/dominators.hpp"
#include "racx/parser.hpp"
#include "racx/pipeline.hpp"
#include "racx/printer.hpp"
#include "racx/validate.hpp"

#include "support.hpp"

using namespace racx;

TEST_CASE("printing a parsed program is a fixpoint") {
  for (const char* rel :
       {"micro/lost_update.mtc", "micro/two_locks.mtc", "micro/wave_slots.mtc",
        "micro/cond_pump.mtc", "kernels/lu.mtc", "kernels/pfscan.mtc"}) {
    program p1 = load_program(racxtest::corpus_source(rel));
    std::string t1 = print_program(p1);
    program p2 = load_program(t1);
    CHECK(print_program(p2) == t1);
    CHECK(program_digest_hex(p2) == program_digest_hex(p1));
  }
}

TEST_CASE("syntax errors carry positions") {
  CHECK_THROWS_AS(load_program("void main() { x = 1 }"), parse_error);
  CHECK_THROWS_AS(load_program("int x void main() { }"), parse_error);
  CHECK_THROWS_AS(load_program("void main() { for (1; 1; 1) { } }"),
                  parse_error);
}

TEST_CASE("validation rejects ill-formed programs") {
  // no main
  CHECK_THROWS_AS(load_program("int x;\nvoid w(int id) { x = 1; }"),
                  analysis_error);
  // main arity
  CHECK_THROWS_AS(load_program("void main(int a, int b) { }"), analysis_error);
  // assignment to an undeclared name
  CHECK_THROWS_AS(load_program("void main() { y = 1; }"), parse_error);
  // statement after return
  CHECK_THROWS_AS(load_program("int x;\nvoid main() { return; x = 1; }"),
                  parse_error);
  // redeclared local
  CHECK_THROWS_AS(
      load_program("void main() { int v = 1; int v = 2; }"), parse_error);
  // loop counter must be a declared local
  CHECK_THROWS_AS(
      load_program("void main() { for (q = 0; q < 3; q = q + 1) { } }"),
      parse_error);
  // spawn inside a spawn target's call tree
  CHECK_THROWS_AS(load_program("int x;\n"
                               "void w(int id) { spawn w(1); }\n"
                               "void main() { spawn w(0); join; }"),
                  analysis_error);
  // reserved magic name
  CHECK_THROWS_AS(load_program("int nthreads;\nvoid main() { }"), parse_error);
}

TEST_CASE("statement ordinals are dense in pre-order per function") {
  program p = load_program(racxtest::corpus_source("kernels/lu.mtc"));
  for (auto& f : p.functions) {
    int next = 0;
    walk_stmts(f.body, [&](const stmt& s) {
      CHECK(s.site.ordinal == next);
      CHECK(s.site.function == f.name);
      ++next;
    });
  }
}

TEST_CASE("canonicalize remaps every pre-existing statement") {
  program p = load_program("int a[4];\n"
                           "void main() {\n"
                           "  int i = 0;\n"
                           "  for (i = 0; i < 4; i = i + 1) {\n"
                           "    a[i] = i;\n"
                           "  }\n"
                           "}\n");
  int stmts = 0;
  walk_stmts(p.functions[0].body, [&](const stmt&) { ++stmts; });
  site_remap remap = canonicalize_program(p);
  CHECK(static_cast<int>(remap.size()) == stmts);
  for (auto& [key, to] : remap) CHECK(key.second == to.ordinal);
}

namespace {

// ground truth: u dominates v iff v is unreachable from entry once u is cut
std::vector<std::set<int>> brute_dominators(const cfg& g) {
  auto reach_avoiding = [&](int avoid) {
    std::vector<char> seen(g.nodes.size(), 0);
    if (g.entry == avoid) return seen;
    std::vector<int> work{g.entry};
    seen[static_cast<size_t>(g.entry)] = 1;
    while (!work.empty()) {
      int n = work.back();
      work.pop_back();
      for (int s : g.nodes[static_cast<size_t>(n)].succs)
        if (s != avoid && !seen[static_cast<size_t>(s)]) {
          seen[static_cast<size_t>(s)] = 1;
          work.push_back(s);
        }
    }
    return seen;
  };
  std::vector<char> reachable = reach_avoiding(-1);
  std::vector<std::set<int>> dom(g.nodes.size());
  for (size_t u = 0; u < g.nodes.size(); ++u) {
    auto seen = reach_avoiding(static_cast<int>(u));
    for (size_t v = 0; v < g.nodes.size(); ++v)
      if (reachable[v] && (v == u || !seen[v]))
        dom[v].insert(static_cast<int>(u));
  }
  return dom;
}

} // namespace

TEST_CASE("dominator sets match cut-vertex ground truth") {
  program p = load_program(
      "int a[8];\nint x;\nlock m;\n"
      "void main(int n) {\n"
      "  int i = 0;\n"
      "  if (n > 2) {\n"
      "    x = 1;\n"
      "  } else {\n"
      "    while (x < 4) {\n"
      "      x = x + 1;\n"
      "      if (x == 2) {\n"
      "        a[0] = 9;\n"
      "      }\n"
      "    }\n"
      "  }\n"
      "  for (i = 0; i < n; i = i + 1) {\n"
      "    a[i] = x;\n"
      "  }\n"
      "  x = 0;\n"
      "}\n");
  const function_decl& f = p.functions[0];
  cfg g = build_cfg(f);
  dominators d = compute_dominators(g);
  auto truth = brute_dominators(g);
  for (size_t v = 0; v < g.nodes.size(); ++v) {
    if (!d.reachable[v]) {
      CHECK(truth[v].empty());
      continue;
    }
    for (size_t u = 0; u < g.nodes.size(); ++u)
      CHECK(d.dominates(static_cast<int>(u), static_cast<int>(v)) ==
            static_cast<bool>(truth[v].count(static_cast<int>(u))));
  }
}

TEST_CASE("cfg models loop back edges and zero-trip exits") {
  program p = load_program("int a[4];\n"
                           "void main() {\n"
                           "  int i = 0;\n"
                           "  for (i = 0; i < 4; i = i + 1) {\n"
                           "    a[i] = i;\n"
                           "  }\n"
                           "  a[0] = 7;\n"
                           "}\n");
  const function_decl& f = p.functions[0];
  cfg g = build_cfg(f);
  const stmt* body_write = nullptr;
  const stmt* post_write = nullptr;
  walk_stmts(f.body, [&](const stmt& s) {
    if (s.k != stmt::kind::assign) return;
    if (!body_write)
      body_write = &s;
    else if (!post_write)
      post_write = &s;
  });
  REQUIRE(body_write != nullptr);
  REQUIRE(post_write != nullptr);
  int wb = g.head_of(body_write);
  int wp = g.head_of(post_write);
  REQUIRE(wb >= 0);
  REQUIRE(wp >= 0);
  CHECK(g.in_loop(wb));          // body re-executes via the back edge
  CHECK_FALSE(g.in_loop(wp));    // post-loop code does not
  CHECK(g.reaches(wb, wp));      // loop exits forward
  CHECK_FALSE(g.reaches(wp, wb)); // and never re-enters
  // zero-trip: the loop body must not dominate post-loop code
  dominators d = compute_dominators(g);
  CHECK_FALSE(d.dominates(wb, wp));
}

#include <doctest.h>

#include "racx/callgraph.hpp"
#include "racx/lockset.hpp"
#include "racx/pipeline.hpp"
#include "racx/report.hpp"

#include "support.hpp"

using namespace racx;

TEST_CASE("relative lockset algebra") {
  rel_lockset a;
  a.do_lock("m");
  CHECK(a.plus.count("m"));
  a.do_unlock("m");
  CHECK_FALSE(a.plus.count("m"));
  CHECK(a.minus.count("m"));
  a.do_lock("m"); // re-acquire clears the release mark
  CHECK(a.plus.count("m"));
  CHECK_FALSE(a.minus.count("m"));

  rel_lockset left, right;
  left.do_lock("m");
  left.do_lock("n");
  right.do_lock("m");
  right.do_unlock("q");
  rel_lockset j = rel_lockset::join(left, right);
  CHECK(j.plus == std::set<std::string>{"m"}); // surely-held intersects
  CHECK(j.minus == std::set<std::string>{"q"}); // maybe-released unions

  rel_lockset caller, callee;
  caller.do_lock("a");
  callee.do_unlock("a");
  callee.do_lock("b");
  caller.compose(callee);
  CHECK(caller.plus == std::set<std::string>{"b"});
  CHECK(caller.minus == std::set<std::string>{"a"});
}

namespace {

std::map<std::string, fn_summary> summaries_of(const program& p) {
  callgraph g = build_callgraph(p);
  return summarize_functions(p, g);
}

} // namespace

TEST_CASE("summary: locks surely held on all paths guard the access") {
  program p = load_program("int x;\nlock m;\n"
                           "void w(int id) {\n"
                           "  lock m;\n"
                           "  x = x + 1;\n"
                           "  unlock m;\n"
                           "}\n"
                           "void main() { spawn w(0); join; }\n");
  auto s = summaries_of(p);
  REQUIRE(s.at("w").accesses.size() == 2); // read and write of x
  for (auto& a : s.at("w").accesses) {
    CHECK(a.object == "x");
    CHECK(a.held.plus == std::set<std::string>{"m"});
  }
  // the function's net effect is lock-neutral
  CHECK(s.at("w").exit.plus.empty());
  CHECK(s.at("w").exit.minus == std::set<std::string>{"m"});
}

TEST_CASE("summary: a lock taken on only one branch is not surely held") {
  program p = load_program("int x;\nlock m;\n"
                           "void w(int id) {\n"
                           "  if (id == 0) {\n"
                           "    lock m;\n"
                           "  }\n"
                           "  x = x + 1;\n"
                           "  if (id == 0) {\n"
                           "    unlock m;\n"
                           "  }\n"
                           "}\n"
                           "void main() { spawn w(0); join; }\n");
  auto s = summaries_of(p);
  for (auto& a : s.at("w").accesses) CHECK(a.held.plus.empty());
}

TEST_CASE("summary: callee locksets compose bottom-up through calls") {
  program p = load_program("int x;\nlock m;\n"
                           "void deep(int v) {\n"
                           "  x = v;\n"
                           "}\n"
                           "void w(int id) {\n"
                           "  lock m;\n"
                           "  deep(id);\n"
                           "  unlock m;\n"
                           "}\n"
                           "void main() { spawn w(0); join; }\n");
  auto s = summaries_of(p);
  REQUIRE(s.at("w").accesses.size() == 1); // x = v imported from deep
  const guarded_access& a = s.at("w").accesses[0];
  CHECK(a.object == "x");
  CHECK(a.held.plus == std::set<std::string>{"m"});
  CHECK_FALSE(a.path.empty()); // travelled through a call site
  // inside deep itself nothing is held
  CHECK(s.at("deep").accesses[0].held.plus.empty());
}

TEST_CASE("warnings: unlocked counter update races, locked one does not") {
  race_report racy = analyze_program(
      load_program(racxtest::corpus_source("micro/lost_update.mtc")));
  REQUIRE(racy.warning_count() == 1);
  CHECK(racy.warnings[0].lvalue == "hits");
  CHECK(racy.pair_count() >= 1);

  race_report safe = analyze_program(
      load_program(racxtest::corpus_source("micro/locked_counter.mtc")));
  CHECK(safe.warning_count() == 0);
}

TEST_CASE("warnings: disjoint locksets do not exclude each other") {
  race_report r = analyze_program(
      load_program(racxtest::corpus_source("micro/two_locks.mtc")));
  REQUIRE(r.warning_count() == 1);
  const race_warning& w = r.warnings[0];
  CHECK(w.lvalue == "acct");
  bool saw_ma = false, saw_mb = false;
  for (auto& op : w.ops) {
    if (op.lockset == std::vector<std::string>{"ma"}) saw_ma = true;
    if (op.lockset == std::vector<std::string>{"mb"}) saw_mb = true;
  }
  CHECK(saw_ma);
  CHECK(saw_mb);
}

TEST_CASE("warnings: main cannot race with itself") {
  race_report r = analyze_program(load_program(
      "int x;\nvoid main() { x = 1; x = x + 1; }\n"));
  CHECK(r.warning_count() == 0);
}

TEST_CASE("warnings: spawned entries race with themselves") {
  // two dynamic instances of the same entry are distinct threads
  race_report r = analyze_program(
      load_program("int x;\n"
                   "void w(int id) { x = x + id; }\n"
                   "void main() { spawn w(1); spawn w(2); join; }\n"));
  REQUIRE(r.warning_count() == 1);
  bool self_pair = false;
  for (auto& pr : r.warnings[0].pairs)
    for (auto& ep : pr.entry_pairs)
      if (ep[0] == "w" && ep[1] == "w") self_pair = true;
  CHECK(self_pair);
}

TEST_CASE("warnings: two reads never pair") {
  race_report r = analyze_program(
      load_program("int x;\nint out[4];\n"
                   "void w(int id) { out[id] = x; }\n"
                   "void main() { spawn w(0); spawn w(1); join; }\n"));
  // x is only read concurrently; out indices differ but that is the array
  // pruner's job, so the only warning here may be on out
  for (auto& w : r.warnings) CHECK(w.lvalue != "x");
}

#include <doctest.h>

#include <set>

#include "racx/lockset.hpp"
#include "racx/pipeline.hpp"
#include "racx/range.hpp"

#include "support.hpp"

using namespace racx;

namespace {

struct resolved_program {
  program p;
  callgraph g;
  std::map<std::string, std::vector<guarded_access>> accesses;
  std::unique_ptr<range_resolver> rr;
};

resolved_program resolve(const std::string& rel) {
  resolved_program out;
  out.p = load_program(racxtest::corpus_source(rel));
  out.g = build_callgraph(out.p);
  out.accesses = lockset_analyzer::resolve_thread_accesses(
      out.p, summarize_functions(out.p, out.g));
  out.rr = std::make_unique<range_resolver>(out.p, out.g);
  return out;
}

const guarded_access* find_access(const resolved_program& rp,
                                  const std::string& entry,
                                  const std::string& object, bool is_write) {
  for (auto& acc : rp.accesses.at(entry))
    if (acc.object == object && acc.is_write == is_write) return &acc;
  return nullptr;
}

} // namespace

TEST_CASE("literal spawn arguments pin the entry formal") {
  resolved_program rp = resolve("micro/array_blocks.mtc");
  auto spawns = rp.rr->resolve_spawns("fill");
  REQUIRE(spawns.size() == 2);
  std::set<i64> pinned;
  for (auto& si : spawns) {
    CHECK(si.single_shot); // straight-line main, one dynamic thread each
    CHECK_FALSE(si.loop_distinct);
    for (auto& c : si.constraints)
      if (c.r == rel_kind::eq && c.a.terms.size() == 1 &&
          c.a.terms.count("fill.id"))
        pinned.insert(-c.a.c); // fill.id - lit == 0
  }
  CHECK(pinned == std::set<i64>{0, 1});
}

TEST_CASE("a spawn inside a counted loop is loop-distinct") {
  resolved_program rp = resolve("micro/wave_slots.mtc");
  auto spawns = rp.rr->resolve_spawns("stepw");
  REQUIRE(spawns.size() == 1);
  CHECK_FALSE(spawns[0].single_shot);
  CHECK(spawns[0].loop_distinct);
  CHECK(spawns[0].counter == "main!t");
  // the binding ties the worker id to the spawning iteration's counter
  bool bound = false;
  for (auto& c : spawns[0].constraints)
    if (c.r == rel_kind::eq && c.a.terms.count("stepw.id") &&
        c.a.terms.count("main!t"))
      bound = true;
  CHECK(bound);
}

TEST_CASE("main never resolves as a spawned instance") {
  resolved_program rp = resolve("micro/wave_slots.mtc");
  CHECK(rp.rr->resolve_spawns("main").empty());
}

TEST_CASE("entry-local subscripts qualify with the entry formal") {
  resolved_program rp = resolve("micro/wave_slots.mtc");
  const guarded_access* acc = find_access(rp, "stepw", "slotv", true);
  REQUIRE(acc != nullptr);
  REQUIRE(acc->subscript.has_value());
  access_instance inst =
      rp.rr->resolve_access("stepw", acc->site, *acc->subscript, acc->path);
  CHECK(expr_string(inst.subscript) == "stepw.id");
  // thread ids are never negative: the formal carries that floor
  bool floored = false;
  for (auto& c : inst.constraints)
    if (c.r == rel_kind::ge && c.a.terms.size() == 1 &&
        c.a.terms.count("stepw.id") && c.a.c == 0)
      floored = true;
  CHECK(floored);
}

TEST_CASE("argument binding survives a call below the spawn entry") {
  resolved_program rp = resolve("micro/call_helper.mtc");
  const guarded_access* acc = find_access(rp, "work", "grid", true);
  REQUIRE(acc != nullptr);
  REQUIRE(acc->path.size() == 1); // reached through the fill() call
  access_instance inst =
      rp.rr->resolve_access("work", acc->site, *acc->subscript, acc->path);
  std::string sub = expr_string(inst.subscript);
  CHECK(sub.find("work.id") != std::string::npos);
  // loop bounds on the callee counter must have come along
  std::set<std::string> vars;
  for (auto& c : inst.constraints)
    for (auto& [v, k] : c.a.terms) vars.insert(v);
  CHECK(vars.count("work.id"));
}

TEST_CASE("blocks bound through a callee still separate end to end") {
  static_result sr =
      run_static_pipeline(racxtest::corpus_source("micro/call_helper.mtc"));
  REQUIRE(sr.raw.warning_count() == 1); // grid: the two workers' blocks
  CHECK(sr.final.warning_count() == 0); // [0,7] vs [8,15] cannot meet
}

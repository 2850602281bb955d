#include <doctest.h>

#include <set>

#include "racx/pipeline.hpp"
#include "racx/runtime.hpp"

#include "support.hpp"

using namespace racx;

namespace {

size_t count_marks(const std::string& text) {
  size_t n = 0;
  for (size_t at = text.find("@trace("); at != std::string::npos;
       at = text.find("@trace(", at + 1))
    ++n;
  return n;
}

} // namespace

TEST_CASE("each surviving (site, lvalue, kind) becomes one table row") {
  static_result sr =
      run_static_pipeline(racxtest::corpus_source("micro/two_locks.mtc"));
  // both branch statements read and write the account: four operations
  REQUIRE(sr.final.warning_count() == 1);
  CHECK(sr.table.rows.size() == 4);
  std::set<std::tuple<std::string, int, bool>> uniq;
  for (auto& r : sr.table.rows) {
    CHECK(r.lvalue == "acct");
    CHECK(r.index == static_cast<int>(&r - sr.table.rows.data()));
    uniq.insert({r.site.function, r.site.ordinal, r.is_write});
  }
  CHECK(uniq.size() == 4);
}

TEST_CASE("annotations appear once per row and survive reparsing") {
  static_result sr =
      run_static_pipeline(racxtest::corpus_source("micro/two_locks.mtc"));
  std::string text = print_program(sr.prog);
  CHECK(count_marks(text) == sr.table.rows.size());
  program back = load_program(text);
  CHECK(program_digest_hex(back) == program_digest_hex(sr.prog));
  CHECK(sr.table.digest == program_digest_hex(back));
}

TEST_CASE("the table serializes losslessly") {
  static_result sr =
      run_static_pipeline(racxtest::corpus_source("micro/lost_update.mtc"));
  site_table t2 = site_table::from_json(sr.table.to_json());
  CHECK(t2.digest == sr.table.digest);
  REQUIRE(t2.rows.size() == sr.table.rows.size());
  for (size_t i = 0; i < t2.rows.size(); ++i) {
    CHECK(t2.rows[i].index == sr.table.rows[i].index);
    CHECK(t2.rows[i].site == sr.table.rows[i].site);
    CHECK(t2.rows[i].lvalue == sr.table.rows[i].lvalue);
    CHECK(t2.rows[i].is_write == sr.table.rows[i].is_write);
  }
}

TEST_CASE("a tampered table digest refuses to compile") {
  static_result sr =
      run_static_pipeline(racxtest::corpus_source("micro/two_locks.mtc"));
  site_table bad = sr.table;
  bad.digest[0] = bad.digest[0] == 'f' ? '0' : 'f';
  CHECK_THROWS_AS((void)compile_program(sr.prog, &bad), analysis_error);
  // and an honest table refuses a different program
  program other = load_program(racxtest::corpus_source("micro/lost_update.mtc"));
  CHECK_THROWS_AS((void)compile_program(other, &sr.table), analysis_error);
}

TEST_CASE("a report from another program version cannot instrument") {
  static_result sr =
      run_static_pipeline(racxtest::corpus_source("micro/ivs_stagger.mtc"));
  REQUIRE(sr.array_res.rewrote); // prog text differs from raw_prog
  race_report stale = sr.raw;    // digest pins the pre-rewrite text
  program p = sr.prog;
  CHECK_THROWS_AS((void)instrument_program(p, stale), analysis_error);
}

TEST_CASE("a report naming a nonexistent site cannot instrument") {
  program p = load_program(racxtest::corpus_source("micro/lost_update.mtc"));
  race_report r;
  r.program_digest = program_digest_hex(p);
  race_warning w;
  w.lvalue = "hits";
  report_op op;
  op.site = {"bump", 99, 1};
  op.is_write = true;
  w.ops.push_back(std::move(op));
  r.warnings.push_back(std::move(w));
  CHECK_THROWS_AS((void)instrument_program(p, r), analysis_error);
}

TEST_CASE("traced statements emit one event per operation") {
  static_result sr =
      run_static_pipeline(racxtest::corpus_source("micro/two_locks.mtc"));
  compiled_program cp = compile_program(sr.prog, &sr.table);
  run_result rec = run_record(cp, 2, 11);
  // each thread runs one traced read-modify-write: 2 events per thread
  CHECK(rec.counts.race_events == 4);
  // untraced execution of the raw program performs the same shared work
  compiled_program plain = compile_program(sr.raw_prog);
  run_result free_run = run_free(plain, 2, 11);
  CHECK(free_run.counts.race_events == 0);
  CHECK(free_run.counts.shared_accesses == rec.counts.shared_accesses);
}

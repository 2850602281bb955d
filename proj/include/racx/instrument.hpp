#pragma once

#include <map>
#include <string>
#include <vector>

#include "racx/ast.hpp"
#include "racx/common.hpp"
#include "racx/printer.hpp"
#include "racx/report.hpp"

#include "json.hpp"

namespace racx {

struct site_row {
  int index = 0;
  site_id site;
  std::string lvalue;
  bool is_write = false;
};

// dense index over every surviving warning operation; the digest pins the
// table to the annotated program text so version skew is caught up front
struct site_table {
  std::string digest;
  std::vector<site_row> rows;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["digest"] = digest;
    j["sites"] = nlohmann::json::array();
    for (auto& r : rows) {
      nlohmann::json row;
      row["index"] = r.index;
      row["site"] = r.site.str();
      row["lvalue"] = r.lvalue;
      row["kind"] = r.is_write ? "write" : "read";
      j["sites"].push_back(row);
    }
    return j;
  }

  static site_table from_json(const nlohmann::json& j) {
    site_table t;
    t.digest = j.at("digest").get<std::string>();
    for (auto& row : j.at("sites")) {
      site_row r;
      r.index = row.at("index").get<int>();
      r.site = detail::parse_site(row.at("site").get<std::string>());
      r.lvalue = row.at("lvalue").get<std::string>();
      r.is_write = row.at("kind").get<std::string>() == "write";
      t.rows.push_back(std::move(r));
    }
    return t;
  }
};

// annotate every statement hosting a surviving warning operation and build
// the site table; the table digest covers the annotated text
inline site_table instrument_program(program& p, const race_report& final_report) {
  std::string current = program_digest_hex(p);
  if (final_report.program_digest != current)
    throw analysis_error("report digest " + final_report.program_digest +
                         " does not match program digest " + current +
                         "; the report was produced from a different version");

  // unique (site, lvalue, kind) triples in deterministic order
  std::map<std::tuple<std::string, int, std::string, bool>, site_id> triples;
  for (auto& w : final_report.warnings)
    for (auto& op : w.ops)
      triples.emplace(std::make_tuple(op.site.function, op.site.ordinal,
                                      w.lvalue, op.is_write),
                      op.site);

  site_table table;
  std::map<std::pair<std::string, int>, std::vector<int>> by_stmt;
  for (auto& [key, site] : triples) {
    site_row r;
    r.index = static_cast<int>(table.rows.size());
    r.site = site;
    r.lvalue = std::get<2>(key);
    r.is_write = std::get<3>(key);
    by_stmt[{site.function, site.ordinal}].push_back(r.index);
    table.rows.push_back(std::move(r));
  }

  for (auto& f : p.functions) {
    walk_stmts_mut(f.body, [&](stmt& s) {
      auto it = by_stmt.find({f.name, s.site.ordinal});
      if (it == by_stmt.end()) {
        s.trace_sites.clear();
        return;
      }
      s.trace_sites = it->second;
      by_stmt.erase(it);
    });
  }
  if (!by_stmt.empty()) {
    auto& [key, idx] = *by_stmt.begin();
    throw analysis_error("report names site " + key.first + "#" +
                         std::to_string(key.second) +
                         " which does not exist in the program");
  }

  table.digest = program_digest_hex(p);
  return table;
}

} // namespace racx

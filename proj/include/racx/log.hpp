#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "racx/common.hpp"

namespace racx {

// recorded scheduling log: two global clock streams (sync ops and traced
// accesses), each totally ordered by its own timestamp sequence

enum class log_kind { sync, race };

struct log_event {
  log_kind kind = log_kind::sync;
  int tid = 0;
  i64 icount = 0;
  i64 ts = 0;
  std::string op;     // sync: acquire/release/barrier/signal/wait
  std::string object; // sync: lock/barrier/cond name
  i64 site = 0;       // race: site-table row index
  i64 value = 0;      // race: value read or written

  std::string line() const {
    std::ostringstream os;
    if (kind == log_kind::sync)
      os << "S " << tid << ' ' << icount << ' ' << ts << ' ' << op << ':'
         << object;
    else
      os << "R " << tid << ' ' << icount << ' ' << ts << ' ' << site << ' '
         << value;
    return os.str();
  }
};

struct replay_log {
  std::string digest;
  u64 seed = 0;
  int threads = 0;
  std::vector<log_event> events; // in emission order

  std::string text() const {
    std::ostringstream os;
    os << "#racx-log v1 digest=" << digest << " seed=" << seed
       << " threads=" << threads << '\n';
    for (auto& e : events) os << e.line() << '\n';
    return os.str();
  }
};

namespace logdet {

inline std::string field(std::istringstream& is, const std::string& what) {
  std::string tok;
  if (!(is >> tok)) throw analysis_error("log line missing " + what);
  return tok;
}

inline i64 num(std::istringstream& is, const std::string& what) {
  std::string tok = field(is, what);
  try {
    return std::stoll(tok);
  } catch (const std::exception&) {
    throw analysis_error("log field " + what + " is not a number: '" + tok +
                         "'");
  }
}

} // namespace logdet

inline replay_log parse_log(const std::string& text) {
  replay_log log;
  std::istringstream in(text);
  std::string line;
  bool saw_header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!saw_header) {
      std::istringstream hs(line);
      std::string magic, ver, kv;
      hs >> magic >> ver;
      if (magic != "#racx-log" || ver != "v1")
        throw analysis_error("log header is not '#racx-log v1'");
      while (hs >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw analysis_error("malformed log header field '" + kv + "'");
        std::string key = kv.substr(0, eq);
        std::string val = kv.substr(eq + 1);
        if (key == "digest")
          log.digest = val;
        else if (key == "seed")
          log.seed = std::stoull(val);
        else if (key == "threads")
          log.threads = std::stoi(val);
        else
          throw analysis_error("unknown log header field '" + key + "'");
      }
      saw_header = true;
      continue;
    }
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    log_event e;
    if (tag == "S") {
      e.kind = log_kind::sync;
      e.tid = static_cast<int>(logdet::num(ls, "tid"));
      e.icount = logdet::num(ls, "icount");
      e.ts = logdet::num(ls, "ts");
      std::string opobj = logdet::field(ls, "op:object");
      auto colon = opobj.find(':');
      if (colon == std::string::npos)
        throw analysis_error("line " + std::to_string(lineno) +
                             ": sync event missing op:object");
      e.op = opobj.substr(0, colon);
      e.object = opobj.substr(colon + 1);
    } else if (tag == "R") {
      e.kind = log_kind::race;
      e.tid = static_cast<int>(logdet::num(ls, "tid"));
      e.icount = logdet::num(ls, "icount");
      e.ts = logdet::num(ls, "ts");
      e.site = logdet::num(ls, "site");
      e.value = logdet::num(ls, "value");
    } else {
      throw analysis_error("line " + std::to_string(lineno) +
                           ": unknown log record tag '" + tag + "'");
    }
    log.events.push_back(std::move(e));
  }
  if (!saw_header) throw analysis_error("log has no header line");
  return log;
}

// structural integrity: each clock's timestamps form exactly 1..N with no
// gap or repeat, and every thread's icounts are non-decreasing per clock
inline void validate_log(const replay_log& log) {
  std::map<log_kind, i64> next_ts = {{log_kind::sync, 1}, {log_kind::race, 1}};
  std::map<std::pair<int, log_kind>, i64> last_icount;
  for (auto& e : log.events) {
    i64& want = next_ts[e.kind];
    if (e.ts != want)
      throw analysis_error(
          std::string(e.kind == log_kind::sync ? "sync" : "access") +
          " clock gap: expected timestamp " + std::to_string(want) + ", got " +
          std::to_string(e.ts) + " (" + e.line() + ")");
    ++want;
    if (e.tid < 0)
      throw analysis_error("event names negative thread " +
                           std::to_string(e.tid));
    auto key = std::make_pair(e.tid, e.kind);
    auto it = last_icount.find(key);
    if (it != last_icount.end() && e.icount < it->second)
      throw analysis_error("thread " + std::to_string(e.tid) +
                           " icount went backwards: " +
                           std::to_string(it->second) + " -> " +
                           std::to_string(e.icount) + " (" + e.line() + ")");
    last_icount[key] = e.icount;
  }
}

} // namespace racx

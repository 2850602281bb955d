#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <sstream>

namespace racx {

using i64 = std::int64_t;
using u64 = std::uint64_t;

// process exit codes used by the CLI
inline constexpr int exit_ok = 0;
inline constexpr int exit_runtime = 1;    // runtime faults: deadlock, oob, div-by-zero
inline constexpr int exit_analysis = 2;   // parse/validation/artifact-mismatch errors
inline constexpr int exit_divergence = 3; // replay diverged from the log
inline constexpr int exit_cap = 4;        // a resource cap was exceeded

struct source_pos {
  int line = 0;
  int col = 0;
};

// error raised by the lexer/parser, carries the offending position
class parse_error : public std::runtime_error {
public:
  parse_error(const std::string& msg, source_pos pos)
      : std::runtime_error("parse error at " + std::to_string(pos.line) + ":" +
                           std::to_string(pos.col) + ": " + msg),
        m_pos(pos) {}
  source_pos pos() const { return m_pos; }

private:
  source_pos m_pos;
};

// static-analysis stage errors (validation, stale artifacts, bad reports)
class analysis_error : public std::runtime_error {
public:
  explicit analysis_error(const std::string& msg)
      : std::runtime_error("analysis error: " + msg) {}
};

// interpreter faults: deadlock, out-of-bounds, division by zero, ...
class runtime_fault : public std::runtime_error {
public:
  explicit runtime_fault(const std::string& msg)
      : std::runtime_error("runtime fault: " + msg) {}
};

// replay left the recorded execution (control flow, value audit, stuck turn)
class divergence_error : public std::runtime_error {
public:
  explicit divergence_error(const std::string& msg)
      : std::runtime_error("replay divergence: " + msg) {}
};

// exhaustive exploration / CSP enumeration exceeded its configured cap
class cap_error : public std::runtime_error {
public:
  explicit cap_error(const std::string& msg)
      : std::runtime_error("resource cap exceeded: " + msg) {}
};

// FNV-1a, used for program content digests
inline u64 fnv1a64(std::string_view s) {
  u64 h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string to_hex16(u64 v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

// wrapping two's-complement arithmetic (the language's integers wrap)
inline i64 wadd(i64 a, i64 b) { return (i64)((u64)a + (u64)b); }
inline i64 wsub(i64 a, i64 b) { return (i64)((u64)a - (u64)b); }
inline i64 wmul(i64 a, i64 b) { return (i64)((u64)a * (u64)b); }

} // namespace racx

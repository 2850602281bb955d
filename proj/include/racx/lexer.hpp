#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "racx/common.hpp"

namespace racx {

struct token {
  enum class kind { ident, number, sym, kw, eof };
  kind k = kind::eof;
  std::string text;
  i64 value = 0;
  source_pos pos{};
};

inline bool is_keyword(const std::string& s) {
  static const char* kws[] = {"int",    "void",   "if",     "else",  "while",
                              "for",    "return", "spawn",  "join",  "lock",
                              "unlock", "barrier", "signal", "wait",  "cond"};
  for (auto* k : kws)
    if (s == k) return true;
  return false;
}

class lexer {
public:
  explicit lexer(std::string src) : m_src(std::move(src)) {}

  std::vector<token> run() {
    std::vector<token> out;
    while (true) {
      skip_ws_and_comments();
      token t;
      t.pos = pos();
      if (m_at >= m_src.size()) {
        t.k = token::kind::eof;
        out.push_back(t);
        break;
      }
      char c = m_src[m_at];
      if (std::isalpha((unsigned char)c) || c == '_') {
        std::string id;
        while (m_at < m_src.size() &&
               (std::isalnum((unsigned char)m_src[m_at]) || m_src[m_at] == '_'))
          id += advance();
        t.k = is_keyword(id) ? token::kind::kw : token::kind::ident;
        t.text = id;
      } else if (std::isdigit((unsigned char)c)) {
        std::string num;
        while (m_at < m_src.size() && std::isdigit((unsigned char)m_src[m_at]))
          num += advance();
        t.k = token::kind::number;
        t.text = num;
        try {
          t.value = std::stoll(num);
        } catch (const std::exception&) {
          throw parse_error("integer literal out of range: " + num, t.pos);
        }
      } else {
        t.k = token::kind::sym;
        t.text = symbol();
      }
      out.push_back(t);
    }
    return out;
  }

private:
  source_pos pos() const { return {m_line, (int)(m_at - m_line_start) + 1}; }

  char advance() {
    char c = m_src[m_at++];
    if (c == '\n') {
      ++m_line;
      m_line_start = m_at;
    }
    return c;
  }

  void skip_ws_and_comments() {
    while (m_at < m_src.size()) {
      char c = m_src[m_at];
      if (std::isspace((unsigned char)c)) {
        advance();
      } else if (c == '/' && m_at + 1 < m_src.size() && m_src[m_at + 1] == '/') {
        while (m_at < m_src.size() && m_src[m_at] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string symbol() {
    source_pos p = pos();
    char c = advance();
    auto two = [&](char second) -> bool {
      if (m_at < m_src.size() && m_src[m_at] == second) {
        advance();
        return true;
      }
      return false;
    };
    switch (c) {
    case '(': case ')': case '[': case ']': case '{': case '}':
    case ';': case ',': case '+': case '-': case '*': case '/':
    case '%': case '@':
      return std::string(1, c);
    case '=': return two('=') ? "==" : "=";
    case '<': return two('=') ? "<=" : "<";
    case '>': return two('=') ? ">=" : ">";
    case '!': return two('=') ? "!=" : "!";
    case '&':
      if (two('&')) return "&&";
      throw parse_error("stray '&'", p);
    case '|':
      if (two('|')) return "||";
      throw parse_error("stray '|'", p);
    default:
      throw parse_error(std::string("unexpected character '") + c + "'", p);
    }
  }

  std::string m_src;
  size_t m_at = 0;
  int m_line = 1;
  size_t m_line_start = 0;
};

} // namespace racx

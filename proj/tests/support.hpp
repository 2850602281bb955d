#pragma once

#include <filesystem>
#include <string>

#include "racx/pipeline.hpp"

namespace racxtest {

// tests run from the repository root (ctest sets the working directory); a
// one-level fallback keeps ad-hoc runs from the build tree working too
inline std::string corpus_file(const std::string& rel) {
  namespace fs = std::filesystem;
  for (const char* prefix : {"corpus/", "../corpus/"}) {
    std::string p = prefix + rel;
    if (fs::exists(p)) return p;
  }
  throw racx::analysis_error("corpus file '" + rel + "' not found; run from "
                             "the repository root");
}

inline std::string corpus_source(const std::string& rel) {
  return racx::read_file(corpus_file(rel));
}

} // namespace racxtest

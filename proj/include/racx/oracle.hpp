#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "racx/runtime.hpp"

namespace racx {

// ground truth by exhaustive scheduling: a real race is two conflicting
// accesses that can execute adjacently in some interleaving, i.e. some
// reachable state has two distinct threads poised at conflicting operations

struct oracle_result {
  std::set<std::pair<std::string, std::string>> racing_pairs; // site ids, a<=b
  std::set<std::string> final_states;
  i64 states_explored = 0;
  bool deadlock_possible = false;
};

inline oracle_result explore_exhaustive(const compiled_program& cp,
                                        int threads_arg, i64 state_cap) {
  oracle_result res;
  std::set<std::string> seen;
  std::vector<machine> work;
  {
    machine m0(cp, threads_arg, 0, run_mode::free_run);
    seen.insert(m0.state_key());
    work.push_back(std::move(m0));
  }
  while (!work.empty()) {
    machine m = std::move(work.back());
    work.pop_back();
    if (++res.states_explored > state_cap)
      throw cap_error("exhaustive exploration passed " +
                      std::to_string(state_cap) + " states");

    std::vector<poised_access> mems;
    std::vector<int> mem_tids;
    int nthreads = static_cast<int>(m.threads().size());
    for (int t = 0; t < nthreads; ++t) {
      poised_access pa = m.poised(t);
      if (!pa.is_mem) continue;
      mems.push_back(std::move(pa));
      mem_tids.push_back(t);
    }
    for (size_t i = 0; i < mems.size(); ++i)
      for (size_t j = i + 1; j < mems.size(); ++j) {
        const poised_access& a = mems[i];
        const poised_access& b = mems[j];
        if (a.global != b.global) continue;
        if (a.elem != b.elem) continue; // scalars are both -1
        if (!a.is_write && !b.is_write) continue;
        res.racing_pairs.insert(a.site <= b.site
                                    ? std::make_pair(a.site, b.site)
                                    : std::make_pair(b.site, a.site));
      }

    std::vector<int> ready = m.runnable_threads();
    if (ready.empty()) {
      res.final_states.insert(m.memory_key());
      if (!m.all_finished()) res.deadlock_possible = true;
      continue;
    }
    for (int t : ready) {
      machine next = m;
      next.step(t);
      if (seen.insert(next.state_key()).second) work.push_back(std::move(next));
    }
  }
  return res;
}

} // namespace racx

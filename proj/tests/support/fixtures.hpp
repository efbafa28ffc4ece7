#pragma once

// Shared fixtures for the search golden tests and the end-to-end CLI tests:
// a scripted backend playing a small deterministic agent against the
// quadratic-min task from the synthetic pack.

#include <filesystem>
#include <string>
#include <vector>

#include "aslab/backend.hpp"
#include "aslab/util.hpp"

namespace aslab::testing {

inline std::string completion(const std::string& plan, const std::string& code) {
  return "PLAN: " + plan + "\n```python\n" + code + "\n```\n";
}

inline std::string submit_code(double x, const std::string& marker) {
  return "open('submission.csv','w').write('id,prediction\\n0," + util::format_double(x) +
         "\\n')  # " + marker;
}

// Draft 1 succeeds poorly, draft 2 is buggy, drafts 3-5 succeed with worse
// scores; the debug fixes draft 2 well and improves converge on the optimum.
// Catch-all entries keep MCTS runs scripted whatever they choose to expand.
inline std::vector<backend::ScriptEntry> golden_script() {
  using backend::ScriptEntry;
  const auto contains = ScriptEntry::Match::Contains;
  std::vector<ScriptEntry> s;
  s.push_back({contains, "This is initial draft 1 of 5.",
               completion("Submit the midpoint guess.", submit_code(1.0, "v-d1"))});
  s.push_back({contains, "This is initial draft 2 of 5.",
               completion("Probe the upper branch.", "raise ValueError('boom-d2')")});
  s.push_back({contains, "This is initial draft 3 of 5.",
               completion("Try the far right side.", submit_code(3.0, "v-d3"))});
  s.push_back({contains, "This is initial draft 4 of 5.",
               completion("Try the origin.", submit_code(0.0, "v-d4"))});
  s.push_back({contains, "This is initial draft 5 of 5.",
               completion("Try two and a half.", submit_code(2.5, "v-d5"))});
  // Specific improves, matched on the target's code marker.
  s.push_back({contains, "# v-d1",
               completion("Nudge toward the optimum.", submit_code(1.45, "imp-m1"))});
  s.push_back({contains, "# imp-m1",
               completion("Nudge again.", submit_code(1.48, "imp-m2"))});
  s.push_back({contains, "# fix-a",
               completion("Move to the exact optimum.", submit_code(1.5, "imp-1"))});
  s.push_back({contains, "# imp-1",
               completion("Perturb slightly.", submit_code(1.49, "imp-2"))});
  s.push_back({contains, "# imp-2",
               completion("Perturb once more.", submit_code(1.51, "imp-3"))});
  // Specific debug for the buggy draft.
  s.push_back({contains, "boom-d2",
               completion("Replace the crash with a direct guess.",
                          submit_code(1.4, "fix-a"))});
  // Catch-alls, matched on the operator system prompts.
  s.push_back({contains, "improving a working solution",
               completion("Generic improvement.", submit_code(1.5, "imp-g"))});
  s.push_back({contains, "fixing a broken solution",
               completion("Generic fix.", submit_code(1.4, "fix-g"))});
  return s;
}

inline std::string golden_script_json() {
  std::string j = "{\"entries\": [\n";
  bool first = true;
  for (const auto& e : golden_script()) {
    if (!first) j += ",\n";
    first = false;
    auto esc = [](const std::string& s) {
      std::string out;
      for (char c : s) {
        switch (c) {
          case '"': out += "\\\""; break;
          case '\\': out += "\\\\"; break;
          case '\n': out += "\\n"; break;
          default: out += c;
        }
      }
      return out;
    };
    j += "  {\"match\": \"contains\", \"key\": \"" + esc(e.key) + "\", \"response\": \"" +
         esc(e.response) + "\"}";
  }
  j += "\n]}";
  return j;
}

// Fresh per-test scratch directory under the build tree.
inline std::string test_dir(const std::string& name) {
  const std::string dir = std::string(ASLAB_TEST_TMP) + "/" + name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace aslab::testing

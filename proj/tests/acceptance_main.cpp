// Acceptance suite: runs every criterion and prints one pass/fail line each.
// --only <id>   run a single criterion
// --skip <id>   run everything except <id> (repeatable)
// --workdir <d> directory for file-writing checks
#include <algorithm>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "stvel/validation.hpp"

int main(int argc, char** argv) {
  stvel::ValidationConfig cfg;
  std::vector<std::string> only, skip;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) only.push_back(argv[++i]);
    else if (arg == "--skip" && i + 1 < argc) skip.push_back(argv[++i]);
    else if (arg == "--workdir" && i + 1 < argc) cfg.work_dir = argv[++i];
    else if (arg == "--seed" && i + 1 < argc) cfg.seed = std::strtoull(argv[++i], nullptr, 10);
    else {
      std::fprintf(stderr, "unknown argument %s\n", arg.c_str());
      return 2;
    }
  }

  std::vector<stvel::CriterionResult> results;
  for (const std::string& id : stvel::criterion_ids()) {
    const bool chosen =
        only.empty() ? std::find(skip.begin(), skip.end(), id) == skip.end()
                     : std::find(only.begin(), only.end(), id) != only.end();
    if (!chosen) continue;
    results.push_back(stvel::run_criterion(cfg, id));
  }

  std::fputs(stvel::format_report(results).c_str(), stdout);
  int failures = 0;
  for (const auto& r : results)
    if (!r.passed) ++failures;
  if (failures > 0) std::fprintf(stdout, "%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}

// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
//   acceptance [--quick] [--threads N] [--only 3,5] [--json path]
#include "fracheat/acceptance.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <fstream>

int main(int argc, char** argv)
{
  CLI::App app{"acceptance criteria"};
  bool quick = false;
  int threads = 1;
  std::vector<int> only;
  std::string json_path;
  app.add_flag("--quick", quick, "reduced seeds and points");
  app.add_option("--threads", threads)->check(CLI::PositiveNumber);
  app.add_option("--only", only)->delimiter(',')->check(CLI::Range(1, fracheat::kCriteriaCount));
  app.add_option("--json", json_path, "write per-criterion details here");
  CLI11_PARSE(app, argc, argv);

  std::vector<int> ids = only;
  if (ids.empty())
    for (int i = 1; i <= fracheat::kCriteriaCount; ++i)
      ids.push_back(i);

  fracheat::AcceptanceOptions opt;
  opt.quick = quick;
  opt.threads = threads;
  int failed = 0;
  nlohmann::json all = nlohmann::json::array();
  for (int id : ids) {
    fracheat::CriterionResult r;
    try {
      r = fracheat::run_criterion(id, opt);
    } catch (const std::exception& e) {
      r.id = id;
      r.title = fracheat::criterion_title(id);
      r.pass = false;
      r.summary = std::string("error: ") + e.what();
    }
    std::printf("%s %d %s: %s (%.1f s)\n", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str(), r.summary.c_str(),
                r.seconds);
    std::fflush(stdout);
    failed += r.pass ? 0 : 1;
    all.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"summary", r.summary}, {"detail", r.detail}});
  }
  if (!json_path.empty())
    std::ofstream(json_path) << all.dump(2) << "\n";
  std::printf("%zu criteria, %d failed\n", ids.size(), failed);
  return failed == 0 ? 0 : 1;
}

#pragma once

#include "json.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fracheat {

  struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string summary;      // one line, numbers included
    double seconds = 0.0;
    nlohmann::json detail;
  };

  struct AcceptanceOptions {
    int threads = 1;
    unsigned long long seed = 20240601ULL;
    bool quick = false;       // fewer seeds/points, for smoke runs; the criteria thresholds are unchanged
  };

  constexpr int kCriteriaCount = 8;

  std::string criterion_title(int id);
  CriterionResult run_criterion(int id, const AcceptanceOptions& opt);
  std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids, const AcceptanceOptions& opt,
                                              const std::function<void(const CriterionResult&)>& on_result = {});

}

#pragma once

#include "momsurv/hazard.hpp"

#include <string>
#include <vector>

namespace fixture {

// Small datasets with hand-computed product-limit values.
struct KmCase {
  std::string name;
  momsurv::SurvivalDataset data;
  std::vector<double> at;        // query times
  std::vector<double> survival;  // expected S(at[k])
};

inline std::vector<KmCase> kaplan_meier_cases() {
  std::vector<KmCase> cases;
  cases.push_back({"two deaths around a censoring",
                   momsurv::SurvivalDataset({1, 2, 3}, {true, false, true}),
                   {0.5, 1, 1.5, 2, 2.5, 3, 10},
                   {1, 2.0 / 3, 2.0 / 3, 2.0 / 3, 2.0 / 3, 0, 0}});
  // at risk 6, 4, 3 at the event times 1, 2, 3
  const double s1 = 5.0 / 6;
  const double s2 = s1 * (3.0 / 4);
  const double s3 = s2 * (2.0 / 3);
  cases.push_back({"ties between deaths and censorings",
                   momsurv::SurvivalDataset({3, 1, 4, 2, 3, 1}, {false, true, false, true, true, false}),
                   {0, 1, 1.9, 2, 3, 3.5, 4, 7},
                   {1, s1, s1, s2, s3, s3, s3, s3}});
  cases.push_back({"all censored",
                   momsurv::SurvivalDataset({0.4, 2.2, 1.1}, {false, false, false}),
                   {0, 0.4, 1.5, 3},
                   {1, 1, 1, 1}});
  return cases;
}

}  // namespace fixture

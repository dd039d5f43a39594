// Shared test fixtures.
#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <string>

#include "logdrift/cohort.hpp"

namespace fixtures {

// A 49-participant cohort reproducing the published demographic breakdown:
// 22 ANX (17 female, 17 citizens, 15 lower-class), 27 non-ANX (13/22/16),
// 20 DEP (17/15/13), 29 non-DEP (13/24/18), 18 in both groups, 30 female
// overall (plus 17 male, 2 nonbinary), 39 citizens, 31 lower-class.
inline logdrift::Cohort table1_cohort() {
  using namespace logdrift;
  struct Cell {
    int n;
    int females;
    int citizens;
    int lower;
    int nonbinary;  // among the non-females
    int delta_gad7;
    int delta_phq9;
  };
  // both, anx-only, dep-only, neither
  const std::array<Cell, 4> cells = {{
      {18, 15, 13, 11, 0, 6, 5},
      {4, 2, 4, 4, 0, 5, 4},
      {2, 2, 2, 2, 0, 4, 5},
      {25, 11, 20, 14, 2, 0, -3},
  }};
  Cohort cohort;
  int serial = 0;
  for (const Cell& cell : cells) {
    for (int i = 0; i < cell.n; ++i) {
      Participant p;
      char buf[8];
      std::snprintf(buf, sizeof(buf), "p%02d", ++serial);
      p.id = buf;
      if (i < cell.females) {
        p.gender = Gender::female;
      } else {
        p.gender = (cell.n - i) <= cell.nonbinary ? Gender::nonbinary : Gender::male;
      }
      p.us_citizen = i < cell.citizens;
      p.class_year = i < cell.lower ? ClassYear::lower : ClassYear::upper;
      SurveyRound r1, r2;
      r1.gad7 = {1, 1, 1, 0, 0, 0, 0};  // total 3
      r1.phq9 = {1, 1, 1, 0, 0, 0, 0, 0, 0};
      auto bump = [](std::array<int, 7> base, int delta) {
        int remaining = delta;
        for (auto& item : base) {
          int add = std::clamp(remaining, -item, 3 - item);
          item += add;
          remaining -= add;
          if (remaining == 0) break;
        }
        return base;
      };
      auto bump9 = [](std::array<int, 9> base, int delta) {
        int remaining = delta;
        for (auto& item : base) {
          int add = std::clamp(remaining, -item, 3 - item);
          item += add;
          remaining -= add;
          if (remaining == 0) break;
        }
        return base;
      };
      r2.gad7 = bump(r1.gad7, cell.delta_gad7);
      r2.phq9 = bump9(r1.phq9, cell.delta_phq9);
      p.survey_r1 = r1;
      p.survey_r2 = r2;
      cohort.participants.push_back(std::move(p));
    }
  }
  return cohort;
}

}  // namespace fixtures

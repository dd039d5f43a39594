#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "logdrift/features.hpp"
#include "logdrift/stats.hpp"
#include "logdrift/timeline.hpp"

namespace logdrift {

enum class Gender { female, male, nonbinary };
enum class ClassYear { lower, upper };  // 1st-2nd vs 3rd-4th year

struct SurveyRound {
  std::array<int, 7> gad7{};
  std::array<int, 9> phq9{};
};

struct Participant {
  std::string id;
  Gender gender = Gender::female;
  bool us_citizen = true;
  ClassYear class_year = ClassYear::lower;
  int tz_offset_minutes = 0;
  std::optional<SurveyRound> survey_r1;
  std::optional<SurveyRound> survey_r2;
  std::string events_path;  // canonical NDJSON for this participant
};

struct Cohort {
  std::vector<Participant> participants;
};

Cohort load_cohort(const std::string& json_text);
Cohort load_cohort_file(const std::string& path);
std::string cohort_to_json(const Cohort& cohort);

// Survey totals; items must be in 0-3.
int score_gad7(const std::array<int, 7>& items);
int score_phq9(const std::array<int, 9>& items);

// DEP / ANX flags from the round-over-round score increase.
struct GroupLabels {
  bool dep = false;
  bool anx = false;
  int delta_phq9 = 0;
  int delta_gad7 = 0;
};

constexpr int kGroupDeltaThreshold = 5;

// Throws when either survey round is missing.
GroupLabels label_groups(const Participant& p);

enum class Grouping { dep, anx };
std::string_view to_string(Grouping g);

struct DemographicTest {
  std::string factor;  // "female", "us_citizen", "lower_class"
  stats::TwoByTwo table;
  bool testable = false;
  stats::StatTestResult result;  // valid when testable
  std::string note;              // reason when untestable
};

// One 2x2 chi-square per demographic factor against group membership.
// Participants missing a survey round are excluded listwise. A degenerate
// marginal makes that factor untestable, not fatal.
std::vector<DemographicTest> demographic_tests(const Cohort& cohort, Grouping grouping,
                                               bool yates_correction = true);

// Paired t-tests per feature between the same participants' year_a and
// year_b deltas. Participants missing from either table, or flagged on the
// variable in either year, are excluded from that variable's pairs.
struct SeasonalControl {
  struct Row {
    std::string variable;
    stats::StatTestResult test;  // difference taken as year_b - year_a
    std::int64_t n_pairs = 0;
    std::int64_t excluded = 0;
  };
  std::vector<Row> rows;
};

SeasonalControl seasonal_control(const std::vector<FeatureDelta>& year_a,
                                 const std::vector<FeatureDelta>& year_b);

// One Tables-2/3-shaped row per behavior variable.
struct ReportRow {
  std::string variable;
  stats::GroupSummary group_a;  // the condition group (DEP or ANX)
  stats::GroupSummary group_b;  // its complement
  stats::StatTestResult test;
  bool holm_reject = false;
  bool uncorrected_reject = false;
  bool unreliable = false;  // > 20% of participants flagged on this variable
};

struct GroupAnalysis {
  Grouping grouping = Grouping::dep;
  std::vector<DemographicTest> demographics;
  std::vector<std::string> covariates;  // chosen or forced, at most one
  std::int64_t n_group = 0;
  std::int64_t n_complement = 0;
  std::int64_t excluded_missing_survey = 0;
  std::vector<ReportRow> rows;
};

// The full group-difference battery: demographic chi-squares, covariate
// selection (a factor enters iff its chi-square p < .05 unless the config
// forces a list), per-variable ANCOVA with group summaries, then Holm over
// the collected p-values. Throws when either group is empty or when the
// cohort and feature table disagree on participant ids.
GroupAnalysis run_group_analysis(const Cohort& cohort, Grouping grouping,
                                 const std::vector<FeatureDelta>& features,
                                 const AnalysisConfig& cfg);

// Report rendering. Fractions appear as percentages with 2 decimals; the
// Markdown table mirrors the CSV cell for cell.
void write_report_csv(std::ostream& out, const GroupAnalysis& analysis);
void write_report_markdown(std::ostream& out, const GroupAnalysis& analysis);
void write_demographics_csv(std::ostream& out, const GroupAnalysis& analysis);

}  // namespace logdrift

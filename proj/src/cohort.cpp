#include "logdrift/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace logdrift {

namespace {

[[noreturn]] void cohort_error(const std::string& msg) {
  throw std::runtime_error("cohort: " + msg);
}

Gender gender_from_string(const std::string& s) {
  if (s == "female") return Gender::female;
  if (s == "male") return Gender::male;
  if (s == "nonbinary") return Gender::nonbinary;
  cohort_error("unknown gender \"" + s + "\"");
}

std::string_view gender_to_string(Gender g) {
  switch (g) {
    case Gender::female: return "female";
    case Gender::male: return "male";
    case Gender::nonbinary: return "nonbinary";
  }
  return "female";
}

ClassYear class_year_from_string(const std::string& s) {
  if (s == "lower") return ClassYear::lower;
  if (s == "upper") return ClassYear::upper;
  cohort_error("unknown class_year \"" + s + "\"");
}

template <std::size_t N>
std::array<int, N> read_items(const nlohmann::json& arr, const char* what) {
  if (!arr.is_array() || arr.size() != N) {
    cohort_error(std::string(what) + " must be an array of " + std::to_string(N));
  }
  std::array<int, N> items{};
  for (std::size_t i = 0; i < N; ++i) items[i] = arr[i].get<int>();
  return items;
}

SurveyRound read_round(const nlohmann::json& obj) {
  SurveyRound r;
  r.gad7 = read_items<7>(obj.at("gad7"), "gad7");
  r.phq9 = read_items<9>(obj.at("phq9"), "phq9");
  return r;
}

}  // namespace

Cohort load_cohort(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("participants")) {
    cohort_error("expected {\"participants\": [...]}");
  }
  Cohort cohort;
  std::set<std::string> seen;
  for (const auto& item : doc["participants"]) {
    Participant p;
    p.id = item.at("id").get<std::string>();
    if (p.id.empty()) cohort_error("empty participant id");
    if (!seen.insert(p.id).second) cohort_error("duplicate participant id " + p.id);
    p.gender = gender_from_string(item.at("gender").get<std::string>());
    p.us_citizen = item.at("us_citizen").get<bool>();
    p.class_year = class_year_from_string(item.at("class_year").get<std::string>());
    p.tz_offset_minutes = item.value("tz_offset", 0);
    if (item.contains("surveys")) {
      const auto& surveys = item["surveys"];
      if (surveys.contains("r1")) p.survey_r1 = read_round(surveys["r1"]);
      if (surveys.contains("r2")) p.survey_r2 = read_round(surveys["r2"]);
    }
    p.events_path = item.value("events", "");
    cohort.participants.push_back(std::move(p));
  }
  return cohort;
}

Cohort load_cohort_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cohort: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_cohort(ss.str());
}

std::string cohort_to_json(const Cohort& cohort) {
  nlohmann::ordered_json doc;
  doc["participants"] = nlohmann::ordered_json::array();
  for (const auto& p : cohort.participants) {
    nlohmann::ordered_json item;
    item["id"] = p.id;
    item["gender"] = std::string(gender_to_string(p.gender));
    item["us_citizen"] = p.us_citizen;
    item["class_year"] = p.class_year == ClassYear::lower ? "lower" : "upper";
    item["tz_offset"] = p.tz_offset_minutes;
    nlohmann::ordered_json surveys = nlohmann::ordered_json::object();
    auto round_json = [](const SurveyRound& r) {
      nlohmann::ordered_json obj;
      obj["gad7"] = r.gad7;
      obj["phq9"] = r.phq9;
      return obj;
    };
    if (p.survey_r1) surveys["r1"] = round_json(*p.survey_r1);
    if (p.survey_r2) surveys["r2"] = round_json(*p.survey_r2);
    item["surveys"] = std::move(surveys);
    item["events"] = p.events_path;
    doc["participants"].push_back(std::move(item));
  }
  return doc.dump(2) + "\n";
}

namespace {

template <std::size_t N>
int score_items(const std::array<int, N>& items, const char* what) {
  int total = 0;
  for (int v : items) {
    if (v < 0 || v > 3) {
      throw std::invalid_argument(std::string(what) + ": item out of range 0-3");
    }
    total += v;
  }
  return total;
}

}  // namespace

int score_gad7(const std::array<int, 7>& items) { return score_items(items, "gad7"); }
int score_phq9(const std::array<int, 9>& items) { return score_items(items, "phq9"); }

GroupLabels label_groups(const Participant& p) {
  if (!p.survey_r1 || !p.survey_r2) {
    throw std::invalid_argument("label_groups: missing survey round for " + p.id);
  }
  GroupLabels labels;
  labels.delta_phq9 = score_phq9(p.survey_r2->phq9) - score_phq9(p.survey_r1->phq9);
  labels.delta_gad7 = score_gad7(p.survey_r2->gad7) - score_gad7(p.survey_r1->gad7);
  labels.dep = labels.delta_phq9 >= kGroupDeltaThreshold;
  labels.anx = labels.delta_gad7 >= kGroupDeltaThreshold;
  return labels;
}

std::string_view to_string(Grouping g) { return g == Grouping::dep ? "dep" : "anx"; }

namespace {

struct LabeledParticipant {
  const Participant* p;
  bool in_group;
};

// Analyzable participants (both survey rounds) with their group flag,
// sorted by id so every downstream sum is order-stable.
std::vector<LabeledParticipant> labeled(const Cohort& cohort, Grouping grouping,
                                        std::int64_t* excluded) {
  std::vector<LabeledParticipant> out;
  std::int64_t missing = 0;
  for (const auto& p : cohort.participants) {
    if (!p.survey_r1 || !p.survey_r2) {
      ++missing;
      continue;
    }
    GroupLabels labels = label_groups(p);
    out.push_back({&p, grouping == Grouping::dep ? labels.dep : labels.anx});
  }
  std::sort(out.begin(), out.end(),
            [](const LabeledParticipant& a, const LabeledParticipant& b) {
              return a.p->id < b.p->id;
            });
  if (excluded) *excluded = missing;
  return out;
}

bool factor_value(const Participant& p, std::string_view factor) {
  if (factor == "female") return p.gender == Gender::female;
  if (factor == "us_citizen") return p.us_citizen;
  if (factor == "lower_class") return p.class_year == ClassYear::lower;
  throw std::invalid_argument("unknown demographic factor: " + std::string(factor));
}

constexpr std::array<std::string_view, 3> kFactors = {"female", "us_citizen",
                                                      "lower_class"};

}  // namespace

std::vector<DemographicTest> demographic_tests(const Cohort& cohort, Grouping grouping,
                                               bool yates_correction) {
  auto members = labeled(cohort, grouping, nullptr);
  std::vector<DemographicTest> tests;
  for (auto factor : kFactors) {
    DemographicTest t;
    t.factor = std::string(factor);
    for (const auto& m : members) {
      bool f = factor_value(*m.p, factor);
      if (m.in_group) {
        (f ? t.table.a : t.table.b) += 1;
      } else {
        (f ? t.table.c : t.table.d) += 1;
      }
    }
    try {
      t.result = stats::chi2_test(t.table, yates_correction);
      t.testable = true;
    } catch (const std::invalid_argument& e) {
      t.testable = false;
      t.note = e.what();
    }
    tests.push_back(std::move(t));
  }
  return tests;
}

SeasonalControl seasonal_control(const std::vector<FeatureDelta>& year_a,
                                 const std::vector<FeatureDelta>& year_b) {
  std::map<std::string, const FeatureDelta*> by_pid_a;
  for (const auto& row : year_a) by_pid_a[row.pid] = &row;
  std::map<std::string, const FeatureDelta*> by_pid_b;
  for (const auto& row : year_b) by_pid_b[row.pid] = &row;
  std::set<std::string> pids;
  for (const auto& [pid, _] : by_pid_a) pids.insert(pid);
  for (const auto& [pid, _] : by_pid_b) pids.insert(pid);

  SeasonalControl out;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    SeasonalControl::Row row;
    row.variable = std::string(kFeatureNames[i]);
    std::vector<double> a_vals, b_vals;
    for (const auto& pid : pids) {
      auto ita = by_pid_a.find(pid);
      auto itb = by_pid_b.find(pid);
      if (ita == by_pid_a.end() || itb == by_pid_b.end() ||
          ita->second->degenerate[i] || itb->second->degenerate[i]) {
        ++row.excluded;
        continue;
      }
      a_vals.push_back(ita->second->values[i]);
      b_vals.push_back(itb->second->values[i]);
    }
    row.n_pairs = static_cast<std::int64_t>(a_vals.size());
    if (row.n_pairs < 2) {
      throw std::invalid_argument("seasonal_control: n < 2 for " + row.variable);
    }
    row.test = stats::paired_t_test(b_vals, a_vals);
    out.rows.push_back(std::move(row));
  }
  return out;
}

GroupAnalysis run_group_analysis(const Cohort& cohort, Grouping grouping,
                                 const std::vector<FeatureDelta>& features,
                                 const AnalysisConfig& cfg) {
  GroupAnalysis analysis;
  analysis.grouping = grouping;
  auto members = labeled(cohort, grouping, &analysis.excluded_missing_survey);
  if (members.empty()) cohort_error("no analyzable participants");

  std::map<std::string, const FeatureDelta*> by_pid;
  for (const auto& row : features) by_pid[row.pid] = &row;
  std::vector<std::string> missing, extra;
  std::set<std::string> cohort_ids;
  for (const auto& m : members) {
    cohort_ids.insert(m.p->id);
    if (!by_pid.count(m.p->id)) missing.push_back(m.p->id);
  }
  for (const auto& [pid, _] : by_pid) {
    if (!cohort_ids.count(pid)) extra.push_back(pid);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "cohort/features id mismatch;";
    for (const auto& id : missing) msg += " missing:" + id;
    for (const auto& id : extra) msg += " extra:" + id;
    cohort_error(msg);
  }

  for (const auto& m : members) {
    (m.in_group ? analysis.n_group : analysis.n_complement) += 1;
  }
  if (analysis.n_group == 0 || analysis.n_complement == 0) {
    cohort_error("empty group for " + std::string(to_string(grouping)));
  }

  analysis.demographics = demographic_tests(cohort, grouping, cfg.yates_correction);
  if (cfg.force_covariates) {
    analysis.covariates = *cfg.force_covariates;
    for (const auto& c : analysis.covariates) factor_value(*members[0].p, c);
    if (analysis.covariates.size() > 1) {
      cohort_error("at most one covariate is supported");
    }
  } else {
    // Control the most imbalanced demographic factor, if any is significant.
    const DemographicTest* pick = nullptr;
    for (const auto& t : analysis.demographics) {
      if (t.testable && t.result.p < 0.05 && (!pick || t.result.p < pick->result.p)) {
        pick = &t;
      }
    }
    if (pick) analysis.covariates.push_back(pick->factor);
  }

  const std::size_t n = members.size();
  std::vector<double> p_for_holm;
  std::vector<std::size_t> holm_rows;
  for (std::size_t v = 0; v < kFeatureCount; ++v) {
    ReportRow row;
    row.variable = std::string(kFeatureNames[v]);
    std::vector<double> y, cov, a_vals, b_vals;
    std::vector<int> group;
    std::size_t flagged = 0;
    for (const auto& m : members) {
      const FeatureDelta& delta = *by_pid[m.p->id];
      if (delta.degenerate[v] || std::isnan(delta.values[v])) {
        ++flagged;
        continue;
      }
      y.push_back(delta.values[v]);
      group.push_back(m.in_group ? 1 : 0);
      if (!analysis.covariates.empty()) {
        cov.push_back(factor_value(*m.p, analysis.covariates[0]) ? 1.0 : 0.0);
      }
      (m.in_group ? a_vals : b_vals).push_back(delta.values[v]);
    }
    row.unreliable = flagged * 5 > n;  // more than 20% of participants flagged
    if (a_vals.size() < 2 || b_vals.size() < 2) {
      cohort_error("variable " + row.variable + " has fewer than 2 valid values per group");
    }
    row.group_a = stats::group_summary(a_vals);
    row.group_b = stats::group_summary(b_vals);
    row.test = analysis.covariates.empty()
                   ? stats::anova_group(y, group)
                   : stats::ancova_one_cov(y, group, cov);
    row.uncorrected_reject = row.test.p < 0.05;
    p_for_holm.push_back(row.test.p);
    holm_rows.push_back(v);
    analysis.rows.push_back(std::move(row));
  }
  std::vector<bool> rejects = stats::holm(p_for_holm, 0.05);
  for (std::size_t i = 0; i < holm_rows.size(); ++i) {
    analysis.rows[holm_rows[i]].holm_reject = rejects[i];
  }
  return analysis;
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

// Percent-change variables are rendered x100; the divergence stays raw.
double render_scale(std::size_t var_index) {
  return is_pct_feature(static_cast<FeatureId>(var_index)) ? 100.0 : 1.0;
}

std::vector<std::vector<std::string>> report_cells(const GroupAnalysis& analysis) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t v = 0; v < analysis.rows.size(); ++v) {
    const ReportRow& r = analysis.rows[v];
    const double s = render_scale(v);
    std::vector<std::string> cells;
    cells.push_back(r.variable);
    cells.push_back(std::to_string(r.group_a.n));
    cells.push_back(fixed(r.group_a.mean * s, 2));
    cells.push_back(fixed(r.group_a.sd * s, 2));
    cells.push_back(fixed(r.group_a.ci95_lo * s, 2));
    cells.push_back(fixed(r.group_a.ci95_hi * s, 2));
    cells.push_back(std::to_string(r.group_b.n));
    cells.push_back(fixed(r.group_b.mean * s, 2));
    cells.push_back(fixed(r.group_b.sd * s, 2));
    cells.push_back(fixed(r.group_b.ci95_lo * s, 2));
    cells.push_back(fixed(r.group_b.ci95_hi * s, 2));
    cells.push_back(fixed(r.test.statistic, 2));
    cells.push_back(fixed(r.test.df1, 0));
    cells.push_back(fixed(r.test.df2, 0));
    cells.push_back(fixed(r.test.p, 4));
    cells.push_back(fixed(r.test.effect.value_or(0.0), 3));
    cells.push_back(r.holm_reject ? "1" : "0");
    cells.push_back(r.uncorrected_reject ? "1" : "0");
    cells.push_back(r.unreliable ? "1" : "0");
    rows.push_back(std::move(cells));
  }
  return rows;
}

const char* kReportHeader[] = {
    "variable", "n_a", "mean_a", "sd_a", "ci_a_lo", "ci_a_hi",
    "n_b", "mean_b", "sd_b", "ci_b_lo", "ci_b_hi",
    "F", "df1", "df2", "p", "eta2_partial",
    "holm_reject", "uncorrected_reject", "unreliable"};

}  // namespace

void write_report_csv(std::ostream& out, const GroupAnalysis& analysis) {
  bool first = true;
  for (const char* h : kReportHeader) {
    if (!first) out << ',';
    out << h;
    first = false;
  }
  out << '\n';
  for (const auto& cells : report_cells(analysis)) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  }
}

void write_report_markdown(std::ostream& out, const GroupAnalysis& analysis) {
  const std::string label(to_string(analysis.grouping));
  out << "# Group analysis: " << label << " vs non-" << label << "\n\n";
  out << "Group n=" << analysis.n_group << ", complement n=" << analysis.n_complement;
  out << ", covariates:";
  if (analysis.covariates.empty()) {
    out << " none";
  } else {
    for (const auto& c : analysis.covariates) out << ' ' << c;
  }
  out << "\n\n|";
  for (const char* h : kReportHeader) out << ' ' << h << " |";
  out << "\n|";
  for (std::size_t i = 0; i < std::size(kReportHeader); ++i) out << " --- |";
  out << "\n";
  for (const auto& cells : report_cells(analysis)) {
    out << '|';
    for (const auto& cell : cells) out << ' ' << cell << " |";
    out << "\n";
  }
}

void write_demographics_csv(std::ostream& out, const GroupAnalysis& analysis) {
  out << "factor,group_yes,group_no,complement_yes,complement_no,chi2,p,testable\n";
  for (const auto& t : analysis.demographics) {
    out << t.factor << ',' << t.table.a << ',' << t.table.b << ',' << t.table.c
        << ',' << t.table.d << ',';
    if (t.testable) {
      out << fixed(t.result.statistic, 4) << ',' << fixed(t.result.p, 4) << ",1\n";
    } else {
      out << ",,0\n";
    }
  }
}

}  // namespace logdrift

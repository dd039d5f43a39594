#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "logdrift/cohort.hpp"
#include "logdrift/synth.hpp"

using namespace logdrift;

TEST_CASE("survey scoring") {
  CHECK(score_gad7({0, 0, 0, 0, 0, 0, 0}) == 0);
  CHECK(score_gad7({3, 3, 3, 3, 3, 3, 3}) == 21);
  CHECK(score_gad7({1, 1, 1, 1, 1, 1, 1}) == 7);
  CHECK(score_phq9({3, 3, 3, 3, 3, 3, 3, 3, 3}) == 27);
  CHECK_THROWS(score_gad7({4, 0, 0, 0, 0, 0, 0}));
  CHECK_THROWS(score_phq9({-1, 0, 0, 0, 0, 0, 0, 0, 0}));
}

TEST_CASE("scores are monotone in the items") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> item(0, 3);
  std::uniform_int_distribution<int> slot(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    std::array<int, 7> items;
    for (auto& v : items) v = item(rng);
    int base = score_gad7(items);
    int i = slot(rng);
    if (items[i] < 3) {
      auto raised = items;
      ++raised[i];
      CHECK(score_gad7(raised) > base);
    }
  }
}

TEST_CASE("group labeling thresholds") {
  Participant p;
  p.id = "x";
  SurveyRound r1, r2;
  r1.phq9 = {0, 0, 0, 0, 0, 0, 0, 0, 0};
  r1.gad7 = {2, 2, 2, 0, 0, 0, 0};
  SUBCASE("delta of exactly 5 labels the group") {
    r2.phq9 = {3, 2, 0, 0, 0, 0, 0, 0, 0};
    r2.gad7 = r1.gad7;
    p.survey_r1 = r1;
    p.survey_r2 = r2;
    GroupLabels l = label_groups(p);
    CHECK(l.delta_phq9 == 5);
    CHECK(l.dep);
    CHECK_FALSE(l.anx);
  }
  SUBCASE("delta of 4 does not") {
    r2.phq9 = {3, 1, 0, 0, 0, 0, 0, 0, 0};
    r2.gad7 = r1.gad7;
    p.survey_r1 = r1;
    p.survey_r2 = r2;
    CHECK_FALSE(label_groups(p).dep);
  }
  SUBCASE("a decrease never labels") {
    r2.phq9 = r1.phq9;
    r2.gad7 = {1, 0, 0, 0, 0, 0, 0};
    p.survey_r1 = r1;
    p.survey_r2 = r2;
    GroupLabels l = label_groups(p);
    CHECK(l.delta_gad7 == -5);
    CHECK_FALSE(l.anx);
  }
  SUBCASE("missing round throws") {
    p.survey_r1 = r1;
    p.survey_r2.reset();
    CHECK_THROWS(label_groups(p));
  }
}

TEST_CASE("cohort json round trip") {
  Cohort cohort = fixtures::table1_cohort();
  cohort.participants[0].events_path = "events/p01.ndjson";
  cohort.participants[0].tz_offset_minutes = -300;
  Cohort round = load_cohort(cohort_to_json(cohort));
  REQUIRE(round.participants.size() == cohort.participants.size());
  CHECK(round.participants[0].id == cohort.participants[0].id);
  CHECK(round.participants[0].tz_offset_minutes == -300);
  CHECK(round.participants[0].events_path == "events/p01.ndjson");
  CHECK(round.participants[0].gender == cohort.participants[0].gender);
  CHECK(round.participants[0].survey_r1->gad7 == cohort.participants[0].survey_r1->gad7);

  CHECK_THROWS(load_cohort("{}"));
  CHECK_THROWS(load_cohort(R"({"participants":[{"id":"a","gender":"robot",
      "us_citizen":true,"class_year":"lower"}]})"));
}

TEST_CASE("the table-1 cohort reproduces the published group sizes") {
  Cohort cohort = fixtures::table1_cohort();
  REQUIRE(cohort.participants.size() == 49);
  int dep = 0, anx = 0, both = 0, female = 0;
  for (const auto& p : cohort.participants) {
    GroupLabels l = label_groups(p);
    dep += l.dep;
    anx += l.anx;
    both += l.dep && l.anx;
    female += p.gender == Gender::female;
  }
  CHECK(dep == 20);
  CHECK(anx == 22);
  CHECK(both == 18);
  CHECK(female == 30);
}

TEST_CASE("demographic chi-squares match the published values") {
  Cohort cohort = fixtures::table1_cohort();
  auto anx_tests = demographic_tests(cohort, Grouping::anx);
  REQUIRE(anx_tests.size() == 3);
  const auto& anx_female = anx_tests[0];
  CHECK(anx_female.factor == "female");
  CHECK(anx_female.table.a == 17);
  CHECK(anx_female.table.b == 5);
  CHECK(anx_female.table.c == 13);
  CHECK(anx_female.table.d == 14);
  CHECK(std::fabs(anx_female.result.statistic - 3.2) <= 0.05);
  CHECK(std::fabs(anx_female.result.p - 0.07) <= 0.01);

  const auto& anx_citizen = anx_tests[1];
  CHECK(anx_citizen.factor == "us_citizen");
  CHECK(anx_citizen.result.statistic < 0.1);
  CHECK(std::fabs(anx_citizen.result.p - 0.99) <= 0.01);

  auto dep_tests = demographic_tests(cohort, Grouping::dep);
  const auto& dep_female = dep_tests[0];
  CHECK(std::fabs(dep_female.result.statistic - 6.4) <= 0.05);
  CHECK(std::fabs(dep_female.result.p - 0.01) <= 0.005);
}

TEST_CASE("an all-female cohort makes the female factor untestable") {
  Cohort cohort = fixtures::table1_cohort();
  for (auto& p : cohort.participants) p.gender = Gender::female;
  auto tests = demographic_tests(cohort, Grouping::anx);
  CHECK_FALSE(tests[0].testable);
  CHECK(!tests[0].note.empty());
  CHECK(tests[1].testable);  // citizenship still varies
}

namespace {

// Deterministic synthetic feature table with a planted group effect on one
// variable.
std::vector<FeatureDelta> synthetic_features(const Cohort& cohort, Grouping grouping,
                                             FeatureId planted, double effect,
                                             std::uint64_t seed) {
  std::vector<FeatureDelta> rows;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (const auto& p : cohort.participants) {
    GroupLabels l = label_groups(p);
    bool in_group = grouping == Grouping::dep ? l.dep : l.anx;
    FeatureDelta d;
    d.pid = p.id;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      d.values[i] = 0.1 + noise(rng);
      if (static_cast<FeatureId>(i) == planted && in_group) d.values[i] += effect;
    }
    rows.push_back(std::move(d));
  }
  return rows;
}

}  // namespace

TEST_CASE("run_group_analysis detects a planted effect and nothing else") {
  Cohort cohort = fixtures::table1_cohort();
  AnalysisConfig cfg;
  auto features = synthetic_features(cohort, Grouping::dep, FeatureId::lna_pct, 0.4, 1);
  GroupAnalysis analysis = run_group_analysis(cohort, Grouping::dep, features, cfg);
  CHECK(analysis.n_group == 20);
  CHECK(analysis.n_complement == 29);
  // the data-driven covariate pick controls gender for DEP (p = .011)
  REQUIRE(analysis.covariates.size() == 1);
  CHECK(analysis.covariates[0] == "female");
  REQUIRE(analysis.rows.size() == kFeatureCount);
  CHECK(analysis.rows[0].variable == "lna_pct");
  CHECK(analysis.rows[0].holm_reject);
  CHECK(analysis.rows[0].uncorrected_reject);
  CHECK(analysis.rows[0].test.df1 == 1.0);
  CHECK(analysis.rows[0].test.df2 == 46.0);  // 49 - 3 with the covariate
  for (std::size_t i = 1; i < analysis.rows.size(); ++i) {
    CHECK_FALSE(analysis.rows[i].holm_reject);
  }
  // summaries separate the groups on the planted variable
  CHECK(analysis.rows[0].group_a.mean > analysis.rows[0].group_b.mean + 0.3);
}

TEST_CASE("ANX grouping picks no covariate at the 0.05 rule") {
  Cohort cohort = fixtures::table1_cohort();
  AnalysisConfig cfg;
  auto features = synthetic_features(cohort, Grouping::anx, FeatureId::sei_pct, 0.4, 2);
  GroupAnalysis analysis = run_group_analysis(cohort, Grouping::anx, features, cfg);
  CHECK(analysis.covariates.empty());  // female p = .074 misses the cut
  CHECK(analysis.rows[2].test.df2 == 47.0);  // 49 - 2 without a covariate

  cfg.force_covariates = std::vector<std::string>{"female"};
  GroupAnalysis forced = run_group_analysis(cohort, Grouping::anx, features, cfg);
  REQUIRE(forced.covariates.size() == 1);
  CHECK(forced.rows[2].test.df2 == 46.0);
}

TEST_CASE("run_group_analysis output is invariant under participant order") {
  Cohort cohort = fixtures::table1_cohort();
  AnalysisConfig cfg;
  auto features = synthetic_features(cohort, Grouping::dep, FeatureId::inact_kl, 0.3, 3);
  GroupAnalysis a = run_group_analysis(cohort, Grouping::dep, features, cfg);

  std::mt19937_64 rng(9);
  std::shuffle(cohort.participants.begin(), cohort.participants.end(), rng);
  std::shuffle(features.begin(), features.end(), rng);
  GroupAnalysis b = run_group_analysis(cohort, Grouping::dep, features, cfg);

  std::ostringstream csv_a, csv_b;
  write_report_csv(csv_a, a);
  write_report_csv(csv_b, b);
  CHECK(csv_a.str() == csv_b.str());
}

TEST_CASE("run_group_analysis error paths") {
  Cohort cohort = fixtures::table1_cohort();
  AnalysisConfig cfg;
  auto features = synthetic_features(cohort, Grouping::dep, FeatureId::lna_pct, 0.0, 4);

  SUBCASE("empty group") {
    // wipe out every DEP label by resetting round 2 to round 1
    for (auto& p : cohort.participants) p.survey_r2 = p.survey_r1;
    CHECK_THROWS_WITH(run_group_analysis(cohort, Grouping::dep, features, cfg),
                      doctest::Contains("empty group"));
  }
  SUBCASE("id mismatch lists offenders") {
    features.pop_back();
    FeatureDelta stranger;
    stranger.pid = "zz99";
    for (auto& v : stranger.values) v = 0.1;
    features.push_back(stranger);
    try {
      run_group_analysis(cohort, Grouping::dep, features, cfg);
      FAIL("expected id mismatch");
    } catch (const std::runtime_error& e) {
      std::string msg = e.what();
      CHECK(msg.find("missing:p49") != std::string::npos);
      CHECK(msg.find("extra:zz99") != std::string::npos);
    }
  }
  SUBCASE("constant covariate is a singular design, not a silent answer") {
    for (auto& p : cohort.participants) p.us_citizen = true;
    cfg.force_covariates = std::vector<std::string>{"us_citizen"};
    CHECK_THROWS_WITH(run_group_analysis(cohort, Grouping::dep, features, cfg),
                      doctest::Contains("singular"));
  }
  SUBCASE("missing surveys are excluded listwise") {
    cohort.participants[5].survey_r2.reset();  // a DEP member
    features.erase(features.begin() + 5);
    GroupAnalysis analysis = run_group_analysis(cohort, Grouping::dep, features, cfg);
    CHECK(analysis.excluded_missing_survey == 1);
    CHECK(analysis.n_group + analysis.n_complement == 48);
  }
}

TEST_CASE("a variable with many degenerate flags is marked unreliable") {
  Cohort cohort = fixtures::table1_cohort();
  AnalysisConfig cfg;
  auto features = synthetic_features(cohort, Grouping::dep, FeatureId::lna_pct, 0.3, 5);
  // flag 11 of 49 (> 20%) on cat_news
  for (int i = 0; i < 11; ++i) {
    features[i * 4 % features.size()].degenerate[8] = true;
  }
  std::size_t flagged = 0;
  for (auto& f : features) flagged += f.degenerate[8];
  REQUIRE(flagged == 11);
  GroupAnalysis analysis = run_group_analysis(cohort, Grouping::dep, features, cfg);
  CHECK(analysis.rows[8].unreliable);
  CHECK_FALSE(analysis.rows[0].unreliable);
  CHECK(analysis.rows[8].group_a.n + analysis.rows[8].group_b.n == 38);
}

TEST_CASE("report csv and markdown mirror each other") {
  Cohort cohort = fixtures::table1_cohort();
  AnalysisConfig cfg;
  auto features = synthetic_features(cohort, Grouping::dep, FeatureId::lna_pct, 0.4, 6);
  GroupAnalysis analysis = run_group_analysis(cohort, Grouping::dep, features, cfg);
  std::ostringstream csv, md;
  write_report_csv(csv, analysis);
  write_report_markdown(md, analysis);
  // every csv cell of the first data row appears in the markdown row
  std::string first_line = csv.str().substr(csv.str().find('\n') + 1);
  first_line = first_line.substr(0, first_line.find('\n'));
  std::istringstream cells(first_line);
  std::string cell;
  while (std::getline(cells, cell, ',')) {
    CHECK(md.str().find(cell) != std::string::npos);
  }
  std::ostringstream demo;
  write_demographics_csv(demo, analysis);
  CHECK(demo.str().find("female,17,3,13,16") != std::string::npos);
}

TEST_CASE("seasonal_control pairs years and excludes the incomplete") {
  std::vector<FeatureDelta> year_a, year_b;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int i = 0; i < 30; ++i) {
    FeatureDelta a, b;
    a.pid = b.pid = "p" + std::to_string(i);
    for (std::size_t v = 0; v < kFeatureCount; ++v) {
      a.values[v] = noise(rng);
      b.values[v] = noise(rng) + (v == 0 ? 0.3 : 0.0);  // planted on lna only
    }
    year_a.push_back(a);
    year_b.push_back(b);
  }
  // one participant missing from year_a, one flagged in year_b
  year_a.pop_back();
  year_b[0].degenerate[2] = true;

  SeasonalControl sc = seasonal_control(year_a, year_b);
  REQUIRE(sc.rows.size() == kFeatureCount);
  CHECK(sc.rows[0].variable == "lna_pct");
  CHECK(sc.rows[0].test.p < 0.001);
  CHECK(sc.rows[0].n_pairs == 29);
  CHECK(sc.rows[0].excluded == 1);
  CHECK(sc.rows[2].n_pairs == 28);
  CHECK(sc.rows[2].excluded == 2);
  // year_b larger on the planted variable means a positive statistic
  CHECK(sc.rows[0].test.statistic > 0.0);
}

TEST_CASE("seasonal_control requires at least two pairs") {
  std::vector<FeatureDelta> year_a(1), year_b(1);
  year_a[0].pid = year_b[0].pid = "solo";
  for (std::size_t v = 0; v < kFeatureCount; ++v) {
    year_a[0].values[v] = 0.1;
    year_b[0].values[v] = 0.2;
  }
  CHECK_THROWS_WITH(seasonal_control(year_a, year_b), doctest::Contains("n < 2"));
}

TEST_CASE("seasonal control over generated two-year histories" *
          doctest::timeout(300)) {
  // Full-pipeline Monte Carlo: a +30% late-night shift planted only in the
  // second year is detected at p < .001 in nearly every seed, and a null
  // second year rejects at roughly the nominal rate.
  BehaviorProfile profile = default_profile();
  AnalysisConfig cfg2019, cfg2020;
  cfg2019.cutoff_local = *parse_local_datetime("2019-03-14T00:00");
  cfg2019.window_days = 30;
  cfg2020.window_days = 30;
  Lexicon lexicon = load_lexicon_file(std::string(TEST_DATA_DIR) + "/lexicon/demo.dic");
  OfflineCategoryProvider provider =
      OfflineCategoryProvider::from_directory(std::string(TEST_DATA_DIR) + "/categories");

  ShiftSpec shift;
  shift.lna_intensity_mult = 1.3;
  BehaviorProfile shifted = apply_shift(profile, shift);
  const std::int64_t span = 30 * kSecondsPerDay;

  int detections = 0;
  const int seeds = 100;
  for (int seed = 0; seed < seeds; ++seed) {
    std::vector<FeatureDelta> year_a, year_b;
    for (int i = 0; i < 49; ++i) {
      std::string pid = "p" + std::to_string(i);
      std::uint64_t base_seed = 7777 * (seed + 1) + i;
      auto stream = [&](const BehaviorProfile& prof, UnixSeconds start,
                        UnixSeconds end, std::uint64_t salt) {
        return generate_stream(prof, pid, start, end, 0, base_seed ^ salt);
      };
      std::vector<ActivityEvent> ev2019 =
          stream(profile, cfg2019.cutoff_local - span, cfg2019.cutoff_local, 0x10);
      auto after2019 =
          stream(profile, cfg2019.cutoff_local, cfg2019.cutoff_local + span, 0x20);
      ev2019.insert(ev2019.end(), after2019.begin(), after2019.end());

      std::vector<ActivityEvent> ev2020 =
          stream(profile, cfg2020.cutoff_local - span, cfg2020.cutoff_local, 0x30);
      auto after2020 =
          stream(shifted, cfg2020.cutoff_local, cfg2020.cutoff_local + span, 0x40);
      ev2020.insert(ev2020.end(), after2020.begin(), after2020.end());

      FeatureDelta a = extract_feature_delta(ev2019, cfg2019, lexicon, provider);
      a.pid = pid;
      FeatureDelta b = extract_feature_delta(ev2020, cfg2020, lexicon, provider);
      b.pid = pid;
      year_a.push_back(std::move(a));
      year_b.push_back(std::move(b));
    }
    SeasonalControl sc = seasonal_control(year_a, year_b);
    if (sc.rows[0].test.p < 0.001) ++detections;
  }
  CHECK(detections >= 95);
}

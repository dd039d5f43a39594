#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "logdrift/features.hpp"
#include "oracles.hpp"

using namespace logdrift;

namespace {

Lexicon demo_lexicon() {
  return load_lexicon(
      "%\n"
      "1 personal_concern\n"
      "2 negative_emotion\n"
      "3 social\n"
      "4 health\n"
      "%\n"
      "work 1\nmoney 1\n"
      "sad 2\nangr* 2\n"
      "friend* 3\nfamily 3\n"
      "doctor* 4\nflu 4\n");
}

class ListProvider : public CategoryProvider {
 public:
  std::optional<std::set<std::string>> lookup(const ActivityEvent& e) const override {
    std::set<std::string> tags;
    if (e.text.find("nsfw") != std::string::npos) tags.insert("adult");
    if (e.text.find("news") != std::string::npos) tags.insert("news");
    return tags;
  }
};

ActivityEvent make_event(const std::string& pid, UnixSeconds ts,
                         const std::string& text) {
  ActivityEvent e;
  e.pid = pid;
  e.ts = ts;
  e.platform = Platform::search;
  e.kind = EventKind::query;
  e.text = text;
  return e;
}

Eigen::ArrayXd arr(std::initializer_list<double> v) {
  Eigen::ArrayXd a(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) a[i++] = x;
  return a;
}

}  // namespace

TEST_CASE("pct_change") {
  CHECK(pct_change(100, 150) == doctest::Approx(0.5));
  CHECK(pct_change(200, 100) == doctest::Approx(-0.5));
  CHECK(pct_change(7, 7) == 0.0);
  CHECK(pct_change(5, 10) == doctest::Approx(1.0));
  CHECK_THROWS_WITH(pct_change(0, 7), doctest::Contains("zero baseline"));
}

TEST_CASE("kl_divergence basics") {
  CHECK(kl_divergence(arr({0.5, 0.5}), arr({0.5, 0.5}), 0.0) == doctest::Approx(0.0));
  // hand-evaluated two-bin case: 0.5 ln 2 + 0.5 ln(2/3)
  CHECK(kl_divergence(arr({0.5, 0.5}), arr({0.25, 0.75}), 0.0) ==
        doctest::Approx(0.143841).epsilon(1e-6 / 0.143841));
  // asymmetry on the same pair
  CHECK(kl_divergence(arr({0.25, 0.75}), arr({0.5, 0.5}), 0.0) !=
        doctest::Approx(0.143841).epsilon(1e-4));

  // disjoint 24-bin masses land on the ln(1/eps) scale after smoothing
  Eigen::ArrayXd p = Eigen::ArrayXd::Zero(24), q = Eigen::ArrayXd::Zero(24);
  p[3] = 1.0;
  q[17] = 1.0;
  double d = kl_divergence(p, q, 1e-6);
  CHECK(d > 0.5 * std::log(1e6));
  CHECK(d < 1.5 * std::log(1e6));

  // unsmoothed zero bin in q is infinite
  CHECK(std::isinf(kl_divergence(arr({0.5, 0.5}), arr({1.0, 0.0}), 0.0)));
}

TEST_CASE("kl_divergence nonnegativity, identity, and oracle agreement") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> size_dist(2, 24);
  for (int trial = 0; trial < 10000; ++trial) {
    int n = size_dist(rng);
    std::vector<double> pv(n), qv(n);
    double ps = 0, qs = 0;
    for (int i = 0; i < n; ++i) {
      pv[i] = unit(rng);
      qv[i] = trial % 10 == 0 ? 0.0 : unit(rng);  // occasional hard zeros
      ps += pv[i];
      qs += qv[i];
    }
    if (qs == 0) qv[0] = ps > 0 ? (qs = ps, ps) : (qs = 1, 1);
    if (ps == 0) pv[0] = (ps = 1, 1);
    Eigen::ArrayXd p(n), q(n);
    for (int i = 0; i < n; ++i) {
      p[i] = pv[i] / ps;
      q[i] = qv[i] / qs;
      pv[i] = p[i];
      qv[i] = q[i];
    }
    double d = kl_divergence(p, q, 1e-6);
    CHECK(d >= 0.0);
    CHECK(d == doctest::Approx(oracles::kl_naive(pv, qv, 1e-6)).epsilon(1e-12));
    CHECK(kl_divergence(p, p, 1e-6) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("extract_feature_delta on a mirrored stream is all zero") {
  AnalysisConfig cfg;
  Lexicon lex = demo_lexicon();
  ListProvider provider;
  std::vector<ActivityEvent> events;
  const UnixSeconds cutoff = cfg.cutoff_local;
  // identical activity pattern on both sides of the cutoff, including one
  // nightly inactivity gap
  for (int day = 1; day <= 40; ++day) {
    for (int side = 0; side < 2; ++side) {
      UnixSeconds base = side == 0 ? cutoff - day * kSecondsPerDay
                                   : cutoff + (day - 1) * kSecondsPerDay;
      events.push_back(make_event("p1", base + 9 * 3600, "work sad friend"));
      events.push_back(make_event("p1", base + 9 * 3600 + 100, "doctor flu news"));
      events.push_back(make_event("p1", base + 14 * 3600, "nsfw stuff"));
      events.push_back(make_event("p1", base + 23 * 3600, "late night money"));
    }
  }
  std::sort(events.begin(), events.end(),
            [](const ActivityEvent& a, const ActivityEvent& b) { return a.ts < b.ts; });
  FeatureDelta d = extract_feature_delta(events, cfg, lex, provider);
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    CHECK_FALSE(d.degenerate[i]);
    CHECK(d.values[i] == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("extract_feature_delta recovers a doubled late-night count") {
  AnalysisConfig cfg;
  Lexicon lex = demo_lexicon();
  ListProvider provider;
  std::vector<ActivityEvent> events;
  const UnixSeconds cutoff = cfg.cutoff_local;
  for (int day = 1; day <= 30; ++day) {
    UnixSeconds before = cutoff - day * kSecondsPerDay;
    UnixSeconds after = cutoff + (day - 1) * kSecondsPerDay;
    // shared daytime pattern
    for (UnixSeconds base : {before, after}) {
      events.push_back(make_event("p1", base + 10 * 3600, "work sad friend"));
      events.push_back(make_event("p1", base + 10 * 3600 + 60, "doctor news"));
      events.push_back(make_event("p1", base + 15 * 3600, "nsfw money"));
    }
    // one late-night event before, two after
    events.push_back(make_event("p1", before + 23 * 3600, "flu"));
    events.push_back(make_event("p1", after + 23 * 3600, "flu"));
    events.push_back(make_event("p1", after + 23 * 3600 + 1800, "flu"));
  }
  std::sort(events.begin(), events.end(),
            [](const ActivityEvent& a, const ActivityEvent& b) { return a.ts < b.ts; });
  FeatureDelta d = extract_feature_delta(events, cfg, lex, provider);

  // brute-force recount of the late-night change, straight off the stream
  std::int64_t lna_before = 0, lna_after = 0;
  for (const auto& e : events) {
    std::int64_t sod = floor_mod(e.ts, kSecondsPerDay);
    bool late = sod >= 22 * 3600 || sod < 5 * 3600;
    bool in_before = e.ts >= cutoff - 76 * kSecondsPerDay && e.ts < cutoff;
    bool in_after = e.ts >= cutoff && e.ts < cutoff + 76 * kSecondsPerDay;
    if (late && in_before) ++lna_before;
    if (late && in_after) ++lna_after;
  }
  CHECK(lna_after == 2 * lna_before);
  CHECK(d.value(FeatureId::lna_pct) == doctest::Approx(1.0));
  // everything else stayed flat
  CHECK(d.value(FeatureId::liwc_personal) == doctest::Approx(0.0));
  CHECK(d.value(FeatureId::cat_adult) == doctest::Approx(0.0));
  CHECK(d.value(FeatureId::cat_news) == doctest::Approx(0.0));
}

TEST_CASE("extract_feature_delta flags a participant missing one window") {
  AnalysisConfig cfg;
  Lexicon lex = demo_lexicon();
  ListProvider provider;
  std::vector<ActivityEvent> events;
  for (int day = 1; day <= 10; ++day) {
    events.push_back(make_event("p1", cfg.cutoff_local + day * kSecondsPerDay, "work"));
  }
  FeatureDelta d = extract_feature_delta(events, cfg, lex, provider);
  for (std::size_t i = 0; i < kFeatureCount; ++i) CHECK(d.degenerate[i]);
}

TEST_CASE("extract_feature_delta ignores the order of equal timestamps") {
  AnalysisConfig cfg;
  Lexicon lex = demo_lexicon();
  ListProvider provider;
  std::vector<ActivityEvent> events;
  const UnixSeconds cutoff = cfg.cutoff_local;
  for (int day = 1; day <= 20; ++day) {
    for (UnixSeconds base : {cutoff - day * kSecondsPerDay,
                             cutoff + (day - 1) * kSecondsPerDay}) {
      events.push_back(make_event("p1", base + 10 * 3600, "work news"));
      events.push_back(make_event("p1", base + 10 * 3600, "sad nsfw"));
      events.push_back(make_event("p1", base + 23 * 3600, "friend doctor"));
    }
  }
  std::sort(events.begin(), events.end(),
            [](const ActivityEvent& a, const ActivityEvent& b) { return a.ts < b.ts; });
  FeatureDelta d1 = extract_feature_delta(events, cfg, lex, provider);
  // swap the equal-timestamp pairs
  std::vector<ActivityEvent> swapped = events;
  for (std::size_t i = 0; i + 1 < swapped.size(); ++i) {
    if (swapped[i].ts == swapped[i + 1].ts) std::swap(swapped[i], swapped[i + 1]);
  }
  FeatureDelta d2 = extract_feature_delta(swapped, cfg, lex, provider);
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    CHECK(d1.values[i] == doctest::Approx(d2.values[i]).epsilon(1e-14));
    CHECK(d1.degenerate[i] == d2.degenerate[i]);
  }
}

TEST_CASE("features csv round trip") {
  FeatureDelta a;
  a.pid = "p1";
  for (std::size_t i = 0; i < kFeatureCount; ++i) a.values[i] = 0.1 * (i + 1);
  FeatureDelta b;
  b.pid = "p2";
  b.values[0] = std::numeric_limits<double>::quiet_NaN();
  b.degenerate[0] = true;
  for (std::size_t i = 1; i < kFeatureCount; ++i) b.values[i] = -0.05 * i;
  b.unresolved_events = 3;

  std::ostringstream out;
  write_features_csv(out, {a, b});
  std::istringstream in(out.str());
  auto rows = read_features_csv(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].pid == "p1");
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    CHECK(rows[0].values[i] == a.values[i]);
  }
  CHECK(rows[1].degenerate[0]);
  CHECK(std::isnan(rows[1].values[0]));
  CHECK(rows[1].unresolved_events == 3);

  std::istringstream bad("pid,nope\n");
  CHECK_THROWS(read_features_csv(bad));
}

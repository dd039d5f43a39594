#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "logdrift/lexicon.hpp"
#include "logdrift/timeline.hpp"

namespace logdrift {

// The 9 analyzed behavior-shift variables, in report order.
enum class FeatureId : std::size_t {
  lna_pct = 0,
  inact_kl,
  sei_pct,
  liwc_personal,
  liwc_negemo,
  liwc_social,
  liwc_health,
  cat_adult,
  cat_news,
};

constexpr std::size_t kFeatureCount = 9;

constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "lna_pct",      "inact_kl",    "sei_pct",
    "liwc_personal", "liwc_negemo", "liwc_social",
    "liwc_health",  "cat_adult",   "cat_news",
};

// Lexicon category names the pipeline maps onto the liwc_* variables.
constexpr std::array<std::string_view, 4> kLexiconDimensions = {
    "personal_concern", "negative_emotion", "social", "health"};

// Content-category names mapped onto cat_adult / cat_news.
constexpr std::array<std::string_view, 2> kContentCategories = {"adult", "news"};

// True for the variables measured as a percentage change (everything but
// the inactivity divergence).
constexpr bool is_pct_feature(FeatureId id) { return id != FeatureId::inact_kl; }

// The per-participant dependent-variable vector. Values are fractions
// (rendered x100 only at the report layer); inact_kl is in nats. A set
// degenerate flag excludes the participant from that variable's analysis;
// pct values are NaN when flagged, the divergence keeps its fallback value.
struct FeatureDelta {
  std::string pid;
  std::array<double, kFeatureCount> values{};
  std::array<bool, kFeatureCount> degenerate{};
  std::int64_t unresolved_events = 0;

  double value(FeatureId id) const { return values[static_cast<std::size_t>(id)]; }
  bool flagged(FeatureId id) const { return degenerate[static_cast<std::size_t>(id)]; }
};

// (after - before) / before. Throws std::invalid_argument("zero baseline")
// when before == 0; callers flag the variable instead of aborting.
double pct_change(std::int64_t before, std::int64_t after);

// KL divergence sum p'_i * ln(p'_i / q'_i) in nats after additive-epsilon
// smoothing p'_i = (p_i + eps) / (1 + n*eps). epsilon = 0 evaluates the raw
// sum (infinite when q has a zero bin with p positive). Terms are summed
// left to right.
double kl_divergence(const Eigen::ArrayXd& p, const Eigen::ArrayXd& q, double epsilon);
double kl_divergence(const HourDistribution& before, const HourDistribution& after,
                     double epsilon);

// Runs the whole per-participant pipeline: segment, per-window counts,
// lexicon and category tallies, then the 9 deltas. Deterministic given its
// inputs; degenerate baselines set flags without disturbing the other
// variables.
FeatureDelta extract_feature_delta(const std::vector<ActivityEvent>& events,
                                   const AnalysisConfig& cfg,
                                   const Lexicon& lexicon,
                                   const CategoryProvider& provider);

// Feature table CSV: pid, the 9 value columns, the 9 flag_<name> columns,
// unresolved_events. NaN values serialize as empty cells.
void write_features_csv(std::ostream& out, const std::vector<FeatureDelta>& rows);
std::string features_csv_string(const std::vector<FeatureDelta>& rows);
std::vector<FeatureDelta> read_features_csv(std::istream& in);
std::vector<FeatureDelta> read_features_csv_file(const std::string& path);

}  // namespace logdrift

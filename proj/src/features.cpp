#include "logdrift/features.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace logdrift {

double pct_change(std::int64_t before, std::int64_t after) {
  if (before < 0 || after < 0) {
    throw std::invalid_argument("pct_change: negative count");
  }
  if (before == 0) throw std::invalid_argument("pct_change: zero baseline");
  return static_cast<double>(after - before) / static_cast<double>(before);
}

double kl_divergence(const Eigen::ArrayXd& p, const Eigen::ArrayXd& q, double epsilon) {
  if (p.size() != q.size() || p.size() == 0) {
    throw std::invalid_argument("kl_divergence: size mismatch");
  }
  if (epsilon < 0.0) throw std::invalid_argument("kl_divergence: negative epsilon");
  const double n = static_cast<double>(p.size());
  const double norm = 1.0 + n * epsilon;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = (p[i] + epsilon) / norm;
    const double qi = (q[i] + epsilon) / norm;
    if (pi == 0.0) continue;  // lim x->0 of x*log(x/q) = 0
    if (qi == 0.0) return std::numeric_limits<double>::infinity();
    sum += pi * std::log(pi / qi);
  }
  return sum;
}

double kl_divergence(const HourDistribution& before, const HourDistribution& after,
                     double epsilon) {
  return kl_divergence(before.bins.matrix().array(), after.bins.matrix().array(),
                       epsilon);
}

namespace {

// Percentage-change step shared by the count-based variables.
void set_pct(FeatureDelta& delta, FeatureId id, std::int64_t before,
             std::int64_t after) {
  const auto i = static_cast<std::size_t>(id);
  if (before == 0) {
    delta.values[i] = std::numeric_limits<double>::quiet_NaN();
    delta.degenerate[i] = true;
    return;
  }
  delta.values[i] = pct_change(before, after);
}

void set_rate_pct(FeatureDelta& delta, FeatureId id, std::int64_t before,
                  std::int64_t before_tokens, std::int64_t after,
                  std::int64_t after_tokens) {
  const auto i = static_cast<std::size_t>(id);
  if (before == 0 || before_tokens == 0 || after_tokens == 0) {
    delta.values[i] = std::numeric_limits<double>::quiet_NaN();
    delta.degenerate[i] = true;
    return;
  }
  const double rb = static_cast<double>(before) / static_cast<double>(before_tokens);
  const double ra = static_cast<double>(after) / static_cast<double>(after_tokens);
  delta.values[i] = (ra - rb) / rb;
}

struct WindowTallies {
  WindowCounts counts;
  MatchCounts lexicon;
  std::int64_t adult = 0;
  std::int64_t news = 0;
  std::int64_t unresolved = 0;
  HourDistribution midpoints;
};

WindowTallies tally_window(const std::vector<ActivityEvent>& events,
                           const AnalysisConfig& cfg, const Lexicon& lexicon,
                           const CategoryProvider& provider) {
  WindowTallies t;
  t.counts = window_counts(events, cfg);
  std::vector<std::string> corpus;
  corpus.reserve(events.size());
  for (const auto& e : events) {
    if (!e.text.empty()) corpus.push_back(e.text);
  }
  t.lexicon = count_matches(corpus, lexicon);
  for (const auto& e : events) {
    auto tags = provider.lookup(e);
    if (!tags) {
      ++t.unresolved;
      continue;
    }
    if (tags->count("adult")) ++t.adult;
    if (tags->count("news")) ++t.news;
  }
  t.midpoints = midpoint_distribution(inactivity_periods(events, cfg), cfg);
  return t;
}

std::int64_t lexicon_count(const MatchCounts& counts, const Lexicon& lexicon,
                           std::string_view dimension) {
  auto idx = lexicon.category_index(dimension);
  if (!idx) return 0;
  return counts.per_category[*idx];
}

}  // namespace

FeatureDelta extract_feature_delta(const std::vector<ActivityEvent>& events,
                                   const AnalysisConfig& cfg,
                                   const Lexicon& lexicon,
                                   const CategoryProvider& provider) {
  FeatureDelta delta;
  if (!events.empty()) delta.pid = events.front().pid;

  Segments seg = segment(events, cfg);
  WindowTallies before = tally_window(seg.before, cfg, lexicon, provider);
  WindowTallies after = tally_window(seg.after, cfg, lexicon, provider);
  delta.unresolved_events = before.unresolved + after.unresolved;

  set_pct(delta, FeatureId::lna_pct, before.counts.lna, after.counts.lna);
  set_pct(delta, FeatureId::sei_pct, before.counts.sei, after.counts.sei);

  const auto kl_idx = static_cast<std::size_t>(FeatureId::inact_kl);
  delta.values[kl_idx] = kl_divergence(before.midpoints, after.midpoints, cfg.kl_epsilon);
  if (before.midpoints.uniform_fallback() || after.midpoints.uniform_fallback()) {
    delta.degenerate[kl_idx] = true;
  }

  const std::array<FeatureId, 4> liwc_ids = {
      FeatureId::liwc_personal, FeatureId::liwc_negemo, FeatureId::liwc_social,
      FeatureId::liwc_health};
  for (std::size_t d = 0; d < kLexiconDimensions.size(); ++d) {
    const std::int64_t b = lexicon_count(before.lexicon, lexicon, kLexiconDimensions[d]);
    const std::int64_t a = lexicon_count(after.lexicon, lexicon, kLexiconDimensions[d]);
    if (cfg.lexicon_rate_mode) {
      set_rate_pct(delta, liwc_ids[d], b, before.lexicon.tokens, a,
                   after.lexicon.tokens);
    } else {
      set_pct(delta, liwc_ids[d], b, a);
    }
  }

  set_pct(delta, FeatureId::cat_adult, before.adult, after.adult);
  set_pct(delta, FeatureId::cat_news, before.news, after.news);
  return delta;
}

// ---------------------------------------------------------------------------
// Feature table CSV
// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "0";
  return std::string(buf, end);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  // The table never contains quoted cells; pids are validated elsewhere.
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

}  // namespace

void write_features_csv(std::ostream& out, const std::vector<FeatureDelta>& rows) {
  out << "pid";
  for (auto name : kFeatureNames) out << ',' << name;
  for (auto name : kFeatureNames) out << ",flag_" << name;
  out << ",unresolved_events\n";
  for (const auto& row : rows) {
    out << row.pid;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      out << ',';
      if (!std::isnan(row.values[i])) out << format_double(row.values[i]);
    }
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      out << ',' << (row.degenerate[i] ? 1 : 0);
    }
    out << ',' << row.unresolved_events << '\n';
  }
}

std::string features_csv_string(const std::vector<FeatureDelta>& rows) {
  std::ostringstream ss;
  write_features_csv(ss, rows);
  return ss.str();
}

std::vector<FeatureDelta> read_features_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("features csv: empty file");
  std::vector<std::string> header = split_csv_line(line);
  const std::size_t expected = 1 + 2 * kFeatureCount + 1;
  if (header.size() != expected || header[0] != "pid") {
    throw std::runtime_error("features csv: unexpected header");
  }
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (header[1 + i] != kFeatureNames[i]) {
      throw std::runtime_error("features csv: unexpected column " + header[1 + i]);
    }
  }
  std::vector<FeatureDelta> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != expected) {
      throw std::runtime_error("features csv line " + std::to_string(lineno) +
                               ": wrong cell count");
    }
    FeatureDelta row;
    row.pid = cells[0];
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      const std::string& cell = cells[1 + i];
      if (cell.empty()) {
        row.values[i] = std::numeric_limits<double>::quiet_NaN();
      } else {
        row.values[i] = std::strtod(cell.c_str(), nullptr);
      }
      row.degenerate[i] = cells[1 + kFeatureCount + i] == "1";
    }
    row.unresolved_events = std::strtoll(cells[1 + 2 * kFeatureCount].c_str(),
                                         nullptr, 10);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<FeatureDelta> read_features_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open features csv: " + path);
  return read_features_csv(in);
}

}  // namespace logdrift

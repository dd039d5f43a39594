#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "logdrift/ingest.hpp"
#include "logdrift/timeutil.hpp"

namespace logdrift {

// Knobs for the before/after windowing and the per-window measurements.
// Loaded from a JSON document; every field has the default shown here.
struct AnalysisConfig {
  // Local wall-clock instant that splits the two windows.
  UnixSeconds cutoff_local = 0;     // default 2020-03-14T00:00, set by ctor
  int window_days = 76;             // each window spans this many days
  int tz_offset_minutes = 0;        // fixed local-time offset, no DST
  double inactivity_threshold_hours = 7.0;
  double short_interval_minutes = 5.0;
  int late_night_start_min = 22 * 60;  // local clock, minutes
  int late_night_end_min = 5 * 60;
  double kl_epsilon = 1e-6;
  // Lexicon deltas compare raw counts by default; per-token rates optional.
  bool lexicon_rate_mode = false;
  bool yates_correction = true;
  // Forces the ANCOVA covariate list instead of the chi-square-driven pick.
  std::optional<std::vector<std::string>> force_covariates;

  AnalysisConfig();
};

AnalysisConfig load_config(const std::string& json_text);
AnalysisConfig load_config_file(const std::string& path);
std::string config_to_json(const AnalysisConfig& cfg);

// Hour of day in [0,24) on the wall clock given by the fixed offset.
int local_hour(UnixSeconds ts, int tz_offset_minutes);

// Seconds past local midnight, in [0, 86400).
std::int64_t local_seconds_of_day(UnixSeconds ts, int tz_offset_minutes);

struct Segments {
  std::vector<ActivityEvent> before;  // [cutoff - window, cutoff)
  std::vector<ActivityEvent> after;   // [cutoff, cutoff + window)
};

// Splits a (ts-sorted) event stream into the two analysis windows; events
// outside both are dropped. Windows are half-open, so an event exactly at
// the cutoff lands in `after`.
Segments segment(const std::vector<ActivityEvent>& events,
                 const AnalysisConfig& cfg);

// Events whose local clock time falls in [late_night_start, late_night_end),
// a window that wraps midnight when start > end.
std::int64_t late_night_count(const std::vector<ActivityEvent>& events,
                              const AnalysisConfig& cfg);

// Adjacent pairs strictly closer than the short-interval threshold,
// regardless of platform.
std::int64_t short_interval_count(const std::vector<ActivityEvent>& events,
                                  const AnalysisConfig& cfg);

struct InactivityPeriod {
  UnixSeconds start = 0;
  UnixSeconds end = 0;
};

// Maximal gaps of at least the inactivity threshold between adjacent
// events. Gaps are only detected between events, never synthesized at the
// segment edges, so a gap spanning the cutoff belongs to neither window.
std::vector<InactivityPeriod> inactivity_periods(
    const std::vector<ActivityEvent>& events, const AnalysisConfig& cfg);

// Normalized 24-bin distribution of inactivity-period midpoints.
struct HourDistribution {
  Eigen::Array<double, 24, 1> bins = Eigen::Array<double, 24, 1>::Zero();
  std::int64_t period_count = 0;

  // With no observed periods the distribution falls back to uniform so the
  // divergence stays defined; callers can flag it via period_count == 0.
  bool uniform_fallback() const { return period_count == 0; }
};

// Each period contributes one count to the bin of its midpoint's local
// hour; bins are normalized to sum to 1.
HourDistribution midpoint_distribution(const std::vector<InactivityPeriod>& periods,
                                       const AnalysisConfig& cfg);

// Raw per-window tallies feeding the behavior-shift features.
struct WindowCounts {
  std::int64_t lna = 0;
  std::int64_t sei = 0;
  std::int64_t total = 0;
  std::vector<int> inactivity_midpoint_bins;  // local-hour bin per period
};

WindowCounts window_counts(const std::vector<ActivityEvent>& events,
                           const AnalysisConfig& cfg);

}  // namespace logdrift

#include "logdrift/timeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace logdrift {

AnalysisConfig::AnalysisConfig() {
  cutoff_local = *parse_local_datetime("2020-03-14T00:00");
}

namespace {

std::string format_local_datetime(UnixSeconds local) {
  CivilDateTime c = civil_from_unix(local);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02u:%02u",
                static_cast<long long>(c.year), c.month, c.day, c.hour, c.minute);
  return buf;
}

std::string format_clock(int minutes) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d:%02d", minutes / 60, minutes % 60);
  return buf;
}

[[noreturn]] void config_error(const std::string& msg) {
  throw std::runtime_error("config: " + msg);
}

}  // namespace

AnalysisConfig load_config(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    config_error("not a JSON object");
  }
  AnalysisConfig cfg;
  if (auto it = doc.find("cutoff"); it != doc.end()) {
    auto parsed = parse_local_datetime(it->get<std::string>());
    if (!parsed) config_error("bad cutoff, expected YYYY-MM-DDTHH:MM");
    cfg.cutoff_local = *parsed;
  }
  if (auto it = doc.find("window_days"); it != doc.end()) {
    cfg.window_days = it->get<int>();
  }
  if (auto it = doc.find("tz_offset_minutes"); it != doc.end()) {
    cfg.tz_offset_minutes = it->get<int>();
  }
  if (auto it = doc.find("inactivity_threshold_hours"); it != doc.end()) {
    cfg.inactivity_threshold_hours = it->get<double>();
  }
  if (auto it = doc.find("short_interval_minutes"); it != doc.end()) {
    cfg.short_interval_minutes = it->get<double>();
  }
  if (auto it = doc.find("late_night_start"); it != doc.end()) {
    auto m = parse_clock_minutes(it->get<std::string>());
    if (!m) config_error("bad late_night_start, expected HH:MM");
    cfg.late_night_start_min = *m;
  }
  if (auto it = doc.find("late_night_end"); it != doc.end()) {
    auto m = parse_clock_minutes(it->get<std::string>());
    if (!m) config_error("bad late_night_end, expected HH:MM");
    cfg.late_night_end_min = *m;
  }
  if (auto it = doc.find("kl_epsilon"); it != doc.end()) {
    cfg.kl_epsilon = it->get<double>();
  }
  if (auto it = doc.find("lexicon_rate_mode"); it != doc.end()) {
    cfg.lexicon_rate_mode = it->get<bool>();
  }
  if (auto it = doc.find("yates_correction"); it != doc.end()) {
    cfg.yates_correction = it->get<bool>();
  }
  if (auto it = doc.find("force_covariates"); it != doc.end() && !it->is_null()) {
    cfg.force_covariates = it->get<std::vector<std::string>>();
  }
  if (cfg.window_days <= 0) config_error("window_days must be > 0");
  if (cfg.inactivity_threshold_hours <= 0) {
    config_error("inactivity_threshold_hours must be > 0");
  }
  if (cfg.short_interval_minutes <= 0) {
    config_error("short_interval_minutes must be > 0");
  }
  if (!(cfg.kl_epsilon > 0 && cfg.kl_epsilon < 1)) {
    config_error("kl_epsilon must be in (0, 1)");
  }
  return cfg;
}

AnalysisConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config(ss.str());
}

std::string config_to_json(const AnalysisConfig& cfg) {
  nlohmann::ordered_json doc;
  doc["cutoff"] = format_local_datetime(cfg.cutoff_local);
  doc["window_days"] = cfg.window_days;
  doc["tz_offset_minutes"] = cfg.tz_offset_minutes;
  doc["inactivity_threshold_hours"] = cfg.inactivity_threshold_hours;
  doc["short_interval_minutes"] = cfg.short_interval_minutes;
  doc["late_night_start"] = format_clock(cfg.late_night_start_min);
  doc["late_night_end"] = format_clock(cfg.late_night_end_min);
  doc["kl_epsilon"] = cfg.kl_epsilon;
  doc["lexicon_rate_mode"] = cfg.lexicon_rate_mode;
  doc["yates_correction"] = cfg.yates_correction;
  if (cfg.force_covariates) {
    doc["force_covariates"] = *cfg.force_covariates;
  } else {
    doc["force_covariates"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

std::int64_t local_seconds_of_day(UnixSeconds ts, int tz_offset_minutes) {
  return floor_mod(ts + static_cast<std::int64_t>(tz_offset_minutes) * 60,
                   kSecondsPerDay);
}

int local_hour(UnixSeconds ts, int tz_offset_minutes) {
  return static_cast<int>(local_seconds_of_day(ts, tz_offset_minutes) /
                          kSecondsPerHour);
}

Segments segment(const std::vector<ActivityEvent>& events,
                 const AnalysisConfig& cfg) {
  // Windows are defined on the local clock; convert the bounds to UTC once.
  const std::int64_t offset = static_cast<std::int64_t>(cfg.tz_offset_minutes) * 60;
  const UnixSeconds cutoff_utc = cfg.cutoff_local - offset;
  const std::int64_t span = static_cast<std::int64_t>(cfg.window_days) * kSecondsPerDay;
  Segments out;
  for (const auto& e : events) {
    if (e.ts >= cutoff_utc - span && e.ts < cutoff_utc) {
      out.before.push_back(e);
    } else if (e.ts >= cutoff_utc && e.ts < cutoff_utc + span) {
      out.after.push_back(e);
    }
  }
  return out;
}

std::int64_t late_night_count(const std::vector<ActivityEvent>& events,
                              const AnalysisConfig& cfg) {
  const std::int64_t start = static_cast<std::int64_t>(cfg.late_night_start_min) * 60;
  const std::int64_t end = static_cast<std::int64_t>(cfg.late_night_end_min) * 60;
  std::int64_t count = 0;
  for (const auto& e : events) {
    std::int64_t sod = local_seconds_of_day(e.ts, cfg.tz_offset_minutes);
    bool in_window = start <= end ? (sod >= start && sod < end)
                                  : (sod >= start || sod < end);
    if (in_window) ++count;
  }
  return count;
}

std::int64_t short_interval_count(const std::vector<ActivityEvent>& events,
                                  const AnalysisConfig& cfg) {
  const double threshold_s = cfg.short_interval_minutes * 60.0;
  std::int64_t count = 0;
  for (std::size_t i = 1; i < events.size(); ++i) {
    double gap = static_cast<double>(events[i].ts - events[i - 1].ts);
    if (gap < threshold_s) ++count;
  }
  return count;
}

std::vector<InactivityPeriod> inactivity_periods(
    const std::vector<ActivityEvent>& events, const AnalysisConfig& cfg) {
  const double threshold_s = cfg.inactivity_threshold_hours * 3600.0;
  std::vector<InactivityPeriod> periods;
  for (std::size_t i = 1; i < events.size(); ++i) {
    double gap = static_cast<double>(events[i].ts - events[i - 1].ts);
    if (gap >= threshold_s) {
      periods.push_back({events[i - 1].ts, events[i].ts});
    }
  }
  return periods;
}

HourDistribution midpoint_distribution(const std::vector<InactivityPeriod>& periods,
                                       const AnalysisConfig& cfg) {
  HourDistribution dist;
  if (periods.empty()) {
    dist.bins.setConstant(1.0 / 24.0);
    return dist;
  }
  for (const auto& p : periods) {
    UnixSeconds mid = p.start + (p.end - p.start) / 2;
    dist.bins[local_hour(mid, cfg.tz_offset_minutes)] += 1.0;
  }
  dist.period_count = static_cast<std::int64_t>(periods.size());
  dist.bins /= static_cast<double>(periods.size());
  return dist;
}

WindowCounts window_counts(const std::vector<ActivityEvent>& events,
                           const AnalysisConfig& cfg) {
  WindowCounts wc;
  wc.total = static_cast<std::int64_t>(events.size());
  wc.lna = late_night_count(events, cfg);
  wc.sei = short_interval_count(events, cfg);
  for (const auto& p : inactivity_periods(events, cfg)) {
    UnixSeconds mid = p.start + (p.end - p.start) / 2;
    wc.inactivity_midpoint_bins.push_back(local_hour(mid, cfg.tz_offset_minutes));
  }
  return wc;
}

}  // namespace logdrift

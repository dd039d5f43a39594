#include "logdrift/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace logdrift {

namespace {

constexpr std::uint64_t kStreamSalt = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kSurveySalt = 0xc2b2ae3d27d4eb4fULL;

double wrap24(double h) {
  h = std::fmod(h, 24.0);
  return h < 0 ? h + 24.0 : h;
}

template <typename Map>
double mix_total(const Map& mix) {
  double total = 0.0;
  for (const auto& [_, w] : mix) total += w;
  return total;
}

// Weighted pick over a map, deterministic in iteration (key) order.
const std::string& pick_weighted(const std::map<std::string, double>& mix,
                                 double total, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, total);
  double x = unit(rng);
  for (const auto& [name, w] : mix) {
    x -= w;
    if (x <= 0.0) return name;
  }
  return mix.rbegin()->first;
}

const std::string& pick_uniform(const std::vector<std::string>& pool,
                                std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> idx(0, pool.size() - 1);
  return pool[idx(rng)];
}

std::string random_video_id(std::mt19937_64& rng) {
  static const char alphabet[] =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_";
  std::uniform_int_distribution<int> idx(0, 63);
  std::string id(11, 'x');
  for (auto& c : id) c = alphabet[idx(rng)];
  return id;
}

}  // namespace

bool BehaviorProfile::in_sleep(double local_hour) const {
  if (sleep_duration_hours <= 0.0) return false;
  double offset = wrap24(local_hour - wrap24(sleep_start_hour));
  return offset < sleep_duration_hours;
}

double BehaviorProfile::intensity_at(double local_hour) const {
  if (in_sleep(local_hour)) return 0.0;
  return hourly_intensity[static_cast<std::size_t>(wrap24(local_hour))];
}

void BehaviorProfile::validate() const {
  for (double r : hourly_intensity) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw std::invalid_argument("profile: hourly intensity must be finite and >= 0");
    }
  }
  if (!(burst_prob >= 0.0 && burst_prob < 1.0)) {
    throw std::invalid_argument("profile: burst_prob must be in [0, 1)");
  }
  if (sleep_duration_hours < 0.0 || sleep_duration_hours >= 24.0) {
    throw std::invalid_argument("profile: sleep duration must be in [0, 24)");
  }
  if (tokens_per_text < 1) {
    throw std::invalid_argument("profile: tokens_per_text must be >= 1");
  }
  auto check_mix = [](const std::map<std::string, double>& mix, const char* what) {
    for (const auto& [_, w] : mix) {
      if (!(w >= 0.0)) throw std::invalid_argument(std::string("profile: negative ") + what);
    }
  };
  check_mix(lexicon_mix, "lexicon_mix weight");
  check_mix(category_mix, "category_mix weight");
  if (!lexicon_mix.empty() && mix_total(lexicon_mix) <= 0.0) {
    throw std::invalid_argument("profile: lexicon_mix has zero total weight");
  }
  if (!category_mix.empty() && mix_total(category_mix) <= 0.0) {
    throw std::invalid_argument("profile: category_mix has zero total weight");
  }
  for (const auto& [name, _] : lexicon_mix) {
    auto it = word_bank.find(name);
    if (it == word_bank.end() || it->second.empty()) {
      throw std::invalid_argument("profile: no words for lexicon_mix key " + name);
    }
  }
  for (const auto& [name, w] : category_mix) {
    if (name == "other" || w <= 0.0) continue;
    auto kw = category_keywords.find(name);
    auto dom = category_domains.find(name);
    bool has_kw = kw != category_keywords.end() && !kw->second.empty();
    bool has_dom = dom != category_domains.end() && !dom->second.empty();
    if (!has_kw && !has_dom) {
      throw std::invalid_argument("profile: no keywords or domains for category " + name);
    }
  }
}

BehaviorProfile default_profile() {
  BehaviorProfile p;
  for (int h = 0; h < 24; ++h) p.hourly_intensity[h] = 0.6;
  p.hourly_intensity[0] = 0.7;
  p.hourly_intensity[22] = 0.8;
  p.hourly_intensity[23] = 0.8;
  for (int h = 1; h <= 8; ++h) p.hourly_intensity[h] = 0.2;  // sleep zeroes most
  p.burst_prob = 0.35;
  p.sleep_start_hour = 1.0;
  p.sleep_duration_hours = 7.5;
  p.lexicon_mix = {
      {"personal_concern", 0.06}, {"negative_emotion", 0.05}, {"social", 0.06},
      {"health", 0.05},           {"neutral", 0.78},
  };
  p.word_bank = {
      {"personal_concern", {"work", "money", "job", "rent", "homework"}},
      {"negative_emotion", {"sad", "angry", "crying", "fear", "lonely"}},
      {"social", {"friend", "family", "party", "roommate", "talk"}},
      {"health", {"doctor", "sick", "flu", "symptoms", "clinic"}},
      {"neutral",
       {"weather", "recipe", "music", "movie", "game", "tutorial", "lecture",
        "sports", "travel", "shopping"}},
  };
  p.category_mix = {{"adult", 0.05}, {"news", 0.07}, {"other", 0.88}};
  p.category_keywords = {{"adult", {"nsfw", "xxx"}},
                         {"news", {"news", "headlines"}}};
  p.category_domains = {{"adult", {"adultsite.example", "nightvids.example"}},
                        {"news", {"news-hub.example", "dailybrief.example"}}};
  return p;
}

bool ShiftSpec::is_null() const {
  return lna_intensity_mult == 1.0 && intensity_mult == 1.0 &&
         burst_prob_delta == 0.0 && sleep_shift_hours == 0.0 &&
         lexicon_mix_delta.empty() && category_mix_delta.empty();
}

BehaviorProfile apply_shift(const BehaviorProfile& base, const ShiftSpec& shift) {
  BehaviorProfile out = base;
  auto in_night = [&](int h) {
    return shift.night_start_hour <= shift.night_end_hour
               ? (h >= shift.night_start_hour && h < shift.night_end_hour)
               : (h >= shift.night_start_hour || h < shift.night_end_hour);
  };
  if (shift.lna_intensity_mult != 1.0) {
    // Totals are preserved on the effective (sleep-zeroed) intensities so
    // the late-night multiplier does not move overall volume.
    double night0 = 0.0, day0 = 0.0;
    for (int h = 0; h < 24; ++h) {
      double eff = base.intensity_at(h + 0.5);
      (in_night(h) ? night0 : day0) += eff;
    }
    for (int h = 0; h < 24; ++h) {
      if (in_night(h)) out.hourly_intensity[h] *= shift.lna_intensity_mult;
    }
    if (shift.preserve_total && day0 > 0.0) {
      double target_day = day0 - (shift.lna_intensity_mult - 1.0) * night0;
      double f = std::max(target_day / day0, 0.0);
      for (int h = 0; h < 24; ++h) {
        if (!in_night(h)) out.hourly_intensity[h] *= f;
      }
    }
  }
  if (shift.intensity_mult != 1.0) {
    for (auto& r : out.hourly_intensity) r *= shift.intensity_mult;
  }
  out.burst_prob = base.burst_prob + shift.burst_prob_delta;
  out.sleep_start_hour = wrap24(base.sleep_start_hour + shift.sleep_shift_hours);
  for (const auto& [name, delta] : shift.lexicon_mix_delta) {
    out.lexicon_mix[name] = std::max(out.lexicon_mix[name] + delta, 0.0);
  }
  for (const auto& [name, delta] : shift.category_mix_delta) {
    out.category_mix[name] = std::max(out.category_mix[name] + delta, 0.0);
  }
  out.validate();
  return out;
}

namespace {

// Draws the kind, text, and URL for one event.
ActivityEvent sample_event(const BehaviorProfile& profile, const std::string& pid,
                           UnixSeconds ts, std::mt19937_64& rng) {
  ActivityEvent e;
  e.pid = pid;
  e.ts = ts;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto sample_text = [&](int tokens) {
    std::string text;
    const double total = mix_total(profile.lexicon_mix);
    for (int t = 0; t < tokens; ++t) {
      const std::string& key = pick_weighted(profile.lexicon_mix, total, rng);
      if (t) text += ' ';
      text += pick_uniform(profile.word_bank.at(key), rng);
    }
    return text;
  };

  std::string category = "other";
  if (!profile.category_mix.empty()) {
    category = pick_weighted(profile.category_mix, mix_total(profile.category_mix), rng);
  }
  if (category != "other") {
    auto kw = profile.category_keywords.find(category);
    auto dom = profile.category_domains.find(category);
    bool has_kw = kw != profile.category_keywords.end() && !kw->second.empty();
    bool has_dom = dom != profile.category_domains.end() && !dom->second.empty();
    bool as_query = has_kw && (!has_dom || unit(rng) < 0.5);
    if (as_query) {
      e.platform = Platform::search;
      e.kind = EventKind::query;
      e.text = pick_uniform(kw->second, rng) + " " + sample_text(2);
    } else {
      e.platform = Platform::search;
      e.kind = EventKind::url_visit;
      e.url = "https://" + pick_uniform(dom->second, rng) + "/item/" +
              std::to_string(std::uniform_int_distribution<int>(1, 9999)(rng));
    }
    return e;
  }
  const double roll = unit(rng);
  if (roll < 0.4) {
    e.platform = Platform::search;
    e.kind = EventKind::query;
    e.text = sample_text(profile.tokens_per_text);
  } else if (roll < 0.8) {
    e.platform = Platform::youtube;
    e.kind = EventKind::video_watch;
    e.text = sample_text(profile.tokens_per_text);
    e.url = "https://www.youtube.com/watch?v=" + random_video_id(rng);
  } else {
    e.platform = Platform::youtube;
    e.kind = EventKind::youtube_search;
    e.text = sample_text(profile.tokens_per_text);
  }
  return e;
}

}  // namespace

std::vector<ActivityEvent> generate_stream(const BehaviorProfile& profile,
                                           const std::string& pid,
                                           UnixSeconds window_start,
                                           UnixSeconds window_end,
                                           int tz_offset_minutes,
                                           std::uint64_t seed) {
  profile.validate();
  std::vector<ActivityEvent> events;
  if (window_end <= window_start) return events;
  double max_rate = 0.0;
  for (double r : profile.hourly_intensity) max_rate = std::max(max_rate, r);
  if (max_rate <= 0.0) return events;

  std::mt19937_64 rng(seed);
  const double duration_s = static_cast<double>(window_end - window_start);
  const double expected = max_rate * duration_s / 3600.0;
  std::poisson_distribution<std::int64_t> candidate_count(expected);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::int64_t n_candidates = candidate_count(rng);
  std::vector<double> offsets(static_cast<std::size_t>(n_candidates));
  for (auto& t : offsets) t = unit(rng) * duration_s;
  std::sort(offsets.begin(), offsets.end());

  auto local_fractional_hour = [&](UnixSeconds ts) {
    return static_cast<double>(local_seconds_of_day(ts, tz_offset_minutes)) / 3600.0;
  };

  for (double offset : offsets) {
    const UnixSeconds ts = window_start + static_cast<UnixSeconds>(offset);
    const double rate = profile.intensity_at(local_fractional_hour(ts));
    if (unit(rng) * max_rate >= rate) continue;
    events.push_back(sample_event(profile, pid, ts, rng));
    // Burst chain: each event may spawn a follow-up within five minutes.
    UnixSeconds parent = ts;
    while (profile.burst_prob > 0.0 && unit(rng) < profile.burst_prob) {
      std::uniform_int_distribution<UnixSeconds> gap(10, 290);
      const UnixSeconds child = parent + gap(rng);
      if (child >= window_end) break;
      events.push_back(sample_event(profile, pid, child, rng));
      parent = child;
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const ActivityEvent& a, const ActivityEvent& b) {
                     return a.ts < b.ts;
                   });
  return events;
}

SynthSpec::SynthSpec() {
  cutoff_local = *parse_local_datetime("2020-03-14T00:00");
}

namespace {

std::map<std::string, double> json_to_mix(const nlohmann::json& obj) {
  std::map<std::string, double> mix;
  for (auto it = obj.begin(); it != obj.end(); ++it) mix[it.key()] = it->get<double>();
  return mix;
}

std::map<std::string, std::vector<std::string>> json_to_pools(const nlohmann::json& obj) {
  std::map<std::string, std::vector<std::string>> pools;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    pools[it.key()] = it->get<std::vector<std::string>>();
  }
  return pools;
}

void profile_from_json(const nlohmann::json& obj, BehaviorProfile& p) {
  if (auto it = obj.find("hourly_intensity"); it != obj.end()) {
    auto v = it->get<std::vector<double>>();
    if (v.size() != 24) throw std::runtime_error("synth spec: hourly_intensity needs 24 rates");
    std::copy(v.begin(), v.end(), p.hourly_intensity.begin());
  }
  if (auto it = obj.find("burst_prob"); it != obj.end()) p.burst_prob = it->get<double>();
  if (auto it = obj.find("sleep_start_hour"); it != obj.end()) {
    p.sleep_start_hour = it->get<double>();
  }
  if (auto it = obj.find("sleep_duration_hours"); it != obj.end()) {
    p.sleep_duration_hours = it->get<double>();
  }
  if (auto it = obj.find("tokens_per_text"); it != obj.end()) {
    p.tokens_per_text = it->get<int>();
  }
  if (auto it = obj.find("lexicon_mix"); it != obj.end()) p.lexicon_mix = json_to_mix(*it);
  if (auto it = obj.find("word_bank"); it != obj.end()) p.word_bank = json_to_pools(*it);
  if (auto it = obj.find("category_mix"); it != obj.end()) p.category_mix = json_to_mix(*it);
  if (auto it = obj.find("category_keywords"); it != obj.end()) {
    p.category_keywords = json_to_pools(*it);
  }
  if (auto it = obj.find("category_domains"); it != obj.end()) {
    p.category_domains = json_to_pools(*it);
  }
}

void shift_from_json(const nlohmann::json& obj, ShiftSpec& s) {
  if (auto it = obj.find("lna_intensity_mult"); it != obj.end()) {
    s.lna_intensity_mult = it->get<double>();
  }
  if (auto it = obj.find("night_start_hour"); it != obj.end()) {
    s.night_start_hour = it->get<int>();
  }
  if (auto it = obj.find("night_end_hour"); it != obj.end()) {
    s.night_end_hour = it->get<int>();
  }
  if (auto it = obj.find("preserve_total"); it != obj.end()) {
    s.preserve_total = it->get<bool>();
  }
  if (auto it = obj.find("intensity_mult"); it != obj.end()) {
    s.intensity_mult = it->get<double>();
  }
  if (auto it = obj.find("burst_prob_delta"); it != obj.end()) {
    s.burst_prob_delta = it->get<double>();
  }
  if (auto it = obj.find("sleep_shift_hours"); it != obj.end()) {
    s.sleep_shift_hours = it->get<double>();
  }
  if (auto it = obj.find("lexicon_mix_delta"); it != obj.end()) {
    s.lexicon_mix_delta = json_to_mix(*it);
  }
  if (auto it = obj.find("category_mix_delta"); it != obj.end()) {
    s.category_mix_delta = json_to_mix(*it);
  }
}

}  // namespace

SynthSpec load_synth_spec(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw std::runtime_error("synth spec: not a JSON object");
  }
  SynthSpec spec;
  if (auto it = doc.find("n"); it != doc.end()) spec.n = it->get<int>();
  if (auto it = doc.find("seed"); it != doc.end()) spec.seed = it->get<std::uint64_t>();
  if (auto it = doc.find("group_fraction"); it != doc.end()) {
    spec.group_fraction = it->get<double>();
  }
  if (auto it = doc.find("cutoff"); it != doc.end()) {
    auto parsed = parse_local_datetime(it->get<std::string>());
    if (!parsed) throw std::runtime_error("synth spec: bad cutoff");
    spec.cutoff_local = *parsed;
  }
  if (auto it = doc.find("window_days"); it != doc.end()) {
    spec.window_days = it->get<int>();
  }
  if (auto it = doc.find("female_fraction"); it != doc.end()) {
    spec.female_fraction = it->get<double>();
  }
  if (auto it = doc.find("citizen_fraction"); it != doc.end()) {
    spec.citizen_fraction = it->get<double>();
  }
  if (auto it = doc.find("lower_class_fraction"); it != doc.end()) {
    spec.lower_class_fraction = it->get<double>();
  }
  if (auto it = doc.find("base_profile"); it != doc.end()) {
    profile_from_json(*it, spec.base_profile);
  }
  if (auto it = doc.find("shift"); it != doc.end()) shift_from_json(*it, spec.shift);
  if (spec.n < 4) throw std::runtime_error("synth spec: n must be >= 4");
  if (!(spec.group_fraction > 0.0 && spec.group_fraction < 1.0)) {
    throw std::runtime_error("synth spec: group_fraction must be in (0, 1)");
  }
  if (spec.window_days <= 0) throw std::runtime_error("synth spec: window_days must be > 0");
  spec.base_profile.validate();
  return spec;
}

SynthSpec load_synth_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open synth spec: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_synth_spec(ss.str());
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  nlohmann::ordered_json doc;
  doc["n"] = spec.n;
  doc["seed"] = spec.seed;
  doc["group_fraction"] = spec.group_fraction;
  CivilDateTime c = civil_from_unix(spec.cutoff_local);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02u:%02u",
                static_cast<long long>(c.year), c.month, c.day, c.hour, c.minute);
  doc["cutoff"] = buf;
  doc["window_days"] = spec.window_days;
  doc["female_fraction"] = spec.female_fraction;
  doc["citizen_fraction"] = spec.citizen_fraction;
  doc["lower_class_fraction"] = spec.lower_class_fraction;
  nlohmann::ordered_json profile;
  profile["hourly_intensity"] = spec.base_profile.hourly_intensity;
  profile["burst_prob"] = spec.base_profile.burst_prob;
  profile["sleep_start_hour"] = spec.base_profile.sleep_start_hour;
  profile["sleep_duration_hours"] = spec.base_profile.sleep_duration_hours;
  profile["tokens_per_text"] = spec.base_profile.tokens_per_text;
  profile["lexicon_mix"] = spec.base_profile.lexicon_mix;
  profile["word_bank"] = spec.base_profile.word_bank;
  profile["category_mix"] = spec.base_profile.category_mix;
  profile["category_keywords"] = spec.base_profile.category_keywords;
  profile["category_domains"] = spec.base_profile.category_domains;
  doc["base_profile"] = std::move(profile);
  nlohmann::ordered_json shift;
  shift["lna_intensity_mult"] = spec.shift.lna_intensity_mult;
  shift["night_start_hour"] = spec.shift.night_start_hour;
  shift["night_end_hour"] = spec.shift.night_end_hour;
  shift["preserve_total"] = spec.shift.preserve_total;
  shift["intensity_mult"] = spec.shift.intensity_mult;
  shift["burst_prob_delta"] = spec.shift.burst_prob_delta;
  shift["sleep_shift_hours"] = spec.shift.sleep_shift_hours;
  shift["lexicon_mix_delta"] = spec.shift.lexicon_mix_delta;
  shift["category_mix_delta"] = spec.shift.category_mix_delta;
  doc["shift"] = std::move(shift);
  return doc.dump(2) + "\n";
}

namespace {

// Distributes a target total greedily over bounded survey items.
template <std::size_t N>
std::array<int, N> items_for_total(int total) {
  std::array<int, N> items{};
  int remaining = std::clamp(total, 0, static_cast<int>(N) * 3);
  for (std::size_t i = 0; i < N && remaining > 0; ++i) {
    items[i] = std::min(3, remaining);
    remaining -= items[i];
  }
  return items;
}

}  // namespace

SynthCohort generate_cohort(const SynthSpec& spec) {
  if (spec.n < 4) throw std::invalid_argument("generate_cohort: n must be >= 4");
  const int n_affected =
      static_cast<int>(std::llround(spec.group_fraction * spec.n));
  if (n_affected == 0 || n_affected == spec.n) {
    throw std::invalid_argument("generate_cohort: both groups must be nonempty");
  }
  BehaviorProfile shifted = apply_shift(spec.base_profile, spec.shift);

  const std::int64_t span =
      static_cast<std::int64_t>(spec.window_days) * kSecondsPerDay;
  // tz offset 0: the synthetic cohort lives on the configured local clock.
  const UnixSeconds before_start = spec.cutoff_local - span;
  const UnixSeconds after_end = spec.cutoff_local + span;

  SynthCohort out;
  int width = 1;
  for (int v = spec.n; v >= 10; v /= 10) ++width;
  for (int i = 0; i < spec.n; ++i) {
    const std::uint64_t pseed = spec.seed ^ static_cast<std::uint64_t>(i);
    const bool affected = i < n_affected;
    std::string digits = std::to_string(i + 1);
    Participant p;
    p.id = "p" + std::string(width > static_cast<int>(digits.size())
                                 ? width - digits.size()
                                 : 0, '0') + digits;

    std::mt19937_64 rng(pseed ^ kSurveySalt);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    p.gender = unit(rng) < spec.female_fraction
                   ? Gender::female
                   : (unit(rng) < 0.9 ? Gender::male : Gender::nonbinary);
    p.us_citizen = unit(rng) < spec.citizen_fraction;
    p.class_year = unit(rng) < spec.lower_class_fraction ? ClassYear::lower
                                                         : ClassYear::upper;
    p.tz_offset_minutes = 0;

    std::uniform_int_distribution<int> base_score(2, 8);
    std::uniform_int_distribution<int> rise(5, 9);
    std::uniform_int_distribution<int> drift(-3, 4);
    const int gad_r1 = base_score(rng);
    const int phq_r1 = base_score(rng);
    const int gad_r2 = gad_r1 + (affected ? rise(rng) : drift(rng));
    const int phq_r2 = phq_r1 + (affected ? rise(rng) : drift(rng));
    SurveyRound r1, r2;
    r1.gad7 = items_for_total<7>(gad_r1);
    r1.phq9 = items_for_total<9>(phq_r1);
    r2.gad7 = items_for_total<7>(gad_r2);
    r2.phq9 = items_for_total<9>(phq_r2);
    p.survey_r1 = r1;
    p.survey_r2 = r2;

    std::vector<ActivityEvent> events = generate_stream(
        spec.base_profile, p.id, before_start, spec.cutoff_local, 0,
        pseed ^ kStreamSalt);
    const BehaviorProfile& after_profile = affected ? shifted : spec.base_profile;
    std::vector<ActivityEvent> after = generate_stream(
        after_profile, p.id, spec.cutoff_local, after_end, 0,
        pseed ^ kStreamSalt ^ 0x1ULL);
    events.insert(events.end(), std::make_move_iterator(after.begin()),
                  std::make_move_iterator(after.end()));

    if (affected) out.affected.push_back(p.id);
    out.events[p.id] = std::move(events);
    out.cohort.participants.push_back(std::move(p));
  }
  std::sort(out.cohort.participants.begin(), out.cohort.participants.end(),
            [](const Participant& a, const Participant& b) { return a.id < b.id; });
  return out;
}

}  // namespace logdrift

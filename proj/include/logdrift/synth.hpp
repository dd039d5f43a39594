#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "logdrift/cohort.hpp"
#include "logdrift/ingest.hpp"
#include "logdrift/timeutil.hpp"

namespace logdrift {

// Event-generating process for one participant: a nonhomogeneous Poisson
// clock over the local day, a burst probability for follow-up activity
// within five minutes, and content mixes that drive the text, URL, and
// category composition. The sleep window has zero intensity every night.
struct BehaviorProfile {
  std::array<double, 24> hourly_intensity{};  // events per hour, local clock
  double burst_prob = 0.0;
  double sleep_start_hour = 1.0;   // may be fractional, wraps at 24
  double sleep_duration_hours = 7.5;
  int tokens_per_text = 3;
  // Sampling weights over word-bank keys ("neutral" plus lexicon categories).
  std::map<std::string, double> lexicon_mix;
  std::map<std::string, std::vector<std::string>> word_bank;
  // Weights over content categories; "other" draws from the lexicon mix.
  std::map<std::string, double> category_mix;
  std::map<std::string, std::vector<std::string>> category_keywords;
  std::map<std::string, std::vector<std::string>> category_domains;

  // hourly_intensity with the sleep window zeroed, evaluated at a local
  // fractional hour.
  double intensity_at(double local_hour) const;
  bool in_sleep(double local_hour) const;

  void validate() const;  // throws std::invalid_argument
};

// A profile with moderate activity and every content pool populated;
// the default for simulations and tests.
BehaviorProfile default_profile();

// Multiplicative/additive edits applied to the affected group's
// after-window profile.
struct ShiftSpec {
  double lna_intensity_mult = 1.0;  // scales the late-night hours
  int night_start_hour = 22;        // hours the multiplier applies to
  int night_end_hour = 5;
  // Rescale the remaining waking hours so the total intensity stays put,
  // isolating the late-night effect from the overall volume.
  bool preserve_total = true;
  double intensity_mult = 1.0;  // overall scale, applied after the above
  double burst_prob_delta = 0.0;
  double sleep_shift_hours = 0.0;
  std::map<std::string, double> lexicon_mix_delta;   // additive, renormalized
  std::map<std::string, double> category_mix_delta;  // additive, renormalized

  bool is_null() const;
};

// Applies the shift and validates the resulting profile.
BehaviorProfile apply_shift(const BehaviorProfile& base, const ShiftSpec& shift);

// Thinning sampler: Poisson(max-rate) candidates, uniform over the window,
// accepted at intensity(t)/max-rate, plus geometric burst follow-ups.
// Fully determined by the seed.
std::vector<ActivityEvent> generate_stream(const BehaviorProfile& profile,
                                           const std::string& pid,
                                           UnixSeconds window_start,
                                           UnixSeconds window_end,
                                           int tz_offset_minutes,
                                           std::uint64_t seed);

struct SynthSpec {
  int n = 49;
  std::uint64_t seed = 0;
  double group_fraction = 0.41;
  BehaviorProfile base_profile = default_profile();
  ShiftSpec shift;
  UnixSeconds cutoff_local = 0;  // default 2020-03-14T00:00, set by ctor
  int window_days = 76;
  double female_fraction = 0.61;
  double citizen_fraction = 0.80;
  double lower_class_fraction = 0.63;

  SynthSpec();
};

SynthSpec load_synth_spec(const std::string& json_text);
SynthSpec load_synth_spec_file(const std::string& path);
std::string synth_spec_to_json(const SynthSpec& spec);

struct SynthCohort {
  Cohort cohort;  // participants sorted by id, surveys filled in
  std::map<std::string, std::vector<ActivityEvent>> events;  // pid -> stream
  std::vector<std::string> affected;  // ground-truth group membership
};

// Builds n participants; round(n * group_fraction) of them receive the
// shifted after-window profile and survey increases >= 5, the rest a null
// shift and increases < 5. Per-participant seeds derive from the spec seed
// and the participant index, so parallel generation cannot change output.
SynthCohort generate_cohort(const SynthSpec& spec);

}  // namespace logdrift

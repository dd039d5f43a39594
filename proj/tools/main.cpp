#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "logdrift/cohort.hpp"
#include "logdrift/features.hpp"
#include "logdrift/ingest.hpp"
#include "logdrift/lexicon.hpp"
#include "logdrift/manifest.hpp"
#include "logdrift/synth.hpp"
#include "logdrift/timeline.hpp"

namespace fs = std::filesystem;
using namespace logdrift;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitUsage = 2;

struct GlobalOpts {
  std::string config_path;
  bool quiet = false;
  int threads = 1;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool path_contains(const fs::path& p, std::string_view needle) {
  std::string s = p.string();
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s.find(needle) != std::string::npos;
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

int run_ingest(const GlobalOpts& global, const std::string& takeout_dir,
               const std::string& pid, const std::string& tz,
               const std::string& out_path) {
  auto tz_minutes = parse_utc_offset_minutes(tz);
  if (!tz_minutes) {
    std::cerr << "ingest: bad --tz, expected +HH:MM or -HH:MM\n";
    return kExitUsage;
  }
  if (!fs::is_directory(takeout_dir)) {
    std::cerr << "ingest: not a directory: " << takeout_dir << "\n";
    return kExitDataError;
  }
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::recursive_directory_iterator(takeout_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      inputs.push_back(entry.path());
    }
  }
  std::sort(inputs.begin(), inputs.end());
  if (inputs.empty()) {
    std::cerr << "ingest: no .json files under " << takeout_dir << "\n";
    return kExitDataError;
  }

  std::vector<ActivityEvent> events;
  RedactionReport redactions;
  std::int64_t skipped = 0, item_errors = 0;
  std::vector<std::pair<std::string, std::string>> manifest_inputs;
  for (const auto& path : inputs) {
    bool is_youtube = path_contains(path, "youtube");
    bool is_search = !is_youtube && path_contains(path, "search");
    if (!is_youtube && !is_search) {
      if (!global.quiet) {
        std::cerr << "ingest: skipping " << path
                  << " (path names neither search nor youtube)\n";
      }
      continue;
    }
    std::string document = slurp(path.string());
    ParseResult result = is_youtube ? parse_takeout_youtube(document, pid)
                                    : parse_takeout_search(document, pid);
    for (const auto& err : result.item_errors) {
      ++item_errors;
      if (!global.quiet) {
        std::cerr << "ingest: " << path << " item " << err.item_index << ": "
                  << err.message << "\n";
      }
    }
    skipped += result.skipped;
    redactions += result.redactions;
    events.insert(events.end(), std::make_move_iterator(result.events.begin()),
                  std::make_move_iterator(result.events.end()));
    manifest_inputs.emplace_back(path.string(), sha256_hex(document));
  }

  write_events_file(out_path, std::move(events));
  RunManifest manifest = make_manifest("ingest", "", std::move(manifest_inputs));
  write_manifest_file(out_path + ".manifest.json", manifest);
  if (!global.quiet) {
    std::cout << "ingest: wrote " << out_path << " (tz " << tz << ", skipped "
              << skipped << ", item errors " << item_errors << ")\n";
    std::cout << "redactions: email " << redactions.email << ", phone "
              << redactions.phone << ", ssn " << redactions.ssn << ", cc "
              << redactions.credit_card << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// features
// ---------------------------------------------------------------------------

int run_features(const GlobalOpts& global, const std::vector<std::string>& event_paths,
                 const std::string& out_path, const std::string& lexicon_path,
                 const std::string& categories_dir, const std::string& cohort_path) {
  if (global.config_path.empty()) {
    std::cerr << "features: --config is required\n";
    return kExitUsage;
  }
  AnalysisConfig base_cfg = load_config_file(global.config_path);
  Lexicon lexicon = load_lexicon_file(lexicon_path);
  OfflineCategoryProvider provider;
  if (!categories_dir.empty()) {
    provider = OfflineCategoryProvider::from_directory(categories_dir);
  }
  std::map<std::string, int> tz_by_pid;
  if (!cohort_path.empty()) {
    Cohort cohort = load_cohort_file(cohort_path);
    for (const auto& p : cohort.participants) tz_by_pid[p.id] = p.tz_offset_minutes;
  }

  // One work item per participant found in the inputs.
  std::map<std::string, std::vector<ActivityEvent>> by_pid;
  std::vector<std::pair<std::string, std::string>> manifest_inputs;
  for (const auto& path : event_paths) {
    for (auto& e : read_events_file(path)) {
      by_pid[e.pid].push_back(std::move(e));
    }
    manifest_inputs.emplace_back(path, sha256_file(path));
  }
  std::vector<std::pair<const std::string*, const std::vector<ActivityEvent>*>> work;
  for (auto& [spid, evs] : by_pid) {
    std::sort(evs.begin(), evs.end(),
              [](const ActivityEvent& a, const ActivityEvent& b) { return a.ts < b.ts; });
    work.emplace_back(&spid, &evs);
  }

  std::vector<FeatureDelta> rows(work.size());
  const int n_threads = std::max(1, global.threads);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < work.size(); i = next.fetch_add(1)) {
      AnalysisConfig cfg = base_cfg;
      if (auto it = tz_by_pid.find(*work[i].first); it != tz_by_pid.end()) {
        cfg.tz_offset_minutes = it->second;
      }
      rows[i] = extract_feature_delta(*work[i].second, cfg, lexicon, provider);
      rows[i].pid = *work[i].first;
    }
  };
  if (n_threads == 1 || work.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& row : rows) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      if (row.degenerate[i] && !global.quiet) {
        std::cerr << "features: " << row.pid << ": " << kFeatureNames[i]
                  << " degenerate (zero baseline or empty window)\n";
      }
    }
  }

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + out_path);
  write_features_csv(out, rows);
  out.flush();
  RunManifest manifest = make_manifest(
      "features", sha256_file(global.config_path), std::move(manifest_inputs));
  write_manifest_file(out_path + ".manifest.json", manifest);
  if (!global.quiet) {
    std::cout << "features: wrote " << out_path << " (" << rows.size()
              << " participants)\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

Grouping parse_grouping(const std::string& s) {
  if (s == "dep") return Grouping::dep;
  if (s == "anx") return Grouping::anx;
  throw CLI::ValidationError("--grouping must be dep or anx");
}

int run_analyze(const GlobalOpts& global, const std::string& cohort_path,
                const std::string& features_path, const std::string& grouping_str,
                const std::string& out_dir) {
  AnalysisConfig cfg;
  std::string config_digest;
  if (!global.config_path.empty()) {
    cfg = load_config_file(global.config_path);
    config_digest = sha256_file(global.config_path);
  }
  Grouping grouping = parse_grouping(grouping_str);
  Cohort cohort = load_cohort_file(cohort_path);
  std::vector<FeatureDelta> features = read_features_csv_file(features_path);
  GroupAnalysis analysis = run_group_analysis(cohort, grouping, features, cfg);

  fs::create_directories(out_dir);
  const std::string label(to_string(grouping));
  {
    std::ofstream out(fs::path(out_dir) / ("report_" + label + ".csv"),
                      std::ios::binary);
    write_report_csv(out, analysis);
  }
  {
    std::ofstream out(fs::path(out_dir) / ("report_" + label + ".md"),
                      std::ios::binary);
    write_report_markdown(out, analysis);
  }
  {
    std::ofstream out(fs::path(out_dir) / ("demographics_" + label + ".csv"),
                      std::ios::binary);
    write_demographics_csv(out, analysis);
  }
  RunManifest manifest = make_manifest(
      "analyze", config_digest,
      {{cohort_path, sha256_file(cohort_path)},
       {features_path, sha256_file(features_path)}});
  write_manifest_file((fs::path(out_dir) / "manifest.json").string(), manifest);
  if (!global.quiet) {
    std::cout << "analyze: " << label << " n=" << analysis.n_group << " vs "
              << analysis.n_complement << ", covariates:";
    if (analysis.covariates.empty()) std::cout << " none";
    for (const auto& c : analysis.covariates) std::cout << ' ' << c;
    std::cout << "; wrote " << out_dir << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// boxplot
// ---------------------------------------------------------------------------

// Linear interpolation between order statistics (h = (n-1)p).
double quantile_linear(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(h));
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

int run_boxplot(const GlobalOpts& global, const std::string& cohort_path,
                const std::string& features_path, const std::string& grouping_str,
                const std::string& out_path) {
  Grouping grouping = parse_grouping(grouping_str);
  Cohort cohort = load_cohort_file(cohort_path);
  std::vector<FeatureDelta> features = read_features_csv_file(features_path);
  std::map<std::string, bool> in_group;
  for (const auto& p : cohort.participants) {
    if (!p.survey_r1 || !p.survey_r2) continue;
    GroupLabels labels = label_groups(p);
    in_group[p.id] = grouping == Grouping::dep ? labels.dep : labels.anx;
  }

  const std::string label(to_string(grouping));
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (std::size_t v = 0; v < kFeatureCount; ++v) {
    std::vector<double> values_a, values_b;  // group, complement
    for (const auto& row : features) {
      auto it = in_group.find(row.pid);
      if (it == in_group.end()) continue;
      if (row.degenerate[v] || std::isnan(row.values[v])) continue;
      (it->second ? values_a : values_b).push_back(row.values[v]);
    }
    nlohmann::ordered_json entry;
    entry["variable"] = std::string(kFeatureNames[v]);
    auto box = [&](std::vector<double>& vals,
                   const std::string& name) -> nlohmann::ordered_json {
      if (vals.size() < 2) {
        if (!global.quiet) {
          std::cerr << "boxplot: " << kFeatureNames[v] << "/" << name
                    << " has n < 2, emitting null\n";
        }
        return nullptr;
      }
      std::sort(vals.begin(), vals.end());
      nlohmann::ordered_json b;
      b["n"] = vals.size();
      b["q1"] = quantile_linear(vals, 0.25);
      b["median"] = quantile_linear(vals, 0.5);
      b["q3"] = quantile_linear(vals, 0.75);
      b["whisker_lo"] = vals.front();
      b["whisker_hi"] = vals.back();
      return b;
    };
    entry["groups"][label] = box(values_a, label);
    entry["groups"]["non_" + label] = box(values_b, "non_" + label);
    doc.push_back(std::move(entry));
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + out_path);
  out << doc.dump(2) << "\n";
  RunManifest manifest = make_manifest(
      "boxplot", "",
      {{cohort_path, sha256_file(cohort_path)},
       {features_path, sha256_file(features_path)}});
  write_manifest_file(out_path + ".manifest.json", manifest);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int run_simulate(const GlobalOpts& global, const std::string& spec_path,
                 std::optional<std::uint64_t> seed, const std::string& out_dir) {
  SynthSpec spec = load_synth_spec_file(spec_path);
  if (seed) spec.seed = *seed;
  SynthCohort synth = generate_cohort(spec);

  fs::create_directories(fs::path(out_dir) / "events");
  for (auto& p : synth.cohort.participants) {
    p.events_path = "events/" + p.id + ".ndjson";
  }
  for (const auto& [pid, events] : synth.events) {
    write_events_file((fs::path(out_dir) / "events" / (pid + ".ndjson")).string(),
                      events);
  }
  {
    std::ofstream out(fs::path(out_dir) / "cohort.json", std::ios::binary);
    out << cohort_to_json(synth.cohort);
  }
  {
    nlohmann::ordered_json truth;
    truth["n"] = spec.n;
    truth["seed"] = spec.seed;
    truth["n_affected"] = synth.affected.size();
    truth["affected"] = synth.affected;
    std::ofstream out(fs::path(out_dir) / "ground_truth.json", std::ios::binary);
    out << truth.dump(2) << "\n";
  }
  RunManifest manifest =
      make_manifest("simulate", sha256_file(spec_path), {{spec_path, sha256_file(spec_path)}});
  write_manifest_file((fs::path(out_dir) / "manifest.json").string(), manifest);
  if (!global.quiet) {
    std::cout << "simulate: " << spec.n << " participants ("
              << synth.affected.size() << " affected) in " << out_dir << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"behavior-shift analytics for search and watch history"};
  app.require_subcommand(1);
  GlobalOpts global;
  app.add_option("--config", global.config_path, "analysis config JSON");
  app.add_flag("--quiet", global.quiet, "suppress informational output");
  app.add_option("--threads", global.threads, "worker threads for per-participant stages");

  std::string takeout_dir, pid, tz = "+00:00", out_path;
  auto* ingest = app.add_subcommand("ingest", "parse a Takeout export into canonical NDJSON");
  ingest->add_option("--takeout", takeout_dir, "Takeout directory")->required();
  ingest->add_option("--pid", pid, "participant id")->required();
  ingest->add_option("--tz", tz, "participant UTC offset, +HH:MM");
  ingest->add_option("--out", out_path, "output NDJSON path")->required();

  std::vector<std::string> event_paths;
  std::string features_out, lexicon_path, categories_dir, cohort_for_tz;
  auto* features = app.add_subcommand("features", "compute per-participant behavior deltas");
  features->add_option("--events", event_paths, "canonical NDJSON files")->required();
  features->add_option("--out", features_out, "output CSV path")->required();
  features->add_option("--lexicon", lexicon_path, "lexicon .dic file")->required();
  features->add_option("--categories", categories_dir, "category list directory");
  features->add_option("--cohort", cohort_for_tz, "cohort JSON for per-participant tz offsets");

  std::string cohort_path, features_path, grouping = "dep", analyze_out;
  auto* analyze = app.add_subcommand("analyze", "run the group-difference battery");
  analyze->add_option("--cohort", cohort_path, "cohort JSON")->required();
  analyze->add_option("--features", features_path, "features CSV")->required();
  analyze->add_option("--grouping", grouping, "dep or anx")->required();
  analyze->add_option("--out", analyze_out, "output directory")->required();

  std::string box_cohort, box_features, box_grouping = "dep", box_out;
  auto* boxplot = app.add_subcommand("boxplot", "emit box-plot summary data");
  boxplot->add_option("--cohort", box_cohort, "cohort JSON")->required();
  boxplot->add_option("--features", box_features, "features CSV")->required();
  boxplot->add_option("--grouping", box_grouping, "dep or anx")->required();
  boxplot->add_option("--out", box_out, "output JSON path")->required();

  std::string spec_path, sim_out;
  std::optional<std::uint64_t> sim_seed;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic cohort");
  simulate->add_option("--spec", spec_path, "synth spec JSON")->required();
  simulate->add_option("--seed", sim_seed, "override the spec seed");
  simulate->add_option("--out", sim_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*ingest) return run_ingest(global, takeout_dir, pid, tz, out_path);
    if (*features) {
      return run_features(global, event_paths, features_out, lexicon_path,
                          categories_dir, cohort_for_tz);
    }
    if (*analyze) {
      return run_analyze(global, cohort_path, features_path, grouping, analyze_out);
    }
    if (*boxplot) {
      return run_boxplot(global, box_cohort, box_features, box_grouping, box_out);
    }
    if (*simulate) return run_simulate(global, spec_path, sim_seed, sim_out);
  } catch (const TakeoutParseError& e) {
    std::cerr << "parse error at byte " << e.byte_offset << ": " << e.what() << "\n";
    return kExitDataError;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "logdrift/ingest.hpp"

namespace logdrift {

// Word lists in the LIWC .dic shape: a header block of "id name" lines
// between "%" delimiters, then "pattern id [id...]" lines. A pattern is a
// literal token or a stem with a trailing "*" wildcard.
struct Lexicon {
  struct Category {
    int id = 0;
    std::string name;
    std::vector<std::string> literals;
    std::vector<std::string> stems;  // wildcard stripped
  };
  std::vector<Category> categories;

  std::optional<std::size_t> category_index(std::string_view name) const;
};

// Throws std::runtime_error on format violations ("no categories",
// "duplicate category", "interior wildcard", "empty category", ...).
Lexicon load_lexicon(std::string_view document);
Lexicon load_lexicon_file(const std::string& path);

// Lowercased alphabetic runs.
std::vector<std::string> tokenize(std::string_view text);

struct MatchCounts {
  std::vector<std::int64_t> per_category;  // aligned with lexicon.categories
  std::int64_t tokens = 0;
};

// Counts, per category, the tokens matching any of its patterns (literal
// equality or stem prefix). A token increments each category it matches at
// most once.
MatchCounts count_matches(const std::vector<std::string>& corpus,
                          const Lexicon& lexicon);

// ---------------------------------------------------------------------------
// Content-category enrichment
// ---------------------------------------------------------------------------

// Maps an event to zero or more content-category names ("adult", "news").
// nullopt means the provider could not resolve the event (transport
// failure); such events are tallied separately and analysis proceeds.
class CategoryProvider {
 public:
  virtual ~CategoryProvider() = default;
  virtual std::optional<std::set<std::string>> lookup(const ActivityEvent& e) const = 0;
};

// Resolves everything from local lists: per-category domain files matched
// against the URL host, and per-category keyword patterns (same syntax as
// lexicon patterns) matched against the event text.
class OfflineCategoryProvider : public CategoryProvider {
 public:
  void add_domains(const std::string& category, std::vector<std::string> domains);
  void add_keywords(const std::string& category, std::vector<std::string> keywords);

  // Loads every "<category>.domains" / "<category>.keywords" file in dir.
  static OfflineCategoryProvider from_directory(const std::string& dir);

  std::optional<std::set<std::string>> lookup(const ActivityEvent& e) const override;

 private:
  struct Lists {
    std::vector<std::string> domains;
    std::vector<std::string> literal_keywords;
    std::vector<std::string> stem_keywords;
  };
  std::map<std::string, Lists> categories_;
};

// Unions the verdicts of several providers; the event counts as unresolved
// when any member fails, but resolved tags are still returned.
class CompositeCategoryProvider : public CategoryProvider {
 public:
  void add(const CategoryProvider* provider) { providers_.push_back(provider); }
  std::optional<std::set<std::string>> lookup(const ActivityEvent& e) const override;

 private:
  std::vector<const CategoryProvider*> providers_;
};

// Lowercased host of an http(s) URL, or empty when not parseable.
std::string url_host(std::string_view url);

// Watch id from standard and short-form YouTube URLs.
std::optional<std::string> video_id_from_url(std::string_view url);

struct VideoMetadata {
  std::string id;
  std::string title;
  std::string category;
};

// On-disk NDJSON cache of {id, title, category} records.
class MetadataCache {
 public:
  explicit MetadataCache(std::string path);
  std::optional<VideoMetadata> get(const std::string& id) const;
  void put(const VideoMetadata& meta);  // persists immediately

 private:
  std::string path_;
  std::map<std::string, VideoMetadata> entries_;
};

struct RemoteProviderConfig {
  // "{id}" and "{key}" are substituted; e.g.
  // "http://127.0.0.1:8080/videos?id={id}&key={key}".
  std::string endpoint_template;
  std::string api_key;  // from METADATA_API_KEY by convention
  int min_request_interval_ms = 0;
};

enum class FetchStatus { ok, not_found, transport_error, bad_response };

// HTTP JSON lookup of a video id; cache hits bypass the network, failures
// return nullopt and are logged to stderr.
std::optional<VideoMetadata> fetch_video_metadata(const std::string& video_id,
                                                  const RemoteProviderConfig& cfg,
                                                  MetadataCache& cache,
                                                  FetchStatus* status = nullptr);

// Tags watched videos with the lowercased category from the metadata
// endpoint; all other events resolve to no category.
class RemoteCategoryProvider : public CategoryProvider {
 public:
  RemoteCategoryProvider(RemoteProviderConfig cfg, MetadataCache* cache)
      : cfg_(std::move(cfg)), cache_(cache) {}
  std::optional<std::set<std::string>> lookup(const ActivityEvent& e) const override;

 private:
  RemoteProviderConfig cfg_;
  MetadataCache* cache_;
};

}  // namespace logdrift

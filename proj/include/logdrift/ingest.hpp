#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "logdrift/timeutil.hpp"

namespace logdrift {

enum class Platform { search, youtube };
enum class EventKind { query, url_visit, video_watch, youtube_search };

std::string_view to_string(Platform p);
std::string_view to_string(EventKind k);
std::optional<Platform> platform_from_string(std::string_view s);
std::optional<EventKind> kind_from_string(std::string_view s);

// query/url_visit belong to search, video_watch/youtube_search to youtube.
bool kind_matches_platform(EventKind k, Platform p);

// One timestamped search/watch/visit action by one participant.
struct ActivityEvent {
  std::string pid;
  UnixSeconds ts = 0;
  Platform platform = Platform::search;
  EventKind kind = EventKind::query;
  std::string text;                 // scrubbed query text or video title
  std::optional<std::string> url;   // scrubbed URL, when the export has one

  bool operator==(const ActivityEvent&) const = default;
};

// Counts of PII substrings replaced, per class.
struct RedactionReport {
  std::int64_t email = 0;
  std::int64_t phone = 0;
  std::int64_t ssn = 0;
  std::int64_t credit_card = 0;

  std::int64_t total() const { return email + phone + ssn + credit_card; }
  RedactionReport& operator+=(const RedactionReport& o);
};

struct ScrubResult {
  std::string text;
  RedactionReport report;
};

// Replaces emails, North-American phone numbers, SSNs (ddd-dd-dddd), and
// 13-19 digit runs passing the Luhn check with "[EMAIL]", "[PHONE]",
// "[SSN]", "[CC]". Longest match wins; one left-to-right pass; total.
ScrubResult scrub_pii(std::string_view text);

// Document-level failure: the export is not parseable JSON.
struct TakeoutParseError : std::runtime_error {
  TakeoutParseError(const std::string& msg, std::size_t byte)
      : std::runtime_error(msg), byte_offset(byte) {}
  std::size_t byte_offset;
};

struct ItemError {
  std::size_t item_index;
  std::string message;
};

struct ParseResult {
  std::vector<ActivityEvent> events;
  std::int64_t skipped = 0;  // items with an unrecognized title prefix
  std::vector<ItemError> item_errors;
  RedactionReport redactions;
};

// Parses a Google-Takeout-style "My Activity" JSON array. Search exports
// carry "Searched for ..." and "Visited ..." titles; YouTube exports carry
// "Watched ..." and "Searched for ..." titles. All text and URLs pass
// through scrub_pii. Throws TakeoutParseError when the document itself is
// malformed; item-level problems are collected and parsing continues.
ParseResult parse_takeout_search(std::string_view document, std::string_view pid);
ParseResult parse_takeout_youtube(std::string_view document, std::string_view pid);

// Canonical event interchange: one JSON object per line,
// {"pid","ts","platform","kind","text","url"}, sorted by (pid, ts).
void write_events(std::ostream& out, std::vector<ActivityEvent> events);
void write_events_file(const std::string& path, std::vector<ActivityEvent> events);

// Throws std::runtime_error naming the 1-based line of the first
// schema-violating line ("line N: missing field ts").
std::vector<ActivityEvent> read_events(std::istream& in);
std::vector<ActivityEvent> read_events_file(const std::string& path);

// True when every event satisfies the ActivityEvent invariants
// (consistent kind/platform, no un-redacted PII in text or url).
bool validate_event(const ActivityEvent& e, std::string* why = nullptr);

}  // namespace logdrift

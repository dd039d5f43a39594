#include "logdrift/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace logdrift {

namespace {

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

// ---------------------------------------------------------------------------
// PII scanner. Each matcher returns the match length at position i, or 0.
// The scan takes the longest match at each position (ties broken in the
// order email, credit card, SSN, phone) and never rescans replaced text.
// ---------------------------------------------------------------------------

inline bool is_email_local_char(char c) {
  return is_alpha(c) || is_digit(c) || c == '.' || c == '_' || c == '%' ||
         c == '+' || c == '-';
}
inline bool is_domain_char(char c) {
  return is_alpha(c) || is_digit(c) || c == '-';
}

size_t match_email(std::string_view s, size_t i) {
  if (i > 0 && is_email_local_char(s[i - 1])) return 0;
  size_t j = i;
  while (j < s.size() && is_email_local_char(s[j])) ++j;
  if (j == i || j >= s.size() || s[j] != '@') return 0;
  ++j;
  // domain: dotted labels, last label alphabetic with length >= 2
  size_t domain_start = j;
  size_t last_label_start = j;
  while (j < s.size() && (is_domain_char(s[j]) || s[j] == '.')) {
    if (s[j] == '.') last_label_start = j + 1;
    ++j;
  }
  if (j == domain_start || last_label_start == domain_start) return 0;
  size_t tld_len = j - last_label_start;
  if (tld_len < 2) return 0;
  for (size_t k = last_label_start; k < j; ++k) {
    if (!is_alpha(s[k])) return 0;
  }
  return j - i;
}

bool luhn_ok(const std::string& digits) {
  int sum = 0;
  bool dbl = false;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    int d = *it - '0';
    if (dbl) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
    dbl = !dbl;
  }
  return sum % 10 == 0;
}

// 13-19 digits, optionally grouped by single spaces or dashes, Luhn-valid.
// Groups are consumed greedily while the digit total stays <= 19.
size_t match_credit_card(std::string_view s, size_t i) {
  if (i > 0 && is_digit(s[i - 1])) return 0;
  std::string digits;
  size_t j = i;
  size_t match_end = i;
  while (j < s.size()) {
    size_t g = j;
    while (g < s.size() && is_digit(s[g])) ++g;
    if (g == j) break;
    if (digits.size() + (g - j) > 19) break;
    digits.append(s.substr(j, g - j));
    match_end = g;
    if (g < s.size() && (s[g] == ' ' || s[g] == '-') && g + 1 < s.size() &&
        is_digit(s[g + 1])) {
      j = g + 1;
    } else {
      break;
    }
  }
  if (digits.size() < 13 || digits.size() > 19) return 0;
  if (match_end < s.size() && is_digit(s[match_end])) return 0;
  if (!luhn_ok(digits)) return 0;
  return match_end - i;
}

size_t match_ssn(std::string_view s, size_t i) {
  if (i > 0 && (is_digit(s[i - 1]) || s[i - 1] == '-')) return 0;
  if (i + 11 > s.size()) return 0;
  static const char pattern[] = "ddd-dd-dddd";
  for (size_t k = 0; k < 11; ++k) {
    char want = pattern[k];
    char got = s[i + k];
    if (want == 'd' ? !is_digit(got) : got != '-') return 0;
  }
  size_t end = i + 11;
  if (end < s.size() && (is_digit(s[end]) || s[end] == '-')) return 0;
  return 11;
}

inline bool is_phone_sep(char c) { return c == ' ' || c == '-' || c == '.'; }

bool read_digits(std::string_view s, size_t& j, size_t n) {
  if (j + n > s.size()) return false;
  for (size_t k = 0; k < n; ++k) {
    if (!is_digit(s[j + k])) return false;
  }
  j += n;
  return true;
}

// North-American phone shapes: optional +1/1 country code, then
// "(ddd) ddd-dddd", "ddd-ddd-dddd" (any of " -." as separators), or a
// bare 10-digit run.
size_t match_phone(std::string_view s, size_t i) {
  if (i > 0 && is_digit(s[i - 1])) return 0;
  size_t j = i;
  if (j < s.size() && s[j] == '+') ++j;
  bool had_country = false;
  if (j < s.size() && s[j] == '1' &&
      (j + 1 < s.size() &&
       (is_phone_sep(s[j + 1]) || s[j + 1] == '(' ||
        (is_digit(s[j + 1]) && s[j] == '1')))) {
    // "1" prefix only counts as a country code before a separator, an
    // opening paren, or a bare 11-digit run.
    if (is_phone_sep(s[j + 1]) || s[j + 1] == '(') {
      ++j;
      had_country = true;
      if (j < s.size() && is_phone_sep(s[j])) ++j;
    } else {
      // candidate bare 11-digit run starting with 1
      size_t k = j;
      if (read_digits(s, k, 11) && (k == s.size() || !is_digit(s[k]))) {
        return k - i;
      }
    }
  }
  (void)had_country;
  size_t area_end = j;
  if (j < s.size() && s[j] == '(') {
    size_t k = j + 1;
    if (!read_digits(s, k, 3) || k >= s.size() || s[k] != ')') return 0;
    j = k + 1;
    if (j < s.size() && is_phone_sep(s[j])) ++j;
    area_end = j;
  } else {
    if (!read_digits(s, j, 3)) return 0;
    area_end = j;
    if (j < s.size() && is_phone_sep(s[j])) {
      ++j;
    } else if (j < s.size() && is_digit(s[j])) {
      // bare 10-digit run
      size_t k = area_end;
      if (read_digits(s, k, 7) && (k == s.size() || !is_digit(s[k]))) {
        return k - i;
      }
      return 0;
    } else {
      return 0;
    }
  }
  if (!read_digits(s, j, 3)) return 0;
  if (j >= s.size() || !is_phone_sep(s[j])) return 0;
  ++j;
  if (!read_digits(s, j, 4)) return 0;
  if (j < s.size() && is_digit(s[j])) return 0;
  return j - i;
}

}  // namespace

RedactionReport& RedactionReport::operator+=(const RedactionReport& o) {
  email += o.email;
  phone += o.phone;
  ssn += o.ssn;
  credit_card += o.credit_card;
  return *this;
}

ScrubResult scrub_pii(std::string_view text) {
  ScrubResult r;
  r.text.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    struct Candidate {
      size_t len;
      const char* token;
      std::int64_t RedactionReport::* counter;
    };
    Candidate cands[] = {
        {match_email(text, i), "[EMAIL]", &RedactionReport::email},
        {match_credit_card(text, i), "[CC]", &RedactionReport::credit_card},
        {match_ssn(text, i), "[SSN]", &RedactionReport::ssn},
        {match_phone(text, i), "[PHONE]", &RedactionReport::phone},
    };
    const Candidate* best = nullptr;
    for (const auto& c : cands) {
      if (c.len > 0 && (!best || c.len > best->len)) best = &c;
    }
    if (best) {
      r.text += best->token;
      r.report.*(best->counter) += 1;
      i += best->len;
    } else {
      r.text += text[i];
      ++i;
    }
  }
  return r;
}

std::string_view to_string(Platform p) {
  return p == Platform::search ? "search" : "youtube";
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::query: return "query";
    case EventKind::url_visit: return "url_visit";
    case EventKind::video_watch: return "video_watch";
    case EventKind::youtube_search: return "youtube_search";
  }
  return "query";
}

std::optional<Platform> platform_from_string(std::string_view s) {
  if (s == "search") return Platform::search;
  if (s == "youtube") return Platform::youtube;
  return std::nullopt;
}

std::optional<EventKind> kind_from_string(std::string_view s) {
  if (s == "query") return EventKind::query;
  if (s == "url_visit") return EventKind::url_visit;
  if (s == "video_watch") return EventKind::video_watch;
  if (s == "youtube_search") return EventKind::youtube_search;
  return std::nullopt;
}

bool kind_matches_platform(EventKind k, Platform p) {
  bool search_kind = k == EventKind::query || k == EventKind::url_visit;
  return search_kind == (p == Platform::search);
}

bool validate_event(const ActivityEvent& e, std::string* why) {
  auto fail = [&](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  if (e.pid.empty()) return fail("empty pid");
  if (!kind_matches_platform(e.kind, e.platform)) {
    return fail("kind inconsistent with platform");
  }
  if (scrub_pii(e.text).report.total() != 0) return fail("text contains PII");
  if (e.url && scrub_pii(*e.url).report.total() != 0) {
    return fail("url contains PII");
  }
  return true;
}

// ---------------------------------------------------------------------------
// Takeout "My Activity" parsing (SAX, so large exports stream cheaply).
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kSearchedPrefix = "Searched for ";
constexpr std::string_view kVisitedPrefix = "Visited ";
constexpr std::string_view kWatchedPrefix = "Watched ";

struct TakeoutItem {
  std::optional<std::string> title;
  std::optional<std::string> title_url;
  std::optional<std::string> time;
};

class TakeoutSax : public nlohmann::json::json_sax_t {
 public:
  TakeoutSax(Platform platform, std::string_view pid, ParseResult& out)
      : platform_(platform), pid_(pid), out_(out) {}

  bool start_array(std::size_t) override {
    if (depth_ == 0) {
      saw_top_array_ = true;
    }
    ++depth_;
    return true;
  }
  bool end_array() override {
    --depth_;
    return true;
  }
  bool start_object(std::size_t) override {
    if (depth_ == 0) {
      throw TakeoutParseError("expected a top-level JSON array of activity items", 0);
    }
    if (depth_ == 1) {
      item_ = TakeoutItem{};
    }
    ++depth_;
    return true;
  }
  bool end_object() override {
    --depth_;
    if (depth_ == 1) {
      finish_item();
    }
    return true;
  }
  bool key(string_t& val) override {
    current_key_ = (depth_ == 2) ? val : std::string();
    return true;
  }
  bool string(string_t& val) override {
    if (depth_ == 2 && !current_key_.empty()) {
      if (current_key_ == "title") {
        item_.title = val;
      } else if (current_key_ == "titleUrl") {
        item_.title_url = val;
      } else if (current_key_ == "time") {
        item_.time = val;
      }
    }
    return true;
  }
  bool null() override { return true; }
  bool boolean(bool) override { return true; }
  bool number_integer(number_integer_t) override { return true; }
  bool number_unsigned(number_unsigned_t) override { return true; }
  bool number_float(number_float_t, const string_t&) override { return true; }
  bool binary(binary_t&) override { return true; }
  bool parse_error(std::size_t position, const std::string&,
                   const nlohmann::json::exception& ex) override {
    throw TakeoutParseError(ex.what(), position);
  }

  bool saw_top_array() const { return saw_top_array_; }

 private:
  void finish_item() {
    std::size_t index = item_index_++;
    if (!item_.title) {
      ++out_.skipped;
      return;
    }
    const std::string& title = *item_.title;
    ActivityEvent e;
    e.pid = pid_;
    e.platform = platform_;
    if (platform_ == Platform::search) {
      if (title.rfind(kSearchedPrefix, 0) == 0) {
        e.kind = EventKind::query;
        e.text = title.substr(kSearchedPrefix.size());
      } else if (title.rfind(kVisitedPrefix, 0) == 0) {
        e.kind = EventKind::url_visit;
        e.url = item_.title_url;
      } else {
        ++out_.skipped;
        return;
      }
    } else {
      if (title.rfind(kWatchedPrefix, 0) == 0) {
        e.kind = EventKind::video_watch;
        e.text = title.substr(kWatchedPrefix.size());
        e.url = item_.title_url;
      } else if (title.rfind(kSearchedPrefix, 0) == 0) {
        e.kind = EventKind::youtube_search;
        e.text = title.substr(kSearchedPrefix.size());
      } else {
        ++out_.skipped;
        return;
      }
    }
    if (!item_.time) {
      out_.item_errors.push_back({index, "missing time"});
      return;
    }
    auto ts = parse_rfc3339(*item_.time);
    if (!ts) {
      out_.item_errors.push_back({index, "bad time \"" + *item_.time + "\""});
      return;
    }
    e.ts = *ts;
    auto scrubbed = scrub_pii(e.text);
    e.text = std::move(scrubbed.text);
    out_.redactions += scrubbed.report;
    if (e.url) {
      auto u = scrub_pii(*e.url);
      e.url = std::move(u.text);
      out_.redactions += u.report;
    }
    out_.events.push_back(std::move(e));
  }

  Platform platform_;
  std::string pid_;
  ParseResult& out_;
  int depth_ = 0;
  bool saw_top_array_ = false;
  std::size_t item_index_ = 0;
  std::string current_key_;
  TakeoutItem item_;
};

ParseResult parse_takeout(std::string_view document, Platform platform,
                          std::string_view pid) {
  ParseResult result;
  TakeoutSax sax(platform, pid, result);
  nlohmann::json::sax_parse(document, &sax);
  if (!sax.saw_top_array()) {
    throw TakeoutParseError("expected a top-level JSON array of activity items", 0);
  }
  return result;
}

}  // namespace

ParseResult parse_takeout_search(std::string_view document, std::string_view pid) {
  return parse_takeout(document, Platform::search, pid);
}

ParseResult parse_takeout_youtube(std::string_view document, std::string_view pid) {
  return parse_takeout(document, Platform::youtube, pid);
}

// ---------------------------------------------------------------------------
// Canonical NDJSON
// ---------------------------------------------------------------------------

namespace {

void append_json_string(std::string& out, std::string_view s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

}  // namespace

void write_events(std::ostream& out, std::vector<ActivityEvent> events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const ActivityEvent& a, const ActivityEvent& b) {
                     if (a.pid != b.pid) return a.pid < b.pid;
                     return a.ts < b.ts;
                   });
  std::string line;
  for (const auto& e : events) {
    line.clear();
    line += "{\"pid\":";
    append_json_string(line, e.pid);
    line += ",\"ts\":";
    append_json_string(line, format_rfc3339_utc(e.ts));
    line += ",\"platform\":";
    append_json_string(line, to_string(e.platform));
    line += ",\"kind\":";
    append_json_string(line, to_string(e.kind));
    line += ",\"text\":";
    append_json_string(line, e.text);
    line += ",\"url\":";
    if (e.url) {
      append_json_string(line, *e.url);
    } else {
      line += "null";
    }
    line += "}\n";
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
}

void write_events_file(const std::string& path, std::vector<ActivityEvent> events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_events(out, std::move(events));
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

[[noreturn]] void line_error(std::size_t lineno, const std::string& msg) {
  throw std::runtime_error("line " + std::to_string(lineno) + ": " + msg);
}

// Minimal parser for one flat NDJSON object whose values are strings or
// null. nlohmann's DOM is a factor of ~10 too slow for million-line reads.
class FlatLineParser {
 public:
  FlatLineParser(std::string_view line, std::size_t lineno)
      : s_(line), lineno_(lineno) {}

  // Calls on_field(key, value, is_null) per member.
  template <typename Fn>
  void parse(Fn&& on_field) {
    skip_ws();
    expect('{');
    skip_ws();
    if (peek() == '}') {
      ++pos_;
    } else {
      while (true) {
        skip_ws();
        std::string key = parse_string();
        skip_ws();
        expect(':');
        skip_ws();
        bool is_null = false;
        std::string value;
        if (peek() == 'n') {
          expect_literal("null");
          is_null = true;
        } else {
          value = parse_string();
        }
        on_field(key, std::move(value), is_null);
        skip_ws();
        char c = next();
        if (c == '}') break;
        if (c != ',') fail("expected ',' or '}'");
      }
    }
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
  }

 private:
  [[noreturn]] void fail(const std::string& msg) { line_error(lineno_, "malformed JSON: " + msg); }

  char peek() {
    if (pos_ >= s_.size()) fail("unexpected end of line");
    return s_[pos_];
  }
  char next() {
    char c = peek();
    ++pos_;
    return c;
  }
  void expect(char c) {
    if (next() != c) fail(std::string("expected '") + c + "'");
  }
  void expect_literal(std::string_view lit) {
    if (s_.compare(pos_, lit.size(), lit) != 0) fail("bad literal");
    pos_ += lit.size();
  }
  void skip_ws() {
    while (pos_ < s_.size() &&
           (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) {
      ++pos_;
    }
  }

  void append_utf8(std::string& out, unsigned cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  unsigned parse_hex4() {
    unsigned v = 0;
    for (int i = 0; i < 4; ++i) {
      char c = next();
      v <<= 4;
      if (c >= '0' && c <= '9') v |= static_cast<unsigned>(c - '0');
      else if (c >= 'a' && c <= 'f') v |= static_cast<unsigned>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v |= static_cast<unsigned>(c - 'A' + 10);
      else fail("bad \\u escape");
    }
    return v;
  }

  std::string parse_string() {
    if (next() != '"') fail("expected string");
    std::string out;
    while (true) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && s_[pos_] != '"' && s_[pos_] != '\\' &&
             static_cast<unsigned char>(s_[pos_]) >= 0x20) {
        ++pos_;
      }
      out.append(s_.substr(start, pos_ - start));
      char c = next();
      if (c == '"') return out;
      if (c != '\\') fail("unescaped control character");
      char esc = next();
      switch (esc) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case '/': out += '/'; break;
        case 'b': out += '\b'; break;
        case 'f': out += '\f'; break;
        case 'n': out += '\n'; break;
        case 'r': out += '\r'; break;
        case 't': out += '\t'; break;
        case 'u': {
          unsigned cp = parse_hex4();
          if (cp >= 0xD800 && cp <= 0xDBFF) {
            expect('\\');
            expect('u');
            unsigned lo = parse_hex4();
            if (lo < 0xDC00 || lo > 0xDFFF) fail("bad surrogate pair");
            cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
          }
          append_utf8(out, cp);
          break;
        }
        default: fail("bad escape");
      }
    }
  }

  std::string_view s_;
  std::size_t lineno_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<ActivityEvent> read_events(std::istream& in) {
  std::vector<ActivityEvent> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    ActivityEvent e;
    bool have_pid = false, have_ts = false, have_platform = false;
    bool have_kind = false, have_text = false, have_url = false;
    FlatLineParser parser(line, lineno);
    parser.parse([&](const std::string& key, std::string value, bool is_null) {
      auto want_string = [&]() {
        if (is_null) line_error(lineno, "field " + key + " must be a string");
      };
      if (key == "pid") {
        want_string();
        e.pid = std::move(value);
        have_pid = true;
      } else if (key == "ts") {
        want_string();
        auto parsed = parse_rfc3339(value);
        if (!parsed) line_error(lineno, "bad ts \"" + value + "\"");
        e.ts = *parsed;
        have_ts = true;
      } else if (key == "platform") {
        want_string();
        auto platform = platform_from_string(value);
        if (!platform) line_error(lineno, "unknown platform");
        e.platform = *platform;
        have_platform = true;
      } else if (key == "kind") {
        want_string();
        auto kind = kind_from_string(value);
        if (!kind) line_error(lineno, "unknown kind");
        e.kind = *kind;
        have_kind = true;
      } else if (key == "text") {
        want_string();
        e.text = std::move(value);
        have_text = true;
      } else if (key == "url") {
        if (!is_null) e.url = std::move(value);
        have_url = true;
      }
      // Unknown keys are tolerated for forward compatibility.
    });
    if (!have_pid) line_error(lineno, "missing field pid");
    if (!have_ts) line_error(lineno, "missing field ts");
    if (!have_platform) line_error(lineno, "missing field platform");
    if (!have_kind) line_error(lineno, "missing field kind");
    if (!have_text) line_error(lineno, "missing field text");
    if (!have_url) line_error(lineno, "missing field url");
    if (e.pid.empty()) line_error(lineno, "empty pid");
    if (!kind_matches_platform(e.kind, e.platform)) {
      line_error(lineno, "kind inconsistent with platform");
    }
    events.push_back(std::move(e));
  }
  return events;
}

std::vector<ActivityEvent> read_events_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return read_events(in);
}

}  // namespace logdrift

#include "logdrift/lexicon.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

namespace logdrift {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

[[noreturn]] void lexicon_error(std::size_t lineno, const std::string& msg) {
  throw std::runtime_error("lexicon line " + std::to_string(lineno) + ": " + msg);
}

}  // namespace

std::optional<std::size_t> Lexicon::category_index(std::string_view name) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i].name == name) return i;
  }
  return std::nullopt;
}

Lexicon load_lexicon(std::string_view document) {
  Lexicon lex;
  std::unordered_map<int, std::size_t> by_id;
  std::istringstream in{std::string(document)};
  std::string raw;
  std::size_t lineno = 0;
  int delimiters_seen = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line == "%") {
      ++delimiters_seen;
      continue;
    }
    if (delimiters_seen == 0) {
      lexicon_error(lineno, "expected '%' header delimiter before content");
    }
    auto fields = split_ws(line);
    if (delimiters_seen == 1) {
      // header block: "<id> <name>"
      if (fields.size() != 2) lexicon_error(lineno, "expected 'id name'");
      int id = 0;
      try {
        id = std::stoi(std::string(fields[0]));
      } catch (const std::exception&) {
        lexicon_error(lineno, "bad category id");
      }
      if (by_id.count(id)) lexicon_error(lineno, "duplicate category id");
      std::string name(fields[1]);
      if (lex.category_index(name)) lexicon_error(lineno, "duplicate category name");
      by_id[id] = lex.categories.size();
      lex.categories.push_back({id, std::move(name), {}, {}});
    } else {
      // pattern block: "<pattern> <id> [<id>...]"
      if (fields.size() < 2) lexicon_error(lineno, "expected 'pattern id [id...]'");
      std::string pattern = lower(fields[0]);
      if (pattern.empty()) lexicon_error(lineno, "empty pattern");
      auto star = pattern.find('*');
      bool is_stem = false;
      if (star != std::string::npos) {
        if (star != pattern.size() - 1) lexicon_error(lineno, "interior wildcard");
        pattern.pop_back();
        if (pattern.empty()) lexicon_error(lineno, "bare wildcard");
        is_stem = true;
      }
      for (std::size_t f = 1; f < fields.size(); ++f) {
        int id = 0;
        try {
          id = std::stoi(std::string(fields[f]));
        } catch (const std::exception&) {
          lexicon_error(lineno, "bad category id in pattern line");
        }
        auto it = by_id.find(id);
        if (it == by_id.end()) lexicon_error(lineno, "unknown category id");
        auto& cat = lex.categories[it->second];
        (is_stem ? cat.stems : cat.literals).push_back(pattern);
      }
    }
  }
  if (lex.categories.empty()) throw std::runtime_error("lexicon: no categories");
  for (const auto& cat : lex.categories) {
    if (cat.literals.empty() && cat.stems.empty()) {
      throw std::runtime_error("lexicon: empty category " + cat.name);
    }
  }
  return lex;
}

Lexicon load_lexicon_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_lexicon(ss.str());
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
      current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace {

// Per-token matcher: literal hash lookups plus a linear stem scan. Word
// lists here are tens of entries, so the scan is cheap.
struct LexiconMatcher {
  explicit LexiconMatcher(const Lexicon& lex) : lex_(lex) {
    for (std::size_t i = 0; i < lex.categories.size(); ++i) {
      for (const auto& w : lex.categories[i].literals) {
        literal_to_mask_[w] |= (std::uint64_t{1} << i);
      }
      for (const auto& s : lex.categories[i].stems) {
        stems_.emplace_back(s, std::uint64_t{1} << i);
      }
    }
  }

  std::uint64_t match_mask(const std::string& token) const {
    std::uint64_t mask = 0;
    if (auto it = literal_to_mask_.find(token); it != literal_to_mask_.end()) {
      mask |= it->second;
    }
    for (const auto& [stem, bit] : stems_) {
      if (token.size() >= stem.size() &&
          token.compare(0, stem.size(), stem) == 0) {
        mask |= bit;
      }
    }
    return mask;
  }

  const Lexicon& lex_;
  std::unordered_map<std::string, std::uint64_t> literal_to_mask_;
  std::vector<std::pair<std::string, std::uint64_t>> stems_;
};

}  // namespace

MatchCounts count_matches(const std::vector<std::string>& corpus,
                          const Lexicon& lexicon) {
  if (lexicon.categories.size() > 64) {
    throw std::runtime_error("count_matches: more than 64 categories");
  }
  LexiconMatcher matcher(lexicon);
  MatchCounts counts;
  counts.per_category.assign(lexicon.categories.size(), 0);
  for (const auto& text : corpus) {
    for (const auto& token : tokenize(text)) {
      ++counts.tokens;
      std::uint64_t mask = matcher.match_mask(token);
      while (mask) {
        const int i = std::countr_zero(mask);
        ++counts.per_category[static_cast<std::size_t>(i)];
        mask &= mask - 1;
      }
    }
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Offline provider
// ---------------------------------------------------------------------------

std::string url_host(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) return {};
  std::string_view rest = url.substr(scheme_end + 3);
  std::size_t end = rest.find_first_of("/?#");
  std::string_view authority = end == std::string_view::npos ? rest : rest.substr(0, end);
  if (auto at = authority.rfind('@'); at != std::string_view::npos) {
    authority = authority.substr(at + 1);
  }
  if (auto colon = authority.find(':'); colon != std::string_view::npos) {
    authority = authority.substr(0, colon);
  }
  return lower(authority);
}

void OfflineCategoryProvider::add_domains(const std::string& category,
                                          std::vector<std::string> domains) {
  auto& lists = categories_[category];
  for (auto& d : domains) lists.domains.push_back(lower(d));
}

void OfflineCategoryProvider::add_keywords(const std::string& category,
                                           std::vector<std::string> keywords) {
  auto& lists = categories_[category];
  for (auto& k : keywords) {
    std::string w = lower(k);
    if (!w.empty() && w.back() == '*') {
      w.pop_back();
      if (!w.empty()) lists.stem_keywords.push_back(std::move(w));
    } else if (!w.empty()) {
      lists.literal_keywords.push_back(std::move(w));
    }
  }
}

OfflineCategoryProvider OfflineCategoryProvider::from_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  OfflineCategoryProvider provider;
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("category list directory not found: " + dir);
  }
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& path : paths) {
    std::string ext = path.extension().string();
    if (ext != ".domains" && ext != ".keywords") continue;
    std::string category = path.stem().string();
    std::ifstream in(path);
    std::vector<std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
      auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      entries.emplace_back(t);
    }
    if (ext == ".domains") {
      provider.add_domains(category, std::move(entries));
    } else {
      provider.add_keywords(category, std::move(entries));
    }
  }
  return provider;
}

std::optional<std::set<std::string>> OfflineCategoryProvider::lookup(
    const ActivityEvent& e) const {
  std::set<std::string> tags;
  std::string host = e.url ? url_host(*e.url) : std::string();
  std::vector<std::string> tokens = tokenize(e.text);
  for (const auto& [category, lists] : categories_) {
    bool hit = false;
    if (!host.empty()) {
      for (const auto& d : lists.domains) {
        if (host == d || (host.size() > d.size() &&
                          host.compare(host.size() - d.size(), d.size(), d) == 0 &&
                          host[host.size() - d.size() - 1] == '.')) {
          hit = true;
          break;
        }
      }
    }
    if (!hit) {
      for (const auto& token : tokens) {
        for (const auto& k : lists.literal_keywords) {
          if (token == k) {
            hit = true;
            break;
          }
        }
        if (!hit) {
          for (const auto& s : lists.stem_keywords) {
            if (token.size() >= s.size() && token.compare(0, s.size(), s) == 0) {
              hit = true;
              break;
            }
          }
        }
        if (hit) break;
      }
    }
    if (hit) tags.insert(category);
  }
  return tags;
}

std::optional<std::set<std::string>> CompositeCategoryProvider::lookup(
    const ActivityEvent& e) const {
  std::set<std::string> tags;
  bool unresolved = false;
  for (const auto* p : providers_) {
    auto result = p->lookup(e);
    if (!result) {
      unresolved = true;
    } else {
      tags.insert(result->begin(), result->end());
    }
  }
  if (unresolved) return std::nullopt;
  return tags;
}

// ---------------------------------------------------------------------------
// YouTube URLs and remote metadata
// ---------------------------------------------------------------------------

namespace {

bool is_video_id_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '-' || c == '_';
}

std::string take_id(std::string_view s) {
  std::size_t n = 0;
  while (n < s.size() && is_video_id_char(s[n])) ++n;
  return std::string(s.substr(0, n));
}

bool is_youtube_host(std::string_view host) {
  return host == "youtu.be" || host == "youtube.com" ||
         (host.size() > 12 &&
          host.compare(host.size() - 12, 12, ".youtube.com") == 0);
}

}  // namespace

std::optional<std::string> video_id_from_url(std::string_view url) {
  std::string host = url_host(url);
  if (host.empty() || !is_youtube_host(host)) return std::nullopt;
  auto scheme_end = url.find("://");
  std::string_view rest = url.substr(scheme_end + 3);
  auto slash = rest.find('/');
  std::string_view path = slash == std::string_view::npos ? "" : rest.substr(slash);
  if (host == "youtu.be") {
    if (path.size() < 2) return std::nullopt;
    std::string id = take_id(path.substr(1));
    return id.empty() ? std::nullopt : std::optional(id);
  }
  for (std::string_view prefix : {"/embed/", "/shorts/", "/v/"}) {
    if (path.rfind(prefix, 0) == 0) {
      std::string id = take_id(path.substr(prefix.size()));
      return id.empty() ? std::nullopt : std::optional(id);
    }
  }
  if (path.rfind("/watch", 0) == 0) {
    auto q = path.find('?');
    if (q == std::string_view::npos) return std::nullopt;
    std::string_view query = path.substr(q + 1);
    while (!query.empty()) {
      auto amp = query.find('&');
      std::string_view pair = amp == std::string_view::npos ? query : query.substr(0, amp);
      if (pair.rfind("v=", 0) == 0) {
        std::string id = take_id(pair.substr(2));
        return id.empty() ? std::nullopt : std::optional(id);
      }
      if (amp == std::string_view::npos) break;
      query = query.substr(amp + 1);
    }
  }
  return std::nullopt;
}

MetadataCache::MetadataCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) continue;
    VideoMetadata m;
    m.id = obj.value("id", "");
    m.title = obj.value("title", "");
    m.category = obj.value("category", "");
    if (!m.id.empty()) entries_[m.id] = std::move(m);
  }
}

std::optional<VideoMetadata> MetadataCache::get(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void MetadataCache::put(const VideoMetadata& meta) {
  entries_[meta.id] = meta;
  std::ofstream out(path_, std::ios::app);
  if (!out) return;
  nlohmann::ordered_json obj;
  obj["id"] = meta.id;
  obj["title"] = meta.title;
  obj["category"] = meta.category;
  out << obj.dump() << "\n";
}

namespace {

std::string substitute(std::string templ, std::string_view tag, std::string_view value) {
  for (std::size_t pos = templ.find(tag); pos != std::string::npos;
       pos = templ.find(tag, pos + value.size())) {
    templ.replace(pos, tag.size(), value);
  }
  return templ;
}

std::mutex g_rate_mutex;
std::chrono::steady_clock::time_point g_last_request{};

void rate_limit(int min_interval_ms) {
  if (min_interval_ms <= 0) return;
  std::lock_guard<std::mutex> lock(g_rate_mutex);
  auto now = std::chrono::steady_clock::now();
  auto earliest = g_last_request + std::chrono::milliseconds(min_interval_ms);
  if (now < earliest) {
    std::this_thread::sleep_for(earliest - now);
    now = std::chrono::steady_clock::now();
  }
  g_last_request = now;
}

}  // namespace

std::optional<VideoMetadata> fetch_video_metadata(const std::string& video_id,
                                                  const RemoteProviderConfig& cfg,
                                                  MetadataCache& cache,
                                                  FetchStatus* status) {
  auto set_status = [&](FetchStatus s) {
    if (status) *status = s;
  };
  set_status(FetchStatus::ok);
  if (auto cached = cache.get(video_id)) return cached;
  std::string url = substitute(cfg.endpoint_template, "{id}", video_id);
  url = substitute(std::move(url), "{key}", cfg.api_key);
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    std::cerr << "metadata: bad endpoint template\n";
    set_status(FetchStatus::transport_error);
    return std::nullopt;
  }
  auto path_start = url.find('/', scheme_end + 3);
  std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
  rate_limit(cfg.min_request_interval_ms);
  httplib::Client client(origin);
  client.set_connection_timeout(5);
  client.set_read_timeout(5);
  auto res = client.Get(path);
  if (!res) {
    std::cerr << "metadata: transport failure for id " << video_id << "\n";
    set_status(FetchStatus::transport_error);
    return std::nullopt;
  }
  if (res->status != 200) {
    if (res->status != 404) {
      std::cerr << "metadata: status " << res->status << " for id " << video_id << "\n";
    }
    set_status(FetchStatus::not_found);
    return std::nullopt;
  }
  nlohmann::json obj = nlohmann::json::parse(res->body, nullptr, false);
  if (obj.is_discarded() || !obj.is_object() || !obj.contains("title") ||
      !obj.contains("category")) {
    std::cerr << "metadata: malformed response for id " << video_id << "\n";
    set_status(FetchStatus::bad_response);
    return std::nullopt;
  }
  VideoMetadata meta;
  meta.id = video_id;
  meta.title = obj["title"].get<std::string>();
  meta.category = obj["category"].get<std::string>();
  cache.put(meta);
  return meta;
}

std::optional<std::set<std::string>> RemoteCategoryProvider::lookup(
    const ActivityEvent& e) const {
  if (e.kind != EventKind::video_watch || !e.url) return std::set<std::string>{};
  auto id = video_id_from_url(*e.url);
  if (!id) return std::set<std::string>{};
  if (auto cached = cache_->get(*id)) {
    if (cached->category.empty()) return std::set<std::string>{};
    return std::set<std::string>{lower(cached->category)};
  }
  FetchStatus status = FetchStatus::ok;
  auto meta = fetch_video_metadata(*id, cfg_, *cache_, &status);
  if (!meta) {
    // Only transport problems leave the event unresolved; a missing or
    // malformed record is a definitive "no category".
    if (status == FetchStatus::transport_error) return std::nullopt;
    return std::set<std::string>{};
  }
  if (meta->category.empty()) return std::set<std::string>{};
  return std::set<std::string>{lower(meta->category)};
}

}  // namespace logdrift

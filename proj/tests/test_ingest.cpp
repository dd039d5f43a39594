#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "logdrift/ingest.hpp"
#include "oracles.hpp"

using namespace logdrift;

TEST_CASE("scrub_pii replaces the four PII classes") {
  auto email = scrub_pii("contact a@b.com now");
  CHECK(email.text == "contact [EMAIL] now");
  CHECK(email.report.email == 1);
  CHECK(email.report.total() == 1);

  CHECK(oracles::luhn("4111111111111111"));  // independent check of the fixture
  auto cc = scrub_pii("card 4111 1111 1111 1111");
  CHECK(cc.text == "card [CC]");
  CHECK(cc.report.credit_card == 1);
  CHECK(scrub_pii("4111111111111111").text == "[CC]");
  // Same digits failing Luhn are left alone.
  CHECK_FALSE(oracles::luhn("4111111111111112"));
  CHECK(scrub_pii("4111111111111112").text == "4111111111111112");

  auto ssn = scrub_pii("ssn 123-45-6789 ok");
  CHECK(ssn.text == "ssn [SSN] ok");
  CHECK(ssn.report.ssn == 1);

  CHECK(scrub_pii("call (585) 555-0142 today").text == "call [PHONE] today");
  CHECK(scrub_pii("call 585-555-0142").text == "call [PHONE]");
  CHECK(scrub_pii("call 5855550142").text == "call [PHONE]");
  CHECK(scrub_pii("call +1 585 555 0142").text == "call [PHONE]");

  auto clean = scrub_pii("no pii here");
  CHECK(clean.text == "no pii here");
  CHECK(clean.report.total() == 0);
}

TEST_CASE("scrub_pii avoids common false positives") {
  // Dates and timestamps survive.
  CHECK(scrub_pii("on 2020-03-14 at 03:09").text == "on 2020-03-14 at 03:09");
  // A digit run too long for a card is left alone.
  CHECK(scrub_pii("id 12345678901234567890123").text == "id 12345678901234567890123");
  // Email wins over the embedded digits.
  auto r = scrub_pii("4111111111111111@example.com");
  CHECK(r.text == "[EMAIL]");
}

TEST_CASE("scrub_pii is idempotent and leaves no matches behind") {
  std::mt19937_64 rng(11);
  const char* snippets[] = {
      "plain words",     "a@b.com",       "x.y+z@mail.example.org",
      "123-45-6789",     "5855550142",    "(212) 555-0199",
      "4111 1111 1111 1111", "378282246310005", "2020-03-14T00:00:00Z",
      "watch v=abc 123", "order 99",      "+1 212 555 0100",
  };
  std::uniform_int_distribution<int> pick(0, std::size(snippets) - 1);
  std::uniform_int_distribution<int> parts(1, 5);
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    int n = parts(rng);
    for (int i = 0; i < n; ++i) {
      if (i) text += ' ';
      text += snippets[pick(rng)];
    }
    auto once = scrub_pii(text);
    auto twice = scrub_pii(once.text);
    CHECK(twice.text == once.text);
    CHECK(twice.report.total() == 0);
  }
}

namespace {

const char* kSearchDoc = R"([
  {"header":"Search","title":"Searched for cats","time":"2020-02-01T13:45:12Z","products":["Search"]},
  {"header":"Search","title":"Visited example.org","titleUrl":"https://example.org","time":"2020-02-01T13:46:00Z"},
  {"header":"Search","title":"Used Search","time":"2020-02-01T13:47:00Z"},
  {"header":"Search","title":"Searched for email a@b.com","time":"2020-02-01T13:48:00Z"},
  {"header":"Search","title":"Searched for no time at all"}
])";

const char* kYoutubeDoc = R"([
  {"title":"Watched lecture 1","titleUrl":"https://www.youtube.com/watch?v=abc123","time":"2020-03-01T01:00:00Z","subtitles":[{"name":"Some Channel","url":"https://www.youtube.com/channel/xyz"}]},
  {"title":"Searched for exam prep","titleUrl":"https://www.youtube.com/results?search_query=exam+prep","time":"2020-03-01T01:05:00Z"},
  {"title":"Visited the ad page","time":"2020-03-01T01:06:00Z"}
])";

}  // namespace

TEST_CASE("parse_takeout_search maps titles to events") {
  ParseResult r = parse_takeout_search(kSearchDoc, "p1");
  REQUIRE(r.events.size() == 3);
  CHECK(r.events[0].kind == EventKind::query);
  CHECK(r.events[0].platform == Platform::search);
  CHECK(r.events[0].text == "cats");
  CHECK(r.events[0].ts == *parse_rfc3339("2020-02-01T13:45:12Z"));
  CHECK(!r.events[0].url);

  CHECK(r.events[1].kind == EventKind::url_visit);
  CHECK(r.events[1].url == "https://example.org");

  CHECK(r.events[2].text == "email [EMAIL]");
  CHECK(r.redactions.email == 1);

  CHECK(r.skipped == 1);  // "Used Search"
  REQUIRE(r.item_errors.size() == 1);
  CHECK(r.item_errors[0].item_index == 4);
  CHECK(r.item_errors[0].message == "missing time");
}

TEST_CASE("parse_takeout_youtube maps watches and searches") {
  ParseResult r = parse_takeout_youtube(kYoutubeDoc, "p2");
  REQUIRE(r.events.size() == 2);
  CHECK(r.events[0].kind == EventKind::video_watch);
  CHECK(r.events[0].platform == Platform::youtube);
  CHECK(r.events[0].text == "lecture 1");
  CHECK(r.events[0].url == "https://www.youtube.com/watch?v=abc123");
  CHECK(r.events[1].kind == EventKind::youtube_search);
  CHECK(r.events[1].text == "exam prep");
  CHECK(r.skipped == 1);  // unknown "Visited" prefix on youtube
}

TEST_CASE("takeout parsing edge cases") {
  CHECK(parse_takeout_search("[]", "p").events.empty());
  CHECK(parse_takeout_search("[]", "p").item_errors.empty());

  CHECK_THROWS_AS(parse_takeout_search("{\"not\":\"an array\"}", "p"),
                  TakeoutParseError);
  try {
    parse_takeout_search("[{\"title\":\"Searched for x\",", "p");
    FAIL("expected TakeoutParseError");
  } catch (const TakeoutParseError& e) {
    CHECK(e.byte_offset > 0);
  }

  // item with a bad timestamp is an item-level error
  ParseResult r = parse_takeout_search(
      R"([{"title":"Searched for x","time":"not a time"}])", "p");
  CHECK(r.events.empty());
  REQUIRE(r.item_errors.size() == 1);
  CHECK(r.item_errors[0].message.find("bad time") != std::string::npos);
}

TEST_CASE("parsing never fabricates events") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> n_items(0, 20);
  std::uniform_int_distribution<int> shape(0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    int n = n_items(rng);
    std::string doc = "[";
    for (int i = 0; i < n; ++i) {
      if (i) doc += ",";
      switch (shape(rng)) {
        case 0: doc += R"({"title":"Searched for q","time":"2020-02-01T00:00:00Z"})"; break;
        case 1: doc += R"({"title":"Visited x","titleUrl":"https://x.example"})"; break;
        case 2: doc += R"({"title":"Something else"})"; break;
        default: doc += R"({"header":"Search"})"; break;
      }
    }
    doc += "]";
    ParseResult r = parse_takeout_search(doc, "p");
    CHECK(r.events.size() <= static_cast<std::size_t>(n));
    for (const auto& e : r.events) {
      std::string why;
      CHECK_MESSAGE(validate_event(e, &why), why);
    }
  }
}

TEST_CASE("ndjson round trip") {
  std::vector<ActivityEvent> events = {
      {"p1", *parse_rfc3339("2020-02-01T10:00:00Z"), Platform::search,
       EventKind::query, "plain query", std::nullopt},
      {"p1", *parse_rfc3339("2020-02-01T11:00:00Z"), Platform::youtube,
       EventKind::video_watch, "title with \"quotes\" and \\slashes\\",
       std::string("https://www.youtube.com/watch?v=abc")},
      {"p1", *parse_rfc3339("2020-02-01T12:00:00Z"), Platform::search,
       EventKind::url_visit, "", std::string("https://example.org/a?b=c")},
  };
  std::ostringstream out;
  write_events(out, events);
  std::istringstream in(out.str());
  auto round = read_events(in);
  CHECK(round == events);
}

TEST_CASE("write_events sorts by participant then time") {
  std::vector<ActivityEvent> events = {
      {"p2", 2000, Platform::search, EventKind::query, "b", std::nullopt},
      {"p1", 3000, Platform::search, EventKind::query, "c", std::nullopt},
      {"p1", 1000, Platform::search, EventKind::query, "a", std::nullopt},
  };
  std::ostringstream out;
  write_events(out, events);
  std::istringstream in(out.str());
  auto round = read_events(in);
  REQUIRE(round.size() == 3);
  CHECK(round[0].pid == "p1");
  CHECK(round[0].ts == 1000);
  CHECK(round[1].ts == 3000);
  CHECK(round[2].pid == "p2");
}

TEST_CASE("ndjson round trip property over random events") {
  std::mt19937_64 rng(19);
  std::uniform_int_distribution<int> n_events(0, 40);
  std::uniform_int_distribution<UnixSeconds> ts(0, 2000000000LL);
  std::uniform_int_distribution<int> kind_pick(0, 3);
  const char* texts[] = {"", "hello world", "tabs\tand\nnewlines",
                         "unicode \xc3\xa9\xc3\xa0", "ctrl\x01char"};
  std::uniform_int_distribution<int> text_pick(0, std::size(texts) - 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ActivityEvent> events;
    int n = n_events(rng);
    for (int i = 0; i < n; ++i) {
      ActivityEvent e;
      e.pid = "p" + std::to_string(rng() % 3 + 1);
      e.ts = ts(rng);
      e.kind = static_cast<EventKind>(kind_pick(rng));
      e.platform = (e.kind == EventKind::query || e.kind == EventKind::url_visit)
                       ? Platform::search
                       : Platform::youtube;
      e.text = texts[text_pick(rng)];
      if (rng() % 2) e.url = "https://example.org/" + std::to_string(rng() % 100);
      events.push_back(std::move(e));
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const ActivityEvent& a, const ActivityEvent& b) {
                       return std::tie(a.pid, a.ts) < std::tie(b.pid, b.ts);
                     });
    std::ostringstream out;
    write_events(out, events);
    std::istringstream in(out.str());
    CHECK(read_events(in) == events);
  }
}

TEST_CASE("read_events reports schema violations with line numbers") {
  auto read_one = [](const std::string& text) {
    std::istringstream in(text);
    return read_events(in);
  };
  const std::string good =
      R"({"pid":"p1","ts":"2020-02-01T10:00:00Z","platform":"search","kind":"query","text":"x","url":null})";

  CHECK_THROWS_WITH(
      read_one(good + "\n" +
               R"({"pid":"p1","platform":"search","kind":"query","text":"x","url":null})"),
      "line 2: missing field ts");
  CHECK_THROWS_WITH(read_one("{bad json"), doctest::Contains("line 1: malformed JSON"));
  CHECK_THROWS_WITH(
      read_one(R"({"pid":"p1","ts":"nope","platform":"search","kind":"query","text":"x","url":null})"),
      doctest::Contains("bad ts"));
  CHECK_THROWS_WITH(
      read_one(R"({"pid":"p1","ts":"2020-02-01T10:00:00Z","platform":"search","kind":"video_watch","text":"x","url":null})"),
      doctest::Contains("inconsistent"));
  CHECK_THROWS_WITH(
      read_one(R"({"pid":"p1","ts":"2020-02-01T10:00:00Z","platform":"search","kind":"query","text":null,"url":null})"),
      doctest::Contains("must be a string"));
  CHECK(read_one(good + "\n\n" + good).size() == 2);
}

#include "logdrift/timeutil.hpp"

#include <cctype>
#include <cstdio>

namespace logdrift {

namespace {

// civil_from_days, counterpart of days_from_civil.
void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

bool read_fixed_uint(std::string_view s, size_t pos, size_t len, unsigned& out) {
  if (pos + len > s.size()) return false;
  unsigned v = 0;
  for (size_t i = 0; i < len; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<unsigned>(c - '0');
  }
  out = v;
  return true;
}

bool valid_date(unsigned month, unsigned day) {
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

// Parses "YYYY-MM-DDTHH:MM" at the front of s; returns chars consumed or 0.
size_t parse_date_hhmm(std::string_view s, CivilDateTime& c) {
  unsigned y4 = 0, mo = 0, dy = 0, hh = 0, mi = 0;
  if (!read_fixed_uint(s, 0, 4, y4) || s.size() < 16) return 0;
  if (s[4] != '-' || !read_fixed_uint(s, 5, 2, mo)) return 0;
  if (s[7] != '-' || !read_fixed_uint(s, 8, 2, dy)) return 0;
  if (s[10] != 'T' && s[10] != 't' && s[10] != ' ') return 0;
  if (!read_fixed_uint(s, 11, 2, hh)) return 0;
  if (s[13] != ':' || !read_fixed_uint(s, 14, 2, mi)) return 0;
  if (!valid_date(mo, dy) || hh > 23 || mi > 59) return 0;
  c.year = y4;
  c.month = mo;
  c.day = dy;
  c.hour = hh;
  c.minute = mi;
  c.second = 0;
  return 16;
}

}  // namespace

CivilDateTime civil_from_unix(UnixSeconds ts) {
  std::int64_t days = ts / kSecondsPerDay;
  std::int64_t rem = ts % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    --days;
  }
  CivilDateTime c;
  civil_from_days(days, c.year, c.month, c.day);
  c.hour = static_cast<unsigned>(rem / 3600);
  c.minute = static_cast<unsigned>((rem / 60) % 60);
  c.second = static_cast<unsigned>(rem % 60);
  return c;
}

UnixSeconds unix_from_civil(const CivilDateTime& c) {
  return days_from_civil(c.year, c.month, c.day) * kSecondsPerDay +
         c.hour * 3600LL + c.minute * 60LL + c.second;
}

std::optional<UnixSeconds> parse_rfc3339(std::string_view s) {
  CivilDateTime c;
  size_t pos = parse_date_hhmm(s, c);
  if (pos == 0) return std::nullopt;
  unsigned sec = 0;
  if (pos < s.size() && s[pos] == ':') {
    if (!read_fixed_uint(s, pos + 1, 2, sec) || sec > 60) return std::nullopt;
    pos += 3;
  }
  c.second = sec == 60 ? 59 : sec;  // fold leap second
  // Optional fractional seconds, truncated.
  if (pos < s.size() && s[pos] == '.') {
    size_t digits = 0;
    ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      ++pos;
      ++digits;
    }
    if (digits == 0) return std::nullopt;
  }
  if (pos >= s.size()) return std::nullopt;  // zone designator required
  UnixSeconds base = unix_from_civil(c);
  char zone = s[pos];
  if (zone == 'Z' || zone == 'z') {
    return pos + 1 == s.size() ? std::optional<UnixSeconds>(base) : std::nullopt;
  }
  if (zone != '+' && zone != '-') return std::nullopt;
  unsigned oh = 0, om = 0;
  if (pos + 6 != s.size()) return std::nullopt;
  if (!read_fixed_uint(s, pos + 1, 2, oh) || s[pos + 3] != ':' ||
      !read_fixed_uint(s, pos + 4, 2, om) || oh > 23 || om > 59) {
    return std::nullopt;
  }
  std::int64_t offset = (oh * 60LL + om) * 60;
  return zone == '+' ? base - offset : base + offset;
}

std::string format_rfc3339_utc(UnixSeconds ts) {
  CivilDateTime c = civil_from_unix(ts);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02u:%02u:%02uZ",
                static_cast<long long>(c.year), c.month, c.day, c.hour,
                c.minute, c.second);
  return buf;
}

std::optional<UnixSeconds> parse_local_datetime(std::string_view s) {
  CivilDateTime c;
  size_t pos = parse_date_hhmm(s, c);
  if (pos == 0) return std::nullopt;
  if (pos < s.size()) {
    unsigned sec = 0;
    if (s[pos] != ':' || !read_fixed_uint(s, pos + 1, 2, sec) || sec > 59 ||
        pos + 3 != s.size()) {
      return std::nullopt;
    }
    c.second = sec;
  }
  return unix_from_civil(c);
}

std::optional<int> parse_clock_minutes(std::string_view s) {
  unsigned hh = 0, mm = 0;
  if (s.size() != 5 || s[2] != ':') return std::nullopt;
  if (!read_fixed_uint(s, 0, 2, hh) || !read_fixed_uint(s, 3, 2, mm)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59) return std::nullopt;
  return static_cast<int>(hh * 60 + mm);
}

std::optional<int> parse_utc_offset_minutes(std::string_view s) {
  if (s.size() != 6 || (s[0] != '+' && s[0] != '-')) return std::nullopt;
  auto mins = parse_clock_minutes(s.substr(1));
  if (!mins) return std::nullopt;
  return s[0] == '+' ? *mins : -*mins;
}

}  // namespace logdrift

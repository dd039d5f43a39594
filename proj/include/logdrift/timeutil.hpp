#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace logdrift {

// Unix time in whole seconds. All event timestamps are stored in UTC;
// local wall time is derived with a fixed per-participant minute offset.
using UnixSeconds = std::int64_t;

constexpr std::int64_t kSecondsPerDay = 86400;
constexpr std::int64_t kSecondsPerHour = 3600;

// Days since 1970-01-01 for a proleptic Gregorian civil date
// (Howard Hinnant's algorithm, valid far beyond any activity log).
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDateTime {
  std::int64_t year = 1970;
  unsigned month = 1;
  unsigned day = 1;
  unsigned hour = 0;
  unsigned minute = 0;
  unsigned second = 0;
};

CivilDateTime civil_from_unix(UnixSeconds ts);
UnixSeconds unix_from_civil(const CivilDateTime& c);

// Parses an RFC 3339 timestamp ("2020-03-14T03:09:18Z",
// "2020-03-14T03:09:18.036Z", "2020-03-14T03:09:18+05:30").
// Fractional seconds are truncated. Returns nullopt on any syntax error.
std::optional<UnixSeconds> parse_rfc3339(std::string_view s);

// Renders a UTC timestamp as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_rfc3339_utc(UnixSeconds ts);

// Parses a zone-less local date-time "YYYY-MM-DDTHH:MM[:SS]" into seconds
// on the local wall clock (same epoch arithmetic, no offset applied).
std::optional<UnixSeconds> parse_local_datetime(std::string_view s);

// Parses "HH:MM" into minutes since local midnight.
std::optional<int> parse_clock_minutes(std::string_view s);

// Parses a "+HH:MM" / "-HH:MM" UTC offset into signed minutes.
std::optional<int> parse_utc_offset_minutes(std::string_view s);

// Floor modulo: result is always in [0, m).
constexpr std::int64_t floor_mod(std::int64_t x, std::int64_t m) {
  std::int64_t r = x % m;
  return r < 0 ? r + m : r;
}

}  // namespace logdrift

#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "hybridq/error.hpp"

namespace hybridq {

// Seconds since 1970-01-01T00:00:00, no time zone arithmetic.
using EpochSeconds = std::int64_t;

inline constexpr EpochSeconds kQuarterHour = 15 * 60;
inline constexpr EpochSeconds kDay = 24 * 3600;
inline constexpr std::int64_t kStepsPerDay = kDay / kQuarterHour;

namespace detail {

inline int parse_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) throw InputError("truncated timestamp '" + std::string(text) + "'");
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') throw InputError("malformed timestamp '" + std::string(text) + "'");
    value = value * 10 + (c - '0');
  }
  return value;
}

}  // namespace detail

// Accepts "YYYY-MM-DDTHH:MM[:SS]" with 'T' or ' ' separator and an optional
// trailing 'Z'. Date-only "YYYY-MM-DD" is midnight.
inline EpochSeconds parse_iso8601(std::string_view text) {
  while (!text.empty() && (text.back() == 'Z' || text.back() == ' ' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  using detail::parse_digits;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
    throw InputError("malformed timestamp '" + std::string(text) + "'");
  }
  const int y = parse_digits(text, 0, 4);
  const int mo = parse_digits(text, 5, 2);
  const int d = parse_digits(text, 8, 2);
  int hh = 0, mm = 0, ss = 0;
  if (text.size() > 10) {
    if ((text[10] != 'T' && text[10] != ' ') || text.size() < 16 || text[13] != ':') {
      throw InputError("malformed timestamp '" + std::string(text) + "'");
    }
    hh = parse_digits(text, 11, 2);
    mm = parse_digits(text, 14, 2);
    if (text.size() > 16) {
      if (text[16] != ':' || text.size() != 19) {
        throw InputError("malformed timestamp '" + std::string(text) + "'");
      }
      ss = parse_digits(text, 17, 2);
    }
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) {
    throw InputError("invalid calendar timestamp '" + std::string(text) + "'");
  }
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<EpochSeconds>(days) * kDay + hh * 3600 + mm * 60 + ss;
}

inline std::string format_iso8601(EpochSeconds t) {
  const auto days = std::chrono::floor<std::chrono::days>(std::chrono::sys_seconds{std::chrono::seconds{t}});
  const std::chrono::year_month_day ymd{days};
  const EpochSeconds rem = t - days.time_since_epoch().count() * kDay;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
  return buf;
}

struct CalendarInfo {
  int month;        // 1..12
  int weekday;      // 0 = Sunday
  int hour;         // 0..23
  int day_of_year;  // 0-based
};

inline CalendarInfo calendar(EpochSeconds t) {
  using namespace std::chrono;
  const auto days = floor<std::chrono::days>(sys_seconds{seconds{t}});
  const year_month_day ymd{days};
  const weekday wd{days};
  const auto jan1 = sys_days{ymd.year() / January / 1};
  const EpochSeconds rem = t - days.time_since_epoch().count() * kDay;
  return {static_cast<int>(static_cast<unsigned>(ymd.month())), static_cast<int>(wd.c_encoding()),
          static_cast<int>(rem / 3600), static_cast<int>((days - jan1).count())};
}

}  // namespace hybridq

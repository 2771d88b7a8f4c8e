#pragma once

// UTC instants as seconds since the Unix epoch, ISO-8601 parsing/formatting
// and calendar-month labels.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "smstat/error.hpp"

namespace smstat {

/// Seconds since 1970-01-01T00:00:00Z (fractional part allowed).
using Instant = double;

inline constexpr double seconds_per_day = 86400.0;

namespace detail {

inline bool read_digits(std::string_view s, std::size_t& pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  pos += n;
  out = v;
  return true;
}

}  // namespace detail

/// Accepts YYYY-MM-DD, YYYY-MM-DDTHH:MM[:SS[.fff]] with optional Z or
/// +HH:MM / -HH:MM offset (a space may replace the T). No offset means UTC.
inline Instant parse_iso8601(std::string_view s) {
  using namespace std::chrono;
  auto fail = [&]() -> Instant { throw ParseError("invalid ISO-8601 timestamp '" + std::string(s) + "'"); };
  std::size_t pos = 0;
  int y = 0, mo = 0, d = 0, hh = 0, mi = 0, ss = 0;
  if (!detail::read_digits(s, pos, 4, y) || pos >= s.size() || s[pos++] != '-') return fail();
  if (!detail::read_digits(s, pos, 2, mo) || pos >= s.size() || s[pos++] != '-') return fail();
  if (!detail::read_digits(s, pos, 2, d)) return fail();
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return fail();
  double frac = 0.0;
  int offset_s = 0;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ') return fail();
    ++pos;
    if (!detail::read_digits(s, pos, 2, hh) || pos >= s.size() || s[pos++] != ':') return fail();
    if (!detail::read_digits(s, pos, 2, mi)) return fail();
    if (pos < s.size() && s[pos] == ':') {
      ++pos;
      if (!detail::read_digits(s, pos, 2, ss)) return fail();
      if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
        ++pos;
        double scale = 0.1;
        const std::size_t start = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
          frac += (s[pos] - '0') * scale;
          scale /= 10.0;
          ++pos;
        }
        if (pos == start) return fail();
      }
    }
    if (hh > 23 || mi > 59 || ss > 60) return fail();
    if (pos < s.size()) {
      if (s[pos] == 'Z' || s[pos] == 'z') {
        ++pos;
      } else if (s[pos] == '+' || s[pos] == '-') {
        const int sign = s[pos] == '+' ? 1 : -1;
        ++pos;
        int oh = 0, om = 0;
        if (!detail::read_digits(s, pos, 2, oh)) return fail();
        if (pos < s.size() && s[pos] == ':') ++pos;
        if (!detail::read_digits(s, pos, 2, om)) return fail();
        offset_s = sign * (oh * 3600 + om * 60);
      } else {
        return fail();
      }
    }
    if (pos != s.size()) return fail();
  }
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return static_cast<double>(days_since_epoch) * seconds_per_day + hh * 3600.0 + mi * 60.0 + ss + frac - offset_s;
}

/// Whole-second UTC rendering, e.g. 2020-01-31T23:59:59Z.
inline std::string format_iso8601(Instant t) {
  using namespace std::chrono;
  const auto whole = static_cast<std::int64_t>(std::floor(t));
  const auto day_count = static_cast<std::int64_t>(std::floor(static_cast<double>(whole) / seconds_per_day));
  const year_month_day ymd{sys_days{days{day_count}}};
  const std::int64_t sod = whole - day_count * 86400;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(sod / 3600),
                static_cast<int>((sod / 60) % 60), static_cast<int>(sod % 60));
  return buf;
}

/// UTC calendar month of an instant as "YYYY-MM".
inline std::string month_label(Instant t) {
  using namespace std::chrono;
  const auto day_count = static_cast<std::int64_t>(std::floor(t / seconds_per_day));
  const year_month_day ymd{sys_days{days{day_count}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()));
  return buf;
}

/// First instant of the month `offset` months after "YYYY-MM".
inline Instant month_start(std::string_view label, int offset = 0) {
  using namespace std::chrono;
  std::size_t pos = 0;
  int y = 0, m = 0;
  if (!detail::read_digits(label, pos, 4, y) || pos >= label.size() || label[pos++] != '-' ||
      !detail::read_digits(label, pos, 2, m) || pos != label.size() || m < 1 || m > 12)
    throw ParseError("invalid month label '" + std::string(label) + "'");
  const year_month ym = year_month{year{y}, month{static_cast<unsigned>(m)}} + months{offset};
  return static_cast<double>(sys_days{ym / 1}.time_since_epoch().count()) * seconds_per_day;
}

}  // namespace smstat

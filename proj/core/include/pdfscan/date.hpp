#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>

#include "pdfscan/errors.hpp"

namespace pdfscan {

// Calendar date with civil-day arithmetic (proleptic Gregorian).
// Kept deliberately tiny; only what manifests and the corpus generator need.
struct Date {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31

  auto operator<=>(const Date&) const = default;

  // Days since 1970-01-01 (may be negative).
  std::int64_t serial() const;
  static Date from_serial(std::int64_t days);

  // Strict ISO-8601 (YYYY-MM-DD).
  static Date parse(const std::string& text);
  std::string to_string() const;
};

inline std::int64_t Date::serial() const {
  // Howard Hinnant's days_from_civil.
  std::int64_t y = year;
  const std::int64_t m = month;
  const std::int64_t d = day;
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const std::int64_t yoe = y - era * 400;
  const std::int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

inline Date Date::from_serial(std::int64_t days) {
  std::int64_t z = days + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = yoe + era * 400;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  const std::int64_t d = doy - (153 * mp + 2) / 5 + 1;
  const std::int64_t m = mp + (mp < 10 ? 3 : -9);
  return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m),
              static_cast<int>(d)};
}

inline Date Date::parse(const std::string& text) {
  const auto fail = [&] {
    throw ValidationError("invalid ISO-8601 date: '" + text + "'");
  };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') fail();
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (text[i] < '0' || text[i] > '9') fail();
  }
  Date d;
  d.year = std::stoi(text.substr(0, 4));
  d.month = std::stoi(text.substr(5, 2));
  d.day = std::stoi(text.substr(8, 2));
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) fail();
  // Round-trip through serial form to reject e.g. Feb 30.
  if (Date::from_serial(d.serial()) != d) fail();
  return d;
}

inline std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

}  // namespace pdfscan

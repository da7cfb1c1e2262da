#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace xsig {

/// Proleptic Gregorian calendar date.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  auto operator<=>(const Date&) const = default;

  /// Strict `YYYY-MM-DD`; nullopt on any deviation or impossible date.
  static std::optional<Date> parse(std::string_view text);
  std::string iso() const;

  /// Days since 1970-01-01.
  long days_since_epoch() const;
  static Date from_days_since_epoch(long days);
};

bool is_valid_date(int year, int month, int day);

}  // namespace xsig

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace lifemine {

// Local civil datetime at minute precision. No timezone handling: timestamps
// are treated as already localized by data preparation.
struct CivilDateTime {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  int hour = 0;   // 0..23
  int minute = 0; // 0..59

  auto operator<=>(const CivilDateTime&) const = default;

  // Days since 1970-01-01 of the civil date (proleptic Gregorian).
  std::int64_t days_since_epoch() const;
  std::int64_t minutes_since_epoch() const;

  // 0 = Monday ... 6 = Sunday.
  int day_of_week() const;
  bool is_weekend() const { return day_of_week() >= 5; }

  // "YYYY-MM-DDTHH:MM"
  std::string to_string() const;

  // Strict parse of the format above, with calendar validation.
  static std::optional<CivilDateTime> parse(std::string_view s);

  // Same-time-of-day datetime `days` after this one.
  CivilDateTime add_days(std::int64_t days) const;

  // Inverse of days_since_epoch, at midnight.
  static CivilDateTime from_days(std::int64_t days);
};

// "YYYY-MM-DD" convenience used by config files.
std::optional<CivilDateTime> parse_civil_date(std::string_view s);

}  // namespace lifemine

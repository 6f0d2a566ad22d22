#include "lifemine/time.hpp"

#include <cstdio>

namespace lifemine {

namespace {

// Howard Hinnant's civil calendar algorithms.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

bool is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

int days_in_month(int y, int m) {
  static const int dm[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return dm[m - 1];
}

bool parse_fixed_int(std::string_view s, size_t pos, size_t len, int& out) {
  int v = 0;
  for (size_t i = pos; i < pos + len; ++i) {
    if (i >= s.size() || s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

}  // namespace

std::int64_t CivilDateTime::days_since_epoch() const {
  return days_from_civil(year, month, day);
}

std::int64_t CivilDateTime::minutes_since_epoch() const {
  return days_since_epoch() * 1440 + hour * 60 + minute;
}

int CivilDateTime::day_of_week() const {
  // 1970-01-01 was a Thursday (=3 in Monday-based indexing).
  std::int64_t d = days_since_epoch();
  return static_cast<int>(((d % 7) + 7 + 3) % 7);
}

std::string CivilDateTime::to_string() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d", year, month, day,
                hour, minute);
  return buf;
}

std::optional<CivilDateTime> CivilDateTime::parse(std::string_view s) {
  // YYYY-MM-DDTHH:MM
  if (s.size() != 16 || s[4] != '-' || s[7] != '-' || s[10] != 'T' ||
      s[13] != ':')
    return std::nullopt;
  CivilDateTime t;
  if (!parse_fixed_int(s, 0, 4, t.year) || !parse_fixed_int(s, 5, 2, t.month) ||
      !parse_fixed_int(s, 8, 2, t.day) || !parse_fixed_int(s, 11, 2, t.hour) ||
      !parse_fixed_int(s, 14, 2, t.minute))
    return std::nullopt;
  if (t.month < 1 || t.month > 12) return std::nullopt;
  if (t.day < 1 || t.day > days_in_month(t.year, t.month)) return std::nullopt;
  if (t.hour > 23 || t.minute > 59) return std::nullopt;
  return t;
}

CivilDateTime CivilDateTime::add_days(std::int64_t days) const {
  CivilDateTime t = from_days(days_since_epoch() + days);
  t.hour = hour;
  t.minute = minute;
  return t;
}

CivilDateTime CivilDateTime::from_days(std::int64_t days) {
  CivilDateTime t;
  civil_from_days(days, t.year, t.month, t.day);
  t.hour = 0;
  t.minute = 0;
  return t;
}

std::optional<CivilDateTime> parse_civil_date(std::string_view s) {
  if (s.size() != 10) return std::nullopt;
  std::string full(s);
  full += "T00:00";
  return CivilDateTime::parse(full);
}

}  // namespace lifemine

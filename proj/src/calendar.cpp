#include "bibo/domain/calendar.hpp"

#include <cinttypes>
#include <cstdio>
#include <ctime>

namespace bibo {

bool is_leap_year(int year) {
  return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

static int days_in_month(int year, int month) {
  static const int table[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2 && is_leap_year(year)) return 29;
  return table[month - 1];
}

bool valid_date(const Date& d) {
  return d.month >= 1 && d.month <= 12 && d.day >= 1 &&
         d.day <= days_in_month(d.year, d.month);
}

Outcome<int> age_of(const Date& birth_date, const Date& at) {
  if (!valid_date(birth_date) || !valid_date(at)) {
    return err(Errc::invalid_input, "invalid date");
  }
  if (at < birth_date) {
    return err(Errc::invalid_input, "birth_date in the future");
  }
  // Effective birthday in the target year; Feb-29 shifts to Mar-1 when
  // the target year is not a leap year.
  int bm = birth_date.month;
  int bd = birth_date.day;
  if (bm == 2 && bd == 29 && !is_leap_year(at.year)) {
    bm = 3;
    bd = 1;
  }
  int age = at.year - birth_date.year;
  if (at.month < bm || (at.month == bm && at.day < bd)) --age;
  return age;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

Outcome<Date> parse_date(const std::string& s) {
  Date d;
  if (std::sscanf(s.c_str(), "%d-%d-%d", &d.year, &d.month, &d.day) != 3 ||
      !valid_date(d)) {
    return err(Errc::invalid_input, "bad date: " + s);
  }
  return d;
}

std::string format_rfc3339(Timestamp ts) {
  std::time_t t = static_cast<std::time_t>(ts);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  return buf;
}

Outcome<Timestamp> parse_rfc3339(const std::string& s) {
  std::tm tm{};
  int y, mo, d, h, mi, sec;
  if (std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%dZ", &y, &mo, &d, &h, &mi,
                  &sec) != 6) {
    return err(Errc::invalid_input, "bad timestamp: " + s);
  }
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = sec;
  return static_cast<Timestamp>(timegm(&tm));
}

Date date_of(Timestamp ts) {
  std::time_t t = static_cast<std::time_t>(ts);
  std::tm tm{};
  gmtime_r(&t, &tm);
  return Date{tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday};
}

}  // namespace bibo

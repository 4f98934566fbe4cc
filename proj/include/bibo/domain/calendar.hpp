#pragma once

#include <string>

#include "bibo/domain/errors.hpp"
#include "bibo/domain/types.hpp"

namespace bibo {

/// Proleptic Gregorian calendar date.
struct Date {
  int year{1970};
  int month{1};  // 1..12
  int day{1};    // 1..31

  bool operator==(const Date&) const = default;
  auto operator<=>(const Date&) const = default;
};

bool is_leap_year(int year);
bool valid_date(const Date& d);

/// Completed calendar years between birth_date and at. A Feb-29 birthday
/// completes on Mar-1 in non-leap years.
Outcome<int> age_of(const Date& birth_date, const Date& at);

std::string format_date(const Date& d);               // YYYY-MM-DD
Outcome<Date> parse_date(const std::string& s);

/// RFC-3339 UTC, second precision: 2021-05-01T08:17:42Z.
std::string format_rfc3339(Timestamp ts);
Outcome<Timestamp> parse_rfc3339(const std::string& s);

/// Calendar date of a timestamp (UTC).
Date date_of(Timestamp ts);

/// Truncate a timestamp to the start of its minute.
inline Timestamp truncate_to_minute(Timestamp ts) {
  return ts - ((ts % 60) + 60) % 60;
}

}  // namespace bibo

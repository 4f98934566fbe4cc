#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bibo/domain/calendar.hpp"
#include "bibo/domain/entities.hpp"
#include "bibo/domain/errors.hpp"

namespace bibo::privacy {

/// Disjoint age buckets covering all ages >= 0. The "0-14" bucket exists
/// for minors; the others follow the reference bus-usage breakdown.
inline const std::vector<std::string>& age_range_labels() {
  static const std::vector<std::string> labels = {
      "0-14", "15-24", "25-34", "35-49", "50-64", "65-79", "80+"};
  return labels;
}

Outcome<std::string> age_to_range(int age);

/// Storage-only projection of a completed session: exactly these six
/// fields, nothing identifying.
struct AnonymizedSessionRecord {
  Gender gender{Gender::unspecified};
  std::string age_range;
  GeoPoint start_pos;  // coarsened to 3 decimals
  GeoPoint end_pos;    // coarsened to 3 decimals
  Timestamp start_ts{0};  // truncated to the minute
  Timestamp end_ts{0};    // truncated to the minute
};

/// Coordinates to 3 decimal places (~111 m), timestamps to the minute,
/// age to its bucket; every other session attribute is dropped.
Outcome<AnonymizedSessionRecord> generalize(const User& user,
                                            const UserSession& session,
                                            Timestamp now);

/// JSON with keys gender, age_range, start_lat, start_lon, end_lat,
/// end_lon, start_ts, end_ts (RFC-3339, minute precision).
std::string to_json(const AnonymizedSessionRecord& rec);
Outcome<AnonymizedSessionRecord> record_from_json(const std::string& json);

/// Estimated riders in a population bucket, round-half-up.
Outcome<std::int64_t> estimate_bus_users(std::int64_t inhabitants,
                                         double usage_rate);

struct KAnonymityReport {
  std::map<std::string, std::int64_t> group_counts;
  std::int64_t k_min{0};
  std::int64_t k_max{0};
  double k_avg{0.0};
  std::int64_t k_avg_rounded{0};
};

/// Quasi-identifier fields by name; defaults to (age_range).
struct QuasiIdentifier {
  std::vector<std::string> fields{"age_range"};
};

Outcome<KAnonymityReport> k_report(
    const std::map<std::string, std::int64_t>& group_counts);
Outcome<KAnonymityReport> k_report(
    const std::vector<AnonymizedSessionRecord>& records,
    const QuasiIdentifier& quasi);

/// CSV with columns group,count followed by a summary row.
std::string k_report_csv(const KAnonymityReport& report);

}  // namespace bibo::privacy

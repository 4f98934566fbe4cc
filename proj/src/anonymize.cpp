#include "bibo/privacy/anonymize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace bibo::privacy {

Outcome<std::string> age_to_range(int age) {
  if (age < 0) return err(Errc::invalid_input, "negative age");
  if (age <= 14) return std::string("0-14");
  if (age <= 24) return std::string("15-24");
  if (age <= 34) return std::string("25-34");
  if (age <= 49) return std::string("35-49");
  if (age <= 64) return std::string("50-64");
  if (age <= 79) return std::string("65-79");
  return std::string("80+");
}

static double round3(double x) {
  return std::round(x * 1000.0) / 1000.0;
}

Outcome<AnonymizedSessionRecord> generalize(const User& user,
                                            const UserSession& session,
                                            Timestamp now) {
  auto age = age_of(user.birth_date, date_of(now));
  if (!age.ok()) return age.error();
  auto range = age_to_range(age.value());
  if (!range.ok()) return range.error();

  AnonymizedSessionRecord rec;
  rec.gender = user.gender;
  rec.age_range = range.value();
  rec.start_pos = GeoPoint{round3(session.start_pos.lat),
                           round3(session.start_pos.lon)};
  const GeoPoint end = session.end_pos.value_or(session.start_pos);
  rec.end_pos = GeoPoint{round3(end.lat), round3(end.lon)};
  rec.start_ts = truncate_to_minute(session.start_ts);
  rec.end_ts = truncate_to_minute(session.end_ts.value_or(session.start_ts));
  return rec;
}

std::string to_json(const AnonymizedSessionRecord& rec) {
  nlohmann::ordered_json j;
  j["gender"] = to_string(rec.gender);
  j["age_range"] = rec.age_range;
  j["start_lat"] = rec.start_pos.lat;
  j["start_lon"] = rec.start_pos.lon;
  j["end_lat"] = rec.end_pos.lat;
  j["end_lon"] = rec.end_pos.lon;
  j["start_ts"] = format_rfc3339(rec.start_ts);
  j["end_ts"] = format_rfc3339(rec.end_ts);
  return j.dump();
}

Outcome<AnonymizedSessionRecord> record_from_json(const std::string& json) {
  nlohmann::json j = nlohmann::json::parse(json, nullptr, false);
  if (j.is_discarded()) return err(Errc::invalid_input, "bad record json");
  // Schema assertion: exactly the six generalized fields (eight keys,
  // coordinates split into lat/lon), nothing more, nothing less.
  static const char* kKeys[] = {"gender",  "age_range", "start_lat",
                                "start_lon", "end_lat",   "end_lon",
                                "start_ts", "end_ts"};
  if (!j.is_object() || j.size() != std::size(kKeys)) {
    return err(Errc::invalid_input, "record schema violation");
  }
  for (const char* key : kKeys) {
    if (!j.contains(key)) {
      return err(Errc::invalid_input, "record schema violation");
    }
  }
  AnonymizedSessionRecord rec;
  const std::string g = j.value("gender", "unspecified");
  rec.gender = g == "female" ? Gender::female
             : g == "male"   ? Gender::male
                             : Gender::unspecified;
  rec.age_range = j.value("age_range", "");
  rec.start_pos = {j.value("start_lat", 0.0), j.value("start_lon", 0.0)};
  rec.end_pos = {j.value("end_lat", 0.0), j.value("end_lon", 0.0)};
  auto s = parse_rfc3339(j.value("start_ts", ""));
  auto e = parse_rfc3339(j.value("end_ts", ""));
  if (!s.ok() || !e.ok()) return err(Errc::invalid_input, "bad timestamps");
  rec.start_ts = s.value();
  rec.end_ts = e.value();
  return rec;
}

Outcome<std::int64_t> estimate_bus_users(std::int64_t inhabitants,
                                         double usage_rate) {
  if (inhabitants < 0) return err(Errc::invalid_input, "negative population");
  if (usage_rate < 0.0 || usage_rate > 1.0) {
    return err(Errc::invalid_input, "rate outside [0,1]");
  }
  return round_half_up(static_cast<double>(inhabitants) * usage_rate);
}

Outcome<KAnonymityReport> k_report(
    const std::map<std::string, std::int64_t>& group_counts) {
  if (group_counts.empty()) {
    return err(Errc::invalid_input, "undefined report: no groups");
  }
  KAnonymityReport rep;
  rep.group_counts = group_counts;
  rep.k_min = std::numeric_limits<std::int64_t>::max();
  std::int64_t total = 0;
  for (const auto& [group, count] : group_counts) {
    rep.k_min = std::min(rep.k_min, count);
    rep.k_max = std::max(rep.k_max, count);
    total += count;
  }
  rep.k_avg = static_cast<double>(total) /
              static_cast<double>(group_counts.size());
  rep.k_avg_rounded = round_half_up(rep.k_avg);
  return rep;
}

static std::string quasi_key(const AnonymizedSessionRecord& rec,
                             const QuasiIdentifier& quasi) {
  std::ostringstream key;
  bool first = true;
  for (const auto& field : quasi.fields) {
    if (!first) key << "|";
    first = false;
    if (field == "age_range") {
      key << rec.age_range;
    } else if (field == "gender") {
      key << to_string(rec.gender);
    } else if (field == "start_pos") {
      key << rec.start_pos.lat << "," << rec.start_pos.lon;
    } else if (field == "end_pos") {
      key << rec.end_pos.lat << "," << rec.end_pos.lon;
    } else {
      key << "?";
    }
  }
  return key.str();
}

Outcome<KAnonymityReport> k_report(
    const std::vector<AnonymizedSessionRecord>& records,
    const QuasiIdentifier& quasi) {
  if (records.empty()) {
    return err(Errc::invalid_input, "undefined report: no records");
  }
  std::map<std::string, std::int64_t> counts;
  for (const auto& rec : records) ++counts[quasi_key(rec, quasi)];
  return k_report(counts);
}

std::string k_report_csv(const KAnonymityReport& report) {
  std::ostringstream csv;
  csv << "group,count\n";
  for (const auto& [group, count] : report.group_counts) {
    csv << group << "," << count << "\n";
  }
  csv << "summary,k_min=" << report.k_min << ";k_avg=" << report.k_avg_rounded
      << ";k_max=" << report.k_max << "\n";
  return csv.str();
}

}  // namespace bibo::privacy

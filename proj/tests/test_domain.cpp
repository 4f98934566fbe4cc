#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "bibo/domain/calendar.hpp"
#include "bibo/domain/entities.hpp"
#include "bibo/domain/geo.hpp"
#include "bibo/domain/types.hpp"

using namespace bibo;

namespace {

// Independent distance oracle: Vincenty-style spherical law of cosines
// via atan2, a different formulation from the library's haversine.
double oracle_distance_km(const GeoPoint& a, const GeoPoint& b) {
  const double p1 = deg_to_rad(a.lat), p2 = deg_to_rad(b.lat);
  const double dl = deg_to_rad(b.lon - a.lon);
  const double num = std::sqrt(
      std::pow(std::cos(p2) * std::sin(dl), 2) +
      std::pow(std::cos(p1) * std::sin(p2) -
                   std::sin(p1) * std::cos(p2) * std::cos(dl),
               2));
  const double den = std::sin(p1) * std::sin(p2) +
                     std::cos(p1) * std::cos(p2) * std::cos(dl);
  return kEarthRadiusKm * std::atan2(num, den);
}

}  // namespace

TEST_CASE("haversine fixed points") {
  CHECK(haversine_distance({0, 0}, {0, 0}) == 0.0);
  // Antipodal points: half the sphere circumference, pi * R.
  CHECK(haversine_distance({0, 0}, {0, 180}) ==
        doctest::Approx(20015.0866).epsilon(1e-7));
  CHECK(haversine_distance({90, 0}, {-90, 0}) ==
        doctest::Approx(20015.0866).epsilon(1e-7));
  // One degree of longitude at the equator.
  CHECK(haversine_distance({0, 0}, {0, 1}) ==
        doctest::Approx(111.19492).epsilon(1e-5));
  // Two nearby towns against the independent oracle.
  const GeoPoint town_a{44.4949, 11.3426};
  const GeoPoint town_b{44.3534, 11.7147};
  const double got = haversine_distance(town_a, town_b);
  CHECK(got == doctest::Approx(oracle_distance_km(town_a, town_b))
                   .epsilon(1e-6));
  CHECK(got > 30.0);
  CHECK(got < 35.0);
}

TEST_CASE("haversine properties on random points") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lat(-85.0, 85.0);
  std::uniform_real_distribution<double> lon(-180.0, 180.0);
  for (int i = 0; i < 500; ++i) {
    const GeoPoint a{lat(rng), lon(rng)};
    const GeoPoint b{lat(rng), lon(rng)};
    const GeoPoint c{lat(rng), lon(rng)};
    const double ab = haversine_distance(a, b);
    CHECK(ab >= 0.0);
    CHECK(ab == doctest::Approx(haversine_distance(b, a)).epsilon(1e-12));
    CHECK(ab == doctest::Approx(oracle_distance_km(a, b)).scale(1.0).epsilon(1e-6));
    CHECK(ab <= haversine_distance(a, c) + haversine_distance(c, b) + 1e-6);
  }
}

TEST_CASE("age_of") {
  auto age = [](Date b, Date at) { return age_of(b, at).value(); };
  CHECK(age({1990, 5, 1}, {2021, 5, 1}) == 31);
  CHECK(age({1990, 5, 1}, {2021, 4, 30}) == 30);
  CHECK(age({1990, 5, 1}, {2021, 5, 2}) == 31);
  CHECK(age({2021, 5, 1}, {2021, 5, 1}) == 0);
  // Feb-29 birthday completes on Mar-1 in non-leap years.
  CHECK(age({2004, 2, 29}, {2021, 2, 28}) == 16);
  CHECK(age({2004, 2, 29}, {2021, 3, 1}) == 17);
  CHECK(age({2004, 2, 29}, {2024, 2, 29}) == 20);
  CHECK_FALSE(age_of({2030, 1, 1}, {2021, 5, 1}).ok());
  CHECK(age_of({2030, 1, 1}, {2021, 5, 1}).error().code ==
        Errc::invalid_input);
}

TEST_CASE("calendar validity and leap years") {
  CHECK(is_leap_year(2000));
  CHECK(is_leap_year(2024));
  CHECK_FALSE(is_leap_year(1900));
  CHECK_FALSE(is_leap_year(2021));
  CHECK(valid_date({2021, 2, 28}));
  CHECK_FALSE(valid_date({2021, 2, 29}));
  CHECK(valid_date({2020, 2, 29}));
  CHECK_FALSE(valid_date({2021, 4, 31}));
  CHECK_FALSE(valid_date({2021, 13, 1}));
  CHECK_FALSE(valid_date({2021, 0, 1}));
}

TEST_CASE("rfc3339 round trip") {
  CHECK(format_rfc3339(0) == "1970-01-01T00:00:00Z");
  CHECK(format_rfc3339(1622505600) == "2021-06-01T00:00:00Z");
  CHECK(parse_rfc3339("2021-06-01T00:00:00Z").value() == 1622505600);
  for (Timestamp ts : {Timestamp{0}, Timestamp{951827696}, Timestamp{1622591999},
                       Timestamp{4102444800}}) {
    CHECK(parse_rfc3339(format_rfc3339(ts)).value() == ts);
  }
  CHECK_FALSE(parse_rfc3339("not a timestamp").ok());
  CHECK(parse_date("2021-06-01").value() == Date{2021, 6, 1});
  CHECK_FALSE(parse_date("2021-02-30").ok());
  CHECK(format_date({2021, 6, 1}) == "2021-06-01");
}

TEST_CASE("truncate_to_minute") {
  CHECK(truncate_to_minute(1622505659) == 1622505600);
  CHECK(truncate_to_minute(1622505600) == 1622505600);
  CHECK(truncate_to_minute(59) == 0);
  CHECK(truncate_to_minute(-1) == -60);
}

TEST_CASE("round_half_up") {
  CHECK(round_half_up(2.5) == 3);
  CHECK(round_half_up(2.4999) == 2);
  CHECK(round_half_up(-2.5) == -2);
  CHECK(round_half_up(0.0) == 0);
  CHECK(round_half_up(224.0) == 224);
}

TEST_CASE("money arithmetic is currency-checked") {
  Money a{150}, b{75};
  CHECK((a + b).cents == 225);
  CHECK((a - b).cents == 75);
  CHECK(a > b);
  CHECK_THROWS_AS((void)(a + Money{10, "USD"}), std::logic_error);
  CHECK_FALSE(Money{10, "USD"} == Money{10, "EUR"});
}

TEST_CASE("wallet ledger invariant") {
  Wallet w;
  w.balance = Money{1000};
  // A wallet whose history does not explain its balance is inconsistent.
  CHECK_FALSE(w.ledger_consistent());
  w = Wallet{};
  CHECK(w.ledger_consistent());
  w.apply(10, Money{1000}, "top-up");
  w.apply(20, Money{-225}, "route r-000001");
  CHECK(w.balance.cents == 775);
  CHECK(w.ledger_consistent());
  CHECK(w.ledger.size() == 2);
}

TEST_CASE("session state machine") {
  using S = SessionState;
  const S all[] = {S::ongoing, S::ended, S::validated, S::rejected};
  for (S from : all) {
    for (S to : all) {
      const bool legal = (from == S::ongoing && to == S::ended) ||
                         (from == S::ended &&
                          (to == S::validated || to == S::rejected));
      CHECK(session_transition_allowed(from, to) == legal);
    }
  }
}

TEST_CASE("geo point validity") {
  CHECK(GeoPoint::valid(44.5, 11.3));
  CHECK(GeoPoint::valid(-90, 180));
  CHECK_FALSE(GeoPoint::valid(90.1, 0));
  CHECK_FALSE(GeoPoint::valid(0, -180.5));
}

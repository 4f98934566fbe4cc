#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace bibo {

// Opaque identifiers. Kept as strings so the wire format and the stores
// agree without conversion layers.
using UserId = std::string;
using ServiceId = std::string;
using CustomerId = std::string;
using SessionId = std::string;
using RouteId = std::string;
using StationId = std::string;
using VehicleId = std::string;
using WalletId = std::string;

/// Seconds since the Unix epoch on the virtual clock. Core logic never
/// consults the wall clock.
using Timestamp = std::int64_t;

enum class Gender { female, male, unspecified };

inline const char* to_string(Gender g) {
  switch (g) {
    case Gender::female: return "female";
    case Gender::male: return "male";
    default: return "unspecified";
  }
}

enum class ServiceKind { on_board, turnstile };

inline const char* to_string(ServiceKind k) {
  return k == ServiceKind::on_board ? "on_board" : "turnstile";
}

struct GeoPoint {
  double lat{0.0};
  double lon{0.0};

  static bool valid(double lat, double lon) {
    return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
  }
  bool valid() const { return valid(lat, lon); }

  bool operator==(const GeoPoint&) const = default;
};

/// Exact integer cents. All fare and wallet arithmetic happens here;
/// floating point touches money only at the single rounding point in
/// fare computation.
struct Money {
  std::int64_t cents{0};
  std::string currency{"EUR"};

  Money() = default;
  Money(std::int64_t c, std::string cur = "EUR")
      : cents(c), currency(std::move(cur)) {}

  Money operator+(const Money& o) const {
    require_same(o);
    return Money{cents + o.cents, currency};
  }
  Money operator-(const Money& o) const {
    require_same(o);
    return Money{cents - o.cents, currency};
  }
  Money& operator+=(const Money& o) { *this = *this + o; return *this; }
  Money& operator-=(const Money& o) { *this = *this - o; return *this; }

  bool operator==(const Money& o) const {
    return cents == o.cents && currency == o.currency;
  }
  bool operator<(const Money& o) const { require_same(o); return cents < o.cents; }
  bool operator<=(const Money& o) const { require_same(o); return cents <= o.cents; }
  bool operator>(const Money& o) const { require_same(o); return cents > o.cents; }
  bool operator>=(const Money& o) const { require_same(o); return cents >= o.cents; }

 private:
  void require_same(const Money& o) const {
    if (currency != o.currency) {
      throw std::logic_error("currency mismatch: " + currency + " vs " + o.currency);
    }
  }
};

/// Round-half-up to integer. The single point where a real becomes cents.
inline std::int64_t round_half_up(double x) {
  return static_cast<std::int64_t>(std::floor(x + 0.5));
}

}  // namespace bibo

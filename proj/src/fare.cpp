#include "bibo/transit/fare.hpp"

#include <algorithm>

#include "bibo/domain/geo.hpp"

namespace bibo::transit {

Outcome<SessionPayment> session_fare(const FarePlan& plan,
                                     const UserSession& session) {
  if (session.state != SessionState::validated) {
    return err(Errc::invalid_state, "session not validated");
  }
  SessionPayment payment;
  payment.session_id = session.session_id;
  payment.plan_snapshot = plan;

  if (plan.kind == FarePlan::Kind::flat) {
    payment.amount = plan.price;
    return payment;
  }

  const GeoPoint end = session.end_pos.value_or(session.start_pos);
  const double km = haversine_distance(session.start_pos, end);
  const double raw = static_cast<double>(plan.base.cents) +
                     static_cast<double>(plan.per_km.cents) * km;
  std::int64_t cents = round_half_up(raw);
  cents = std::clamp(cents, plan.min_charge.cents, plan.max_charge.cents);
  payment.amount = Money{cents, plan.base.currency};
  return payment;
}

}  // namespace bibo::transit

#pragma once

#include "bibo/domain/entities.hpp"
#include "bibo/domain/errors.hpp"

namespace bibo::transit {

/// Price of one validated session under a fare plan. Distance plans use
/// the great-circle length between the session endpoints, rounded
/// half-up to cents and clamped to [min_charge, max_charge].
Outcome<SessionPayment> session_fare(const FarePlan& plan,
                                     const UserSession& session);

}  // namespace bibo::transit

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace bibo {

enum class Errc {
  invalid_input,
  not_found,
  conflict,
  unauthorized,
  forbidden,
  invalid_state,
  scheduling,
  crypto,
  unavailable,
};

struct Error {
  Errc code;
  std::string message;
};

inline Error err(Errc code, std::string message) {
  return Error{code, std::move(message)};
}

/// Value-or-error result used across module boundaries.
template <typename T>
class Outcome {
 public:
  Outcome(T value) : v_(std::move(value)) {}
  Outcome(Error e) : v_(std::move(e)) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  const T& value() const { return std::get<T>(v_); }
  T& value() { return std::get<T>(v_); }
  const Error& error() const { return std::get<Error>(v_); }

 private:
  std::variant<T, Error> v_;
};

/// Success-or-error for operations without a payload.
class Status {
 public:
  Status() = default;
  Status(Error e) : e_(std::move(e)) {}

  bool ok() const { return !e_.has_value(); }
  explicit operator bool() const { return ok(); }
  const Error& error() const { return *e_; }

 private:
  std::optional<Error> e_;
};

}  // namespace bibo

#pragma once

#include <cmath>
#include <limits>
#include <ostream>

#include "varbound/error.hpp"

namespace varbound {

// A real number that may also be +inf or -inf. The infinite states are
// explicit tags; arithmetic on the finite payload never sees an IEEE infinity.
class ExtendedReal {
 public:
  enum class Kind { finite, plus_infinity, minus_infinity };

  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT(implicit)

  static constexpr ExtendedReal plus_infinity() { return ExtendedReal(Kind::plus_infinity); }
  static constexpr ExtendedReal minus_infinity() { return ExtendedReal(Kind::minus_infinity); }

  // Maps IEEE infinities onto tags; NaN is rejected.
  static ExtendedReal from_double(double v) {
    if (std::isnan(v)) throw NumericalError("NaN cannot be represented as an extended real");
    if (std::isinf(v)) return v > 0 ? plus_infinity() : minus_infinity();
    return ExtendedReal(v);
  }

  constexpr Kind kind() const noexcept { return kind_; }
  constexpr bool is_finite() const noexcept { return kind_ == Kind::finite; }
  constexpr bool is_plus_infinity() const noexcept { return kind_ == Kind::plus_infinity; }
  constexpr bool is_minus_infinity() const noexcept { return kind_ == Kind::minus_infinity; }

  // Finite payload; throws when the value is infinite.
  double value() const {
    if (!is_finite()) throw NumericalError("value() called on an infinite extended real");
    return value_;
  }

  double to_double() const noexcept {
    switch (kind_) {
      case Kind::plus_infinity: return std::numeric_limits<double>::infinity();
      case Kind::minus_infinity: return -std::numeric_limits<double>::infinity();
      default: return value_;
    }
  }

  friend constexpr bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    return a.kind_ == b.kind_ && (a.kind_ != Kind::finite || a.value_ == b.value_);
  }

  friend std::ostream& operator<<(std::ostream& os, const ExtendedReal& v) {
    switch (v.kind_) {
      case Kind::plus_infinity: return os << "+inf";
      case Kind::minus_infinity: return os << "-inf";
      default: return os << v.value_;
    }
  }

 private:
  explicit constexpr ExtendedReal(Kind k) : kind_(k) {}

  Kind kind_ = Kind::finite;
  double value_ = 0.0;
};

}  // namespace varbound

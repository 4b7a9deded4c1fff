#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>

#include "ivs/errors.hpp"

namespace ivs {

// Exact rational arithmetic for the time axis. Values are kept in lowest
// terms with a positive denominator. All operations go through 128-bit
// intermediates and throw OverflowError if a result does not fit in 64 bits;
// results are never silently wrapped.
class Rational {
  public:
    constexpr Rational() : num_(0), den_(1) {}
    Rational(std::int64_t numerator, std::int64_t denominator);
    Rational(std::int64_t value) : num_(value), den_(1) {}  // NOLINT: implicit integer lift

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_negative() const { return num_ < 0; }
    bool is_integer() const { return den_ == 1; }

    Rational operator-() const;
    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    Rational operator/(const Rational& o) const;

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const;
    bool operator<=(const Rational& o) const { return *this < o || *this == o; }
    bool operator>(const Rational& o) const { return o < *this; }
    bool operator>=(const Rational& o) const { return o <= *this; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    // floor(*this / d): largest integer k with k*d <= *this. d must be positive.
    std::int64_t floor_div(const Rational& d) const;

    // Canonical form: "n" for integers, "n/d" otherwise. Parsed back exactly.
    std::string str() const;

    // Accepts "7", "-3/4" and terminating decimals such as "2.5".
    static Rational parse(const std::string& text);

    static Rational min(const Rational& a, const Rational& b) { return a < b ? a : b; }
    static Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

  private:
    std::int64_t num_;
    std::int64_t den_;
};

std::ostream& operator<<(std::ostream& os, const Rational& r);

// Duration: a point on the nonnegative exact time axis, in seconds.
using Duration = Rational;

// Throws if d is negative; used at module boundaries that require durations.
Duration require_duration(const Rational& d, const char* what);

}  // namespace ivs

template <>
struct std::hash<ivs::Rational> {
    std::size_t operator()(const ivs::Rational& r) const noexcept {
        return std::hash<std::int64_t>()(r.num()) * 31 ^ std::hash<std::int64_t>()(r.den());
    }
};

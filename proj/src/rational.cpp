#include "ivs/rational.hpp"

#include <cstdlib>
#include <numeric>
#include <ostream>

namespace ivs {

namespace {

using i128 = __int128;

std::int64_t narrow(i128 v, const char* op) {
    if (v > INT64_MAX || v < INT64_MIN) {
        throw OverflowError(std::string("rational overflow in ") + op);
    }
    return static_cast<std::int64_t>(v);
}

i128 gcd128(i128 a, i128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

}  // namespace

Rational::Rational(std::int64_t numerator, std::int64_t denominator) {
    if (denominator == 0) {
        throw Error("rational with zero denominator");
    }
    i128 n = numerator;
    i128 d = denominator;
    if (d < 0) {
        n = -n;
        d = -d;
    }
    i128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    num_ = narrow(n, "construction");
    den_ = narrow(d, "construction");
}

Rational Rational::operator-() const {
    Rational r;
    r.num_ = narrow(-i128(num_), "negation");
    r.den_ = den_;
    return r;
}

Rational Rational::operator+(const Rational& o) const {
    i128 n = i128(num_) * o.den_ + i128(o.num_) * den_;
    i128 d = i128(den_) * o.den_;
    i128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    Rational r;
    r.num_ = narrow(n, "addition");
    r.den_ = narrow(d, "addition");
    return r;
}

Rational Rational::operator-(const Rational& o) const { return *this + (-o); }

Rational Rational::operator*(const Rational& o) const {
    i128 n = i128(num_) * o.num_;
    i128 d = i128(den_) * o.den_;
    i128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    Rational r;
    r.num_ = narrow(n, "multiplication");
    r.den_ = narrow(d, "multiplication");
    return r;
}

Rational Rational::operator/(const Rational& o) const {
    if (o.num_ == 0) {
        throw Error("rational division by zero");
    }
    i128 n = i128(num_) * o.den_;
    i128 d = i128(den_) * o.num_;
    if (d < 0) {
        n = -n;
        d = -d;
    }
    i128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    Rational r;
    r.num_ = narrow(n, "division");
    r.den_ = narrow(d, "division");
    return r;
}

bool Rational::operator<(const Rational& o) const {
    return i128(num_) * o.den_ < i128(o.num_) * den_;
}

std::int64_t Rational::floor_div(const Rational& d) const {
    if (!(d > Rational(0))) {
        throw Error("floor_div requires a positive divisor");
    }
    // floor((num/den) / (dn/dd)) = floor(num*dd / (den*dn))
    i128 a = i128(num_) * d.den();
    i128 b = i128(den_) * d.num();
    i128 q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        q -= 1;
    }
    return narrow(q, "floor_div");
}

std::string Rational::str() const {
    if (den_ == 1) {
        return std::to_string(num_);
    }
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::parse(const std::string& text) {
    if (text.empty()) {
        throw ParseError("empty rational literal");
    }
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        std::string ns = text.substr(0, slash);
        std::string ds = text.substr(slash + 1);
        std::size_t used = 0;
        std::int64_t n = std::stoll(ns, &used);
        if (used != ns.size()) throw ParseError("bad rational literal '" + text + "'");
        std::int64_t d = std::stoll(ds, &used);
        if (used != ds.size()) throw ParseError("bad rational literal '" + text + "'");
        return Rational(n, d);
    }
    auto dot = text.find('.');
    if (dot != std::string::npos) {
        std::string whole = text.substr(0, dot);
        std::string frac = text.substr(dot + 1);
        if (frac.empty()) throw ParseError("bad decimal literal '" + text + "'");
        bool negative = !whole.empty() && whole[0] == '-';
        std::size_t used = 0;
        std::int64_t w = whole.empty() || whole == "-" ? 0 : std::stoll(whole, &used);
        if (!whole.empty() && whole != "-" && used != whole.size()) {
            throw ParseError("bad decimal literal '" + text + "'");
        }
        Rational r(w, 1);
        Rational scale(1, 1);
        for (char c : frac) {
            if (c < '0' || c > '9') throw ParseError("bad decimal literal '" + text + "'");
            scale = scale * Rational(1, 10);
            Rational digit(c - '0', 1);
            r = negative ? r - digit * scale : r + digit * scale;
        }
        return r;
    }
    std::size_t used = 0;
    std::int64_t n = std::stoll(text, &used);
    if (used != text.size()) throw ParseError("bad rational literal '" + text + "'");
    return Rational(n, 1);
}

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

Duration require_duration(const Rational& d, const char* what) {
    if (d.is_negative()) {
        throw Error(std::string(what) + " must be nonnegative, got " + d.str());
    }
    return d;
}

}  // namespace ivs

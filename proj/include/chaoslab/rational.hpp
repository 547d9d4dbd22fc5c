#pragma once

/**
 * @file rational.hpp
 * @brief Exact scalars: big integers, rationals, and normed angles.
 *
 * All scalars are GMP values. Rationals are kept canonical (lowest terms,
 * positive denominator), so equality and ordering are exact.
 */

#include <gmpxx.h>

#include <compare>
#include <string>
#include <string_view>

#include "chaoslab/errors.hpp"

namespace chaoslab {

using BigInt = mpz_class;
using Rational = mpq_class;

inline Rational make_rational(const BigInt& num, const BigInt& den) {
    if (den == 0) throw DomainError("rational with zero denominator");
    Rational q(num, den);
    q.canonicalize();
    return q;
}

inline Rational make_rational(long num, long den = 1) {
    return make_rational(BigInt(num), BigInt(den));
}

// Accepts "p/q", "p" and an optional leading '-'. Whitespace is rejected.
inline Rational parse_rational(std::string_view text) {
    if (text.empty()) throw DomainError("empty rational literal");
    std::size_t slash = text.find('/');
    auto parse_int = [&](std::string_view part, bool allow_sign) {
        if (part.empty()) throw DomainError("malformed rational literal: " + std::string(text));
        std::size_t i = 0;
        if (allow_sign && part[0] == '-') i = 1;
        if (i == part.size()) throw DomainError("malformed rational literal: " + std::string(text));
        for (; i < part.size(); ++i) {
            if (part[i] < '0' || part[i] > '9')
                throw DomainError("malformed rational literal: " + std::string(text));
        }
        return BigInt(std::string(part), 10);
    };
    if (slash == std::string_view::npos) return Rational(parse_int(text, true));
    return make_rational(parse_int(text.substr(0, slash), true),
                         parse_int(text.substr(slash + 1), false));
}

inline BigInt parse_bigint(std::string_view text) {
    Rational q = parse_rational(text);
    if (q.get_den() != 1) throw DomainError("expected an integer: " + std::string(text));
    return q.get_num();
}

inline std::string to_string(const BigInt& x) { return x.get_str(10); }
inline std::string to_string(const Rational& x) { return x.get_str(10); }

inline BigInt floor_div(const BigInt& a, const BigInt& b) {
    BigInt q;
    mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return q;
}

// Nonnegative residue of a modulo m (m > 0).
inline BigInt floor_mod(const BigInt& a, const BigInt& m) {
    BigInt r;
    mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
    return r;
}

inline BigInt floor_of(const Rational& x) { return floor_div(x.get_num(), x.get_den()); }

inline BigInt ceil_of(const Rational& x) {
    BigInt q;
    mpz_cdiv_q(q.get_mpz_t(), x.get_num().get_mpz_t(), x.get_den().get_mpz_t());
    return q;
}

// x mod 1, in [0, 1).
inline Rational frac_part(const Rational& x) {
    return make_rational(floor_mod(x.get_num(), x.get_den()), x.get_den());
}

inline BigInt lcm(const BigInt& a, const BigInt& b) {
    BigInt r;
    mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

inline BigInt gcd(const BigInt& a, const BigInt& b) {
    BigInt r;
    mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

// Fixed-point decimal with `places` digits after the point, rounded half away
// from zero. Only used for plot-oriented output; never fed back into the core.
inline std::string to_decimal(const Rational& x, unsigned places = 12) {
    BigInt scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, places);
    Rational scaled = abs(x) * scale + Rational(1, 2);
    BigInt digits = floor_of(scaled);
    std::string s = digits.get_str(10);
    if (s.size() <= places) s.insert(0, places + 1 - s.size(), '0');
    if (places > 0) s.insert(s.size() - places, ".");
    if (x < 0 && digits != 0) s.insert(0, "-");
    return s;
}

/// A point of the unit circle given by its normed angle in [0, 1).
class Angle {
public:
    Angle() = default;
    explicit Angle(const Rational& value) : value_(frac_part(value)) {}

    const Rational& value() const { return value_; }

    Angle rotated(const Rational& by) const { return Angle(value_ + by); }

    friend bool operator==(const Angle& a, const Angle& b) { return a.value_ == b.value_; }
    friend std::strong_ordering operator<=>(const Angle& a, const Angle& b) {
        int c = cmp(a.value_, b.value_);
        return c < 0 ? std::strong_ordering::less
                     : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
    }

private:
    Rational value_{0};
};

}  // namespace chaoslab

#pragma once

/**
 * @file exact_arith.hpp
 * @brief Circle geometry and exact counting of rotation proximity events.
 *
 * Everything reduces to counting residues of an arithmetic progression
 * (a*j + b) mod m, which floor_sum does in time logarithmic in the inputs.
 * That makes counts over 10^12 rotation steps (or over astronomically long
 * identity blocks of a schedule) exact and cheap.
 */

#include <algorithm>
#include <climits>
#include <utility>

#include "chaoslab/errors.hpp"
#include "chaoslab/rational.hpp"

namespace chaoslab {

namespace detail {

// Machine-word version of the recursion below, for arguments under 2^31 in
// magnitude. Intermediates stay far inside __int128.
inline __int128 floor_sum_small(__int128 n, __int128 m, __int128 a, __int128 b) {
    __int128 ans = 0;
    auto fdiv = [](__int128 x, __int128 y) {
        __int128 q = x / y;
        return (x % y != 0 && x < 0) ? q - 1 : q;
    };
    __int128 qa = fdiv(a, m), qb = fdiv(b, m);
    ans += qa * (n * (n - 1) / 2) + qb * n;
    a -= qa * m;
    b -= qb * m;
    while (true) {
        if (a >= m) {
            ans += (n * (n - 1) / 2) * (a / m);
            a %= m;
        }
        if (b >= m) {
            ans += n * (b / m);
            b %= m;
        }
        __int128 y_max = a * n + b;
        if (y_max < m) break;
        n = y_max / m;
        b = y_max % m;
        std::swap(m, a);
    }
    return ans;
}

inline bool fits_small(const BigInt& x) { return mpz_sizeinbase(x.get_mpz_t(), 2) <= 31; }

inline BigInt from_int128(__int128 v) {
    if (v >= LONG_MIN && v <= LONG_MAX) return BigInt(static_cast<long>(v));
    bool neg = v < 0;
    unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
    BigInt r = static_cast<unsigned long>(u >> 64);
    r <<= 64;
    r += BigInt(static_cast<unsigned long>((u >> 32) & 0xffffffffU)) << 32;
    r += static_cast<unsigned long>(u & 0xffffffffU);
    return neg ? BigInt(-r) : r;
}

}  // namespace detail

/// Sum_{i=0}^{n-1} floor((a*i + b) / m), exact. a and b may be negative.
inline BigInt floor_sum(BigInt n, BigInt m, BigInt a, BigInt b) {
    if (m <= 0) throw DomainError("floor_sum: modulus must be positive");
    if (n < 0) throw DomainError("floor_sum: negative term count");
    if (detail::fits_small(n) && detail::fits_small(m) && detail::fits_small(a) && detail::fits_small(b))
        return detail::from_int128(
            detail::floor_sum_small(n.get_si(), m.get_si(), a.get_si(), b.get_si()));
    BigInt ans = 0;
    if (n == 0) return ans;

    // Shift negative (or large) a, b into [0, m) and account for the quotients.
    BigInt qa = floor_div(a, m);
    BigInt qb = floor_div(b, m);
    ans += qa * (n * (n - 1) / 2) + qb * n;
    a -= qa * m;
    b -= qb * m;

    while (true) {
        if (a >= m) {
            ans += (n * (n - 1) / 2) * (a / m);
            a %= m;
        }
        if (b >= m) {
            ans += n * (b / m);
            b %= m;
        }
        BigInt y_max = a * n + b;
        if (y_max < m) break;
        n = y_max / m;
        b = y_max % m;
        std::swap(m, a);
    }
    return ans;
}

/// #{0 <= j < n : (a*j + b) mod m < c}, for 0 <= c <= m.
inline BigInt count_residues_below(const BigInt& n, const BigInt& m, const BigInt& a,
                                   const BigInt& b, const BigInt& c) {
    if (c <= 0) return 0;
    if (c >= m) return n;
    // (x mod m) < c  <=>  floor(x/m) - floor((x-c)/m) == 1; otherwise the difference is 0.
    return floor_sum(n, m, a, b) - floor_sum(n, m, a, b - c);
}

/// #{0 <= j < n : a*j + b == 0 (mod m)}, by solving the linear congruence.
inline BigInt count_zero_residues(const BigInt& n, const BigInt& m, const BigInt& a,
                                  const BigInt& b) {
    if (m <= 0) throw DomainError("count_zero_residues: modulus must be positive");
    if (n <= 0) return 0;
    BigInt ar = floor_mod(a, m);
    BigInt br = floor_mod(b, m);
    if (ar == 0) return br == 0 ? n : BigInt(0);
    BigInt g = gcd(ar, m);
    if (br % g != 0) return 0;
    BigInt period = m / g;
    BigInt j0 = 0;
    if (period != 1) {
        BigInt inv;
        BigInt a_red = ar / g;
        mpz_invert(inv.get_mpz_t(), a_red.get_mpz_t(), period.get_mpz_t());
        j0 = floor_mod(-(br / g) * inv, period);
    }
    if (j0 >= n) return 0;
    return (n - 1 - j0) / period + 1;
}

/// rho(t, 0) for t read mod 1: distance to the nearest integer, in [0, 1/2].
inline Rational circle_norm(const Rational& t) {
    Rational f = frac_part(t);
    Rational g = 1 - f;
    return f < g ? f : g;
}

/// rho(a, b) = min(|a - b|, 1 - |a - b|).
inline Rational circle_dist(const Angle& a, const Angle& b) {
    Rational d = abs(a.value() - b.value());
    Rational w = 1 - d;
    return d < w ? d : w;
}

/// #{0 <= j < n : rho(offset + j*step, 0) < delta}.
inline BigInt count_near_zero(const Rational& offset, const Rational& step, const Rational& delta,
                              const BigInt& n) {
    if (n <= 0 || delta <= 0) return 0;
    if (delta > Rational(1, 2)) return n;
    // rho(t, 0) < delta  <=>  0 < (t + delta) mod 1 < 2*delta.
    Rational shifted = offset + delta;
    Rational width = 2 * delta;
    BigInt M = lcm(lcm(shifted.get_den(), step.get_den()), width.get_den());
    BigInt A = step.get_num() * (M / step.get_den());
    BigInt B = shifted.get_num() * (M / shifted.get_den());
    BigInt C = width.get_num() * (M / width.get_den());
    return count_residues_below(n, M, A, B, C) - count_zero_residues(n, M, A, B);
}

/// #{0 < i < p : rho(theta_u, (theta_v + i*dr) mod 1) < delta}.
inline BigInt arc_hit_count(const BigInt& p, const Angle& theta_u, const Angle& theta_v,
                            const Rational& dr, const Rational& delta) {
    if (p < 1) throw DomainError("arc_hit_count: p must be at least 1");
    if (delta <= 0) throw DomainError("arc_hit_count: delta must be positive");
    if (delta > Rational(1, 2)) return p - 1;
    Rational first = theta_v.value() - theta_u.value() + dr;
    return count_near_zero(first, dr, delta, p - 1);
}

/// The progression offset + j*step (j in [0, n)) on a common integer grid:
/// position_j * M == (A*j + B) mod M, so rho_j * M is an integer.
struct GridProgression {
    BigInt M, A, B, n;

    GridProgression(const Rational& offset, const Rational& step, BigInt count)
        : M(lcm(offset.get_den(), step.get_den())),
          A(step.get_num() * (M / step.get_den())),
          B(offset.get_num() * (M / offset.get_den())),
          n(std::move(count)) {}

    // #{j in [lo, hi) : rho_j * M <= x}
    BigInt count_within(const BigInt& x, const BigInt& lo, const BigInt& hi) const {
        if (hi <= lo || x < 0) return 0;
        if (2 * x + 1 >= M) return hi - lo;
        // rho*M <= x  <=>  (v + x) mod M <= 2x.
        return count_residues_below(hi - lo, M, A, B + A * lo + x, 2 * x + 1);
    }

    // Smallest grid value x in [0, M/2] with count_within(x, lo, hi) >= need.
    BigInt smallest_level(const BigInt& need, const BigInt& lo, const BigInt& hi) const {
        BigInt low = 0, high = M / 2;
        while (low < high) {
            BigInt mid = (low + high) / 2;
            if (count_within(mid, lo, hi) >= need)
                high = mid;
            else
                low = mid + 1;
        }
        return low;
    }
};

/// min over j in [0, n) of rho(offset + j*step, 0); n >= 1.
inline Rational min_circle_norm(const Rational& offset, const Rational& step, const BigInt& n) {
    if (n < 1) throw DomainError("min_circle_norm: empty range");
    GridProgression g(offset, step, n);
    return make_rational(g.smallest_level(1, 0, n), g.M);
}

/// max over j in [0, n) of rho(offset + j*step, 0); n >= 1.
inline Rational max_circle_norm(const Rational& offset, const Rational& step, const BigInt& n) {
    if (n < 1) throw DomainError("max_circle_norm: empty range");
    GridProgression g(offset, step, n);
    return make_rational(g.smallest_level(n, 0, n), g.M);
}

struct Lemma1Report {
    BigInt p;
    BigInt count;
    Rational fraction;     // count / p
    Rational bound;        // 3*delta
    bool holds = false;    // fraction < 3*delta
    Rational proof_bound;  // 2*delta + 2*delta/(p*dr), the intermediate turn-counting estimate
    // count <= (floor((p-2)*dr) + 2) * ceil(2*delta/dr): arcs met by the unwrapped
    // progression times the most progression points one open arc can hold.
    BigInt turn_count_bound;
    bool within_turn_bound = false;
};

inline Lemma1Report lemma1_bound_check(const Angle& theta_u, const Angle& theta_v,
                                       const Rational& r_u, const Rational& r_v,
                                       const Rational& delta, const BigInt& p) {
    Rational dr = abs(r_u - r_v);
    if (dr == 0) throw PreconditionError("lemma1: relative rotation required (r_u == r_v)");
    if (delta <= 0) throw DomainError("lemma1: delta must be positive");
    if (Rational(p) <= 2 / dr) throw PreconditionError("lemma1: p must exceed 2/|r_u - r_v|");

    Lemma1Report rep;
    rep.p = p;
    // rho(phi_u + i r_u, phi_v + i r_v) = rho(phi_u, phi_v + i (r_v - r_u))
    rep.count = arc_hit_count(p, theta_u, theta_v, r_v - r_u, delta);
    rep.fraction = make_rational(rep.count, p);
    rep.bound = 3 * delta;
    rep.holds = rep.fraction < rep.bound;
    rep.proof_bound = 2 * delta + 2 * delta / (Rational(p) * dr);

    if (delta >= Rational(1, 2)) {
        rep.turn_count_bound = p - 1;
    } else {
        rep.turn_count_bound = p - 1;
        Rational step = frac_part(dr);
        if (step != 0) {
            // Rotating by step or by -(1 - step) is the same motion; either unwrapping counts.
            for (const Rational& s : {step, Rational(1 - step)}) {
                BigInt b = (floor_of(Rational(p - 2) * s) + 2) * ceil_of(2 * delta / s);
                if (b < rep.turn_count_bound) rep.turn_count_bound = b;
            }
        }
    }
    rep.within_turn_bound = rep.count <= rep.turn_count_bound;
    return rep;
}

}  // namespace chaoslab

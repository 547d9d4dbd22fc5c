#pragma once

/**
 * @file rng.hpp
 * @brief Portable seeded sampling.
 *
 * std::mt19937_64 has a fully specified output sequence, but the standard
 * distributions do not. Every draw here is built from raw 64-bit words with
 * rejection, so a seed yields the same samples on every platform.
 */

#include <cstdint>
#include <random>

#include "chaoslab/errors.hpp"
#include "chaoslab/rational.hpp"

namespace chaoslab {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, bound), bound >= 1.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw DomainError("Rng::below: bound must be positive");
        // Accept x < 2^64 - (2^64 mod bound); the accepted range is a multiple of bound.
        const std::uint64_t reject_from = -(-bound % bound);
        std::uint64_t x;
        do {
            x = engine_();
        } while (reject_from != 0 && x >= reject_from);
        return x % bound;
    }

    /// Uniform in [lo, hi].
    std::uint64_t between(std::uint64_t lo, std::uint64_t hi) {
        if (hi < lo) throw DomainError("Rng::between: empty range");
        if (lo == 0 && hi == UINT64_MAX) return engine_();
        return lo + below(hi - lo + 1);
    }

    /// Uniform BigInt in [0, bound), bound >= 1, from 64-bit limbs with rejection.
    BigInt below(const BigInt& bound) {
        if (bound < 1) throw DomainError("Rng::below: bound must be positive");
        if (bound.fits_ulong_p()) return BigInt(static_cast<unsigned long>(below(std::uint64_t(bound.get_ui()))));
        std::size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
        std::size_t words = (bits + 63) / 64;
        BigInt x;
        do {
            x = 0;
            for (std::size_t i = 0; i < words; ++i) {
                std::uint64_t w = engine_();
                x <<= 64;
                x += BigInt(static_cast<unsigned long>(w >> 32)) << 32;
                x += static_cast<unsigned long>(w & 0xffffffffULL);
            }
            x >>= static_cast<mp_bitcnt_t>(words * 64 - bits);
        } while (x >= bound);
        return x;
    }

    /// p/q with q uniform in [1, max_den] and p uniform in [0, q): a rational in [0,1).
    Rational unit_rational(std::uint64_t max_den) {
        std::uint64_t q = between(1, max_den);
        std::uint64_t p = below(q);
        return make_rational(BigInt(static_cast<unsigned long>(p)), BigInt(static_cast<unsigned long>(q)));
    }

    /// p/q with q uniform in [1, max_den] and p uniform in [1, q]: a rational in (0,1].
    Rational positive_unit_rational(std::uint64_t max_den) {
        std::uint64_t q = between(1, max_den);
        std::uint64_t p = between(1, q);
        return make_rational(BigInt(static_cast<unsigned long>(p)), BigInt(static_cast<unsigned long>(q)));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace chaoslab

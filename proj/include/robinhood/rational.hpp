#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <string>

namespace robinhood {

// Exact rational arithmetic with arbitrary-precision integers; results of
// arithmetic on canonical operands stay canonical, and the factory below
// canonicalizes explicit numerator/denominator pairs.
using Rational = mpq_class;

inline Rational rational(long num, long den = 1) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

// "p/q" (or plain "p" when q = 1), matching certificate output.
inline std::string rational_str(const Rational& q) { return q.get_str(); }

inline double to_double(const Rational& q) { return q.get_d(); }
inline double to_double(double x) { return x; }

// Numeric literals usable from templated code with Num = Rational or double.
template <class Num>
Num make_frac(long num, long den);

template <>
inline Rational make_frac<Rational>(long num, long den) {
    return rational(num, den);
}

template <>
inline double make_frac<double>(long num, long den) {
    return static_cast<double>(num) / static_cast<double>(den);
}

// 2^{-m} for m >= 0.
template <class Num>
Num pow2_inv(int m);

template <>
inline Rational pow2_inv<Rational>(int m) {
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 2, static_cast<unsigned long>(m));
    Rational r(mpz_class(1), den);
    r.canonicalize();
    return r;
}

template <>
inline double pow2_inv<double>(int m) {
    return std::ldexp(1.0, -m);
}

}  // namespace robinhood

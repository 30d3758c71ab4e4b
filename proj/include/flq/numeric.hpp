#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "flq/errors.hpp"

namespace flq {

using int128 = __int128;

// Exact rational with 128-bit numerator/denominator, always normalized
// (gcd 1, denominator > 0). Overflow raises CapacityError rather than
// wrapping silently.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}
    Rational(long long n, long long d) { init(n, d); }
    static Rational from_int128(int128 n, int128 d) {
        Rational r;
        r.init(n, d);
        return r;
    }

    int128 num() const { return num_; }
    int128 den() const { return den_; }

    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    Rational operator/(const Rational& o) const;
    Rational operator-() const { return from_int128(-num_, den_); }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const;
    bool operator<=(const Rational& o) const { return *this < o || *this == o; }
    bool operator>(const Rational& o) const { return o < *this; }
    bool operator>=(const Rational& o) const { return o <= *this; }

    int sign() const { return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0); }
    Rational abs() const { return num_ < 0 ? -*this : *this; }
    bool is_zero() const { return num_ == 0; }

    double to_double() const;
    std::string to_string() const;

    // Exact rational from a double (every finite double is a dyadic rational).
    static Rational from_double(double x);

private:
    void init(int128 n, int128 d);
    int128 num_, den_;
};

// Element of the real quadratic field Q(sqrt(disc)): a + b*sqrt(disc) with
// rational a, b and a fixed nonnegative integer discriminant. disc == 0
// degenerates to plain rationals. Used where exact atom coincidence must be
// decided for quadratic-irrational contraction ratios (e.g. the golden
// ratio); comparisons are exact sign computations, never floating point.
class QuadExt {
public:
    QuadExt() : a_(), b_(), disc_(0) {}
    QuadExt(Rational a) : a_(a), b_(), disc_(0) {}
    QuadExt(Rational a, Rational b, long long disc) : a_(a), b_(b), disc_(disc) {
        if (disc < 0) throw std::invalid_argument("QuadExt: negative discriminant");
        if (b.is_zero()) disc_ = 0;
    }

    const Rational& rational_part() const { return a_; }
    const Rational& surd_part() const { return b_; }
    long long disc() const { return disc_; }

    QuadExt operator+(const QuadExt& o) const;
    QuadExt operator-(const QuadExt& o) const;
    QuadExt operator*(const QuadExt& o) const;
    QuadExt operator-() const { return QuadExt(-a_, -b_, disc_); }

    int sign() const;
    bool is_zero() const { return a_.is_zero() && b_.is_zero(); }
    bool operator==(const QuadExt& o) const { return (*this - o).is_zero(); }
    bool operator!=(const QuadExt& o) const { return !(*this == o); }
    bool operator<(const QuadExt& o) const { return (*this - o).sign() < 0; }
    bool operator<=(const QuadExt& o) const { return (*this - o).sign() <= 0; }
    bool operator>(const QuadExt& o) const { return (*this - o).sign() > 0; }
    bool operator>=(const QuadExt& o) const { return (*this - o).sign() >= 0; }

    QuadExt abs() const { return sign() < 0 ? -*this : *this; }
    double to_double() const { return a_.to_double() + b_.to_double() * std::sqrt((double)disc_); }
    std::string to_string() const;

private:
    long long common_disc(const QuadExt& o) const;
    Rational a_, b_;
    long long disc_;
};

// Closed interval [lo, hi] with outward-rounded arithmetic. Endpoints are
// doubles; rounding is emulated with nextafter, so every operation yields a
// superset of the exact image.
struct Interval {
    double lo = 0.0, hi = 0.0;

    Interval() = default;
    Interval(double x) : lo(x), hi(x) {}
    Interval(double lo, double hi) : lo(lo), hi(hi) {}

    static Interval exact(double x) { return Interval(x, x); }
    // Smallest interval around x accounting for one rounding error.
    static Interval around(double x);

    Interval operator+(const Interval& o) const;
    Interval operator-(const Interval& o) const;
    Interval operator*(const Interval& o) const;
    Interval operator-() const { return Interval(-hi, -lo); }

    bool contains(double x) const { return lo <= x && x <= hi; }
    bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
    double width() const { return hi - lo; }
    // |I| as an interval: the image of x -> |x|.
    Interval magnitude() const;
};

// Best rational approximation p/q with q <= max_den, by continued fractions.
struct RationalApprox {
    long long p = 0, q = 1;
    double error = 0.0;
};
RationalApprox best_rational_approx(double x, long long max_den);

// Heuristic: is x within tol of a rational with denominator <= max_den?
bool looks_rational(double x, long long max_den = 10000, double tol = 1e-12);

// Deterministic splitmix64; used to derive independent substream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

} // namespace flq

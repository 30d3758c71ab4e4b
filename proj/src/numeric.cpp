#include "flq/numeric.hpp"

#include <cfloat>
#include <cmath>
#include <cstdlib>

namespace flq {

namespace {

int128 gcd128(int128 a, int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

int128 checked_mul(int128 a, int128 b) {
    int128 r;
    if (__builtin_mul_overflow(a, b, &r)) throw CapacityError("exact arithmetic overflow (mul)");
    return r;
}

int128 checked_add(int128 a, int128 b) {
    int128 r;
    if (__builtin_add_overflow(a, b, &r)) throw CapacityError("exact arithmetic overflow (add)");
    return r;
}

std::string int128_to_string(int128 v) {
    if (v == 0) return "0";
    bool neg = v < 0;
    unsigned __int128 u = neg ? (unsigned __int128)(-(v + 1)) + 1 : (unsigned __int128)v;
    std::string s;
    while (u != 0) {
        s.push_back(char('0' + (int)(u % 10)));
        u /= 10;
    }
    if (neg) s.push_back('-');
    return std::string(s.rbegin(), s.rend());
}

} // namespace

void Rational::init(int128 n, int128 d) {
    if (d == 0) throw std::domain_error("Rational: zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    int128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    num_ = n;
    den_ = d;
}

Rational Rational::operator+(const Rational& o) const {
    int128 g = gcd128(den_, o.den_);
    int128 dl = den_ / g;
    int128 n = checked_add(checked_mul(num_, o.den_ / g), checked_mul(o.num_, dl));
    return from_int128(n, checked_mul(dl, o.den_));
}

Rational Rational::operator-(const Rational& o) const { return *this + (-o); }

Rational Rational::operator*(const Rational& o) const {
    int128 g1 = gcd128(num_, o.den_);
    int128 g2 = gcd128(o.num_, den_);
    return from_int128(checked_mul(num_ / g1, o.num_ / g2),
                       checked_mul(den_ / g2, o.den_ / g1));
}

Rational Rational::operator/(const Rational& o) const {
    if (o.num_ == 0) throw std::domain_error("Rational: division by zero");
    return *this * from_int128(o.den_, o.num_);
}

bool Rational::operator<(const Rational& o) const {
    // num_/den_ < o.num_/o.den_ with positive denominators
    return checked_mul(num_, o.den_) < checked_mul(o.num_, den_);
}

double Rational::to_double() const {
    return (double)num_ / (double)den_;
}

std::string Rational::to_string() const {
    if (den_ == 1) return int128_to_string(num_);
    return int128_to_string(num_) + "/" + int128_to_string(den_);
}

Rational Rational::from_double(double x) {
    if (!std::isfinite(x)) throw std::domain_error("Rational::from_double: non-finite");
    if (x == 0.0) return Rational(0);
    int exp;
    double m = std::frexp(x, &exp); // x = m * 2^exp, |m| in [0.5, 1)
    int128 mant = (int128)std::llround(std::ldexp(m, 62));
    exp -= 62;
    // mant * 2^exp
    while (mant != 0 && mant % 2 == 0) {
        mant /= 2;
        ++exp;
    }
    if (exp >= 0) {
        if (exp > 62) throw CapacityError("Rational::from_double: exponent too large");
        return from_int128(mant << exp, 1);
    }
    if (exp < -126) throw CapacityError("Rational::from_double: exponent too small");
    return from_int128(mant, (int128)1 << (-exp));
}

long long QuadExt::common_disc(const QuadExt& o) const {
    if (disc_ == 0) return o.disc_;
    if (o.disc_ == 0 || o.disc_ == disc_) return disc_;
    throw std::invalid_argument("QuadExt: mixed discriminants");
}

QuadExt QuadExt::operator+(const QuadExt& o) const {
    return QuadExt(a_ + o.a_, b_ + o.b_, common_disc(o));
}

QuadExt QuadExt::operator-(const QuadExt& o) const {
    return QuadExt(a_ - o.a_, b_ - o.b_, common_disc(o));
}

QuadExt QuadExt::operator*(const QuadExt& o) const {
    long long d = common_disc(o);
    // (a + b√d)(a' + b'√d) = aa' + bb'd + (ab' + a'b)√d
    return QuadExt(a_ * o.a_ + b_ * o.b_ * Rational(d), a_ * o.b_ + b_ * o.a_, d);
}

int QuadExt::sign() const {
    int sa = a_.sign(), sb = b_.sign();
    if (sb == 0) return sa;
    if (sa == 0) return sb;
    if (sa == sb) return sa;
    // opposite signs: compare a^2 with b^2 d
    Rational lhs = a_ * a_;
    Rational rhs = b_ * b_ * Rational(disc_);
    if (lhs == rhs) return 0;
    return lhs > rhs ? sa : sb;
}

std::string QuadExt::to_string() const {
    if (disc_ == 0 || b_.is_zero()) return a_.to_string();
    return a_.to_string() + " + (" + b_.to_string() + ")*sqrt(" + std::to_string(disc_) + ")";
}

Interval Interval::around(double x) {
    return Interval(std::nextafter(x, -DBL_MAX), std::nextafter(x, DBL_MAX));
}

Interval Interval::operator+(const Interval& o) const {
    return Interval(std::nextafter(lo + o.lo, -DBL_MAX), std::nextafter(hi + o.hi, DBL_MAX));
}

Interval Interval::operator-(const Interval& o) const {
    return Interval(std::nextafter(lo - o.hi, -DBL_MAX), std::nextafter(hi - o.lo, DBL_MAX));
}

Interval Interval::operator*(const Interval& o) const {
    double c[4] = {lo * o.lo, lo * o.hi, hi * o.lo, hi * o.hi};
    double mn = c[0], mx = c[0];
    for (int i = 1; i < 4; ++i) {
        mn = std::min(mn, c[i]);
        mx = std::max(mx, c[i]);
    }
    return Interval(std::nextafter(mn, -DBL_MAX), std::nextafter(mx, DBL_MAX));
}

Interval Interval::magnitude() const {
    if (lo >= 0) return *this;
    if (hi <= 0) return Interval(-hi, -lo);
    return Interval(0.0, std::max(-lo, hi));
}

RationalApprox best_rational_approx(double x, long long max_den) {
    RationalApprox best;
    best.p = (long long)std::llround(x);
    best.q = 1;
    best.error = std::fabs(x - (double)best.p);
    // continued fraction convergents
    double v = x;
    long long p0 = 1, q0 = 0, p1 = (long long)std::floor(v), q1 = 1;
    for (int it = 0; it < 64 && q1 <= max_den; ++it) {
        double err = std::fabs(x - (double)p1 / (double)q1);
        if (err < best.error) {
            best.p = p1;
            best.q = q1;
            best.error = err;
        }
        double frac = v - std::floor(v);
        if (frac < 1e-18) break;
        v = 1.0 / frac;
        long long a = (long long)std::floor(v);
        long long p2, q2;
        if (__builtin_mul_overflow(a, p1, &p2) || __builtin_add_overflow(p2, p0, &p2)) break;
        if (__builtin_mul_overflow(a, q1, &q2) || __builtin_add_overflow(q2, q0, &q2)) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    return best;
}

bool looks_rational(double x, long long max_den, double tol) {
    return best_rational_approx(x, max_den).error < tol;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace flq

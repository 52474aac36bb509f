#pragma once

#include <cmath>

namespace odesign::detail {

// Compensated double-double value: the unevaluated sum hi + lo, giving
// roughly 31 significant decimal digits. The shifted-Taylor divided
// difference sums cancel by a factor ~e^(beta*spread/2), which exceeds
// what plain double (and at the extremes, long double) can absorb.
struct DD {
    double hi{0.0};
    double lo{0.0};

    constexpr DD() = default;
    constexpr DD(double h) : hi(h) {}
    constexpr DD(double h, double l) : hi(h), lo(l) {}

    double to_double() const { return hi + lo; }
};

inline DD two_sum(double a, double b) {
    double s = a + b;
    double bb = s - a;
    double err = (a - (s - bb)) + (b - bb);
    return {s, err};
}

// requires |a| >= |b| or a == 0
inline DD quick_two_sum(double a, double b) {
    double s = a + b;
    return {s, b - (s - a)};
}

inline DD two_prod(double a, double b) {
#ifdef __FMA__
    double p = a * b;
    return {p, std::fma(a, b, -p)};
#else
    constexpr double splitter = 134217729.0;  // 2^27 + 1, Dekker split
    double p = a * b;
    double ca = splitter * a;
    double cb = splitter * b;
    double ahi = ca - (ca - a), alo = a - ahi;
    double bhi = cb - (cb - b), blo = b - bhi;
    double err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo;
    return {p, err};
#endif
}

inline DD add(const DD& a, const DD& b) {
    DD s = two_sum(a.hi, b.hi);
    return quick_two_sum(s.hi, s.lo + a.lo + b.lo);
}

inline DD sub(const DD& a, const DD& b) { return add(a, DD{-b.hi, -b.lo}); }

inline DD mul(const DD& a, const DD& b) {
    DD p = two_prod(a.hi, b.hi);
    return quick_two_sum(p.hi, p.lo + a.hi * b.lo + a.lo * b.hi);
}

inline DD mul(double a, const DD& b) {
    DD p = two_prod(a, b.hi);
    return quick_two_sum(p.hi, p.lo + a * b.lo);
}

inline DD mul(const DD& a, double b) { return mul(b, a); }

// full-precision quotient of two doubles
inline DD div(double a, double b) {
    double q1 = a / b;
    DD p = two_prod(q1, b);
    double q2 = ((a - p.hi) - p.lo) / b;
    return quick_two_sum(q1, q2);
}

inline DD div(const DD& a, double b) {
    double q1 = a.hi / b;
    DD p = two_prod(q1, b);
    double q2 = (((a.hi - p.hi) - p.lo) + a.lo) / b;
    return quick_two_sum(q1, q2);
}

inline double abs_hi(const DD& a) { return std::fabs(a.hi); }

}  // namespace odesign::detail

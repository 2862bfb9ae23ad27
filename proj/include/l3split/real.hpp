// Scalar abstraction: every kernel is templated on Real, which is either
// plain double (native mode) or DD (compensated mode).  Unqualified math
// calls inside namespace l3split resolve to std:: for double and to the
// DD overloads via these using-declarations.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "l3split/dd.hpp"

namespace l3split {

using std::abs;
using std::acos;
using std::asin;
using std::atan;
using std::atan2;
using std::cos;
using std::cosh;
using std::exp;
using std::fabs;
using std::fmax;
using std::fmin;
using std::floor;
using std::hypot;
using std::isfinite;
using std::isnan;
using std::log;
using std::pow;
using std::sin;
using std::sinh;
using std::sqrt;
using std::tan;
using std::tanh;

inline double to_double(double x) { return x; }
inline double nint(double x) { return std::round(x); }

enum class Precision { native64, compensated };

inline const char* precision_name(Precision p) {
    return p == Precision::native64 ? "native" : "compensated";
}
inline Precision precision_from_name(const std::string& s) {
    if (s == "native" || s == "native64" || s == "double") return Precision::native64;
    if (s == "compensated" || s == "dd" || s == "double-double") return Precision::compensated;
    throw std::invalid_argument("unknown precision mode: " + s);
}

template <class Real>
struct real_traits;

template <>
struct real_traits<double> {
    static constexpr double eps = 2.220446049250313e-16;
    static double pi() { return 3.141592653589793; }
    static double two_pi() { return 6.283185307179586; }
    static double half_pi() { return 1.5707963267948966; }
    static constexpr Precision precision = Precision::native64;
};

template <>
struct real_traits<DD> {
    static constexpr double eps = kDDEps;
    static DD pi() { return dd_const::pi(); }
    static DD two_pi() { return dd_const::two_pi(); }
    static DD half_pi() { return dd_const::half_pi(); }
    static constexpr Precision precision = Precision::compensated;
};

// normalize an angle to (-pi, pi]
template <class Real>
Real normalize_angle(Real x) {
    Real tp = real_traits<Real>::two_pi();
    Real y = x - tp * nint(x / tp);
    if (y <= -real_traits<Real>::pi()) y += tp;
    if (y > real_traits<Real>::pi()) y -= tp;
    return y;
}

template <class Real>
struct type_tag {
    using type = Real;
};

// run f with the scalar type selected at runtime
template <class F>
auto with_precision(Precision p, F&& f) {
    return p == Precision::native64 ? f(type_tag<double>{}) : f(type_tag<DD>{});
}

} // namespace l3split

#ifndef MPCONV_TRANSFORMS_HPP
#define MPCONV_TRANSFORMS_HPP

#include <array>
#include <cmath>

namespace mpconv {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kTwoThirdsPi = 2.0 * kPi / 3.0;

struct Dq {
    double d = 0.0;
    double q = 0.0;
};

using Abc = std::array<double, 3>;

/// Amplitude-invariant Park transform, d axis on the cosine.
/// A cosine triple of peak X in phase order a, b = a - 120deg, c = a + 120deg
/// maps to (d = X, q = 0). Zero sequence is dropped.
inline Dq park(const Abc& x, double theta) {
    const double ca = std::cos(theta);
    const double cb = std::cos(theta - kTwoThirdsPi);
    const double cc = std::cos(theta + kTwoThirdsPi);
    const double sa = std::sin(theta);
    const double sb = std::sin(theta - kTwoThirdsPi);
    const double sc = std::sin(theta + kTwoThirdsPi);
    return {(2.0 / 3.0) * (x[0] * ca + x[1] * cb + x[2] * cc),
            -(2.0 / 3.0) * (x[0] * sa + x[1] * sb + x[2] * sc)};
}

/// Inverse of park(); the zero-sequence component is zero by construction.
inline Abc inverse_park(const Dq& x, double theta) {
    const double ca = std::cos(theta);
    const double cb = std::cos(theta - kTwoThirdsPi);
    const double cc = std::cos(theta + kTwoThirdsPi);
    const double sa = std::sin(theta);
    const double sb = std::sin(theta - kTwoThirdsPi);
    const double sc = std::sin(theta + kTwoThirdsPi);
    return {x.d * ca - x.q * sa, x.d * cb - x.q * sb, x.d * cc - x.q * sc};
}

/// Wrap an angle to [0, 2*pi).
inline double wrap_angle(double theta) {
    double w = std::fmod(theta, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    return w;
}

}  // namespace mpconv

#endif

#include "mpconv/shortcircuit.hpp"

#include <cmath>
#include <string>

namespace mpconv::shortcircuit {

void ShootThroughParams::validate() const {
    if (!(r_eq > 0.0)) throw ValidationError("r_eq must be > 0");
    if (!(l_eq > 0.0)) throw ValidationError("l_eq must be > 0");
    if (!(v_dc >= 0.0)) throw ValidationError("v_dc must be >= 0");
}

double shoot_through_current(const ShootThroughParams& p, double t) {
    p.validate();
    if (!(t >= 0.0)) throw ValidationError("t must be >= 0");
    const double decay = std::exp(-t / p.tau());
    return p.i_l0 * decay + p.asymptote() * (1.0 - decay);
}

double time_to_current_limit(const ShootThroughParams& p, double i_limit) {
    p.validate();
    if (!(i_limit > p.i_l0)) {
        throw ValidationError("i_limit must exceed the initial current");
    }
    if (i_limit >= p.asymptote()) {
        throw UnreachableLimit("i_limit = " + std::to_string(i_limit) +
                               " A is at or above the asymptote v_dc/r_eq = " +
                               std::to_string(p.asymptote()) + " A; never reached");
    }
    const double x = 1.0 - (i_limit - p.i_l0) * p.r_eq / (p.v_dc - p.i_l0 * p.r_eq);
    return -p.tau() * std::log(x);
}

}  // namespace mpconv::shortcircuit

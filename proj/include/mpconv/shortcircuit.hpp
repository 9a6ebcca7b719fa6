#ifndef MPCONV_SHORTCIRCUIT_HPP
#define MPCONV_SHORTCIRCUIT_HPP

#include "mpconv/errors.hpp"

namespace mpconv::shortcircuit {

/// RL parameters of the shoot-through path that forms when all three switches
/// of a leg conduct. The embedded leg inductors dominate l_eq and bound the
/// current ramp rate, which is what buys the fault-clearing margin.
struct ShootThroughParams {
    double i_l0 = 0.0;     ///< initial path current [A]
    double v_dc = 2000.0;  ///< DC-link voltage [V], >= 0
    double r_eq = 0.02;    ///< total path resistance [Ohm], > 0
    double l_eq = 100e-6;  ///< total path inductance [H], > 0

    void validate() const;
    double tau() const { return l_eq / r_eq; }
    double asymptote() const { return v_dc / r_eq; }
};

/// Closed-form RL fault current
///   i(t) = i_l0*exp(-t/tau) + (v_dc/r_eq)*(1 - exp(-t/tau)).
double shoot_through_current(const ShootThroughParams& p, double t);

/// Time at which the fault current reaches i_limit. Requires
/// i_l0 < i_limit < v_dc/r_eq; throws UnreachableLimit when the limit sits at
/// or above the asymptote.
double time_to_current_limit(const ShootThroughParams& p, double i_limit);

}  // namespace mpconv::shortcircuit

#endif

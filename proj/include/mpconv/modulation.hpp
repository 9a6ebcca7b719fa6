#ifndef MPCONV_MODULATION_HPP
#define MPCONV_MODULATION_HPP

#include <array>
#include <utility>

#include "mpconv/errors.hpp"

namespace mpconv::modulation {

/// Sinusoidal reference parameters for one three-phase output of a leg group.
/// The modulation index is hard-limited to 0.5 so that, with the max/min
/// offsets applied, every upper reference stays at or above its paired lower
/// reference.
struct RefParams {
    double m = 0.0;      ///< modulation index, 0 <= m <= 0.5
    double f = 0.0;      ///< frequency [Hz], f >= 0
    double phi = 0.0;    ///< initial phase [rad]
    double v_off = 0.0;  ///< common-mode offset added to all three phases

    void validate() const;
};

/// Instantaneous per-phase reference values on the [0, 1] carrier scale.
struct ThreePhaseRef {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    double max() const { return a > b ? (a > c ? a : c) : (b > c ? b : c); }
    double min() const { return a < b ? (a < c ? a : c) : (b < c ? b : c); }
};

/// Gate pattern of one three-switch leg (top, middle, bottom). Exactly one
/// switch is off in a valid state, equivalently s2 == s1 XOR s3, giving the
/// three states 110, 101, 011.
struct LegState {
    bool s1 = false;
    bool s2 = false;
    bool s3 = false;

    bool valid() const {
        const int off = (s1 ? 0 : 1) + (s2 ? 0 : 1) + (s3 ? 0 : 1);
        return off == 1 && s2 == (s1 != s3);
    }
    bool operator==(const LegState&) const = default;
};

/// Symmetric triangular carrier on [0, 1].
struct CarrierConfig {
    double f_sw = 5000.0;  ///< carrier frequency [Hz], > 0

    void validate() const;
};

/// Instantaneous three-phase references: 0.5 + 0.5*m*sin(2*pi*f*t + phi + k)
/// with k = 0, +2*pi/3, -2*pi/3 for phases a, b, c, plus the common offset.
/// Throws ValidationError when params violate their invariants (m > 0.5 etc.).
ThreePhaseRef make_reference(const RefParams& params, double t);

/// Offset that pins the instantaneous maximum of an upper reference set to 1.
double max_offset(const ThreePhaseRef& upper);

/// Offset that pins the instantaneous minimum of a lower reference set to 0.
double min_offset(const ThreePhaseRef& lower);

/// Adds max_offset to the upper set and min_offset to the lower set and checks
/// the per-phase dominance that modulating the pair requires.
/// Throws DominanceViolation when any adjusted upper phase falls below its
/// lower counterpart.
std::pair<ThreePhaseRef, ThreePhaseRef> apply_offsets(const ThreePhaseRef& upper,
                                                      const ThreePhaseRef& lower);

/// Triangle carrier value at time t: 0 at the period start, 1 at half period.
double carrier(double t, const CarrierConfig& cfg);

/// Carrier comparison for one leg: s1 = (c <= r_u), s3 = (c >= r_l),
/// s2 = s1 XOR s3. Ties switch on. Requires r_u >= r_l (else the all-off
/// state 000 becomes reachable); throws DominanceViolation otherwise.
LegState pwm_leg(double r_u, double r_l, double c);

/// Terminal voltages (upper, lower) of a leg referenced to the DC-link
/// negative rail: 110 -> (v_dc, v_dc), 101 -> (v_dc, 0), 011 -> (0, 0).
/// Throws InvalidLegState for any other gate combination.
std::pair<double, double> leg_terminal_voltages(const LegState& state, double v_dc);

/// Duty-average terminal voltages (r_u*v_dc, r_l*v_dc) used by the averaged
/// engine fidelity. Throws DominanceViolation when r_u < r_l.
std::pair<double, double> averaged_leg_voltages(double r_u, double r_l, double v_dc);

}  // namespace mpconv::modulation

#endif

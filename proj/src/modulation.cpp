#include "mpconv/modulation.hpp"

#include <cmath>
#include <string>

#include "mpconv/transforms.hpp"

namespace mpconv::modulation {

void RefParams::validate() const {
    if (!(m >= 0.0) || !(m <= 0.5)) {
        throw ValidationError("modulation index m = " + std::to_string(m) +
                              " outside [0, 0.5]");
    }
    if (!(f >= 0.0)) {
        throw ValidationError("reference frequency f = " + std::to_string(f) +
                              " must be >= 0");
    }
}

void CarrierConfig::validate() const {
    if (!(f_sw > 0.0)) {
        throw ValidationError("carrier frequency f_sw must be > 0");
    }
}

ThreePhaseRef make_reference(const RefParams& params, double t) {
    params.validate();
    const double w = kTwoPi * params.f;
    const double half_m = 0.5 * params.m;
    return {0.5 + half_m * std::sin(w * t + params.phi) + params.v_off,
            0.5 + half_m * std::sin(w * t + params.phi + kTwoThirdsPi) + params.v_off,
            0.5 + half_m * std::sin(w * t + params.phi - kTwoThirdsPi) + params.v_off};
}

double max_offset(const ThreePhaseRef& upper) { return 1.0 - upper.max(); }

double min_offset(const ThreePhaseRef& lower) { return -lower.min(); }

std::pair<ThreePhaseRef, ThreePhaseRef> apply_offsets(const ThreePhaseRef& upper,
                                                      const ThreePhaseRef& lower) {
    const double off_u = max_offset(upper);
    const double off_l = min_offset(lower);
    const ThreePhaseRef u{upper.a + off_u, upper.b + off_u, upper.c + off_u};
    const ThreePhaseRef l{lower.a + off_l, lower.b + off_l, lower.c + off_l};
    if (u.a < l.a || u.b < l.b || u.c < l.c) {
        throw DominanceViolation(
            "offset-adjusted upper reference below lower reference; inputs exceed "
            "the 0.5 modulation-index budget");
    }
    return {u, l};
}

double carrier(double t, const CarrierConfig& cfg) {
    cfg.validate();
    const double cycles = t * cfg.f_sw;
    double x = cycles - std::floor(cycles);  // position within the period
    return x <= 0.5 ? 2.0 * x : 2.0 * (1.0 - x);
}

LegState pwm_leg(double r_u, double r_l, double c) {
    if (r_u < r_l) {
        throw DominanceViolation("pwm_leg requires r_u >= r_l (got r_u = " +
                                 std::to_string(r_u) + ", r_l = " + std::to_string(r_l) +
                                 ")");
    }
    const bool s1 = c <= r_u;
    const bool s3 = c >= r_l;
    return {s1, s1 != s3, s3};
}

std::pair<double, double> leg_terminal_voltages(const LegState& state, double v_dc) {
    if (!state.valid()) {
        throw InvalidLegState("leg state [" + std::to_string(int(state.s1)) +
                              std::to_string(int(state.s2)) + std::to_string(int(state.s3)) +
                              "] is not one of 110/101/011");
    }
    // Upper output rides on s1, lower output on the complement of s3.
    return {state.s1 ? v_dc : 0.0, state.s3 ? 0.0 : v_dc};
}

std::pair<double, double> averaged_leg_voltages(double r_u, double r_l, double v_dc) {
    if (r_u < r_l) {
        throw DominanceViolation("averaged_leg_voltages requires r_u >= r_l");
    }
    return {r_u * v_dc, r_l * v_dc};
}

}  // namespace mpconv::modulation

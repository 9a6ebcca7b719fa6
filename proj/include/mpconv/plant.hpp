#ifndef MPCONV_PLANT_HPP
#define MPCONV_PLANT_HPP

#include <array>
#include <cstdint>

#include "mpconv/errors.hpp"
#include "mpconv/transforms.hpp"

namespace mpconv::plant {

// ---------------------------------------------------------------------------
// Wind
// ---------------------------------------------------------------------------

/// Composite wind profile: mean + raised-cosine gust + clamped ramp + seeded
/// band-limited noise. The noise is a fixed bank of sinusoids with seeded
/// random phases, so the profile is a smooth deterministic function of time
/// alone (identical across integrator step sizes).
struct WindProfile {
    double mean = 6.0;  ///< [m/s]

    double gust_start = 0.0;      ///< [s]
    double gust_duration = 0.0;   ///< [s]; 0 disables the gust
    double gust_amplitude = 0.0;  ///< [m/s] peak add-on at the pulse centre

    double ramp_start = 0.0;  ///< [s]
    double ramp_end = 0.0;    ///< [s]; ramp holds its final value afterwards
    double ramp_slope = 0.0;  ///< [m/s^2]

    double noise_amplitude = 0.0;  ///< RMS of the noise component [m/s]
    std::uint64_t noise_seed = 1;

    void validate() const;
};

double wind_speed(const WindProfile& profile, double t);

// ---------------------------------------------------------------------------
// Turbine aerodynamics
// ---------------------------------------------------------------------------

/// Rotor aerodynamics with an exponential power-coefficient curve
///   cp(lambda) = c1*(c2/L - c4)*exp(-c5/L) + c6*lambda,  1/L = 1/lambda - c_off
/// (fixed zero pitch). The default coefficients peak at cp ~ 0.48 near
/// lambda ~ 8.1; cp is clamped to [0, betz_limit].
struct TurbineParams {
    double rho = 1.225;       ///< air density [kg/m^3]
    double radius = 0.0;      ///< rotor radius [m]; <= 0 requests auto-sizing
    double lambda_opt = 8.1;  ///< tip-speed ratio at the cp peak
    double cp_max = 0.48;     ///< power coefficient at lambda_opt
    double rated_power = 1.5e6;  ///< [W]
    double rated_wind = 12.0;    ///< [m/s]
    double omega_floor = 0.1;    ///< [rad/s] guard for the torque division

    // cp curve coefficients
    double c1 = 0.5176, c2 = 116.0, c4 = 5.0, c5 = 21.0, c6 = 0.0068;
    double c_off = 0.035;
    double lambda_max = 20.0;

    static constexpr double betz_limit = 0.593;

    void validate() const;
    double cp(double lambda) const;
    /// Radius at which rated power is reached at rated wind on the cp peak.
    double sized_radius() const;
    /// Torque gain of the optimal-torque tracking law, T = k_opt * omega^2.
    double k_opt() const;
    /// Kinetic power in the swept area at wind speed v.
    double available_power(double v_wind) const;
};

/// Rotor torque from wind speed and mechanical speed (zero at zero wind; the
/// speed floor guards the division at standstill).
double aero_torque(const TurbineParams& params, double v_wind, double omega_m);

// ---------------------------------------------------------------------------
// PMSG
// ---------------------------------------------------------------------------

struct PmsgParams {
    double r_s = 0.006;       ///< stator resistance [Ohm]
    double l_d = 0.3e-3;      ///< d-axis inductance [H]
    double l_q = 0.3e-3;      ///< q-axis inductance [H]
    double psi_m = 1.48;      ///< rotor flux linkage [V*s]
    double pole_pairs = 40.0;
    double inertia = 3.5e4;   ///< lumped rotor inertia [kg*m^2]
    double rated_power = 1.5e6;  ///< [W]

    void validate() const;
    double torque_per_iq() const { return 1.5 * pole_pairs * psi_m; }
};

struct PmsgState {
    double i_d = 0.0;      ///< [A]
    double i_q = 0.0;      ///< [A]
    double omega_m = 0.0;  ///< mechanical speed [rad/s]
    double theta_e = 0.0;  ///< electrical angle [rad], wrapped to [0, 2*pi)
};

struct PmsgDerivatives {
    double di_d = 0.0;
    double di_q = 0.0;
    double domega_m = 0.0;
    double dtheta_e = 0.0;
};

/// Electromagnetic torque 1.5*p*(psi_m*i_q + (l_d - l_q)*i_d*i_q); positive
/// i_q brakes the rotor (generating).
double electrical_torque(const PmsgParams& params, double i_d, double i_q);

/// Stator and rotor state derivatives for applied dq voltage and shaft torque:
///   di_d/dt = (v_d - r_s*i_d + w_e*l_q*i_q)/l_d
///   di_q/dt = (v_q - r_s*i_q - w_e*(l_d*i_d + psi_m))/l_q
///   dw_m/dt = (t_mech - t_e)/J,  dtheta_e/dt = w_e = p*w_m
PmsgDerivatives pmsg_derivatives(const PmsgParams& params, const PmsgState& state,
                                 double v_d, double v_q, double t_mech);

// ---------------------------------------------------------------------------
// DC link, battery, supercapacitor, grid interface
// ---------------------------------------------------------------------------

/// Capacitor node law dv/dt = i_net / c_dc.
double dc_link_derivative(double c_dc, double i_net);

struct BatteryParams {
    double capacity_wh = 200e3;   ///< rated energy [Wh]
    double v_nominal = 750.0;     ///< [V]
    double r_int = 0.05;          ///< internal resistance [Ohm]
    double ocv_v0 = 700.0;        ///< open-circuit voltage at soc = 0 [V]
    double ocv_slope = 100.0;     ///< [V per unit soc]
    double soc_min = 0.1;
    double soc_max = 0.9;

    void validate() const;
    double ocv(double soc) const { return ocv_v0 + ocv_slope * soc; }
    /// Charge capacity [C] implied by the energy rating at nominal voltage.
    double charge_capacity() const { return capacity_wh * 3600.0 / v_nominal; }
};

struct BatteryStepResult {
    double v_term = 0.0;  ///< terminal voltage before the step [V]
    double soc = 0.0;     ///< state of charge after the step
    bool saturated = false;  ///< soc clamped at 0 or 1
};

/// Coulomb-counting step, discharge-positive current:
///   soc' = soc - i*dt / (E_rated/v_nom),   v_term = ocv(soc) - i*r_int.
BatteryStepResult battery_step(const BatteryParams& params, double soc, double i_batt,
                               double dt);

struct SupercapParams {
    double capacitance = 1000.0;  ///< [F]
    double v_nominal = 1250.0;    ///< [V]
    double esr = 0.01;            ///< series resistance [Ohm]
    double v_floor = 625.0;       ///< undervoltage threshold [V]

    void validate() const;
};

struct SupercapStepResult {
    double v_sc = 0.0;    ///< capacitor voltage after the step [V]
    double v_term = 0.0;  ///< terminal voltage before the step [V]
    bool undervoltage = false;
};

/// Ideal-capacitor step, discharge-positive current:
///   v' = v - i*dt/C,   v_term = v - i*esr.
SupercapStepResult supercap_step(const SupercapParams& params, double v_sc, double i_sc,
                                 double dt);

struct GridParams {
    double v_ll_rms = 575.0;   ///< line-line RMS grid voltage [V]
    double frequency = 60.0;   ///< [Hz]
    double l_f = 0.3e-3;       ///< filter inductance per phase [H]
    double r_f = 2e-3;         ///< filter resistance per phase [Ohm]

    void validate() const;
    double v_phase_peak() const { return v_ll_rms * std::sqrt(2.0 / 3.0); }
    double omega() const { return kTwoPi * frequency; }
    /// Rated phase-current amplitude at rated power, unity power factor.
    double rated_current(double p_rated) const {
        return p_rated / (1.5 * v_phase_peak());
    }
};

/// Synchronous-frame RL filter dynamics between converter and grid,
/// current positive from converter into the grid:
///   l_f*di_d/dt = v_conv_d - v_grid_d - r_f*i_d + w*l_f*i_q
///   l_f*di_q/dt = v_conv_q - v_grid_q - r_f*i_q - w*l_f*i_d
Dq grid_interface_derivatives(const Dq& i, const Dq& v_conv, const Dq& v_grid,
                              double l_f, double r_f, double omega_grid);

/// Combined storage-side state snapshot used for logging.
struct HessState {
    double v_dc = 2000.0;
    double v_sc = 1250.0;
    double soc_batt = 0.5;
    double i_batt = 0.0;  ///< discharge-positive [A]
    double i_sc = 0.0;    ///< discharge-positive [A]
};

}  // namespace mpconv::plant

#endif

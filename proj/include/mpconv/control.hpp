#ifndef MPCONV_CONTROL_HPP
#define MPCONV_CONTROL_HPP

#include <utility>

#include "mpconv/modulation.hpp"
#include "mpconv/plant.hpp"
#include "mpconv/transforms.hpp"

namespace mpconv::control {

// ---------------------------------------------------------------------------
// PI regulator
// ---------------------------------------------------------------------------

/// PI regulator with output saturation and back-calculation anti-windup.
/// The integrator state is bounded so |ki * integ| <= limit always holds.
struct PiState {
    double kp = 0.0;
    double ki = 0.0;
    double limit = 0.0;       ///< symmetric output saturation, > 0
    double antiwindup = 1.0;  ///< back-calculation gain
    double integ = 0.0;       ///< integrated error [error units * s]
    bool saturated = false;   ///< last step hit the limit

    /// One update: returns clamp(kp*e + ki*integ + feedforward, +/-limit).
    double step(double error, double dt, double feedforward = 0.0);
    void reset() {
        integ = 0.0;
        saturated = false;
    }
};

// ---------------------------------------------------------------------------
// Dispatch and storage split
// ---------------------------------------------------------------------------

/// Grid dispatch setpoint in per unit of the rated power base.
struct DispatchCommand {
    double p_grid_ref = 0.0;  ///< [pu], |p| <= 1.2
    double q_grid_ref = 0.0;  ///< [pu]

    void validate() const;
};

enum class BattMode { Idle = 0, CC = 1, CV = 2 };

/// Storage power allocation, absorb-positive: positive values charge the
/// device. p_batt_ref + p_sc_ref always equals the requested surplus exactly.
struct HessSplit {
    double p_batt_ref = 0.0;  ///< [W]
    double p_sc_ref = 0.0;    ///< [W]
    BattMode batt_mode = BattMode::Idle;
    bool cc_saturated = false;  ///< battery pinned at the full CC power
};

/// Tunables and hysteresis state of the charge/discharge strategy. The OCV
/// and internal-resistance entries are the controller's battery model, used
/// to taper the charge current in constant-voltage mode.
struct HessStrategy {
    double i_cc = 50.0;          ///< constant-current magnitude [A]
    double v_cv = 800.0;         ///< constant-voltage threshold [V]
    double cv_hysteresis = 5.0;  ///< [V]
    double deadband = 15e3;      ///< idle band on |surplus| [W]
    double soc_min = 0.1;
    double soc_max = 0.9;
    double ocv_v0 = 700.0;       ///< battery model: OCV at soc = 0 [V]
    double ocv_slope = 100.0;    ///< battery model: [V per unit soc]
    double r_int = 0.05;         ///< battery model: internal resistance [Ohm]
    bool cv_engaged = false;     ///< hysteresis memory
};

/// Battery-first split of the surplus power: the battery takes the CC-limited
/// (or CV-limited) share and the supercapacitor reference is the exact
/// remainder. SOC limits or a surplus inside the deadband idle the battery.
HessSplit hess_power_split(double p_wt, double p_dispatch, double v_batt, double soc,
                           double i_cc, HessStrategy& strategy);

// ---------------------------------------------------------------------------
// Machine-side control
// ---------------------------------------------------------------------------

/// Optimal-torque tracking law T_ref = k_opt * omega^2.
double mppt_torque_ref(double omega_m, double k_opt);

struct MachineControlResult {
    double v_d = 0.0;
    double v_q = 0.0;
    double i_d_ref = 0.0;
    double i_q_ref = 0.0;
    bool saturated = false;
};

/// Torque command to dq voltage references: i_q_ref = t_ref/(1.5*p*psi_m),
/// i_d_ref = 0, PI current loops with cross-coupling feedforward. The combined
/// output vector is limited to v_limit (the voltage the modulator can realise).
MachineControlResult machine_current_control(const plant::PmsgParams& params,
                                             double t_ref, const plant::PmsgState& state,
                                             PiState& pi_d, PiState& pi_q,
                                             double v_limit, double dt);

// ---------------------------------------------------------------------------
// Grid-side control
// ---------------------------------------------------------------------------

struct GridMeasurements {
    double v_gd = 0.0;    ///< grid voltage, d axis (aligned frame) [V]
    double i_d = 0.0;     ///< filter current [A]
    double i_q = 0.0;
    double p = 0.0;       ///< delivered active power [W]
    double q = 0.0;       ///< delivered reactive power [var]
    double v_dc = 0.0;    ///< measured DC-link voltage [V]
    double omega = 0.0;   ///< grid angular frequency [rad/s]
};

struct GridPiSet {
    PiState power;    ///< active power -> i_d correction
    PiState reactive; ///< reactive power -> i_q correction
    PiState id;       ///< current loops -> voltage
    PiState iq;
};

struct GridControlResult {
    double v_d = 0.0;
    double v_q = 0.0;
    double i_d_ref = 0.0;
    double i_q_ref = 0.0;
    bool current_limited = false;
    bool saturated = false;
};

/// Outer power loops (with the algebraic i = P/(1.5*v_gd) feedforward) feeding
/// inner current loops. Current references clamp at i_limit; converter voltage
/// magnitude is limited to what the modulation budget allows at the measured
/// DC-link voltage.
GridControlResult grid_power_control(const DispatchCommand& cmd, double p_base,
                                     const GridMeasurements& meas, GridPiSet& pi,
                                     const plant::GridParams& grid, double i_limit,
                                     double dt);

/// Inner current loops only, for an externally supplied current reference
/// (DC-link regulation duty in the storage-less configuration).
GridControlResult grid_current_control(double i_d_ref, double i_q_ref,
                                       const GridMeasurements& meas, GridPiSet& pi,
                                       const plant::GridParams& grid, double i_limit,
                                       double dt);

// ---------------------------------------------------------------------------
// DC-link and storage-port control
// ---------------------------------------------------------------------------

/// PI on the DC-link voltage error; output is a discharge-positive current
/// correction for the regulating storage port, clamped to that port's rating.
double dc_link_voltage_control(double v_dc_ref, double v_dc, PiState& pi, double dt);

struct PortDutyResult {
    double duty = 0.0;
    bool clamped = false;
};

/// Inner current loop of one DC/DC port. Increasing the duty raises the port
/// voltage and drives the (discharge-positive) inductor current down, so the
/// PI voltage correction enters with a negative sign:
///   duty = (v_port_nom - pi(i_ref - i_meas)) / v_dc, clamped to [d_min, d_max].
PortDutyResult port_current_control(double i_ref, double i_meas, double v_port_nom,
                                    double v_dc, PiState& pi, double d_min, double d_max,
                                    double dt);

// ---------------------------------------------------------------------------
// Reference generation
// ---------------------------------------------------------------------------

struct VoltageRefsResult {
    modulation::ThreePhaseRef refs;
    double implied_m = 0.0;   ///< 2*|v|/v_dc after any scaling
    bool overmodulated = false;
};

/// dq voltage reference to per-phase references 0.5 + v_phase/v_dc. A request
/// beyond the 0.5 modulation-index budget is scaled down uniformly and
/// flagged.
VoltageRefsResult references_from_voltages(const Dq& v_dq_ref, double theta, double v_dc);

}  // namespace mpconv::control

#endif

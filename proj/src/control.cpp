#include "mpconv/control.hpp"

#include <algorithm>
#include <cmath>

namespace mpconv::control {

double PiState::step(double error, double dt, double feedforward) {
    const double unsat = kp * error + ki * integ + feedforward;
    const double out = std::clamp(unsat, -limit, limit);
    saturated = out != unsat;
    if (ki > 0.0) {
        integ += dt * (error + antiwindup * (out - unsat) / ki);
        integ = std::clamp(integ, -limit / ki, limit / ki);
    }
    return out;
}

void DispatchCommand::validate() const {
    if (std::abs(p_grid_ref) > 1.2) {
        throw ValidationError("dispatch power reference exceeds 1.2 pu");
    }
}

HessSplit hess_power_split(double p_wt, double p_dispatch, double v_batt, double soc,
                           double i_cc, HessStrategy& strategy) {
    if (!(i_cc > 0.0)) throw ValidationError("CC current must be > 0");
    HessSplit split;
    const double surplus = p_wt - p_dispatch;  // > 0: storage charges

    const bool soc_blocks = (surplus > 0.0 && soc >= strategy.soc_max) ||
                            (surplus < 0.0 && soc <= strategy.soc_min);
    if (std::abs(surplus) < strategy.deadband || soc_blocks) {
        split.batt_mode = BattMode::Idle;
        split.p_batt_ref = 0.0;
        split.p_sc_ref = surplus;
        strategy.cv_engaged = false;
        return split;
    }

    const double p_cc = i_cc * v_batt;
    double p_batt = std::copysign(std::min(std::abs(surplus), p_cc), surplus);
    split.batt_mode = BattMode::CC;
    split.cc_saturated = std::abs(surplus) >= p_cc;

    if (surplus > 0.0) {
        // Terminal voltage the full CC charge current would produce, per the
        // controller's battery model.
        const double ocv = strategy.ocv_v0 + strategy.ocv_slope * soc;
        const double v_term_cc = ocv + i_cc * strategy.r_int;
        if (strategy.cv_engaged) {
            if (v_term_cc < strategy.v_cv - strategy.cv_hysteresis) {
                strategy.cv_engaged = false;
            }
        } else if (v_term_cc >= strategy.v_cv) {
            strategy.cv_engaged = true;
        }
        if (strategy.cv_engaged) {
            // Hold the terminal at v_cv: taper the current to the model value.
            const double i_cv =
                std::clamp((strategy.v_cv - ocv) / std::max(strategy.r_int, 1e-6), 0.0,
                           i_cc);
            split.batt_mode = BattMode::CV;
            split.cc_saturated = false;
            p_batt = std::min(surplus, i_cv * strategy.v_cv);
        }
    } else {
        strategy.cv_engaged = false;
    }

    split.p_batt_ref = p_batt;
    split.p_sc_ref = surplus - p_batt;
    return split;
}

double mppt_torque_ref(double omega_m, double k_opt) {
    if (!(omega_m >= 0.0)) throw ValidationError("mppt_torque_ref requires omega >= 0");
    return k_opt * omega_m * omega_m;
}

namespace {

/// Scale a dq voltage vector down to the given magnitude if it exceeds it.
bool limit_vector(double& v_d, double& v_q, double v_limit) {
    const double mag = std::hypot(v_d, v_q);
    if (mag > v_limit && mag > 0.0) {
        const double s = v_limit / mag;
        v_d *= s;
        v_q *= s;
        return true;
    }
    return false;
}

}  // namespace

MachineControlResult machine_current_control(const plant::PmsgParams& params,
                                             double t_ref, const plant::PmsgState& state,
                                             PiState& pi_d, PiState& pi_q,
                                             double v_limit, double dt) {
    MachineControlResult r;
    r.i_d_ref = 0.0;
    r.i_q_ref = t_ref / params.torque_per_iq();

    const double w_e = params.pole_pairs * state.omega_m;
    const double ff_d = params.r_s * r.i_d_ref - w_e * params.l_q * state.i_q;
    const double ff_q =
        params.r_s * r.i_q_ref + w_e * (params.l_d * state.i_d + params.psi_m);

    r.v_d = pi_d.step(r.i_d_ref - state.i_d, dt, ff_d);
    r.v_q = pi_q.step(r.i_q_ref - state.i_q, dt, ff_q);
    r.saturated = limit_vector(r.v_d, r.v_q, v_limit) || pi_d.saturated || pi_q.saturated;
    return r;
}

namespace {

GridControlResult grid_inner_loops(double i_d_ref, double i_q_ref,
                                   const GridMeasurements& meas, GridPiSet& pi,
                                   const plant::GridParams& grid, double i_limit,
                                   double dt) {
    GridControlResult r;
    r.i_d_ref = std::clamp(i_d_ref, -i_limit, i_limit);
    r.i_q_ref = std::clamp(i_q_ref, -i_limit, i_limit);
    r.current_limited = r.i_d_ref != i_d_ref || r.i_q_ref != i_q_ref;

    const double ff_d = meas.v_gd + grid.r_f * r.i_d_ref - meas.omega * grid.l_f * meas.i_q;
    const double ff_q = grid.r_f * r.i_q_ref + meas.omega * grid.l_f * meas.i_d;

    r.v_d = pi.id.step(r.i_d_ref - meas.i_d, dt, ff_d);
    r.v_q = pi.iq.step(r.i_q_ref - meas.i_q, dt, ff_q);

    // Stay strictly inside the 0.5 modulation-index budget at the measured
    // DC-link voltage so downstream reference generation never has to rescale.
    const double v_avail = 0.25 * meas.v_dc * 0.995;
    r.saturated = limit_vector(r.v_d, r.v_q, v_avail) || pi.id.saturated || pi.iq.saturated;
    return r;
}

}  // namespace

GridControlResult grid_power_control(const DispatchCommand& cmd, double p_base,
                                     const GridMeasurements& meas, GridPiSet& pi,
                                     const plant::GridParams& grid, double i_limit,
                                     double dt) {
    cmd.validate();
    const double p_ref = cmd.p_grid_ref * p_base;
    const double q_ref = cmd.q_grid_ref * p_base;
    const double v_gd = std::max(meas.v_gd, 1.0);

    // reactive power maps to -i_q in this frame, hence the negated correction
    const double i_d_ff = p_ref / (1.5 * v_gd);
    const double i_q_ff = -q_ref / (1.5 * v_gd);
    const double i_d_ref = i_d_ff + pi.power.step(p_ref - meas.p, dt);
    const double i_q_ref = i_q_ff - pi.reactive.step(q_ref - meas.q, dt);

    return grid_inner_loops(i_d_ref, i_q_ref, meas, pi, grid, i_limit, dt);
}

GridControlResult grid_current_control(double i_d_ref, double i_q_ref,
                                       const GridMeasurements& meas, GridPiSet& pi,
                                       const plant::GridParams& grid, double i_limit,
                                       double dt) {
    return grid_inner_loops(i_d_ref, i_q_ref, meas, pi, grid, i_limit, dt);
}

double dc_link_voltage_control(double v_dc_ref, double v_dc, PiState& pi, double dt) {
    // Link low -> positive output -> extra discharge current into the link.
    return pi.step(v_dc_ref - v_dc, dt);
}

PortDutyResult port_current_control(double i_ref, double i_meas, double v_port_nom,
                                    double v_dc, PiState& pi, double d_min, double d_max,
                                    double dt) {
    if (!(v_dc > 0.0)) throw ValidationError("port_current_control requires v_dc > 0");
    const double v_corr = pi.step(i_ref - i_meas, dt);
    PortDutyResult r;
    const double duty = (v_port_nom - v_corr) / v_dc;
    r.duty = std::clamp(duty, d_min, d_max);
    r.clamped = r.duty != duty;
    return r;
}

VoltageRefsResult references_from_voltages(const Dq& v_dq_ref, double theta, double v_dc) {
    if (!(v_dc > 0.0)) throw ValidationError("references_from_voltages requires v_dc > 0");
    VoltageRefsResult r;
    Dq v = v_dq_ref;
    const double mag = std::hypot(v.d, v.q);
    double implied_m = 2.0 * mag / v_dc;
    if (implied_m > 0.5) {
        const double s = 0.5 / implied_m;
        v.d *= s;
        v.q *= s;
        implied_m = 0.5;
        r.overmodulated = true;
    }
    r.implied_m = implied_m;
    const Abc phase = inverse_park(v, theta);
    r.refs = {0.5 + phase[0] / v_dc, 0.5 + phase[1] / v_dc, 0.5 + phase[2] / v_dc};
    return r;
}

}  // namespace mpconv::control

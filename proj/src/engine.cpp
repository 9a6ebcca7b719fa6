#include "mpconv/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mpconv::engine {

void HessParams::validate() const {
    battery.validate();
    supercap.validate();
    if (!(c_dc > 0.0)) throw ValidationError("DC-link capacitance must be > 0");
    if (!(v_dc_ref > 0.0)) throw ValidationError("DC-link reference must be > 0");
    if (!(port_inductance > 0.0)) throw ValidationError("port inductance must be > 0");
    if (!(i_cc > 0.0)) throw ValidationError("CC current must be > 0");
    if (!(soc_init >= 0.0 && soc_init <= 1.0)) throw ValidationError("soc_init outside [0, 1]");
    if (!(duty_batt_min >= 0.0 && duty_batt_max <= duty_sc_min && duty_sc_max <= 1.0 &&
          duty_batt_min < duty_batt_max && duty_sc_min < duty_sc_max)) {
        throw ValidationError("port duty windows must be ordered battery below supercapacitor");
    }
}

void ControlGains::validate() const {
    if (!(machine_current_kp > 0.0 && grid_current_kp > 0.0 && dc_link_kp > 0.0)) {
        throw ValidationError("controller proportional gains must be > 0");
    }
    if (!(grid_current_limit_pu > 0.0)) throw ValidationError("current limit must be > 0");
    if (!(dispatch_slew_w_per_s > 0.0)) throw ValidationError("dispatch slew must be > 0");
}

void Scenario::validate() const {
    if (!(duration > 0.0)) throw ValidationError("duration must be > 0");
    if (!(dt_plant > 0.0) || !(dt_control > 0.0)) {
        throw ValidationError("step sizes must be > 0");
    }
    if (dt_plant > dt_control + 1e-15) {
        throw ValidationError("dt_plant must not exceed dt_control");
    }
    const double ratio = dt_control / dt_plant;
    if (std::abs(ratio - std::round(ratio)) > 1e-6) {
        throw ValidationError("dt_control must be an integer multiple of dt_plant");
    }
    const double lratio = log_interval / dt_control;
    if (!(log_interval > 0.0) || std::abs(lratio - std::round(lratio)) > 1e-6) {
        throw ValidationError("log_interval must be an integer multiple of dt_control");
    }
    wind.validate();
    pmsg.validate();
    turbine.validate();
    grid.validate();
    hess.validate();
    gains.validate();
    carrier.validate();
    if (gate_latency < 0.0) throw ValidationError("gate latency must be >= 0");
    double prev = -1.0;
    for (const auto& [t, pu] : dispatch_schedule) {
        if (t < 0.0) throw ValidationError("dispatch schedule times must be >= 0");
        if (t <= prev) throw ValidationError("dispatch schedule times must increase");
        if (std::abs(pu) > 1.2) throw ValidationError("dispatch setpoint exceeds 1.2 pu");
        prev = t;
    }
}

double Scenario::dispatch_at(double t) const {
    double pu = 0.0;
    for (const auto& [ts, p] : dispatch_schedule) {
        if (ts <= t) pu = p;
        else break;
    }
    return pu;
}

double Scenario::rotor_radius() const {
    return turbine.radius > 0.0 ? turbine.radius : turbine.sized_radius();
}

namespace {

constexpr int kNumStates = 11;
using StateVec = std::array<double, kNumStates>;

enum StateIndex {
    kId = 0, kIq, kOmega, kThetaE, kVdc, kIgd, kIgq, kSoc, kVsc, kIbatt, kIsc
};

StateVec pack(const SimState& s) {
    return {s.pmsg.i_d, s.pmsg.i_q, s.pmsg.omega_m, s.pmsg.theta_e, s.v_dc,
            s.i_grid.d, s.i_grid.q, s.soc,          s.v_sc,         s.i_batt, s.i_sc};
}

SimState unpack(const StateVec& y) {
    SimState s;
    s.pmsg = {y[kId], y[kIq], y[kOmega], y[kThetaE]};
    s.v_dc = y[kVdc];
    s.i_grid = {y[kIgd], y[kIgq]};
    s.soc = y[kSoc];
    s.v_sc = y[kVsc];
    s.i_batt = y[kIbatt];
    s.i_sc = y[kIsc];
    return s;
}

/// Converter commands frozen between control updates.
struct HeldControls {
    modulation::ThreePhaseRef upper;  ///< grid-side references, offsets applied
    modulation::ThreePhaseRef lower;  ///< machine-side references, offsets applied
    double duty_sc = 0.625;
    double duty_batt = 0.375;
    double t_e_cmd = 0.0;
    double p_dispatch = 0.0;
    control::HessSplit split;
    double i_batt_ref = 0.0;  ///< discharge-positive [A]
    double i_sc_ref = 0.0;
    double m_upper = 0.0, m_lower = 0.0;
};

struct GateSnapshot {
    modulation::LegState ac[3];
    modulation::LegState dc;
};

}  // namespace

struct Engine::Impl {
    Scenario sc;
    SimState state;
    double t = 0.0;
    long long period = 0;
    long long steps_per_period = 0;
    long long periods_total = 0;
    long long log_every = 0;

    // derived constants
    double k_opt = 0.0;
    double v_gd = 0.0;        ///< grid voltage amplitude (d axis)
    double omega_g = 0.0;
    double p_base = 0.0;
    double i_grid_limit = 0.0;
    double i_mach_bound = 0.0;
    double omega_bound = 0.0;
    double i_grid_bound = 0.0;
    bool has_batt = false;
    bool has_sc = false;

    // controller state
    control::PiState pi_md, pi_mq;
    control::GridPiSet grid_pi;
    control::PiState pi_vdc;
    control::PiState pi_port_batt, pi_port_sc;
    control::HessStrategy strategy;
    double dispatch_slewed = 0.0;

    HeldControls held;
    GateSnapshot gates{};
    bool gates_init = false;

    // anomaly counters (cumulative)
    long long anomaly_clamp = 0;
    long long anomaly_overmod = 0;
    long long anomaly_dominance = 0;
    long long batt_soc_clamps = 0;
    long long sc_undervoltage = 0;

    // scratch for logging
    double log_residual = 0.0;
    double log_p_wt = 0.0;
    double log_p_grid = 0.0;
    double log_t_mech = 0.0;
    double log_v_wind = 0.0;

    explicit Impl(const Scenario& scenario) : sc(scenario) {
        sc.validate();
        sc.wind.noise_seed = sc.seed;

        steps_per_period = llround(sc.dt_control / sc.dt_plant);
        periods_total = llround(sc.duration / sc.dt_control);
        log_every = llround(sc.log_interval / sc.dt_control);

        const double radius = sc.rotor_radius();
        k_opt = [&] {
            auto tb = sc.turbine;
            tb.radius = radius;
            return tb.k_opt();
        }();
        v_gd = sc.grid.v_phase_peak();
        omega_g = sc.grid.omega();
        p_base = sc.pmsg.rated_power;
        i_grid_limit = sc.gains.grid_current_limit_pu * sc.grid.rated_current(p_base);

        const double omega_rated = sc.turbine.lambda_opt * sc.turbine.rated_wind / radius;
        omega_bound = 10.0 * omega_rated;
        i_mach_bound = 10.0 * (p_base / omega_rated) / sc.pmsg.torque_per_iq();
        i_grid_bound = 10.0 * sc.grid.rated_current(p_base);

        has_batt = sc.case_study != CaseStudy::NoHess;
        has_sc = sc.case_study == CaseStudy::FullHess;

        setup_controllers();
        init_state();
    }

    void setup_controllers() {
        const auto& g = sc.gains;
        const double aw = g.antiwindup;
        pi_md = {g.machine_current_kp, g.machine_current_ki, g.machine_v_limit, aw};
        pi_mq = pi_md;
        const double v_lim_grid = 0.25 * sc.hess.v_dc_ref;  // refined per step
        grid_pi.id = {g.grid_current_kp, g.grid_current_ki, v_lim_grid, aw};
        grid_pi.iq = grid_pi.id;
        grid_pi.power = {g.grid_power_kp, g.grid_power_ki, i_grid_limit, aw};
        grid_pi.reactive = grid_pi.power;
        pi_vdc = {g.dc_link_kp, g.dc_link_ki, g.dc_link_limit, aw};
        pi_port_batt = {g.port_batt_kp, g.port_batt_ki, g.port_batt_v_limit, aw};
        pi_port_sc = {g.port_sc_kp, g.port_sc_ki, g.port_sc_v_limit, aw};

        strategy.i_cc = case_i_cc();
        strategy.v_cv = sc.hess.v_cv;
        strategy.cv_hysteresis = sc.hess.cv_hysteresis;
        strategy.deadband = sc.hess.deadband_w;
        strategy.soc_min = sc.hess.battery.soc_min;
        strategy.soc_max = sc.hess.battery.soc_max;
        strategy.ocv_v0 = sc.hess.battery.ocv_v0;
        strategy.ocv_slope = sc.hess.battery.ocv_slope;
        strategy.r_int = sc.hess.battery.r_int;
    }

    /// Without the supercapacitor the battery must absorb the whole surplus,
    /// so its CC ceiling widens to the port current limit.
    double case_i_cc() const {
        return has_sc ? sc.hess.i_cc : sc.hess.batt_current_limit;
    }

    void init_state() {
        state = SimState{};
        const double radius = sc.rotor_radius();
        const double v_mean = sc.wind.mean;
        const double omega0 =
            v_mean > 0.0 ? sc.turbine.lambda_opt * v_mean / radius : 0.0;
        state.pmsg.omega_m = omega0;
        state.pmsg.i_q = k_opt * omega0 * omega0 / sc.pmsg.torque_per_iq();
        state.pmsg.i_d = 0.0;
        state.pmsg.theta_e = 0.0;
        state.v_dc = sc.hess.v_dc_ref;
        state.soc = sc.hess.soc_init;
        state.v_sc = sc.hess.v_sc_init;

        const double t_e0 = plant::electrical_torque(sc.pmsg, state.pmsg.i_d, state.pmsg.i_q);
        const double cu0 = 1.5 * sc.pmsg.r_s *
                           (state.pmsg.i_d * state.pmsg.i_d + state.pmsg.i_q * state.pmsg.i_q);
        const double p_wt0 = omega0 * t_e0 - cu0;

        dispatch_slewed = sc.dispatch_at(0.0) * p_base;
        double p_grid0;
        if (sc.case_study == CaseStudy::NoHess) {
            p_grid0 = p_wt0;
        } else {
            p_grid0 = dispatch_slewed;
        }
        state.i_grid.d = p_grid0 / (1.5 * v_gd);
        state.i_grid.q = 0.0;

        if (has_batt) {
            auto strat0 = strategy;
            const auto split0 = control::hess_power_split(
                p_wt0, p_grid0, sc.hess.battery.ocv(state.soc), state.soc, case_i_cc(), strat0);
            state.i_batt = -split0.p_batt_ref / sc.hess.battery.ocv(state.soc);
            if (has_sc) state.i_sc = -split0.p_sc_ref / state.v_sc;
        }
    }

    // -- converter terminal voltages ---------------------------------------

    /// Machine-side phase voltages (to the DC-link negative rail).
    Abc machine_phase_voltages(const StateVec& y) const {
        if (sc.fidelity == Fidelity::Averaged) {
            return {held.lower.a * y[kVdc], held.lower.b * y[kVdc], held.lower.c * y[kVdc]};
        }
        return {gates.ac[0].s3 ? 0.0 : y[kVdc], gates.ac[1].s3 ? 0.0 : y[kVdc],
                gates.ac[2].s3 ? 0.0 : y[kVdc]};
    }

    Abc grid_phase_voltages(const StateVec& y) const {
        if (sc.fidelity == Fidelity::Averaged) {
            return {held.upper.a * y[kVdc], held.upper.b * y[kVdc], held.upper.c * y[kVdc]};
        }
        return {gates.ac[0].s1 ? y[kVdc] : 0.0, gates.ac[1].s1 ? y[kVdc] : 0.0,
                gates.ac[2].s1 ? y[kVdc] : 0.0};
    }

    std::pair<double, double> port_voltages(const StateVec& y) const {
        if (sc.fidelity == Fidelity::Averaged) {
            return {held.duty_sc * y[kVdc], held.duty_batt * y[kVdc]};
        }
        return {gates.dc.s1 ? y[kVdc] : 0.0, gates.dc.s3 ? 0.0 : y[kVdc]};
    }

    // -- plant dynamics ------------------------------------------------------

    StateVec derivatives(double t_abs, const StateVec& y) const {
        StateVec dy{};

        const double v_wind = plant::wind_speed(sc.wind, t_abs);
        const double t_mech = plant::aero_torque(sc.turbine, v_wind, y[kOmega]);

        // machine
        const plant::PmsgState ps{y[kId], y[kIq], y[kOmega], y[kThetaE]};
        const Dq v_m = park(machine_phase_voltages(y), y[kThetaE]);
        const auto md = plant::pmsg_derivatives(sc.pmsg, ps, v_m.d, v_m.q, t_mech);
        dy[kId] = md.di_d;
        dy[kIq] = md.di_q;
        dy[kOmega] = md.domega_m;
        dy[kThetaE] = md.dtheta_e;

        // grid filter
        const double theta_g = omega_g * t_abs;
        const Dq v_c = park(grid_phase_voltages(y), theta_g);
        const Dq i_g{y[kIgd], y[kIgq]};
        const Dq gd = plant::grid_interface_derivatives(i_g, v_c, {v_gd, 0.0}, sc.grid.l_f,
                                                        sc.grid.r_f, omega_g);
        dy[kIgd] = gd.d;
        dy[kIgq] = gd.q;

        // storage ports
        double p_ports = 0.0;
        if (has_batt) {
            const auto [v_port_sc, v_port_batt] = port_voltages(y);
            const double v_term_b = sc.hess.battery.ocv(y[kSoc]) - y[kIbatt] * sc.hess.battery.r_int;
            dy[kIbatt] = (v_term_b - v_port_batt) / sc.hess.port_inductance;
            dy[kSoc] = -y[kIbatt] / sc.hess.battery.charge_capacity();
            p_ports += v_port_batt * y[kIbatt];
            if (has_sc) {
                const double v_term_sc = y[kVsc] - y[kIsc] * sc.hess.supercap.esr;
                dy[kIsc] = (v_term_sc - v_port_sc) / sc.hess.port_inductance;
                dy[kVsc] = -y[kIsc] / sc.hess.supercap.capacitance;
                p_ports += v_port_sc * y[kIsc];
            }
        }

        // DC link: machine export, storage injection, inverter draw
        const double t_e = plant::electrical_torque(sc.pmsg, y[kId], y[kIq]);
        const double cu_s = 1.5 * sc.pmsg.r_s * (y[kId] * y[kId] + y[kIq] * y[kIq]);
        const double dw_mag =
            1.5 * (sc.pmsg.l_d * y[kId] * dy[kId] + sc.pmsg.l_q * y[kIq] * dy[kIq]);
        const double p_machine = y[kOmega] * t_e - cu_s - dw_mag;
        const double p_inverter = 1.5 * (v_c.d * y[kIgd] + v_c.q * y[kIgq]);
        const double i_net = (p_machine + p_ports - p_inverter) / std::max(y[kVdc], 1.0);
        dy[kVdc] = plant::dc_link_derivative(sc.hess.c_dc, i_net);

        return dy;
    }

    void rk4_step(double t_abs, double dt) {
        StateVec y = pack(state);
        const StateVec k1 = derivatives(t_abs, y);
        StateVec y2;
        for (int i = 0; i < kNumStates; ++i) y2[i] = y[i] + 0.5 * dt * k1[i];
        const StateVec k2 = derivatives(t_abs + 0.5 * dt, y2);
        StateVec y3;
        for (int i = 0; i < kNumStates; ++i) y3[i] = y[i] + 0.5 * dt * k2[i];
        const StateVec k3 = derivatives(t_abs + 0.5 * dt, y3);
        StateVec y4;
        for (int i = 0; i < kNumStates; ++i) y4[i] = y[i] + dt * k3[i];
        const StateVec k4 = derivatives(t_abs + dt, y4);
        for (int i = 0; i < kNumStates; ++i) {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        y[kThetaE] = wrap_angle(y[kThetaE]);
        if (y[kSoc] < 0.0 || y[kSoc] > 1.0) {
            y[kSoc] = std::clamp(y[kSoc], 0.0, 1.0);
            ++batt_soc_clamps;
        }
        state = unpack(y);
    }

    void refresh_gates(double t_abs) {
        const double t_eff = std::max(t_abs - sc.gate_latency, 0.0);
        const double c = modulation::carrier(t_eff, sc.carrier);
        const modulation::ThreePhaseRef& u = held.upper;
        const modulation::ThreePhaseRef& l = held.lower;
        const double us[3] = {u.a, u.b, u.c};
        const double ls[3] = {l.a, l.b, l.c};
        for (int k = 0; k < 3; ++k) {
            double ru = us[k], rl = ls[k];
            if (ru < rl) {  // structurally impossible for m <= 0.5; keep running
                ++anomaly_dominance;
                rl = ru;
            }
            gates.ac[k] = modulation::pwm_leg(ru, rl, c);
        }
        gates.dc = modulation::pwm_leg(held.duty_sc, held.duty_batt, c);
        gates_init = true;
    }

    // -- control -------------------------------------------------------------

    void control_step(double t_abs) {
        const double dt = sc.dt_control;
        const auto& st = state;
        const double v_dc_m = st.v_dc;
        const double omega = st.pmsg.omega_m;
        const double w_e = sc.pmsg.pole_pairs * omega;

        log_v_wind = plant::wind_speed(sc.wind, t_abs);
        log_t_mech = plant::aero_torque(sc.turbine, log_v_wind, omega);

        const double t_e = plant::electrical_torque(sc.pmsg, st.pmsg.i_d, st.pmsg.i_q);
        const double cu_s =
            1.5 * sc.pmsg.r_s * (st.pmsg.i_d * st.pmsg.i_d + st.pmsg.i_q * st.pmsg.i_q);
        log_p_wt = omega * t_e - cu_s;
        log_p_grid = 1.5 * v_gd * st.i_grid.d;

        // machine side: optimal-torque command into the current loops
        const double t_ref = control::mppt_torque_ref(omega, k_opt);
        const double v_lim_m = std::min(sc.gains.machine_v_limit, 0.2475 * v_dc_m);
        pi_md.limit = v_lim_m;
        pi_mq.limit = v_lim_m;
        const auto mres = control::machine_current_control(sc.pmsg, t_ref, st.pmsg, pi_md,
                                                           pi_mq, v_lim_m, dt);
        const double theta_e_adv = st.pmsg.theta_e + 0.5 * w_e * dt;
        const auto vref_m =
            control::references_from_voltages({mres.v_d, mres.v_q}, theta_e_adv, v_dc_m);
        if (vref_m.overmodulated) ++anomaly_overmod;

        // grid side
        control::GridMeasurements gm;
        gm.v_gd = v_gd;
        gm.i_d = st.i_grid.d;
        gm.i_q = st.i_grid.q;
        gm.p = log_p_grid;
        gm.q = -1.5 * v_gd * st.i_grid.q;
        gm.v_dc = v_dc_m;
        gm.omega = omega_g;
        const double v_lim_g = 0.25 * v_dc_m * 0.995;
        grid_pi.id.limit = v_lim_g;
        grid_pi.iq.limit = v_lim_g;

        control::GridControlResult gres;
        if (sc.case_study == CaseStudy::NoHess) {
            // grid side owns the DC link: map the link correction (discharge
            // positive into the link) to an AC-side export current
            const double corr =
                control::dc_link_voltage_control(sc.hess.v_dc_ref, v_dc_m, pi_vdc, dt);
            const double i_d_ref = -corr * v_dc_m / (1.5 * v_gd);
            gres = control::grid_current_control(i_d_ref, 0.0, gm, grid_pi, sc.grid,
                                                 i_grid_limit, dt);
            held.p_dispatch = 0.0;
        } else {
            const double target = sc.dispatch_at(t_abs) * p_base;
            const double max_step = sc.gains.dispatch_slew_w_per_s * dt;
            dispatch_slewed += std::clamp(target - dispatch_slewed, -max_step, max_step);
            control::DispatchCommand cmd{dispatch_slewed / p_base, 0.0};
            gres = control::grid_power_control(cmd, p_base, gm, grid_pi, sc.grid,
                                               i_grid_limit, dt);
            held.p_dispatch = dispatch_slewed;
        }
        const double theta_g_adv = omega_g * (t_abs + 0.5 * dt);
        const auto vref_g =
            control::references_from_voltages({gres.v_d, gres.v_q}, theta_g_adv, v_dc_m);
        if (vref_g.overmodulated) ++anomaly_overmod;

        // storage split and port duties
        held.split = control::HessSplit{};
        held.i_batt_ref = 0.0;
        held.i_sc_ref = 0.0;
        if (has_batt) {
            const double v_term_b =
                sc.hess.battery.ocv(st.soc) - st.i_batt * sc.hess.battery.r_int;
            held.split = control::hess_power_split(log_p_wt, log_p_grid, v_term_b, st.soc,
                                                   case_i_cc(), strategy);
            const double corr =
                control::dc_link_voltage_control(sc.hess.v_dc_ref, v_dc_m, pi_vdc, dt);
            double i_b_ref = -held.split.p_batt_ref / std::max(v_term_b, 1.0);
            double i_s_ref = 0.0;
            if (has_sc) {
                const double v_term_sc = st.v_sc - st.i_sc * sc.hess.supercap.esr;
                i_s_ref = -held.split.p_sc_ref / std::max(v_term_sc, 1.0) + corr;
                i_s_ref = std::clamp(i_s_ref, -sc.hess.sc_current_limit,
                                     sc.hess.sc_current_limit);
            } else {
                i_b_ref += corr;
            }
            i_b_ref = std::clamp(i_b_ref, -sc.hess.batt_current_limit,
                                 sc.hess.batt_current_limit);
            held.i_batt_ref = i_b_ref;
            held.i_sc_ref = i_s_ref;

            const auto duty_b = control::port_current_control(
                i_b_ref, st.i_batt, sc.hess.battery.v_nominal, v_dc_m, pi_port_batt,
                sc.hess.duty_batt_min, sc.hess.duty_batt_max, dt);
            held.duty_batt = duty_b.duty;
            if (has_sc) {
                const auto duty_s = control::port_current_control(
                    i_s_ref, st.i_sc, sc.hess.supercap.v_nominal, v_dc_m, pi_port_sc,
                    sc.hess.duty_sc_min, sc.hess.duty_sc_max, dt);
                held.duty_sc = duty_s.duty;
            } else {
                held.duty_sc = sc.hess.duty_sc_max;  // keep the upper port parked high
            }
        }

        // dominance offsets across the three shared legs
        auto [upper, lower] = modulation::apply_offsets(vref_g.refs, vref_m.refs);
        clamp_refs(upper);
        clamp_refs(lower);
        held.upper = upper;
        held.lower = lower;
        held.t_e_cmd = t_ref;
        held.m_upper = vref_g.implied_m;
        held.m_lower = vref_m.implied_m;

        // supercapacitor housekeeping
        if (has_sc && st.v_sc < sc.hess.supercap.v_floor) ++sc_undervoltage;

        compute_residual(t_abs);
    }

    void clamp_refs(modulation::ThreePhaseRef& r) {
        for (double* v : {&r.a, &r.b, &r.c}) {
            if (*v < -1e-9 || *v > 1.0 + 1e-9) ++anomaly_clamp;
            *v = std::clamp(*v, 0.0, 1.0);
        }
    }

    /// Conservation residual of the whole plant, evaluated from one derivative
    /// call at the current state and held controls. Any coupling sign error
    /// shows up here at full scale.
    void compute_residual(double t_abs) {
        if (sc.fidelity == Fidelity::Switched && !gates_init) refresh_gates(t_abs);
        const StateVec y = pack(state);
        const StateVec dy = derivatives(t_abs, y);

        const double t_mech = log_t_mech;
        const double p_mech = t_mech * y[kOmega];
        const double p_grid = 1.5 * v_gd * y[kIgd];
        const double v_term_b = sc.hess.battery.ocv(y[kSoc]) - y[kIbatt] * sc.hess.battery.r_int;
        const double v_term_sc = y[kVsc] - y[kIsc] * sc.hess.supercap.esr;
        const double p_batt_abs = has_batt ? -v_term_b * y[kIbatt] : 0.0;
        const double p_sc_abs = has_sc ? -v_term_sc * y[kIsc] : 0.0;
        const double loss = 1.5 * sc.pmsg.r_s * (y[kId] * y[kId] + y[kIq] * y[kIq]) +
                            1.5 * sc.grid.r_f * (y[kIgd] * y[kIgd] + y[kIgq] * y[kIgq]);
        const double d_stored =
            sc.pmsg.inertia * y[kOmega] * dy[kOmega] +
            1.5 * (sc.pmsg.l_d * y[kId] * dy[kId] + sc.pmsg.l_q * y[kIq] * dy[kIq]) +
            1.5 * sc.grid.l_f * (y[kIgd] * dy[kIgd] + y[kIgq] * dy[kIgq]) +
            sc.hess.c_dc * y[kVdc] * dy[kVdc] +
            (has_batt ? sc.hess.port_inductance * y[kIbatt] * dy[kIbatt] : 0.0) +
            (has_sc ? sc.hess.port_inductance * y[kIsc] * dy[kIsc] : 0.0);

        log_residual = p_mech - p_grid - p_batt_abs - p_sc_abs - loss - d_stored;
    }

    void divergence_check(double t_abs) const {
        const auto fail = [&](const std::string& what) {
            throw NumericDivergence(t_abs, "state diverged at t = " + std::to_string(t_abs) +
                                               " s: " + what);
        };
        if (!(std::abs(state.pmsg.i_d) < i_mach_bound) ||
            !(std::abs(state.pmsg.i_q) < i_mach_bound)) {
            fail("machine current beyond 10x rated");
        }
        if (!(std::abs(state.pmsg.omega_m) < omega_bound)) fail("rotor speed beyond 10x rated");
        if (!(state.v_dc > 0.05 * sc.hess.v_dc_ref) ||
            !(state.v_dc < 10.0 * sc.hess.v_dc_ref)) {
            fail("DC-link voltage outside (0.05, 10)x reference");
        }
        if (!(std::abs(state.i_grid.d) < i_grid_bound) ||
            !(std::abs(state.i_grid.q) < i_grid_bound)) {
            fail("grid current beyond 10x rated");
        }
        if (!(std::abs(state.i_batt) < 10.0 * sc.hess.batt_current_limit)) {
            fail("battery current beyond 10x limit");
        }
        if (!(std::abs(state.i_sc) < 10.0 * sc.hess.sc_current_limit)) {
            fail("supercapacitor current beyond 10x limit");
        }
        if (!(state.v_sc >= 0.0) || !(state.v_sc < 10.0 * sc.hess.supercap.v_nominal)) {
            fail("supercapacitor voltage outside [0, 10)x nominal");
        }
    }

    void advance_period() {
        const double t0 = double(period) * sc.dt_control;
        control_step(t0);
        for (long long j = 0; j < steps_per_period; ++j) {
            const double tj = t0 + double(j) * sc.dt_plant;
            if (sc.fidelity == Fidelity::Switched) refresh_gates(tj);
            rk4_step(tj, sc.dt_plant);
        }
        ++period;
        t = double(period) * sc.dt_control;
        divergence_check(t);
    }
};

Engine::Engine(const Scenario& scenario) : impl_(std::make_unique<Impl>(scenario)) {}
Engine::~Engine() = default;
Engine::Engine(Engine&&) noexcept = default;
Engine& Engine::operator=(Engine&&) noexcept = default;

void Engine::step() { impl_->advance_period(); }
double Engine::time() const { return impl_->t; }
const SimState& Engine::state() const { return impl_->state; }
SimState& Engine::state() { return impl_->state; }

namespace {

std::vector<std::string> column_names(bool switched) {
    std::vector<std::string> c = {
        "t_seconds",      "v_wind_mps",     "omega_m_rads",    "t_mech_nm",
        "t_e_cmd_nm",     "t_e_nm",         "p_wt_watts",      "p_grid_watts",
        "p_dispatch_watts", "p_batt_watts", "p_sc_watts",      "p_batt_ref_watts",
        "p_sc_ref_watts", "batt_mode",      "i_batt_ref_amps", "v_dc_volts",
        "i_batt_amps",    "i_sc_amps",      "soc_batt",        "v_sc_volts",
        "i_grid_a_amps",  "i_grid_b_amps",  "i_grid_c_amps",   "i_mach_a_amps",
        "i_mach_b_amps",  "i_mach_c_amps",  "m_index_upper",   "m_index_lower",
        "power_residual_watts", "anomaly_clamp", "anomaly_overmod",
        "anomaly_dominance", "batt_soc_clamp_count", "sc_undervoltage_count",
    };
    if (switched) {
        for (const char* leg : {"a", "b", "c", "dc"}) {
            for (const char* sw : {"s1", "s2", "s3"}) {
                c.push_back(std::string("gate_") + leg + "_" + sw);
            }
        }
    }
    return c;
}

}  // namespace

TimeSeries Engine::run() {
    Impl& im = *impl_;
    const bool switched = im.sc.fidelity == Fidelity::Switched;
    TimeSeries ts(column_names(switched));
    ts.reserve(std::size_t(im.periods_total / std::max(im.log_every, 1LL) + 2));

    std::vector<double> row;
    row.reserve(ts.cols());
    while (im.period < im.periods_total) {
        const bool log_now = (im.period % im.log_every) == 0;
        const double t0 = double(im.period) * im.sc.dt_control;
        im.control_step(t0);
        if (log_now) {
            const SimState& st = im.state;
            const double t_e =
                plant::electrical_torque(im.sc.pmsg, st.pmsg.i_d, st.pmsg.i_q);
            const double v_term_b =
                im.sc.hess.battery.ocv(st.soc) - st.i_batt * im.sc.hess.battery.r_int;
            const double v_term_sc = st.v_sc - st.i_sc * im.sc.hess.supercap.esr;
            const Abc i_m = inverse_park({st.pmsg.i_d, st.pmsg.i_q}, st.pmsg.theta_e);
            const Abc i_g = inverse_park(st.i_grid, im.omega_g * t0);

            row.assign({
                t0,
                im.log_v_wind,
                st.pmsg.omega_m,
                im.log_t_mech,
                im.held.t_e_cmd,
                t_e,
                im.log_p_wt,
                im.log_p_grid,
                im.held.p_dispatch,
                im.has_batt ? v_term_b * st.i_batt : 0.0,
                im.has_sc ? v_term_sc * st.i_sc : 0.0,
                im.held.split.p_batt_ref,
                im.held.split.p_sc_ref,
                double(int(im.held.split.batt_mode)),
                im.held.i_batt_ref,
                st.v_dc,
                st.i_batt,
                st.i_sc,
                st.soc,
                st.v_sc,
                i_g[0], i_g[1], i_g[2],
                i_m[0], i_m[1], i_m[2],
                im.held.m_upper,
                im.held.m_lower,
                im.log_residual,
                double(im.anomaly_clamp),
                double(im.anomaly_overmod),
                double(im.anomaly_dominance),
                double(im.batt_soc_clamps),
                double(im.sc_undervoltage),
            });
            if (switched) {
                if (!im.gates_init) im.refresh_gates(t0);
                for (const auto& leg :
                     {im.gates.ac[0], im.gates.ac[1], im.gates.ac[2], im.gates.dc}) {
                    row.push_back(leg.s1 ? 1.0 : 0.0);
                    row.push_back(leg.s2 ? 1.0 : 0.0);
                    row.push_back(leg.s3 ? 1.0 : 0.0);
                }
            }
            ts.push_row(row);
        }
        for (long long j = 0; j < im.steps_per_period; ++j) {
            const double tj = t0 + double(j) * im.sc.dt_plant;
            if (switched) im.refresh_gates(tj);
            im.rk4_step(tj, im.sc.dt_plant);
        }
        ++im.period;
        im.t = double(im.period) * im.sc.dt_control;
        im.divergence_check(im.t);
    }
    return ts;
}

TimeSeries run(const Scenario& scenario) {
    Engine e(scenario);
    return e.run();
}

Scenario default_scenario(CaseStudy case_study) {
    Scenario sc;
    sc.case_study = case_study;
    sc.wind.mean = 6.0;
    sc.wind.noise_amplitude = 0.3;
    switch (case_study) {
        case CaseStudy::NoHess:
            sc.duration = 25.0;
            sc.wind.gust_start = 8.0;
            sc.wind.gust_duration = 2.0;
            sc.wind.gust_amplitude = 3.0;
            sc.wind.ramp_start = 14.0;
            sc.wind.ramp_end = 20.0;
            sc.wind.ramp_slope = 0.15;
            break;
        case CaseStudy::BatteryOnly:
        case CaseStudy::FullHess:
            sc.duration = 50.0;
            sc.wind.gust_start = 10.0;
            sc.wind.gust_duration = 5.0;
            sc.wind.gust_amplitude = 2.0;
            sc.wind.ramp_start = 25.0;
            sc.wind.ramp_end = 35.0;
            sc.wind.ramp_slope = 0.1;
            sc.dispatch_schedule = {{0.0, 0.3}, {20.0, 0.4}, {35.0, 0.5}};
            break;
    }
    return sc;
}

}  // namespace mpconv::engine

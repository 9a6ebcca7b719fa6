#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mpconv/control.hpp"
#include "support/analysis.hpp"

using namespace mpconv;
using namespace mpconv::control;

TEST_CASE("pi regulator saturates and does not wind up") {
    PiState pi{2.0, 50.0, 10.0, 1.0};
    // drive hard into saturation
    for (int i = 0; i < 1000; ++i) {
        const double y = pi.step(100.0, 1e-3);
        CHECK(y == 10.0);
        CHECK(std::abs(pi.integ) <= pi.limit / pi.ki + 1e-12);
    }
    CHECK(pi.saturated);
    // recovery: once the error flips, the output leaves the rail immediately
    const double y = pi.step(-100.0, 1e-3);
    CHECK(y < 10.0);
}

TEST_CASE("pi regulator tracks within limits") {
    PiState pi{1.0, 20.0, 100.0, 1.0};
    // first-order plant dx/dt = (u - x) / tau
    double x = 0.0;
    const double dt = 1e-3;
    for (int i = 0; i < 5000; ++i) {
        const double u = pi.step(1.0 - x, dt);
        x += dt * (u - x) / 0.05;
    }
    CHECK(x == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(!pi.saturated);
}

TEST_CASE("hess split covers the worked examples") {
    HessStrategy strat;
    const auto idle = hess_power_split(1e6, 1e6, 750.0, 0.5, 50.0, strat);
    CHECK(idle.batt_mode == BattMode::Idle);
    CHECK(idle.p_batt_ref == 0.0);
    CHECK(idle.p_sc_ref == 0.0);

    const auto charge = hess_power_split(1.1e6, 1.0e6, 750.0, 0.5, 50.0, strat);
    CHECK(charge.batt_mode == BattMode::CC);
    CHECK(charge.p_batt_ref == doctest::Approx(37.5e3));
    CHECK(charge.p_sc_ref == doctest::Approx(62.5e3));
    CHECK(charge.cc_saturated);

    const auto discharge = hess_power_split(0.9e6, 1.0e6, 750.0, 0.5, 50.0, strat);
    CHECK(discharge.p_batt_ref == doctest::Approx(-37.5e3));
    CHECK(discharge.p_sc_ref == doctest::Approx(-62.5e3));
}

TEST_CASE("hess split conserves power in every mode") {
    HessStrategy strat;
    analysis::Rng rng(31);
    for (int k = 0; k < 20000; ++k) {
        const double p_wt = rng.uniform(0.0, 1.6e6);
        const double p_disp = rng.uniform(0.0, 1.6e6);
        const double soc = rng.uniform(0.0, 1.0);
        const double v_batt = rng.uniform(650.0, 820.0);
        const auto s = hess_power_split(p_wt, p_disp, v_batt, soc, 50.0, strat);
        CHECK(s.p_batt_ref + s.p_sc_ref == doctest::Approx(p_wt - p_disp).epsilon(1e-12));
        if (s.batt_mode == BattMode::CC && s.cc_saturated) {
            CHECK(std::abs(s.p_batt_ref) == doctest::Approx(50.0 * v_batt));
        }
    }
}

TEST_CASE("hess split honours soc limits and the deadband") {
    HessStrategy strat;
    // full battery must not charge
    const auto full = hess_power_split(1.2e6, 1.0e6, 750.0, 0.95, 50.0, strat);
    CHECK(full.batt_mode == BattMode::Idle);
    CHECK(full.p_batt_ref == 0.0);
    CHECK(full.p_sc_ref == doctest::Approx(0.2e6));
    // empty battery must not discharge
    const auto empty = hess_power_split(0.8e6, 1.0e6, 750.0, 0.05, 50.0, strat);
    CHECK(empty.batt_mode == BattMode::Idle);
    CHECK(empty.p_sc_ref == doctest::Approx(-0.2e6));
    // deadband
    const auto tiny = hess_power_split(1.0e6 + 5e3, 1.0e6, 750.0, 0.5, 50.0, strat);
    CHECK(tiny.batt_mode == BattMode::Idle);
}

TEST_CASE("hess split tapers the charge current in CV mode") {
    HessStrategy strat;
    strat.soc_max = 1.0;  // let the voltage limit act before the soc limit
    // soc high enough that CC charging would push the terminal past 800 V
    const double soc = 0.99;  // model OCV 799 V, CC terminal 801.5 V
    const double v_batt = strat.ocv_v0 + strat.ocv_slope * soc;
    const auto s = hess_power_split(1.5e6, 1.0e6, v_batt, soc, 50.0, strat);
    CHECK(s.batt_mode == BattMode::CV);
    CHECK(strat.cv_engaged);
    const double i_cv = (strat.v_cv - 799.0) / strat.r_int;
    CHECK(s.p_batt_ref == doctest::Approx(i_cv * strat.v_cv));
    CHECK(s.p_batt_ref + s.p_sc_ref == doctest::Approx(0.5e6));
    // discharge demand drops CV immediately
    const auto d = hess_power_split(0.5e6, 1.0e6, v_batt, soc, 50.0, strat);
    CHECK(d.batt_mode == BattMode::CC);
    CHECK(!strat.cv_engaged);
}

TEST_CASE("optimal torque law is quadratic") {
    CHECK(mppt_torque_ref(0.0, 47000.0) == 0.0);
    const double t1 = mppt_torque_ref(1.3, 47000.0);
    CHECK(mppt_torque_ref(2.6, 47000.0) == doctest::Approx(4.0 * t1));
}

TEST_CASE("mppt equilibrium sits on the cp peak") {
    plant::TurbineParams tb;
    tb.radius = tb.sized_radius();
    const double v = 6.0;
    const double omega = tb.lambda_opt * v / tb.radius;
    // cp(lambda_opt) of the fitted curve sits within a few 1e-5 of cp_max
    const double t_aero = plant::aero_torque(tb, v, omega);
    CHECK(mppt_torque_ref(omega, tb.k_opt()) == doctest::Approx(t_aero).epsilon(1e-3));
}

TEST_CASE("machine current control: feed-forward only at the reference") {
    plant::PmsgParams pm;
    PiState pid{0.94, 18.85, 500.0, 1.0};
    PiState piq = pid;
    const double t_ref = 8880.0;
    plant::PmsgState st;
    st.i_d = 0.0;
    st.i_q = 100.0;  // exactly the reference for 8880 N*m
    st.omega_m = 2.0;
    const auto r = machine_current_control(pm, t_ref, st, pid, piq, 500.0, 1e-4);
    CHECK(r.i_q_ref == doctest::Approx(100.0));
    const double w_e = pm.pole_pairs * st.omega_m;
    CHECK(r.v_q == doctest::Approx(pm.r_s * 100.0 + w_e * pm.psi_m));
    CHECK(r.v_d == doctest::Approx(-w_e * pm.l_q * 100.0));
    CHECK(!r.saturated);
}

TEST_CASE("machine current loop settles the torque within 2% in 50 ms") {
    plant::PmsgParams pm;
    PiState pid{0.94, 18.85, 500.0, 1.0};
    PiState piq = pid;
    plant::PmsgState st;
    st.omega_m = 1.6;  // held by a large inertia over this window
    const double t_ref = 120e3;
    const double dt_ctrl = 1e-4;
    const double dt_plant = 2e-5;
    double v_d = 0.0, v_q = 0.0;
    double t_settle = -1.0;
    for (int k = 0; k < 1000; ++k) {  // 100 ms
        const auto out = machine_current_control(pm, t_ref, st, pid, piq, 500.0, dt_ctrl);
        v_d = out.v_d;
        v_q = out.v_q;
        for (int j = 0; j < 5; ++j) {
            const auto d = plant::pmsg_derivatives(pm, st, v_d, v_q, 0.0);
            st.i_d += dt_plant * d.di_d;
            st.i_q += dt_plant * d.di_q;
        }
        const double t_e = plant::electrical_torque(pm, st.i_d, st.i_q);
        if (t_settle < 0.0 && std::abs(t_e - t_ref) <= 0.02 * t_ref) {
            t_settle = (k + 1) * dt_ctrl;
        }
    }
    const double t_e = plant::electrical_torque(pm, st.i_d, st.i_q);
    CHECK(std::abs(t_e - t_ref) <= 0.02 * t_ref);
    CHECK(t_settle > 0.0);
    CHECK(t_settle <= 0.05);
}

namespace {

struct GridLoop {
    plant::GridParams g;
    GridPiSet pi;
    Dq i{0.0, 0.0};
    double v_dc = 2000.0;

    GridLoop() {
        pi.id = {0.94, 6.28, 0.25 * v_dc, 1.0};
        pi.iq = pi.id;
        pi.power = {2e-4, 0.05, 2556.0, 1.0};
        pi.reactive = pi.power;
    }

    GridMeasurements meas() const {
        GridMeasurements m;
        m.v_gd = g.v_phase_peak();
        m.i_d = i.d;
        m.i_q = i.q;
        m.p = 1.5 * m.v_gd * i.d;
        m.q = -1.5 * m.v_gd * i.q;
        m.v_dc = v_dc;
        m.omega = g.omega();
        return m;
    }

    void advance(double v_d, double v_q, double dt_ctrl) {
        const int sub = 5;
        const double dt = dt_ctrl / sub;
        for (int j = 0; j < sub; ++j) {
            const auto d = plant::grid_interface_derivatives(
                i, {v_d, v_q}, {g.v_phase_peak(), 0.0}, g.l_f, g.r_f, g.omega());
            i.d += dt * d.d;
            i.q += dt * d.q;
        }
    }
};

}  // namespace

TEST_CASE("grid power loop reaches the dispatch setpoint") {
    GridLoop loop;
    DispatchCommand cmd{0.3, 0.0};
    const double p_base = 1.5e6;
    const double dt = 1e-4;
    for (int k = 0; k < 3000; ++k) {  // 300 ms
        const auto out = grid_power_control(cmd, p_base, loop.meas(), loop.pi, loop.g,
                                            2556.0, dt);
        loop.advance(out.v_d, out.v_q, dt);
    }
    const auto m = loop.meas();
    CHECK(m.p == doctest::Approx(0.3 * p_base).epsilon(0.02));
    CHECK(m.i_d == doctest::Approx(0.3 * p_base / (1.5 * m.v_gd)).epsilon(0.02));
    CHECK(std::abs(m.i_q) < 10.0);
}

TEST_CASE("grid control clamps the current reference") {
    GridLoop loop;
    DispatchCommand cmd{1.2, 0.0};
    const double dt = 1e-4;
    // enormous power error: reference must stop at the limit
    const auto out = grid_power_control(cmd, 1.5e7, loop.meas(), loop.pi, loop.g, 2556.0, dt);
    CHECK(out.current_limited);
    CHECK(std::abs(out.i_d_ref) <= 2556.0);
    CHECK_THROWS_AS(grid_power_control({1.5, 0.0}, 1.5e6, loop.meas(), loop.pi, loop.g,
                                       2556.0, dt),
                    ValidationError);
}

TEST_CASE("dc link regulator output is zero at the reference and clamps") {
    PiState pi{20.0, 400.0, 2500.0, 1.0};
    CHECK(dc_link_voltage_control(2000.0, 2000.0, pi, 1e-4) == 0.0);
    PiState pi2{20.0, 400.0, 2500.0, 1.0};
    const double big = dc_link_voltage_control(2000.0, 1000.0, pi2, 1e-4);
    CHECK(big == 2500.0);
    CHECK(pi2.saturated);
}

TEST_CASE("dc link loop recovers a half-pu load step within 100 ms") {
    // supercapacitor port holding the link against a 750 kW step
    PiState pi_v{20.0, 400.0, 2500.0, 1.0};
    PiState pi_i{3.3, 30.0, 600.0, 1.0};
    const double c_dc = 0.1, l_port = 1.05e-3;
    double v_dc = 2000.0, i_sc = 0.0, v_sc = 1250.0;
    const double dt_ctrl = 1e-4, dt = 2e-5;
    double duty = 0.625;
    double worst_after_100ms = 0.0;
    for (int k = 0; k < 3000; ++k) {  // 300 ms
        const double corr = dc_link_voltage_control(2000.0, v_dc, pi_v, dt_ctrl);
        const auto d = port_current_control(corr, i_sc, 1250.0, v_dc, pi_i, 0.5, 0.95, dt_ctrl);
        duty = d.duty;
        for (int j = 0; j < 5; ++j) {
            const double v_port = duty * v_dc;
            const double di = (v_sc - i_sc * 0.01 - v_port) / l_port;
            const double load = 750e3 / v_dc;  // constant-power draw
            const double dv = (duty * i_sc - load) / c_dc;
            i_sc += dt * di;
            v_dc += dt * dv;
            v_sc -= dt * i_sc / 1000.0;
        }
        const double t = (k + 1) * dt_ctrl;
        if (t >= 0.1) worst_after_100ms = std::max(worst_after_100ms, std::abs(v_dc - 2000.0));
    }
    CHECK(worst_after_100ms <= 20.0);  // within 1%
}

TEST_CASE("port duty nominal points and bounds") {
    PiState pi{3.3, 150.0, 600.0, 1.0};
    const auto sc = port_current_control(0.0, 0.0, 1250.0, 2000.0, pi, 0.5, 0.95, 1e-4);
    CHECK(sc.duty == doctest::Approx(0.625));
    PiState pi2{3.3, 150.0, 600.0, 1.0};
    const auto batt = port_current_control(0.0, 0.0, 750.0, 2000.0, pi2, 0.05, 0.5, 1e-4);
    CHECK(batt.duty == doctest::Approx(0.375));
    // dominance of the DC leg holds by interval ordering
    CHECK(batt.duty <= 0.5);
    CHECK(sc.duty >= 0.5);
    PiState pi3{100.0, 0.0, 5000.0, 1.0};
    const auto clamped = port_current_control(1000.0, 0.0, 750.0, 2000.0, pi3, 0.05, 0.5, 1e-4);
    CHECK(clamped.clamped);
    CHECK(clamped.duty == 0.05);
}

TEST_CASE("battery port current step settles within 5% in 20 ms") {
    PiState pi{3.3, 150.0, 600.0, 1.0};
    plant::BatteryParams b;
    double i = 0.0, soc = 0.5;
    const double v_dc = 2000.0, l_port = 1.05e-3;
    const double dt_ctrl = 1e-4, dt = 2e-5;
    double t_settle = -1.0;
    for (int k = 0; k < 600; ++k) {  // 60 ms
        const auto d = port_current_control(50.0, i, b.v_nominal, v_dc, pi, 0.05, 0.5, dt_ctrl);
        for (int j = 0; j < 5; ++j) {
            const double v_term = b.ocv(soc) - i * b.r_int;
            i += dt * (v_term - d.duty * v_dc) / l_port;
            soc -= dt * i / b.charge_capacity();
        }
        if (t_settle < 0.0 && std::abs(i - 50.0) <= 0.05 * 50.0) t_settle = (k + 1) * dt_ctrl;
    }
    CHECK(std::abs(i - 50.0) <= 0.05 * 50.0);
    CHECK(t_settle > 0.0);
    CHECK(t_settle <= 0.02);
}

TEST_CASE("voltage references: zero vector, sizing point, overmodulation clamp") {
    const auto zero = references_from_voltages({0.0, 0.0}, 0.7, 2000.0);
    CHECK(zero.refs.a == doctest::Approx(0.5));
    CHECK(zero.refs.b == doctest::Approx(0.5));
    CHECK(zero.refs.c == doctest::Approx(0.5));
    CHECK(!zero.overmodulated);

    // 575 V line-line RMS service: phase peak 469.5 V on a 2000 V link
    const double v_peak = 575.0 * std::sqrt(2.0 / 3.0);
    const auto sized = references_from_voltages({v_peak, 0.0}, 0.0, 2000.0);
    CHECK(sized.implied_m == doctest::Approx(0.4695).epsilon(1e-3));
    CHECK(!sized.overmodulated);

    const auto clamped = references_from_voltages({600.0, 0.0}, 0.0, 2000.0);
    CHECK(clamped.overmodulated);
    CHECK(clamped.implied_m == doctest::Approx(0.5));
    CHECK(clamped.refs.a == doctest::Approx(0.5 + 500.0 / 2000.0));
}

TEST_CASE("references plus offsets keep dominance for any in-budget commands") {
    analysis::Rng rng(17);
    for (int k = 0; k < 100000; ++k) {
        const double v_dc = 2000.0;
        const double mag_u = rng.uniform(0.0, 0.2499 * v_dc);
        const double mag_l = rng.uniform(0.0, 0.2499 * v_dc);
        const double ang_u = rng.uniform(0.0, 2.0 * M_PI);
        const double ang_l = rng.uniform(0.0, 2.0 * M_PI);
        const double th_u = rng.uniform(0.0, 2.0 * M_PI);
        const double th_l = rng.uniform(0.0, 2.0 * M_PI);
        const auto u = references_from_voltages(
            {mag_u * std::cos(ang_u), mag_u * std::sin(ang_u)}, th_u, v_dc);
        const auto l = references_from_voltages(
            {mag_l * std::cos(ang_l), mag_l * std::sin(ang_l)}, th_l, v_dc);
        const auto [uu, ll] = modulation::apply_offsets(u.refs, l.refs);
        CHECK(uu.a >= ll.a);
        CHECK(uu.b >= ll.b);
        CHECK(uu.c >= ll.c);
    }
}

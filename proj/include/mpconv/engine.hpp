#ifndef MPCONV_ENGINE_HPP
#define MPCONV_ENGINE_HPP

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "mpconv/control.hpp"
#include "mpconv/modulation.hpp"
#include "mpconv/plant.hpp"
#include "mpconv/timeseries.hpp"

namespace mpconv::engine {

enum class CaseStudy { NoHess = 0, BatteryOnly = 1, FullHess = 2 };
enum class Fidelity { Averaged = 0, Switched = 1 };

/// Storage-side electrical parameters shared by the DC/DC leg and its control.
struct HessParams {
    plant::BatteryParams battery;
    plant::SupercapParams supercap;
    double soc_init = 0.5;
    double v_sc_init = 1250.0;
    double c_dc = 0.1;           ///< DC-link capacitance [F]
    double v_dc_ref = 2000.0;    ///< [V]
    double port_inductance = 1.05e-3;  ///< per-port filter + embedded inductance [H]
    double i_cc = 50.0;          ///< battery CC magnitude with supercapacitor present [A]
    double v_cv = 800.0;         ///< battery CV threshold [V]
    double cv_hysteresis = 5.0;  ///< [V]
    double deadband_w = 15e3;    ///< battery idle band [W]
    double batt_current_limit = 1000.0;  ///< [A]
    double sc_current_limit = 2000.0;    ///< [A]
    double duty_batt_min = 0.05, duty_batt_max = 0.5;
    double duty_sc_min = 0.5, duty_sc_max = 0.95;

    void validate() const;
};

/// Controller gains. Current loops follow kp = w_bw*L, ki = w_bw*R with
/// w_bw ~ 2*pi*500; outer loops run about a decade slower.
struct ControlGains {
    double machine_current_kp = 0.94;
    double machine_current_ki = 18.85;
    double machine_v_limit = 500.0;  ///< [V]
    double grid_current_kp = 0.94;
    double grid_current_ki = 6.28;
    double grid_power_kp = 2e-4;   ///< [A/W]
    double grid_power_ki = 0.05;   ///< [A/(W*s)]
    double grid_current_limit_pu = 1.2;
    double dc_link_kp = 20.0;   ///< [A/V]
    double dc_link_ki = 400.0;  ///< [A/(V*s)]
    double dc_link_limit = 2500.0;  ///< [A]
    double port_batt_kp = 3.3, port_batt_ki = 150.0, port_batt_v_limit = 600.0;
    double port_sc_kp = 3.3, port_sc_ki = 30.0, port_sc_v_limit = 600.0;
    double dispatch_slew_w_per_s = 3e6;
    double antiwindup = 1.0;

    void validate() const;
};

/// Complete description of one simulation run. Identical scenarios produce
/// bit-identical results.
struct Scenario {
    CaseStudy case_study = CaseStudy::FullHess;
    Fidelity fidelity = Fidelity::Averaged;
    double duration = 50.0;       ///< [s]
    double dt_plant = 20e-6;      ///< [s]; switched runs default to 1e-6
    double dt_control = 100e-6;   ///< [s]; integer multiple of dt_plant
    double log_interval = 100e-6; ///< [s]; integer multiple of dt_control
    std::uint64_t seed = 1;       ///< feeds the wind-noise phase bank

    plant::WindProfile wind;
    std::vector<std::pair<double, double>> dispatch_schedule;  ///< (t [s], p [pu])

    plant::PmsgParams pmsg;
    plant::TurbineParams turbine;
    plant::GridParams grid;
    HessParams hess;
    ControlGains gains;
    modulation::CarrierConfig carrier;
    double gate_latency = 0.0;  ///< switched-mode gate update delay [s]

    void validate() const;
    /// Dispatch setpoint [pu] in force at time t (0 before the first entry).
    double dispatch_at(double t) const;
    /// Effective rotor radius (auto-sized when the configured radius is <= 0).
    double rotor_radius() const;
};

/// Continuous plant state advanced by the integrator.
struct SimState {
    plant::PmsgState pmsg;
    double v_dc = 2000.0;
    Dq i_grid;            ///< filter current, grid-voltage frame [A]
    double soc = 0.5;
    double v_sc = 1250.0;
    double i_batt = 0.0;  ///< discharge-positive [A]
    double i_sc = 0.0;    ///< discharge-positive [A]
};

/// Fixed-step closed-loop simulator: plant integration at dt_plant with
/// classical 4th-order Runge-Kutta, control updates with zero-order hold every
/// dt_control, converter voltages from the duty-average model or from gate
/// states depending on fidelity.
class Engine {
public:
    explicit Engine(const Scenario& scenario);
    ~Engine();
    Engine(Engine&&) noexcept;
    Engine& operator=(Engine&&) noexcept;

    /// Advance one control period (control update + plant sub-steps).
    /// Throws NumericDivergence when a state leaves its sane envelope.
    void step();

    double time() const;
    const SimState& state() const;
    SimState& state();

    /// Run to the scenario duration and return the log.
    TimeSeries run();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper: build an engine and run the whole scenario.
TimeSeries run(const Scenario& scenario);

/// Preset scenarios mirroring the three study configurations.
Scenario default_scenario(CaseStudy case_study);

}  // namespace mpconv::engine

#endif

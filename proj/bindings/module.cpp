#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mpconv/config.hpp"
#include "mpconv/engine.hpp"
#include "mpconv/modulation.hpp"
#include "mpconv/plant.hpp"
#include "mpconv/shortcircuit.hpp"
#include "mpconv/timeseries.hpp"

namespace py = pybind11;
using namespace mpconv;

namespace {

py::array_t<double> column_array(const TimeSeries& ts, const std::string& name) {
    const auto& col = ts.col(name);
    py::array_t<double> out(py::ssize_t(col.size()));
    std::copy(col.begin(), col.end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Dual-buck multiport converter and PMSG wind turbine simulator";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericDivergence>(m, "NumericDivergenceError", PyExc_RuntimeError);

    // ---- modulation ----
    using namespace modulation;
    py::class_<RefParams>(m, "RefParams")
        .def(py::init([](double m_, double f, double phi, double v_off) {
                 return RefParams{m_, f, phi, v_off};
             }),
             py::arg("m"), py::arg("f"), py::arg("phi") = 0.0, py::arg("v_off") = 0.0)
        .def_readwrite("m", &RefParams::m)
        .def_readwrite("f", &RefParams::f)
        .def_readwrite("phi", &RefParams::phi)
        .def_readwrite("v_off", &RefParams::v_off);

    py::class_<ThreePhaseRef>(m, "ThreePhaseRef")
        .def(py::init([](double a, double b, double c) {
                 return ThreePhaseRef{a, b, c};
             }),
             py::arg("a"), py::arg("b"), py::arg("c"))
        .def_readwrite("a", &ThreePhaseRef::a)
        .def_readwrite("b", &ThreePhaseRef::b)
        .def_readwrite("c", &ThreePhaseRef::c)
        .def("__repr__", [](const ThreePhaseRef& r) {
            return "ThreePhaseRef(" + std::to_string(r.a) + ", " + std::to_string(r.b) +
                   ", " + std::to_string(r.c) + ")";
        });

    py::class_<LegState>(m, "LegState")
        .def(py::init([](bool s1, bool s2, bool s3) {
                 return LegState{s1, s2, s3};
             }),
             py::arg("s1"), py::arg("s2"), py::arg("s3"))
        .def_readonly("s1", &LegState::s1)
        .def_readonly("s2", &LegState::s2)
        .def_readonly("s3", &LegState::s3)
        .def("valid", &LegState::valid)
        .def("__repr__", [](const LegState& s) {
            return std::string("LegState(") + (s.s1 ? "1" : "0") + (s.s2 ? "1" : "0") +
                   (s.s3 ? "1" : "0") + ")";
        });

    py::class_<CarrierConfig>(m, "CarrierConfig")
        .def(py::init([](double f_sw) { return CarrierConfig{f_sw}; }),
             py::arg("f_sw") = 5000.0)
        .def_readwrite("f_sw", &CarrierConfig::f_sw);

    m.def("make_reference", &make_reference, py::arg("params"), py::arg("t"));
    m.def("max_offset", &max_offset, py::arg("upper"));
    m.def("min_offset", &min_offset, py::arg("lower"));
    m.def("apply_offsets", &apply_offsets, py::arg("upper"), py::arg("lower"));
    m.def("carrier", py::vectorize([](double t, double f_sw) {
              return carrier(t, CarrierConfig{f_sw});
          }),
          py::arg("t"), py::arg("f_sw") = 5000.0);
    m.def("pwm_leg", &pwm_leg, py::arg("r_u"), py::arg("r_l"), py::arg("c"));
    m.def("leg_terminal_voltages", &leg_terminal_voltages, py::arg("state"), py::arg("v_dc"));
    m.def("averaged_leg_voltages", &averaged_leg_voltages, py::arg("r_u"), py::arg("r_l"),
          py::arg("v_dc"));

    // ---- shoot-through ----
    using shortcircuit::ShootThroughParams;
    py::class_<ShootThroughParams>(m, "ShootThroughParams")
        .def(py::init([](double i_l0, double v_dc, double r_eq, double l_eq) {
                 return ShootThroughParams{i_l0, v_dc, r_eq, l_eq};
             }),
             py::arg("i_l0") = 0.0, py::arg("v_dc") = 2000.0, py::arg("r_eq") = 0.02,
             py::arg("l_eq") = 100e-6)
        .def_readwrite("i_l0", &ShootThroughParams::i_l0)
        .def_readwrite("v_dc", &ShootThroughParams::v_dc)
        .def_readwrite("r_eq", &ShootThroughParams::r_eq)
        .def_readwrite("l_eq", &ShootThroughParams::l_eq)
        .def("tau", &ShootThroughParams::tau)
        .def("asymptote", &ShootThroughParams::asymptote);

    m.def("shoot_through_current",
          [](const ShootThroughParams& p, py::object t) {
              return py::vectorize([p](double tt) {
                  return shortcircuit::shoot_through_current(p, tt);
              })(t);
          },
          py::arg("params"), py::arg("t"));
    m.def("time_to_current_limit", &shortcircuit::time_to_current_limit, py::arg("params"),
          py::arg("i_limit"));

    // ---- plant ----
    using namespace plant;
    py::class_<WindProfile>(m, "WindProfile")
        .def(py::init<>())
        .def_readwrite("mean", &WindProfile::mean)
        .def_readwrite("gust_start", &WindProfile::gust_start)
        .def_readwrite("gust_duration", &WindProfile::gust_duration)
        .def_readwrite("gust_amplitude", &WindProfile::gust_amplitude)
        .def_readwrite("ramp_start", &WindProfile::ramp_start)
        .def_readwrite("ramp_end", &WindProfile::ramp_end)
        .def_readwrite("ramp_slope", &WindProfile::ramp_slope)
        .def_readwrite("noise_amplitude", &WindProfile::noise_amplitude)
        .def_readwrite("noise_seed", &WindProfile::noise_seed);

    m.def("wind_speed",
          [](const WindProfile& w, py::object t) {
              return py::vectorize([w](double tt) { return wind_speed(w, tt); })(t);
          },
          py::arg("profile"), py::arg("t"));

    py::class_<TurbineParams>(m, "TurbineParams")
        .def(py::init<>())
        .def_readwrite("rho", &TurbineParams::rho)
        .def_readwrite("radius", &TurbineParams::radius)
        .def_readwrite("lambda_opt", &TurbineParams::lambda_opt)
        .def_readwrite("cp_max", &TurbineParams::cp_max)
        .def_readwrite("rated_power", &TurbineParams::rated_power)
        .def_readwrite("rated_wind", &TurbineParams::rated_wind)
        .def("cp", &TurbineParams::cp, py::arg("tip_speed_ratio"))
        .def("sized_radius", &TurbineParams::sized_radius)
        .def("k_opt", &TurbineParams::k_opt);

    m.def("aero_torque", &aero_torque, py::arg("params"), py::arg("v_wind"), py::arg("omega_m"));

    py::class_<PmsgParams>(m, "PmsgParams")
        .def(py::init<>())
        .def_readwrite("r_s", &PmsgParams::r_s)
        .def_readwrite("l_d", &PmsgParams::l_d)
        .def_readwrite("l_q", &PmsgParams::l_q)
        .def_readwrite("psi_m", &PmsgParams::psi_m)
        .def_readwrite("pole_pairs", &PmsgParams::pole_pairs)
        .def_readwrite("inertia", &PmsgParams::inertia)
        .def_readwrite("rated_power", &PmsgParams::rated_power);

    m.def("electrical_torque", &electrical_torque, py::arg("params"), py::arg("i_d"),
          py::arg("i_q"));

    // ---- engine ----
    using engine::CaseStudy;
    using engine::Fidelity;
    using engine::Scenario;
    py::enum_<CaseStudy>(m, "CaseStudy")
        .value("NO_HESS", CaseStudy::NoHess)
        .value("BATTERY_ONLY", CaseStudy::BatteryOnly)
        .value("FULL_HESS", CaseStudy::FullHess);
    py::enum_<Fidelity>(m, "Fidelity")
        .value("AVERAGED", Fidelity::Averaged)
        .value("SWITCHED", Fidelity::Switched);

    py::class_<Scenario>(m, "Scenario")
        .def(py::init<>())
        .def_readwrite("case_study", &Scenario::case_study)
        .def_readwrite("fidelity", &Scenario::fidelity)
        .def_readwrite("duration", &Scenario::duration)
        .def_readwrite("dt_plant", &Scenario::dt_plant)
        .def_readwrite("dt_control", &Scenario::dt_control)
        .def_readwrite("log_interval", &Scenario::log_interval)
        .def_readwrite("seed", &Scenario::seed)
        .def_readwrite("wind", &Scenario::wind)
        .def_readwrite("dispatch_schedule", &Scenario::dispatch_schedule)
        .def_readwrite("pmsg", &Scenario::pmsg)
        .def_readwrite("turbine", &Scenario::turbine)
        .def("validate", &Scenario::validate)
        .def("dispatch_at", &Scenario::dispatch_at, py::arg("t"))
        .def("rotor_radius", &Scenario::rotor_radius);

    py::class_<TimeSeries>(m, "TimeSeries")
        .def_property_readonly("columns", &TimeSeries::columns)
        .def_property_readonly("rows", &TimeSeries::rows)
        .def("column", &column_array, py::arg("name"))
        .def("__getitem__", &column_array)
        .def("to_dict", [](const TimeSeries& ts) {
            py::dict d;
            for (const auto& name : ts.columns()) {
                d[py::str(name)] = column_array(ts, name);
            }
            return d;
        });

    m.def("default_scenario", &engine::default_scenario, py::arg("case_study"));
    m.def("run", &engine::run, py::arg("scenario"),
          py::call_guard<py::gil_scoped_release>());

    // ---- config ----
    m.def("scenario_from_config",
          [](const std::string& text) { return config::parse_config(text).scenario; },
          py::arg("text"));
    m.def("load_scenario",
          [](const std::string& path) { return config::load_config(path).scenario; },
          py::arg("path"));
    m.def("dump_config", [](const Scenario& sc) {
        config::LoadedConfig cfg;
        cfg.scenario = sc;
        return config::dump_config(cfg);
    });
    m.def("preset_config",
          [](const std::string& name) { return config::dump_config(config::preset(name)); },
          py::arg("name"));

    m.attr("__version__") = "0.1.0";
}

#include "mpconv/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace mpconv::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// shortest representation that parses back to the same value
std::string fmt_double(double v) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

[[noreturn]] void bad_value(const std::string& section, const std::string& key, int line,
                            const std::string& what) {
    throw ValidationError("[" + section + "] " + key + " (line " + std::to_string(line) +
                          "): " + what);
}

double to_double(const std::string& section, const std::string& key, int line,
                 const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') bad_value(section, key, line, "expected a number, got '" + v + "'");
    return x;
}

std::uint64_t to_u64(const std::string& section, const std::string& key, int line,
                     const std::string& v) {
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') bad_value(section, key, line, "expected an integer, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& section, const std::string& key, int line,
             const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    bad_value(section, key, line, "expected true or false, got '" + v + "'");
}

using engine::CaseStudy;
using engine::Fidelity;

struct KeySpec {
    std::string section;
    std::string key;
    std::function<void(LoadedConfig&, const std::string&, const std::string&, int,
                       const std::string&)>
        set;  // (cfg, section, key, line, value)
    std::function<std::string(const LoadedConfig&)> get;
};

std::vector<KeySpec> build_registry() {
    std::vector<KeySpec> reg;

    auto num = [&reg](const char* section, const char* key, auto member) {
        reg.push_back(
            {section, key,
             [member](LoadedConfig& c, const std::string& s, const std::string& k, int line,
                      const std::string& v) { *member(c) = to_double(s, k, line, v); },
             [member](const LoadedConfig& c) {
                 return fmt_double(*member(const_cast<LoadedConfig&>(c)));
             }});
    };

    // [scenario]
    reg.push_back({"scenario", "case",
                   [](LoadedConfig& c, const std::string& s, const std::string& k, int line,
                      const std::string& v) {
                       if (v == "no_hess") c.scenario.case_study = CaseStudy::NoHess;
                       else if (v == "battery_only") c.scenario.case_study = CaseStudy::BatteryOnly;
                       else if (v == "full_hess") c.scenario.case_study = CaseStudy::FullHess;
                       else bad_value(s, k, line, "expected no_hess, battery_only or full_hess");
                   },
                   [](const LoadedConfig& c) -> std::string {
                       switch (c.scenario.case_study) {
                           case CaseStudy::NoHess: return "no_hess";
                           case CaseStudy::BatteryOnly: return "battery_only";
                           default: return "full_hess";
                       }
                   }});
    reg.push_back({"scenario", "fidelity",
                   [](LoadedConfig& c, const std::string& s, const std::string& k, int line,
                      const std::string& v) {
                       if (v == "averaged") c.scenario.fidelity = Fidelity::Averaged;
                       else if (v == "switched") c.scenario.fidelity = Fidelity::Switched;
                       else bad_value(s, k, line, "expected averaged or switched");
                   },
                   [](const LoadedConfig& c) -> std::string {
                       return c.scenario.fidelity == Fidelity::Averaged ? "averaged" : "switched";
                   }});
    num("scenario", "duration_seconds", [](LoadedConfig& c) { return &c.scenario.duration; });
    num("scenario", "dt_plant_seconds", [](LoadedConfig& c) { return &c.scenario.dt_plant; });
    num("scenario", "dt_control_seconds", [](LoadedConfig& c) { return &c.scenario.dt_control; });
    reg.push_back({"scenario", "seed",
                   [](LoadedConfig& c, const std::string& s, const std::string& k, int line,
                      const std::string& v) { c.scenario.seed = to_u64(s, k, line, v); },
                   [](const LoadedConfig& c) { return std::to_string(c.scenario.seed); }});
    reg.push_back(
        {"scenario", "dispatch_schedule",
         [](LoadedConfig& c, const std::string& s, const std::string& k, int line,
            const std::string& v) {
             c.scenario.dispatch_schedule.clear();
             std::istringstream in(v);
             std::string tok;
             while (in >> tok) {
                 const auto colon = tok.find(':');
                 if (colon == std::string::npos) {
                     bad_value(s, k, line, "expected time:pu entries, got '" + tok + "'");
                 }
                 const double t = to_double(s, k, line, tok.substr(0, colon));
                 const double pu = to_double(s, k, line, tok.substr(colon + 1));
                 c.scenario.dispatch_schedule.emplace_back(t, pu);
             }
         },
         [](const LoadedConfig& c) {
             std::string out;
             for (const auto& [t, pu] : c.scenario.dispatch_schedule) {
                 if (!out.empty()) out.push_back(' ');
                 out += fmt_double(t) + ":" + fmt_double(pu);
             }
             return out;
         }});
    num("scenario", "wind_mean_mps", [](LoadedConfig& c) { return &c.scenario.wind.mean; });
    num("scenario", "wind_gust_start_seconds", [](LoadedConfig& c) { return &c.scenario.wind.gust_start; });
    num("scenario", "wind_gust_duration_seconds", [](LoadedConfig& c) { return &c.scenario.wind.gust_duration; });
    num("scenario", "wind_gust_amplitude_mps", [](LoadedConfig& c) { return &c.scenario.wind.gust_amplitude; });
    num("scenario", "wind_ramp_start_seconds", [](LoadedConfig& c) { return &c.scenario.wind.ramp_start; });
    num("scenario", "wind_ramp_end_seconds", [](LoadedConfig& c) { return &c.scenario.wind.ramp_end; });
    num("scenario", "wind_ramp_slope_mps2", [](LoadedConfig& c) { return &c.scenario.wind.ramp_slope; });
    num("scenario", "wind_noise_rms_mps", [](LoadedConfig& c) { return &c.scenario.wind.noise_amplitude; });
    num("scenario", "grid_voltage_ll_rms_volts", [](LoadedConfig& c) { return &c.scenario.grid.v_ll_rms; });
    num("scenario", "grid_frequency_hz", [](LoadedConfig& c) { return &c.scenario.grid.frequency; });
    num("scenario", "grid_filter_inductance_henries", [](LoadedConfig& c) { return &c.scenario.grid.l_f; });
    num("scenario", "grid_filter_resistance_ohms", [](LoadedConfig& c) { return &c.scenario.grid.r_f; });

    // [pmsg]
    num("pmsg", "stator_resistance_ohms", [](LoadedConfig& c) { return &c.scenario.pmsg.r_s; });
    num("pmsg", "inductance_d_henries", [](LoadedConfig& c) { return &c.scenario.pmsg.l_d; });
    num("pmsg", "inductance_q_henries", [](LoadedConfig& c) { return &c.scenario.pmsg.l_q; });
    num("pmsg", "flux_linkage_weber", [](LoadedConfig& c) { return &c.scenario.pmsg.psi_m; });
    num("pmsg", "pole_pairs", [](LoadedConfig& c) { return &c.scenario.pmsg.pole_pairs; });
    num("pmsg", "inertia_kgm2", [](LoadedConfig& c) { return &c.scenario.pmsg.inertia; });
    num("pmsg", "rated_power_watts", [](LoadedConfig& c) { return &c.scenario.pmsg.rated_power; });

    // [turbine]
    num("turbine", "air_density_kgm3", [](LoadedConfig& c) { return &c.scenario.turbine.rho; });
    num("turbine", "rotor_radius_meters", [](LoadedConfig& c) { return &c.scenario.turbine.radius; });
    num("turbine", "lambda_opt", [](LoadedConfig& c) { return &c.scenario.turbine.lambda_opt; });
    num("turbine", "cp_max", [](LoadedConfig& c) { return &c.scenario.turbine.cp_max; });
    num("turbine", "rated_power_watts", [](LoadedConfig& c) { return &c.scenario.turbine.rated_power; });
    num("turbine", "rated_wind_mps", [](LoadedConfig& c) { return &c.scenario.turbine.rated_wind; });
    num("turbine", "omega_floor_rads", [](LoadedConfig& c) { return &c.scenario.turbine.omega_floor; });
    num("turbine", "cp_c1", [](LoadedConfig& c) { return &c.scenario.turbine.c1; });
    num("turbine", "cp_c2", [](LoadedConfig& c) { return &c.scenario.turbine.c2; });
    num("turbine", "cp_c4", [](LoadedConfig& c) { return &c.scenario.turbine.c4; });
    num("turbine", "cp_c5", [](LoadedConfig& c) { return &c.scenario.turbine.c5; });
    num("turbine", "cp_c6", [](LoadedConfig& c) { return &c.scenario.turbine.c6; });
    num("turbine", "cp_lambda_offset", [](LoadedConfig& c) { return &c.scenario.turbine.c_off; });
    num("turbine", "lambda_max", [](LoadedConfig& c) { return &c.scenario.turbine.lambda_max; });

    // [hess]
    num("hess", "battery_capacity_watt_hours", [](LoadedConfig& c) { return &c.scenario.hess.battery.capacity_wh; });
    num("hess", "battery_nominal_volts", [](LoadedConfig& c) { return &c.scenario.hess.battery.v_nominal; });
    num("hess", "battery_internal_resistance_ohms", [](LoadedConfig& c) { return &c.scenario.hess.battery.r_int; });
    num("hess", "battery_ocv_at_zero_volts", [](LoadedConfig& c) { return &c.scenario.hess.battery.ocv_v0; });
    num("hess", "battery_ocv_slope_volts", [](LoadedConfig& c) { return &c.scenario.hess.battery.ocv_slope; });
    num("hess", "battery_soc_min", [](LoadedConfig& c) { return &c.scenario.hess.battery.soc_min; });
    num("hess", "battery_soc_max", [](LoadedConfig& c) { return &c.scenario.hess.battery.soc_max; });
    num("hess", "battery_soc_initial", [](LoadedConfig& c) { return &c.scenario.hess.soc_init; });
    num("hess", "battery_cc_amps", [](LoadedConfig& c) { return &c.scenario.hess.i_cc; });
    num("hess", "battery_cv_volts", [](LoadedConfig& c) { return &c.scenario.hess.v_cv; });
    num("hess", "battery_cv_hysteresis_volts", [](LoadedConfig& c) { return &c.scenario.hess.cv_hysteresis; });
    num("hess", "battery_current_limit_amps", [](LoadedConfig& c) { return &c.scenario.hess.batt_current_limit; });
    num("hess", "battery_idle_deadband_watts", [](LoadedConfig& c) { return &c.scenario.hess.deadband_w; });
    num("hess", "supercap_capacitance_farads", [](LoadedConfig& c) { return &c.scenario.hess.supercap.capacitance; });
    num("hess", "supercap_nominal_volts", [](LoadedConfig& c) { return &c.scenario.hess.supercap.v_nominal; });
    num("hess", "supercap_esr_ohms", [](LoadedConfig& c) { return &c.scenario.hess.supercap.esr; });
    num("hess", "supercap_voltage_floor_volts", [](LoadedConfig& c) { return &c.scenario.hess.supercap.v_floor; });
    num("hess", "supercap_initial_volts", [](LoadedConfig& c) { return &c.scenario.hess.v_sc_init; });
    num("hess", "supercap_current_limit_amps", [](LoadedConfig& c) { return &c.scenario.hess.sc_current_limit; });
    num("hess", "dc_link_capacitance_farads", [](LoadedConfig& c) { return &c.scenario.hess.c_dc; });
    num("hess", "dc_link_reference_volts", [](LoadedConfig& c) { return &c.scenario.hess.v_dc_ref; });
    num("hess", "port_inductance_henries", [](LoadedConfig& c) { return &c.scenario.hess.port_inductance; });

    // [control]
    num("control", "machine_current_kp", [](LoadedConfig& c) { return &c.scenario.gains.machine_current_kp; });
    num("control", "machine_current_ki", [](LoadedConfig& c) { return &c.scenario.gains.machine_current_ki; });
    num("control", "machine_voltage_limit_volts", [](LoadedConfig& c) { return &c.scenario.gains.machine_v_limit; });
    num("control", "grid_current_kp", [](LoadedConfig& c) { return &c.scenario.gains.grid_current_kp; });
    num("control", "grid_current_ki", [](LoadedConfig& c) { return &c.scenario.gains.grid_current_ki; });
    num("control", "grid_power_kp", [](LoadedConfig& c) { return &c.scenario.gains.grid_power_kp; });
    num("control", "grid_power_ki", [](LoadedConfig& c) { return &c.scenario.gains.grid_power_ki; });
    num("control", "grid_current_limit_pu", [](LoadedConfig& c) { return &c.scenario.gains.grid_current_limit_pu; });
    num("control", "dc_link_kp", [](LoadedConfig& c) { return &c.scenario.gains.dc_link_kp; });
    num("control", "dc_link_ki", [](LoadedConfig& c) { return &c.scenario.gains.dc_link_ki; });
    num("control", "dc_link_limit_amps", [](LoadedConfig& c) { return &c.scenario.gains.dc_link_limit; });
    num("control", "port_batt_kp", [](LoadedConfig& c) { return &c.scenario.gains.port_batt_kp; });
    num("control", "port_batt_ki", [](LoadedConfig& c) { return &c.scenario.gains.port_batt_ki; });
    num("control", "port_batt_voltage_limit_volts", [](LoadedConfig& c) { return &c.scenario.gains.port_batt_v_limit; });
    num("control", "port_sc_kp", [](LoadedConfig& c) { return &c.scenario.gains.port_sc_kp; });
    num("control", "port_sc_ki", [](LoadedConfig& c) { return &c.scenario.gains.port_sc_ki; });
    num("control", "port_sc_voltage_limit_volts", [](LoadedConfig& c) { return &c.scenario.gains.port_sc_v_limit; });
    num("control", "dispatch_slew_watts_per_second", [](LoadedConfig& c) { return &c.scenario.gains.dispatch_slew_w_per_s; });
    num("control", "antiwindup_gain", [](LoadedConfig& c) { return &c.scenario.gains.antiwindup; });
    num("control", "duty_batt_min", [](LoadedConfig& c) { return &c.scenario.hess.duty_batt_min; });
    num("control", "duty_batt_max", [](LoadedConfig& c) { return &c.scenario.hess.duty_batt_max; });
    num("control", "duty_sc_min", [](LoadedConfig& c) { return &c.scenario.hess.duty_sc_min; });
    num("control", "duty_sc_max", [](LoadedConfig& c) { return &c.scenario.hess.duty_sc_max; });

    // [modulation]
    num("modulation", "carrier_frequency_hz", [](LoadedConfig& c) { return &c.scenario.carrier.f_sw; });
    num("modulation", "gate_latency_seconds", [](LoadedConfig& c) { return &c.scenario.gate_latency; });

    // [output]
    num("output", "log_interval_seconds", [](LoadedConfig& c) { return &c.scenario.log_interval; });
    num("output", "summary_skip_seconds", [](LoadedConfig& c) { return &c.output.summary_skip_seconds; });
    reg.push_back({"output", "write_csv",
                   [](LoadedConfig& c, const std::string& s, const std::string& k, int line,
                      const std::string& v) { c.output.write_csv = to_bool(s, k, line, v); },
                   [](const LoadedConfig& c) -> std::string {
                       return c.output.write_csv ? "true" : "false";
                   }});
    reg.push_back({"output", "write_plots",
                   [](LoadedConfig& c, const std::string& s, const std::string& k, int line,
                      const std::string& v) { c.output.write_plots = to_bool(s, k, line, v); },
                   [](const LoadedConfig& c) -> std::string {
                       return c.output.write_plots ? "true" : "false";
                   }});

    return reg;
}

const std::vector<KeySpec>& registry() {
    static const std::vector<KeySpec> reg = build_registry();
    return reg;
}

const KeySpec* find_key(const std::string& section, const std::string& key) {
    for (const auto& spec : registry()) {
        if (spec.section == section && spec.key == key) return &spec;
    }
    return nullptr;
}

constexpr const char* kSections[] = {"scenario", "pmsg",       "turbine", "hess",
                                     "control",  "modulation", "output"};

bool known_section(const std::string& s) {
    return std::any_of(std::begin(kSections), std::end(kSections),
                       [&](const char* k) { return s == k; });
}

}  // namespace

LoadedConfig parse_config(const std::string& text) {
    LoadedConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') {
                throw ValidationError("line " + std::to_string(lineno) +
                                      ": unterminated section header");
            }
            section = trim(t.substr(1, t.size() - 2));
            if (!known_section(section)) {
                throw ValidationError("line " + std::to_string(lineno) + ": unknown section [" +
                                      section + "]");
            }
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("line " + std::to_string(lineno) +
                                  ": expected key = value, got '" + t + "'");
        }
        if (section.empty()) {
            throw ValidationError("line " + std::to_string(lineno) +
                                  ": key outside any section");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        const KeySpec* spec = find_key(section, key);
        if (!spec) {
            throw ValidationError("[" + section + "] " + key + " (line " +
                                  std::to_string(lineno) + "): unknown key");
        }
        spec->set(cfg, section, key, lineno, value);
    }
    cfg.scenario.validate();
    return cfg;
}

LoadedConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open scenario file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const LoadedConfig& cfg) {
    std::string out;
    for (const char* section : kSections) {
        out += std::string("[") + section + "]\n";
        for (const auto& spec : registry()) {
            if (spec.section != section) continue;
            out += spec.key + " = " + spec.get(cfg) + "\n";
        }
        out += "\n";
    }
    return out;
}

LoadedConfig preset(const std::string& name) {
    LoadedConfig cfg;
    if (name == "case_a") {
        cfg.scenario = engine::default_scenario(engine::CaseStudy::NoHess);
    } else if (name == "case_b") {
        cfg.scenario = engine::default_scenario(engine::CaseStudy::BatteryOnly);
    } else if (name == "case_c") {
        cfg.scenario = engine::default_scenario(engine::CaseStudy::FullHess);
    } else {
        throw ValidationError("unknown preset '" + name +
                              "' (expected case_a, case_b or case_c)");
    }
    return cfg;
}

}  // namespace mpconv::config

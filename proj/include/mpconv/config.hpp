#ifndef MPCONV_CONFIG_HPP
#define MPCONV_CONFIG_HPP

#include <string>

#include "mpconv/engine.hpp"

namespace mpconv::config {

/// CLI-facing output settings carried alongside the scenario.
struct OutputOptions {
    bool write_csv = true;
    bool write_plots = true;
    double summary_skip_seconds = 0.5;  ///< settle window excluded from statistics
};

struct LoadedConfig {
    engine::Scenario scenario;
    OutputOptions output;
};

/// Parse a scenario file. Sections are limited to [scenario], [pmsg],
/// [turbine], [hess], [control], [modulation], [output]; unknown sections or
/// keys are rejected with their line number, as are malformed values.
LoadedConfig parse_config(const std::string& text);
LoadedConfig load_config(const std::string& path);

/// Canonical text form with every key materialized. parse_config(dump_config(c))
/// reproduces c exactly.
std::string dump_config(const LoadedConfig& cfg);

/// Built-in presets: "case_a" (no storage), "case_b" (battery only),
/// "case_c" (battery + supercapacitor).
LoadedConfig preset(const std::string& name);

}  // namespace mpconv::config

#endif

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include "mpconv/config.hpp"
#include "mpconv/engine.hpp"
#include "mpconv/modulation.hpp"
#include "mpconv/shortcircuit.hpp"
#include "mpconv/svgplot.hpp"
#include "mpconv/timeseries.hpp"

namespace fs = std::filesystem;
using namespace mpconv;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitDivergence = 2;

std::string fmt(double v, const char* f = "%.6g") {
    char buf[40];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double idx = p / 100.0 * double(v.size() - 1);
    const std::size_t lo = std::size_t(idx);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (idx - double(lo)) * (v[hi] - v[lo]);
}

std::vector<double> lowpass(const std::vector<double>& x, double fc, double fs) {
    std::vector<double> y(x.size());
    if (x.empty()) return y;
    const double c = std::tan(kPi * fc / fs);
    const double a = c / (1.0 + c), b = (1.0 - c) / (1.0 + c);
    y[0] = x[0];
    for (std::size_t i = 1; i < x.size(); ++i) y[i] = a * (x[i] + x[i - 1]) + b * y[i - 1];
    return y;
}

std::string case_name(engine::CaseStudy c) {
    switch (c) {
        case engine::CaseStudy::NoHess: return "no_hess";
        case engine::CaseStudy::BatteryOnly: return "battery_only";
        default: return "full_hess";
    }
}

void write_plots(const TimeSeries& ts, const fs::path& dir) {
    const auto& t = ts.col("t_seconds");
    using svgplot::LineChart;
    using svgplot::Series;

    LineChart wind{"Wind speed", "t [s]", "v [m/s]"};
    svgplot::write(wind, t, {{"wind", &ts.col("v_wind_mps")}}, (dir / "wind.svg").string());

    LineChart torque{"Rotor and electrical torque", "t [s]", "T [N m]"};
    svgplot::write(torque, t,
                   {{"mechanical", &ts.col("t_mech_nm")},
                    {"commanded", &ts.col("t_e_cmd_nm")},
                    {"electrical", &ts.col("t_e_nm")}},
                   (dir / "torque.svg").string());

    LineChart powers{"Power flows", "t [s]", "P [W]"};
    svgplot::write(powers, t,
                   {{"wind turbine", &ts.col("p_wt_watts")},
                    {"grid", &ts.col("p_grid_watts")},
                    {"battery", &ts.col("p_batt_watts")},
                    {"supercap", &ts.col("p_sc_watts")}},
                   (dir / "powers.svg").string());

    LineChart dclink{"DC-link voltage", "t [s]", "V [V]"};
    svgplot::write(dclink, t, {{"v_dc", &ts.col("v_dc_volts")}}, (dir / "dclink.svg").string());

    LineChart currents{"Grid phase and storage currents", "t [s]", "I [A]"};
    svgplot::write(currents, t,
                   {{"grid a", &ts.col("i_grid_a_amps")},
                    {"grid b", &ts.col("i_grid_b_amps")},
                    {"grid c", &ts.col("i_grid_c_amps")},
                    {"battery", &ts.col("i_batt_amps")},
                    {"supercap", &ts.col("i_sc_amps")}},
                   (dir / "currents.svg").string());
}

void write_summary(const config::LoadedConfig& cfg, const TimeSeries& ts,
                   const fs::path& path) {
    const auto& sc = cfg.scenario;
    const auto& t = ts.col("t_seconds");
    const double skip = cfg.output.summary_skip_seconds;
    const double fs = 1.0 / sc.log_interval;

    std::ofstream out(path);
    out << "scenario: " << case_name(sc.case_study) << ", fidelity "
        << (sc.fidelity == engine::Fidelity::Averaged ? "averaged" : "switched")
        << ", duration " << fmt(sc.duration) << " s, seed " << sc.seed << "\n";
    out << "records: " << ts.rows() << ", interval " << fmt(sc.log_interval) << " s\n\n";

    const auto stats = [&](const char* col) {
        const auto& v = ts.col(col);
        double mn = 1e300, mx = -1e300, sum = 0.0;
        long n = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (t[i] < skip) continue;
            mn = std::min(mn, v[i]);
            mx = std::max(mx, v[i]);
            sum += v[i];
            ++n;
        }
        return std::array<double, 3>{n ? sum / double(n) : 0.0, mn, mx};
    };

    out << "power statistics for t >= " << fmt(skip) << " s [kW: mean / min / max]\n";
    for (const char* col : {"p_wt_watts", "p_grid_watts", "p_batt_watts", "p_sc_watts"}) {
        const auto s = stats(col);
        out << "  " << col << ": " << fmt(s[0] / 1e3) << " / " << fmt(s[1] / 1e3) << " / "
            << fmt(s[2] / 1e3) << "\n";
    }

    if (!sc.dispatch_schedule.empty()) {
        out << "\ndispatch tracking [steady tail of each segment]\n";
        for (std::size_t k = 0; k < sc.dispatch_schedule.size(); ++k) {
            const double seg_start = sc.dispatch_schedule[k].first;
            const double seg_end = k + 1 < sc.dispatch_schedule.size()
                                       ? sc.dispatch_schedule[k + 1].first
                                       : sc.duration;
            const double target = sc.dispatch_schedule[k].second * sc.pmsg.rated_power;
            const double tail_start = seg_start + 0.7 * (seg_end - seg_start);
            double sum = 0.0;
            long n = 0;
            const auto& pg = ts.col("p_grid_watts");
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (t[i] >= tail_start && t[i] < seg_end) {
                    sum += pg[i];
                    ++n;
                }
            }
            const double mean = n ? sum / double(n) : 0.0;
            out << "  t=[" << fmt(seg_start) << ", " << fmt(seg_end) << "): target "
                << fmt(target / 1e3) << " kW, mean " << fmt(mean / 1e3) << " kW, error "
                << fmt(target != 0.0 ? 100.0 * (mean - target) / target : 0.0, "%.3f")
                << " %\n";
        }
    }

    {
        const auto& v = ts.col("v_dc_volts");
        double mx = 0.0, sum2 = 0.0;
        long n = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (t[i] < skip) continue;
            const double dev = v[i] - sc.hess.v_dc_ref;
            mx = std::max(mx, std::abs(dev));
            sum2 += dev * dev;
            ++n;
        }
        out << "\ndc link (" << fmt(sc.hess.v_dc_ref) << " V reference)\n";
        out << "  max |deviation| " << fmt(mx) << " V, rms deviation "
            << fmt(n ? std::sqrt(sum2 / double(n)) : 0.0) << " V\n";
    }

    {
        std::vector<double> ib;
        const auto& v = ts.col("i_batt_amps");
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (t[i] >= skip) ib.push_back(v[i]);
        }
        out << "\nbattery current [A]: p5 " << fmt(percentile(ib, 5)) << ", p50 "
            << fmt(percentile(ib, 50)) << ", p95 " << fmt(percentile(ib, 95)) << ", max |i| ";
        double mx = 0.0;
        for (double x : ib) mx = std::max(mx, std::abs(x));
        out << fmt(mx) << "\n";
        const auto& mode = ts.col("batt_mode");
        const auto& iref = ts.col("i_batt_ref_amps");
        long cc = 0, in_band = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (t[i] < skip || mode[i] != 1.0) continue;
            if (std::abs(iref[i]) < 0.999 * sc.hess.i_cc) continue;
            ++cc;
            if (std::abs(v[i]) >= 45.0 && std::abs(v[i]) <= 55.0) ++in_band;
        }
        if (cc > 0) {
            out << "  cc-mode samples " << cc << ", share within [45, 55] A: "
                << fmt(100.0 * double(in_band) / double(cc), "%.2f") << " %\n";
        }
    }

    out << "\nsupercapacitor: v_sc end " << fmt(ts.col("v_sc_volts").back()) << " V, floor "
        << fmt(sc.hess.supercap.v_floor) << " V, undervoltage samples "
        << fmt(ts.col("sc_undervoltage_count").back(), "%.0f") << "\n";

    {
        double mx = 0.0;
        const auto& r = ts.col("power_residual_watts");
        for (std::size_t i = 0; i < r.size(); ++i) mx = std::max(mx, std::abs(r[i]));
        out << "power balance: max |residual| " << fmt(mx) << " W\n";
    }
    out << "anomaly counters: clamp " << fmt(ts.col("anomaly_clamp").back(), "%.0f")
        << ", overmodulation " << fmt(ts.col("anomaly_overmod").back(), "%.0f")
        << ", dominance " << fmt(ts.col("anomaly_dominance").back(), "%.0f") << "\n";

    if (sc.case_study == engine::CaseStudy::NoHess) {
        const auto pw = lowpass(ts.col("p_wt_watts"), 1.0, fs);
        const auto pg = lowpass(ts.col("p_grid_watts"), 1.0, fs);
        double mw = 0.0, mg = 0.0;
        long n = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] < 1.0) continue;
            mw += pw[i];
            mg += pg[i];
            ++n;
        }
        mw /= double(n);
        mg /= double(n);
        double sab = 0.0, saa = 0.0, sbb = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] < 1.0) continue;
            sab += (pw[i] - mw) * (pg[i] - mg);
            saa += (pw[i] - mw) * (pw[i] - mw);
            sbb += (pg[i] - mg) * (pg[i] - mg);
        }
        out << "wind/grid power correlation (1 Hz filtered): "
            << fmt(sab / std::sqrt(saa * sbb), "%.5f") << "\n";
    }
}

int run_one(const config::LoadedConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const TimeSeries ts = engine::run(cfg.scenario);
    if (cfg.output.write_csv) write_csv(ts, (out_dir / "timeseries.csv").string());
    write_summary(cfg, ts, out_dir / "summary.txt");
    if (cfg.output.write_plots) write_plots(ts, out_dir);
    std::cout << "wrote " << out_dir.string() << " (" << ts.rows() << " records)\n";
    return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::string& preset_name,
                 const std::string& fidelity, const std::string& out_dir, long long seed,
                 bool dump, const std::vector<std::string>& batch) {
    auto load = [&](const std::string& path) {
        config::LoadedConfig cfg =
            path.empty() ? config::preset(preset_name.empty() ? "case_c" : preset_name)
                         : config::load_config(path);
        if (!fidelity.empty()) {
            if (fidelity == "averaged") {
                cfg.scenario.fidelity = engine::Fidelity::Averaged;
            } else if (fidelity == "switched") {
                cfg.scenario.fidelity = engine::Fidelity::Switched;
                // switched runs need the finer default step unless the file pinned one
                if (cfg.scenario.dt_plant > 1e-6) cfg.scenario.dt_plant = 1e-6;
            } else {
                throw ValidationError("--fidelity must be averaged or switched");
            }
        }
        if (seed >= 0) cfg.scenario.seed = std::uint64_t(seed);
        cfg.scenario.validate();
        return cfg;
    };

    if (!batch.empty()) {
        std::vector<std::future<int>> jobs;
        jobs.reserve(batch.size());
        for (const auto& path : batch) {
            jobs.push_back(std::async(std::launch::async, [&, path] {
                const auto cfg = load(path);
                return run_one(cfg, fs::path(out_dir) / fs::path(path).stem());
            }));
        }
        int rc = 0;
        for (auto& j : jobs) rc = std::max(rc, j.get());
        return rc;
    }

    const auto cfg = load(scenario_path);
    if (dump) {
        std::cout << config::dump_config(cfg);
        return 0;
    }
    return run_one(cfg, out_dir);
}

int cmd_shoot_through(double vdc, double req, double leq, double i0, double limit,
                      double tmax, int points) {
    shortcircuit::ShootThroughParams p{i0, vdc, req, leq};
    p.validate();
    std::printf("# shoot-through current, v_dc=%g V r_eq=%g ohm l_eq=%g H i_0=%g A\n", vdc,
                req, leq, i0);
    std::printf("t_seconds,i_amps\n");
    for (int k = 0; k <= points; ++k) {
        const double t = tmax * double(k) / double(points);
        std::printf("%.12g,%.12g\n", t, shortcircuit::shoot_through_current(p, t));
    }
    if (limit >= p.asymptote()) {
        std::printf("# limit %g A is never reached (asymptote %g A)\n", limit, p.asymptote());
    } else {
        const double tc = shortcircuit::time_to_current_limit(p, limit);
        std::printf("# limit %g A crossed at t = %.6g s\n", limit, tc);
        // stray-inductance comparison: same path without the embedded inductors
        shortcircuit::ShootThroughParams stray = p;
        stray.l_eq = 1e-6;
        const double ts = shortcircuit::time_to_current_limit(stray, limit);
        std::printf("# stray-only path (l_eq = 1e-06 H) crosses at t = %.6g s "
                    "(margin ratio %.3g)\n",
                    ts, tc / ts);
    }
    return 0;
}

int cmd_modulation_demo(double mu, double ml, double fu, double fl, double fsw,
                        const std::string& offsets, int periods, const std::string& out) {
    using namespace modulation;
    const RefParams up{mu, fu, 0.0, 0.0};
    const RefParams lo{ml, fl, 0.0, 0.0};
    up.validate();
    lo.validate();
    const bool use_offsets = offsets != "off";
    CarrierConfig carrier_cfg{fsw};
    carrier_cfg.validate();

    const double f_min = std::max(std::min(fu, fl), 1e-3);
    const double duration = double(periods) / f_min;
    const double dt = 1.0 / (200.0 * fsw);
    const long n = lround(duration / dt);

    // pass 1: dominance scan
    long violations = 0;
    double first_violation = -1.0;
    for (long k = 0; k <= n; ++k) {
        const double t = double(k) * dt;
        ThreePhaseRef u = make_reference(up, t);
        ThreePhaseRef l = make_reference(lo, t);
        if (use_offsets) {
            const auto [uu, ll] = apply_offsets(u, l);
            u = uu;
            l = ll;
        }
        for (auto [ru, rl] : {std::pair{u.a, l.a}, std::pair{u.b, l.b}, std::pair{u.c, l.c}}) {
            if (ru < rl) {
                ++violations;
                if (first_violation < 0.0) first_violation = t;
            }
        }
    }

    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!out.empty()) {
        file.open(out);
        if (!file) throw ValidationError("cannot open '" + out + "' for writing");
        os = &file;
    }

    if (violations > 0) {
        *os << "t_seconds,u_a,u_b,u_c,l_a,l_b,l_c,carrier\n";
        char buf[256];
        for (long k = 0; k <= n; ++k) {
            const double t = double(k) * dt;
            const ThreePhaseRef u = make_reference(up, t);
            const ThreePhaseRef l = make_reference(lo, t);
            std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", t,
                          u.a, u.b, u.c, l.a, l.b, l.c, carrier(t, carrier_cfg));
            *os << buf;
        }
        std::cerr << "dominance violation: upper reference fell below lower reference at "
                  << violations << " samples (first at t = " << first_violation
                  << " s); gate states omitted. Enable offsets or reduce the modulation "
                     "indices.\n";
        return kExitValidation;
    }

    *os << "t_seconds,u_a,u_b,u_c,l_a,l_b,l_c,carrier,"
           "s1_a,s2_a,s3_a,s1_b,s2_b,s3_b,s1_c,s2_c,s3_c\n";
    long transitions[3] = {0, 0, 0};
    LegState prev[3];
    char buf[512];
    for (long k = 0; k <= n; ++k) {
        const double t = double(k) * dt;
        ThreePhaseRef u = make_reference(up, t);
        ThreePhaseRef l = make_reference(lo, t);
        if (use_offsets) {
            const auto [uu, ll] = apply_offsets(u, l);
            u = uu;
            l = ll;
        }
        const double c = carrier(t, carrier_cfg);
        const LegState legs[3] = {pwm_leg(u.a, l.a, c), pwm_leg(u.b, l.b, c),
                                  pwm_leg(u.c, l.c, c)};
        for (int i = 0; i < 3; ++i) {
            if (k > 0) {
                transitions[i] += int(legs[i].s1 != prev[i].s1) + int(legs[i].s2 != prev[i].s2) +
                                  int(legs[i].s3 != prev[i].s3);
            }
            prev[i] = legs[i];
        }
        std::snprintf(buf, sizeof buf,
                      "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%d,%d,%d,%d,%d,%d,%d,%d\n",
                      t, u.a, u.b, u.c, l.a, l.b, l.c, c, int(legs[0].s1), int(legs[0].s2),
                      int(legs[0].s3), int(legs[1].s1), int(legs[1].s2), int(legs[1].s3),
                      int(legs[2].s1), int(legs[2].s2), int(legs[2].s3));
        *os << buf;
    }
    std::cerr << "gate transitions per leg over " << duration << " s: a=" << transitions[0]
              << " b=" << transitions[1] << " c=" << transitions[2]
              << " (offsets " << (use_offsets ? "on" : "off") << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual-buck multiport converter simulator for a PMSG wind turbine with "
                 "battery and supercapacitor storage"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run a scenario and write CSV, summary and plots");
    std::string scenario_path, preset_name, fidelity, out_dir = "out";
    long long seed = -1;
    bool dump = false;
    std::vector<std::string> batch;
    sim->add_option("--scenario", scenario_path, "Scenario file");
    sim->add_option("--preset", preset_name, "Built-in scenario: case_a, case_b or case_c");
    sim->add_option("--fidelity", fidelity, "averaged or switched");
    sim->add_option("--out", out_dir, "Output directory");
    sim->add_option("--seed", seed, "Override the scenario seed");
    sim->add_flag("--dump-config", dump, "Print the fully resolved scenario and exit");
    sim->add_option("--batch", batch, "Run several scenario files concurrently");

    // shoot-through
    auto* st = app.add_subcommand("shoot-through",
                                  "Fault current through a leg when all switches conduct");
    double vdc = 2000.0, req = 0.02, leq = 100e-6, i0 = 0.0, limit = 100.0, tmax = 20e-6;
    int points = 200;
    st->add_option("--vdc", vdc, "DC-link voltage [V]");
    st->add_option("--req", req, "Path resistance [ohm]");
    st->add_option("--leq", leq, "Path inductance [H]");
    st->add_option("--i0", i0, "Initial current [A]");
    st->add_option("--limit", limit, "Current limit to locate [A]");
    st->add_option("--tmax", tmax, "Table end time [s]");
    st->add_option("--points", points, "Table rows");

    // modulation-demo
    auto* md = app.add_subcommand("modulation-demo",
                                  "Reference, offset and gate waveforms for one leg group");
    double mu = 0.5, ml = 0.5, fu = 60.0, fl = 20.0, fsw = 5000.0;
    std::string offsets = "on", md_out;
    int periods = 1;
    md->add_option("--mu", mu, "Upper modulation index");
    md->add_option("--ml", ml, "Lower modulation index");
    md->add_option("--fu", fu, "Upper frequency [Hz]");
    md->add_option("--fl", fl, "Lower frequency [Hz]");
    md->add_option("--fsw", fsw, "Carrier frequency [Hz]");
    md->add_option("--offsets", offsets, "on or off");
    md->add_option("--periods", periods, "Fundamental periods of the slower reference");
    md->add_option("--out", md_out, "Write the CSV here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            return cmd_simulate(scenario_path, preset_name, fidelity, out_dir, seed, dump,
                                batch);
        }
        if (st->parsed()) {
            return cmd_shoot_through(vdc, req, leq, i0, limit, tmax, points);
        }
        if (md->parsed()) {
            return cmd_modulation_demo(mu, ml, fu, fl, fsw, offsets, periods, md_out);
        }
    } catch (const NumericDivergence& e) {
        std::cerr << "numeric divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}

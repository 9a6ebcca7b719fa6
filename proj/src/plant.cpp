#include "mpconv/plant.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace mpconv::plant {

// ---------------------------------------------------------------------------
// Wind
// ---------------------------------------------------------------------------

void WindProfile::validate() const {
    if (!(mean >= 0.0)) throw ValidationError("wind mean must be >= 0");
    if (!(gust_duration >= 0.0)) throw ValidationError("gust duration must be >= 0");
    if (!(gust_start >= 0.0)) throw ValidationError("gust start must be >= 0");
    if (ramp_end < ramp_start) throw ValidationError("wind ramp end before start");
    if (!(noise_amplitude >= 0.0)) throw ValidationError("noise amplitude must be >= 0");
}

namespace {

constexpr int kNoiseComponents = 24;
constexpr double kNoiseBandLow = 0.1;   // [Hz]
constexpr double kNoiseBandHigh = 2.0;  // [Hz]

// Seeded random phases; the generator output is scaled explicitly so results
// do not depend on the library's distribution implementation.
std::array<double, kNoiseComponents> noise_phases(std::uint64_t seed) {
    std::array<double, kNoiseComponents> phases{};
    std::mt19937_64 rng(seed);
    for (double& p : phases) {
        p = kTwoPi * (double(rng() >> 11) * 0x1.0p-53);
    }
    return phases;
}

double noise_component(const WindProfile& profile, double t) {
    if (profile.noise_amplitude <= 0.0) return 0.0;
    static thread_local std::uint64_t cached_seed = ~std::uint64_t{0};
    static thread_local std::array<double, kNoiseComponents> phases{};
    if (cached_seed != profile.noise_seed) {
        phases = noise_phases(profile.noise_seed);
        cached_seed = profile.noise_seed;
    }
    const double df = (kNoiseBandHigh - kNoiseBandLow) / (kNoiseComponents - 1);
    // Equal-amplitude bank scaled so the summed RMS equals noise_amplitude.
    const double a = profile.noise_amplitude * std::sqrt(2.0 / kNoiseComponents);
    double n = 0.0;
    for (int k = 0; k < kNoiseComponents; ++k) {
        const double f = kNoiseBandLow + df * k;
        n += a * std::sin(kTwoPi * f * t + phases[std::size_t(k)]);
    }
    return n;
}

}  // namespace

double wind_speed(const WindProfile& profile, double t) {
    profile.validate();
    if (!(t >= 0.0)) throw ValidationError("wind_speed requires t >= 0");

    double v = profile.mean;

    if (profile.gust_duration > 0.0 && t >= profile.gust_start &&
        t <= profile.gust_start + profile.gust_duration) {
        const double x = (t - profile.gust_start) / profile.gust_duration;
        v += 0.5 * profile.gust_amplitude * (1.0 - std::cos(kTwoPi * x));
    }

    if (profile.ramp_slope != 0.0 && t >= profile.ramp_start) {
        v += profile.ramp_slope * (std::min(t, profile.ramp_end) - profile.ramp_start);
    }

    v += noise_component(profile, t);
    return std::max(v, 0.0);
}

// ---------------------------------------------------------------------------
// Turbine
// ---------------------------------------------------------------------------

void TurbineParams::validate() const {
    if (!(rho > 0.0)) throw ValidationError("air density must be > 0");
    if (!(lambda_opt > 0.0)) throw ValidationError("lambda_opt must be > 0");
    if (!(cp_max > 0.0) || cp_max > betz_limit) {
        throw ValidationError("cp_max must lie in (0, 0.593]");
    }
    if (!(rated_power > 0.0)) throw ValidationError("rated power must be > 0");
    if (!(rated_wind > 0.0)) throw ValidationError("rated wind must be > 0");
    if (!(omega_floor > 0.0)) throw ValidationError("omega floor must be > 0");
    // The curve itself must respect the Betz limit over its whole domain.
    for (int k = 0; k <= 400; ++k) {
        const double lambda = lambda_max * k / 400.0;
        if (cp(lambda) > betz_limit) {
            throw ValidationError("cp curve exceeds the Betz limit at lambda = " +
                                  std::to_string(lambda));
        }
    }
}

double TurbineParams::cp(double lambda) const {
    const double l = std::clamp(lambda, 0.0, lambda_max);
    if (l <= 0.0) return 0.0;
    const double inv = 1.0 / l - c_off;
    const double value = c1 * (c2 * inv - c4) * std::exp(-c5 * inv) + c6 * l;
    return std::clamp(value, 0.0, betz_limit);
}

double TurbineParams::sized_radius() const {
    const double v3 = rated_wind * rated_wind * rated_wind;
    return std::sqrt(rated_power / (0.5 * rho * kPi * cp_max * v3));
}

double TurbineParams::k_opt() const {
    const double r = radius > 0.0 ? radius : sized_radius();
    const double r5 = r * r * r * r * r;
    return 0.5 * rho * kPi * r5 * cp_max / (lambda_opt * lambda_opt * lambda_opt);
}

double TurbineParams::available_power(double v_wind) const {
    const double r = radius > 0.0 ? radius : sized_radius();
    return 0.5 * rho * kPi * r * r * v_wind * v_wind * v_wind;
}

double aero_torque(const TurbineParams& params, double v_wind, double omega_m) {
    if (v_wind <= 0.0) return 0.0;
    const double r = params.radius > 0.0 ? params.radius : params.sized_radius();
    const double omega = std::max(omega_m, params.omega_floor);
    const double lambda = omega * r / v_wind;
    const double p_mech =
        0.5 * params.rho * kPi * r * r * params.cp(lambda) * v_wind * v_wind * v_wind;
    return p_mech / omega;
}

// ---------------------------------------------------------------------------
// PMSG
// ---------------------------------------------------------------------------

void PmsgParams::validate() const {
    if (!(r_s > 0.0 && l_d > 0.0 && l_q > 0.0 && psi_m > 0.0 && pole_pairs > 0.0 &&
          inertia > 0.0 && rated_power > 0.0)) {
        throw ValidationError("PMSG parameters must all be strictly positive");
    }
}

double electrical_torque(const PmsgParams& params, double i_d, double i_q) {
    return 1.5 * params.pole_pairs * (params.psi_m * i_q + (params.l_d - params.l_q) * i_d * i_q);
}

PmsgDerivatives pmsg_derivatives(const PmsgParams& params, const PmsgState& state,
                                 double v_d, double v_q, double t_mech) {
    const double w_e = params.pole_pairs * state.omega_m;
    const double t_e = electrical_torque(params, state.i_d, state.i_q);
    return {
        (v_d - params.r_s * state.i_d + w_e * params.l_q * state.i_q) / params.l_d,
        (v_q - params.r_s * state.i_q - w_e * (params.l_d * state.i_d + params.psi_m)) /
            params.l_q,
        (t_mech - t_e) / params.inertia,
        w_e,
    };
}

// ---------------------------------------------------------------------------
// DC link, storage, grid
// ---------------------------------------------------------------------------

double dc_link_derivative(double c_dc, double i_net) {
    if (!(c_dc > 0.0)) throw ValidationError("DC-link capacitance must be > 0");
    return i_net / c_dc;
}

void BatteryParams::validate() const {
    if (!(capacity_wh > 0.0 && v_nominal > 0.0 && r_int >= 0.0)) {
        throw ValidationError("battery capacity, nominal voltage must be > 0");
    }
    if (!(soc_min >= 0.0 && soc_max <= 1.0 && soc_min < soc_max)) {
        throw ValidationError("battery soc window must satisfy 0 <= min < max <= 1");
    }
}

BatteryStepResult battery_step(const BatteryParams& params, double soc, double i_batt,
                               double dt) {
    if (!(dt > 0.0)) throw ValidationError("battery_step requires dt > 0");
    BatteryStepResult r;
    r.v_term = params.ocv(soc) - i_batt * params.r_int;
    const double soc_next = soc - i_batt * dt / params.charge_capacity();
    r.soc = std::clamp(soc_next, 0.0, 1.0);
    r.saturated = soc_next != r.soc;
    return r;
}

void SupercapParams::validate() const {
    if (!(capacitance > 0.0 && v_nominal > 0.0 && esr >= 0.0)) {
        throw ValidationError("supercapacitor capacitance, nominal voltage must be > 0");
    }
}

SupercapStepResult supercap_step(const SupercapParams& params, double v_sc, double i_sc,
                                 double dt) {
    if (!(dt > 0.0)) throw ValidationError("supercap_step requires dt > 0");
    SupercapStepResult r;
    r.v_term = v_sc - i_sc * params.esr;
    r.v_sc = v_sc - i_sc * dt / params.capacitance;
    r.undervoltage = r.v_sc < params.v_floor;
    return r;
}

void GridParams::validate() const {
    if (!(v_ll_rms > 0.0 && frequency > 0.0 && l_f > 0.0 && r_f >= 0.0)) {
        throw ValidationError("grid voltage, frequency and filter inductance must be > 0");
    }
}

Dq grid_interface_derivatives(const Dq& i, const Dq& v_conv, const Dq& v_grid,
                              double l_f, double r_f, double omega_grid) {
    if (!(l_f > 0.0)) throw ValidationError("filter inductance must be > 0");
    return {(v_conv.d - v_grid.d - r_f * i.d + omega_grid * l_f * i.q) / l_f,
            (v_conv.q - v_grid.q - r_f * i.q - omega_grid * l_f * i.d) / l_f};
}

}  // namespace mpconv::plant

"""Dual-buck multiport converter and PMSG wind turbine simulator.

The heavy lifting lives in the compiled extension; this package re-exports
the public surface.
"""

from ._core import (  # noqa: F401
    CarrierConfig,
    CaseStudy,
    Fidelity,
    LegState,
    NumericDivergenceError,
    PmsgParams,
    RefParams,
    Scenario,
    ShootThroughParams,
    ThreePhaseRef,
    TimeSeries,
    TurbineParams,
    ValidationError,
    WindProfile,
    __version__,
    aero_torque,
    apply_offsets,
    averaged_leg_voltages,
    carrier,
    default_scenario,
    dump_config,
    electrical_torque,
    leg_terminal_voltages,
    load_scenario,
    make_reference,
    max_offset,
    min_offset,
    preset_config,
    pwm_leg,
    run,
    scenario_from_config,
    shoot_through_current,
    time_to_current_limit,
    wind_speed,
)

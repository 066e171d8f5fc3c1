"""
Stochastic-geometry model of D2D pairs underlaying a multi-band mm-wave
cellular uplink: analytic and simulated success probabilities, energy
efficiency and EE-optimal D2D power allocation.
"""
__version__ = "0.1.0"

from .analytic import (
    BandStpModel,
    StpCurve,
    StpResult,
    interference_integral,
    lemma1_constant,
    stp,
    stp_cellular,
    stp_d2d,
)
from .config import (
    AntennaPattern,
    ConfigError,
    PowerVector,
    ScenarioConfig,
    effective_gain_pmf,
    load_scenario,
    table1_scenario,
    validate_scenario,
)
from .metrics import band_metrics, energy_efficiency
from .montecarlo import SimulationPlan, estimate_ee, estimate_stp
from .optimizer import OptimizerOptions, check_feasibility, optimize_ee, sweep_ee

__all__ = [
    "AntennaPattern",
    "BandStpModel",
    "ConfigError",
    "OptimizerOptions",
    "PowerVector",
    "ScenarioConfig",
    "SimulationPlan",
    "StpCurve",
    "StpResult",
    "band_metrics",
    "check_feasibility",
    "effective_gain_pmf",
    "energy_efficiency",
    "estimate_ee",
    "estimate_stp",
    "interference_integral",
    "lemma1_constant",
    "load_scenario",
    "optimize_ee",
    "stp",
    "stp_cellular",
    "stp_d2d",
    "sweep_ee",
    "table1_scenario",
    "validate_scenario",
]

"""Geometric shaping of dual-polarization 4D formats for nonlinear fiber.

The package splits into a constellation layer (formats, moments, catalog),
a physical layer (closed-form link model and a split-step simulator), a
rate layer (Gauss-Hermite and Monte-Carlo mutual-information estimators
under a Gaussian decoding metric), and an optimization/workflow layer on
top. `fibershaper.cli` exposes all of it on the command line.
"""

from .air import AirEstimate, gauss_hermite_rate, gh_air, gh_air_gradient, mc_air
from .constellations import (Constellation4D, EnergyProfile, MomentSet,
                             catalog, circular_8qam, energy_levels,
                             generate_qam, get_format, load_constellation,
                             min_distance, moments, normalize_unit_energy,
                             pm_from_2d, save_constellation)
from .errors import (BracketError, CalibrationError, ConfigError,
                     ConstellationFormatError, EmptyCatalogSlotError,
                     IntegrationError, NumericalError)
from .fibersim import SimConfig, SymbolCloud, calibrate_eta, load_cloud, save_cloud, simulate, ssfm_air
from .linkmodel import (EffectiveSnr, LinkConfig, NliCoefficientSet,
                        NoiseProfile, TxConfig, ase_power,
                        compute_nli_coefficients, dbm_to_watts,
                        effective_snr, nli_power, optimal_launch,
                        watts_to_dbm)
from .optimizer import (OptimizationTrace, OptimizerConfig, StepRule,
                        TraceRow, optimize, select_seed, target_distance)
from .workflows import (CompareReport, FormatComparison, SweepResult,
                        SweepRow, compare, compare_sweeps, link_fingerprint,
                        rate_at_distance, reach, sweep_distance)

__version__ = "0.1.0"

__all__ = [
    "AirEstimate", "gauss_hermite_rate", "gh_air", "gh_air_gradient",
    "mc_air",
    "Constellation4D", "EnergyProfile", "MomentSet", "catalog",
    "circular_8qam", "energy_levels", "generate_qam", "get_format",
    "load_constellation", "min_distance", "moments", "normalize_unit_energy",
    "pm_from_2d", "save_constellation",
    "BracketError", "CalibrationError", "ConfigError",
    "ConstellationFormatError", "EmptyCatalogSlotError", "IntegrationError",
    "NumericalError",
    "SimConfig", "SymbolCloud", "calibrate_eta", "load_cloud", "save_cloud",
    "simulate", "ssfm_air",
    "EffectiveSnr", "LinkConfig", "NliCoefficientSet", "NoiseProfile",
    "TxConfig", "ase_power", "compute_nli_coefficients", "dbm_to_watts",
    "effective_snr", "nli_power", "optimal_launch", "watts_to_dbm",
    "OptimizationTrace", "OptimizerConfig", "StepRule", "TraceRow",
    "optimize", "select_seed", "target_distance",
    "CompareReport", "FormatComparison", "SweepResult", "SweepRow",
    "compare", "compare_sweeps", "link_fingerprint", "rate_at_distance",
    "reach", "sweep_distance",
    "__version__",
]

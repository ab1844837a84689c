"""Sparse array of reflecting sub-surfaces aiding a blocked mmWave uplink.

A base station receives a single-antenna user only through a tiled passive
reflecting surface. The package provides the scene geometry (tile grids,
visible regions), a Rician channel model with exact spherical-wave LoS
phases, reflection phase designs, a closed-form mean-power analysis of the
maximum-ratio-combining uplink, a vectorized Monte Carlo simulator and a
config-driven study runner with reproducible CSV artifacts.
"""

__version__ = "0.1.0"

from .channel import (LosComponents, NlosPolicy, SystemConfig, build_los,
                      realize_channels, tile_stream)
from .closed_form import (OracleEstimate, SignalPowerBreakdown, approx_se,
                          dirichlet_kernel, expectation_oracle, mean_signal_power,
                          o11_closed_form, omega)
from .experiments import (ConfigError, ExperimentConfig, ExperimentResult,
                          SweepRow, default_document, run_fig2, run_fig3,
                          run_fig4, run_sweep, validate_config, write_result)
from .geometry import (DegenerateGeometryError, PlanarArraySpec, Position3,
                       TileLayout, VisibleRegion, direction_angles,
                       element_positions, in_visible_region, vr_for_tile)
from .reflection import optimal_phases, random_phases, wrap_phase
from .simulation import (ErgodicEstimate, PositionBox, TrialOutcome,
                         ZeroChannelError, ergodic_se, ergodic_se_over_positions,
                         instantaneous_se, mrc_weights, snr_samples)

__all__ = [
    "__version__",
    "LosComponents", "NlosPolicy", "SystemConfig", "build_los",
    "realize_channels", "tile_stream",
    "OracleEstimate", "SignalPowerBreakdown", "approx_se", "dirichlet_kernel",
    "expectation_oracle", "mean_signal_power", "o11_closed_form", "omega",
    "ConfigError", "ExperimentConfig", "ExperimentResult", "SweepRow",
    "default_document", "run_fig2", "run_fig3", "run_fig4", "run_sweep",
    "validate_config", "write_result",
    "DegenerateGeometryError", "PlanarArraySpec", "Position3", "TileLayout",
    "VisibleRegion", "direction_angles", "element_positions",
    "in_visible_region", "vr_for_tile",
    "optimal_phases", "random_phases", "wrap_phase",
    "ErgodicEstimate", "PositionBox", "TrialOutcome", "ZeroChannelError",
    "ergodic_se", "ergodic_se_over_positions", "instantaneous_se",
    "mrc_weights", "snr_samples",
]

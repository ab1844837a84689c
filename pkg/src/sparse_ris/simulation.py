"""Link-level Monte Carlo simulation of the reflected uplink.

The BS applies maximum-ratio combining to the effective channel
v = sum_m H_m diag(e^{j phases_m}) h_m, so the instantaneous received SNR is
||v||^2 / sigma^2 and the spectral efficiency log2(1 + SNR). ``snr_samples``
evaluates many trials in one vectorized pass without materializing per-trial
BS channel matrices; with ``n_trials=1`` it consumes exactly the same random
draws as ``realize_channels``, so the two paths are interchangeable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (ChannelRealization, LosComponents, PlanarArraySpec,
                      SystemConfig, _seed_tuple, _steering_upa_batch, build_los,
                      draw_bs_paths, draw_ms_paths, nlos_amplitudes, tile_stream)
from .geometry import Position3, TileLayout
from .reflection import optimal_phases, random_phases


class ZeroChannelError(RuntimeError):
    """Raised when MRC weights are requested for an identically zero channel."""


def effective_vector(realization: ChannelRealization, phases: np.ndarray) -> np.ndarray:
    """Combined BS-side vector (N_B,) of one realization under ``phases`` (M, N)."""
    gamma = np.exp(1j * np.asarray(phases, dtype=float))
    v = None
    for m in range(realization.n_tiles):
        term = realization.bs[m].matrix @ (gamma[m] * realization.ms[m].vector)
        v = term if v is None else v + term
    return v


def mrc_weights(v: np.ndarray) -> np.ndarray:
    """Unit-norm maximum-ratio combining weights for effective channel ``v``."""
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ZeroChannelError("effective channel is zero; no MRC direction")
    return np.conj(v) / norm


@dataclass(frozen=True)
class TrialOutcome:
    """Instantaneous link metrics of a single realization."""

    spectral_efficiency: float
    received_snr: float
    zero_channel: bool


def instantaneous_se(realization: ChannelRealization, phases: np.ndarray,
                     noise_power: float) -> TrialOutcome:
    """MRC spectral efficiency of one realization; a zero channel yields 0 bps/Hz."""
    if noise_power <= 0.0:
        raise ValueError("noise power must be positive")
    v = effective_vector(realization, phases)
    snr = float(np.sum(np.abs(v) ** 2)) / noise_power
    return TrialOutcome(float(np.log2(1.0 + snr)), snr, snr == 0.0)


def snr_samples(config: SystemConfig, layout: TileLayout, bs_array: PlanarArraySpec,
                bs_pos: Position3, ms_pos: Position3, phases: np.ndarray,
                n_trials: int, seed, los: LosComponents | None = None) -> np.ndarray:
    """(n_trials,) received SNR draws for one scene and phase profile.

    Per tile, trial randomness comes from the same two counter-based streams
    used by ``realize_channels`` (BS side then user side), drawn as
    trial-indexed blocks; results for a given (scene, phases, seed) are
    reproducible regardless of how other tiles or trials are evaluated.
    """
    if n_trials < 1:
        raise ValueError("need at least one trial")
    if los is None:
        los = build_los(layout, bs_array, bs_pos, ms_pos, config.wavelength)
    gamma = np.exp(1j * np.asarray(phases, dtype=float))
    u_ll = gamma * los.ms_los                              # (M, N)
    v_ll = np.einsum('mrc,mc->r', los.bs_los, u_ll)
    if config.los_only:
        snr = float(np.sum(np.abs(v_ll) ** 2)) / config.noise_power
        return np.full(n_trials, snr)

    a_b = np.sqrt(config.rician_k_bs / (config.rician_k_bs + 1.0))
    b_b = np.sqrt(1.0 / (config.rician_k_bs + 1.0))
    a_m = np.sqrt(config.rician_k_ms / (config.rician_k_ms + 1.0))
    b_m = np.sqrt(1.0 / (config.rician_k_ms + 1.0))
    beta_n, alpha_n = nlos_amplitudes(config, los)
    l_b = config.nlos_paths_bs
    l_m = config.nlos_paths_ms
    scale_b = np.sqrt(los.n_bs * los.n_elements / l_b)
    scale_m = np.sqrt(los.n_elements / l_m)
    v = np.repeat(((a_b * a_m) * v_ll)[None, :], n_trials, axis=0)
    for m in range(layout.n_tiles):
        g_b, f_b = draw_bs_paths(tile_stream(seed, m + 1, 0), n_trials, l_b)
        g_m, f_m = draw_ms_paths(tile_stream(seed, m + 1, 1), n_trials, l_m)
        a_ms = _steering_upa_batch(f_m[..., 0], f_m[..., 1], los.n_el_v, los.n_el_h)
        x = gamma[m] * (scale_m * alpha_n[m]) * np.einsum('tl,tlc->tc', g_m, a_ms)
        v += (a_b * b_m) * (x @ los.bs_los[m].T)
        u = a_m * u_ll[m][None, :] + b_m * x               # (T, N) reflected user signal
        a_r = _steering_upa_batch(f_b[..., 0], f_b[..., 1], los.n_bs_v, los.n_bs_h)
        a_t = _steering_upa_batch(f_b[..., 2], f_b[..., 3], los.n_el_v, los.n_el_h)
        w = (scale_b * beta_n[m]) * g_b                    # (T, L) scattered BS gains
        proj = np.einsum('tlc,tc->tl', a_t.conj(), u)
        v += b_b * np.einsum('tl,tlr->tr', w * proj, a_r)
    return np.sum(np.abs(v) ** 2, axis=1) / config.noise_power


@dataclass(frozen=True)
class ErgodicEstimate:
    """Trial-averaged spectral efficiency with its Monte Carlo standard error."""

    mean_se: float
    std_error: float
    n_trials: int
    mean_snr: float


def ergodic_se(config: SystemConfig, layout: TileLayout, bs_array: PlanarArraySpec,
               bs_pos: Position3, ms_pos: Position3, phases: np.ndarray,
               n_trials: int, seed, los: LosComponents | None = None) -> ErgodicEstimate:
    """Average spectral efficiency over ``n_trials`` channel realizations."""
    snr = snr_samples(config, layout, bs_array, bs_pos, ms_pos, phases,
                      n_trials, seed, los=los)
    se = np.log2(1.0 + snr)
    err = float(se.std(ddof=1) / np.sqrt(n_trials)) if n_trials > 1 else 0.0
    return ErgodicEstimate(float(se.mean()), err, n_trials, float(snr.mean()))


@dataclass(frozen=True)
class PositionBox:
    """Axis-aligned box of candidate user positions, ranges as (low, high)."""

    x: tuple[float, float]
    y: tuple[float, float]
    z: tuple[float, float]

    def __post_init__(self):
        for lo, hi in (self.x, self.y, self.z):
            if not lo <= hi:
                raise ValueError("box range must satisfy low <= high")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """(n, 3) uniform draws from the box."""
        lo = np.array([self.x[0], self.y[0], self.z[0]])
        hi = np.array([self.x[1], self.y[1], self.z[1]])
        return rng.uniform(lo, hi, size=(n, 3))

    @classmethod
    def at_point(cls, p: Position3) -> "PositionBox":
        """Degenerate box containing a single position."""
        return cls((p.x, p.x), (p.y, p.y), (p.z, p.z))


def position_estimates(config: SystemConfig, layout: TileLayout,
                       bs_array: PlanarArraySpec, bs_pos: Position3,
                       region: PositionBox, n_positions: int, n_trials: int,
                       seed, phase_design: str = "optimal"):
    """Yield (estimate, los, phases) for each sampled user position.

    Positions come from one derived stream, trial randomness from a second
    derived stream per position, and random-design phases from a third, so
    every position's result is independent of evaluation order. With the
    optimal design the phases are recomputed from each position's geometry.
    """
    if phase_design not in ("optimal", "random"):
        raise ValueError("phase_design must be 'optimal' or 'random'")
    if n_positions < 1:
        raise ValueError("need at least one position")
    base = _seed_tuple(seed)
    points = region.sample(np.random.default_rng(base + (1,)), n_positions)
    for p, xyz in enumerate(points):
        ms = Position3(float(xyz[0]), float(xyz[1]), float(xyz[2]))
        los = build_los(layout, bs_array, bs_pos, ms, config.wavelength)
        if phase_design == "optimal":
            phases = optimal_phases(los)
        else:
            phases = random_phases(np.random.default_rng(base + (3, p)),
                                   layout.n_tiles, layout.tile.n)
        est = ergodic_se(config, layout, bs_array, bs_pos, ms, phases,
                         n_trials, base + (2, p), los=los)
        yield est, los, phases


def ergodic_se_over_positions(config: SystemConfig, layout: TileLayout,
                              bs_array: PlanarArraySpec, bs_pos: Position3,
                              region, n_positions: int, n_trials: int, seed,
                              phase_design: str = "optimal") -> ErgodicEstimate:
    """Ergodic SE averaged over uniform user positions in ``region``.

    ``region`` may be a PositionBox or a single Position3 (treated as a
    degenerate box). The reported standard error is the spread of the
    per-position means over sqrt(n_positions), which for several positions
    covers both position-sampling and fading noise; for a single position it
    is the fading standard error.
    """
    if isinstance(region, Position3):
        region = PositionBox.at_point(region)
    means, errs, snrs = [], [], []
    for est, _, _ in position_estimates(config, layout, bs_array, bs_pos, region,
                                        n_positions, n_trials, seed, phase_design):
        means.append(est.mean_se)
        errs.append(est.std_error)
        snrs.append(est.mean_snr)
    means = np.array(means)
    if n_positions > 1:
        err = float(means.std(ddof=1) / np.sqrt(n_positions))
    else:
        err = errs[0]
    return ErgodicEstimate(float(means.mean()), err,
                           n_positions * n_trials, float(np.mean(snrs)))

"""Rician channels between the base station, the reflecting tiles and the user.

Per tile m the BS-side channel is H_m = sqrt(K_B/(K_B+1)) H_los +
sqrt(1/(K_B+1)) H_nlos and the user-side channel is the analogous mix of
h_los and h_nlos. The BS-side LoS part is a rank-one plane-wave outer
product scaled by the free-space amplitude of the BS-to-tile-centre path;
the user-side LoS part carries the exact per-element spherical phase
exp(j 2 pi r / wavelength) with free-space amplitude 1/sqrt(4 pi r^2),
zeroed outside the tile's visible region.

NLoS parts sum a small number of scattered paths with CN(0,1) gains. Path
spatial frequencies are drawn i.i.d. uniform on (-pi, pi] (a virtual-angle
model), which makes the scattered steering vectors exactly uncorrelated
across elements in expectation; the closed-form power analysis relies on
that property.

Randomness contract: every scenario seed (an int or tuple of ints) derives
one SeedSequence stream per (tile, side), side 0 = BS, side 1 = user. All
trials' draws come from that stream as trial-indexed blocks (gains first,
then frequencies), so results do not depend on evaluation order across
tiles, positions or sweep points, and are bit-reproducible for a fixed
(scenario, seed, n_trials).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import PlanarArraySpec, Position3, TileLayout, element_positions

SPEED_OF_LIGHT = 299792458.0


class NlosPolicy(str, Enum):
    """How scattered-path amplitudes relate to the deterministic geometry.

    MATCH_LOS_GATED: BS-side paths reuse the LoS free-space amplitude of the
    tile, user-side paths use the free-space amplitude of the user-to-tile-
    centre distance and are zeroed outside the tile's visible region (the
    default). MATCH_LOS_UNGATED: same amplitudes but the user-side paths
    ignore the visible region.
    """

    MATCH_LOS_GATED = "match_los_gated"
    MATCH_LOS_UNGATED = "match_los_ungated"


@dataclass(frozen=True)
class SystemConfig:
    """Carrier, Rician factors, scattering orders and noise level.

    Rician factors are linear ratios (not dB). ``noise_power`` is the linear
    noise variance at each BS antenna for unit transmit power, so the
    transmit SNR is 1/noise_power. ``los_only`` removes the scattered parts
    exactly (the K -> infinity limit) instead of relying on huge K values.
    """

    carrier_frequency_hz: float
    rician_k_bs: float
    rician_k_ms: float
    nlos_paths_bs: int = 3
    nlos_paths_ms: int = 3
    noise_power: float = 1.0
    nlos_policy: NlosPolicy = NlosPolicy.MATCH_LOS_GATED
    los_only: bool = False

    def __post_init__(self):
        if self.carrier_frequency_hz <= 0.0:
            raise ValueError("carrier frequency must be positive")
        if self.rician_k_bs < 0.0 or self.rician_k_ms < 0.0:
            raise ValueError("Rician factors must be nonnegative")
        if self.nlos_paths_bs < 1 or self.nlos_paths_ms < 1:
            raise ValueError("path counts must be at least 1")
        if self.noise_power <= 0.0:
            raise ValueError("noise power must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency_hz


def steering_ula(freq: float, n: int) -> np.ndarray:
    """Unit-norm uniform linear array response, entry k = exp(j k freq) / sqrt(n)."""
    return np.exp(1j * freq * np.arange(n)) / np.sqrt(n)


def steering_upa(freq_v: float, freq_h: float, n_v: int, n_h: int) -> np.ndarray:
    """Planar response: Kronecker product of the vertical and horizontal responses."""
    return np.kron(steering_ula(freq_v, n_v), steering_ula(freq_h, n_h))


def _row_col_steps(n_v: int, n_h: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-entry (row, column) integer steps in Kronecker order, 0-based."""
    idx = np.arange(n_v * n_h)
    return idx // n_h, idx % n_h


def _steering_upa_batch(freq_v: np.ndarray, freq_h: np.ndarray,
                        n_v: int, n_h: int) -> np.ndarray:
    """Planar responses for stacked frequency pairs; output shape freq shape + (n,)."""
    rows, cols = _row_col_steps(n_v, n_h)
    phase = (np.asarray(freq_v)[..., None] * rows
             + np.asarray(freq_h)[..., None] * cols)
    return np.exp(1j * phase) / np.sqrt(n_v * n_h)


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def _uniform_frequencies(rng: np.random.Generator, shape) -> np.ndarray:
    # negated half-open draw gives the (-pi, pi] convention
    return -rng.uniform(-np.pi, np.pi, size=shape)


def _seed_tuple(seed) -> tuple:
    return tuple(seed) if isinstance(seed, (tuple, list)) else (int(seed),)


def tile_stream(seed, tile_index: int, side: int) -> np.random.Generator:
    """Deterministic per-(tile, side) generator; tile_index 1-based, side 0=BS 1=user."""
    return np.random.default_rng(_seed_tuple(seed) + (tile_index - 1, side))


@dataclass
class LosComponents:
    """Deterministic line-of-sight quantities for one BS / surface / user scene.

    Arrays are stacked over tiles (index order of the layout). Spatial
    frequencies are the per-element phase steps of the plane-wave model:
    ``bs_arrival_*`` at the BS array for the wave from each tile,
    ``tile_departure_*`` at each tile for the wave toward the BS.
    ``departure_phase[m, s]`` is the accumulated departure step of element s,
    ``arrival_phase[m]`` the centre-of-array arrival phase used when the BS
    responses are paired between tiles. ``element_gain`` is zero outside the
    tile's visible region.
    """

    wavelength: float
    n_bs_v: int
    n_bs_h: int
    n_el_v: int
    n_el_h: int
    bs_arrival_v: np.ndarray
    bs_arrival_h: np.ndarray
    tile_departure_v: np.ndarray
    tile_departure_h: np.ndarray
    bs_gain: np.ndarray            # (M,) free-space amplitude of BS-tile path
    tile_distance: np.ndarray      # (M,) user to tile centre
    in_vr: np.ndarray              # (M,) bool
    element_r: np.ndarray          # (M, N) user to element exact distances
    element_gain: np.ndarray       # (M, N) gated free-space amplitudes
    departure_phase: np.ndarray    # (M, N)
    arrival_phase: np.ndarray      # (M,)
    bs_los: np.ndarray             # (M, N_B, N) rank-one LoS channels
    ms_los: np.ndarray             # (M, N) spherical-phase LoS vectors

    @property
    def n_tiles(self) -> int:
        return self.bs_gain.shape[0]

    @property
    def n_bs(self) -> int:
        return self.n_bs_v * self.n_bs_h

    @property
    def n_elements(self) -> int:
        return self.n_el_v * self.n_el_h


def build_los(layout: TileLayout, bs_array: PlanarArraySpec, bs_pos: Position3,
              ms_pos: Position3, wavelength: float) -> LosComponents:
    """Assemble every deterministic LoS quantity for the scene, vectorized over tiles."""
    centers = layout.tile_centers()                      # (M, 3)
    bs = bs_pos.array
    ms = ms_pos.array
    m_tiles = layout.n_tiles
    tile = layout.tile

    # BS-side geometry per tile centre
    to_tile = centers - bs[None, :]
    rng_bs = np.linalg.norm(to_tile, axis=1)
    if np.any(rng_bs == 0.0):
        raise ValueError("BS position coincides with a tile centre")
    k = 2.0 * np.pi / wavelength
    # arrival at the BS: direction BS -> tile; departure at the tile: tile -> BS
    cos_el_arr = to_tile[:, 2] / rng_bs
    sin_el_sin_az_arr = to_tile[:, 1] / rng_bs
    bs_arrival_v = k * bs_array.spacing_v * cos_el_arr
    bs_arrival_h = k * bs_array.spacing_h * sin_el_sin_az_arr
    cos_el_dep = -to_tile[:, 2] / rng_bs
    sin_el_sin_az_dep = -to_tile[:, 1] / rng_bs
    tile_departure_v = k * tile.spacing_v * cos_el_dep
    tile_departure_h = k * tile.spacing_h * sin_el_sin_az_dep

    bs_gain = 1.0 / np.sqrt(4.0 * np.pi * rng_bs ** 2)

    # user-side exact element distances and visibility gating
    offsets = tile.element_offsets()                     # (N, 3)
    epos = centers[:, None, :] + offsets[None, :, :]     # (M, N, 3)
    element_r = np.linalg.norm(ms[None, None, :] - epos, axis=-1)
    if np.any(element_r == 0.0):
        raise ValueError("user position coincides with a surface element")
    to_ms = ms[None, :] - centers
    vax = tile.vertical_axis
    horiz = to_ms - (to_ms @ vax)[:, None] * vax[None, :]
    hn = np.linalg.norm(horiz, axis=1)
    # same closed-boundary test as VisibleRegion.contains; zero horizontal
    # offset (hn == 0) satisfies 0 >= 0 and counts inside
    in_vr = horiz @ layout.normal >= (np.cos(layout.vr_half_angle) - 1e-12) * hn
    element_gain = np.where(in_vr[:, None],
                            1.0 / np.sqrt(4.0 * np.pi * element_r ** 2), 0.0)
    tile_distance = np.linalg.norm(to_ms, axis=1)

    rows, cols = _row_col_steps(tile.n_v, tile.n_h)
    departure_phase = (tile_departure_v[:, None] * rows[None, :]
                       + tile_departure_h[:, None] * cols[None, :])
    arrival_phase = ((bs_array.n_v - 1) / 2.0 * bs_arrival_v
                     + (bs_array.n_h - 1) / 2.0 * bs_arrival_h)

    a_bs = _steering_upa_batch(bs_arrival_v, bs_arrival_h, bs_array.n_v, bs_array.n_h)
    a_tile = _steering_upa_batch(tile_departure_v, tile_departure_h, tile.n_v, tile.n_h)
    scale = bs_gain * np.sqrt(bs_array.n * tile.n)
    bs_los = np.einsum('m,mr,mc->mrc', scale, a_bs, a_tile.conj())
    ms_los = element_gain * np.exp(1j * k * element_r)

    assert bs_los.shape == (m_tiles, bs_array.n, tile.n)
    return LosComponents(
        wavelength=wavelength,
        n_bs_v=bs_array.n_v, n_bs_h=bs_array.n_h,
        n_el_v=tile.n_v, n_el_h=tile.n_h,
        bs_arrival_v=bs_arrival_v, bs_arrival_h=bs_arrival_h,
        tile_departure_v=tile_departure_v, tile_departure_h=tile_departure_h,
        bs_gain=bs_gain, tile_distance=tile_distance, in_vr=in_vr,
        element_r=element_r, element_gain=element_gain,
        departure_phase=departure_phase, arrival_phase=arrival_phase,
        bs_los=bs_los, ms_los=ms_los)


def nlos_amplitudes(config: SystemConfig, los: LosComponents) -> tuple[np.ndarray, np.ndarray]:
    """Per-tile scattered-path amplitudes (BS side, user side) under the policy."""
    beta_n = los.bs_gain.copy()
    alpha_n = 1.0 / np.sqrt(4.0 * np.pi * los.tile_distance ** 2)
    if config.nlos_policy is NlosPolicy.MATCH_LOS_GATED:
        alpha_n = np.where(los.in_vr, alpha_n, 0.0)
    return beta_n, alpha_n


# ---------------------------------------------------------------------------
# single-tile channel pieces (thin wrappers used by tests and realize_channels)

def bs_tile_los(layout: TileLayout, bs_array: PlanarArraySpec, bs_pos: Position3,
                tile_index: int, wavelength: float) -> np.ndarray:
    """Rank-one LoS BS-side channel matrix of one tile, shape (N_B, N)."""
    layout._check_tile(tile_index)
    los = build_los(layout, bs_array, bs_pos,
                    _far_dummy_user(layout), wavelength)
    return los.bs_los[tile_index - 1]


def _far_dummy_user(layout: TileLayout) -> Position3:
    # any point off the panel works; the BS-side pieces ignore the user
    c = layout.center.array + 10.0 * layout.normal
    return Position3.from_array(c)


def ms_tile_los(layout: TileLayout, tile_index: int, ms_pos: Position3,
                wavelength: float) -> np.ndarray:
    """User-side LoS vector of one tile with exact per-element spherical phases."""
    layout._check_tile(tile_index)
    epos = element_positions(layout, tile_index)
    r = np.linalg.norm(ms_pos.array[None, :] - epos, axis=1)
    if np.any(r == 0.0):
        raise ValueError("user position coincides with a surface element")
    from .geometry import in_visible_region, vr_for_tile
    visible = in_visible_region(vr_for_tile(layout, tile_index), ms_pos)
    gain = (1.0 / np.sqrt(4.0 * np.pi * r ** 2)) if visible else np.zeros_like(r)
    return gain * np.exp(1j * 2.0 * np.pi * r / wavelength)


def draw_bs_paths(rng: np.random.Generator, n_trials: int, n_paths: int):
    """BS-side scattered draws as trial-indexed blocks: CN(0,1) gains then frequencies."""
    gains = _complex_normal(rng, (n_trials, n_paths))
    freqs = _uniform_frequencies(rng, (n_trials, n_paths, 4))
    return gains, freqs


def draw_ms_paths(rng: np.random.Generator, n_trials: int, n_paths: int):
    """User-side scattered draws: CN(0,1) gains then (vertical, horizontal) frequencies."""
    gains = _complex_normal(rng, (n_trials, n_paths))
    freqs = _uniform_frequencies(rng, (n_trials, n_paths, 2))
    return gains, freqs


def assemble_bs_nlos(gains: np.ndarray, freqs: np.ndarray, amplitude: float,
                     bs_array: PlanarArraySpec, tile: PlanarArraySpec) -> np.ndarray:
    """Scattered BS-side channel (..., N_B, N) from path gains and frequency draws.

    ``gains`` has shape (..., L), ``freqs`` (..., L, 4) ordered (arrival
    vertical, arrival horizontal, departure vertical, departure horizontal).
    """
    n_paths = gains.shape[-1]
    a_r = _steering_upa_batch(freqs[..., 0], freqs[..., 1], bs_array.n_v, bs_array.n_h)
    a_t = _steering_upa_batch(freqs[..., 2], freqs[..., 3], tile.n_v, tile.n_h)
    scale = np.sqrt(bs_array.n * tile.n / n_paths) * amplitude
    return scale * np.einsum('...l,...lr,...lc->...rc', gains, a_r, a_t.conj())


def assemble_ms_nlos(gains: np.ndarray, freqs: np.ndarray, amplitude: float,
                     tile: PlanarArraySpec) -> np.ndarray:
    """Scattered user-side vector (..., N) from path gains and frequency draws."""
    n_paths = gains.shape[-1]
    a = _steering_upa_batch(freqs[..., 0], freqs[..., 1], tile.n_v, tile.n_h)
    scale = np.sqrt(tile.n / n_paths) * amplitude
    return scale * np.einsum('...l,...lc->...c', gains, a)


def bs_tile_nlos(rng: np.random.Generator, config: SystemConfig, layout: TileLayout,
                 bs_array: PlanarArraySpec, bs_pos: Position3,
                 tile_index: int) -> np.ndarray:
    """One scattered BS-side realization for a single tile, shape (N_B, N)."""
    layout._check_tile(tile_index)
    r = np.linalg.norm(bs_pos.array - layout.tile_centers()[tile_index - 1])
    amplitude = 1.0 / np.sqrt(4.0 * np.pi * r ** 2)
    gains, freqs = draw_bs_paths(rng, 1, config.nlos_paths_bs)
    return assemble_bs_nlos(gains[0], freqs[0], amplitude, bs_array, layout.tile)


def ms_tile_nlos(rng: np.random.Generator, config: SystemConfig, layout: TileLayout,
                 tile_index: int, ms_pos: Position3) -> np.ndarray:
    """One scattered user-side realization for a single tile, shape (N,)."""
    layout._check_tile(tile_index)
    center = layout.tile_centers()[tile_index - 1]
    rho = np.linalg.norm(ms_pos.array - center)
    if rho == 0.0:
        raise ValueError("user position coincides with a tile centre")
    amplitude = 1.0 / np.sqrt(4.0 * np.pi * rho ** 2)
    if config.nlos_policy is NlosPolicy.MATCH_LOS_GATED:
        from .geometry import in_visible_region, vr_for_tile
        if not in_visible_region(vr_for_tile(layout, tile_index), ms_pos):
            amplitude = 0.0
    gains, freqs = draw_ms_paths(rng, 1, config.nlos_paths_ms)
    return assemble_ms_nlos(gains[0], freqs[0], amplitude, layout.tile)


# ---------------------------------------------------------------------------
# full per-tile realization

@dataclass
class TileChannelBS:
    """BS-side channel of one tile: LoS part, scattered part and the Rician mix."""

    los_part: np.ndarray
    nlos_part: np.ndarray
    matrix: np.ndarray


@dataclass
class TileChannelMS:
    """User-side channel of one tile: LoS part, scattered part and the Rician mix."""

    los_part: np.ndarray
    nlos_part: np.ndarray
    vector: np.ndarray


@dataclass
class ChannelRealization:
    """All per-tile channels for one scene and one seed."""

    bs: list
    ms: list
    seed: object

    @property
    def n_tiles(self) -> int:
        return len(self.bs)


def rician_mix(los_part: np.ndarray, nlos_part: np.ndarray, k_factor: float) -> np.ndarray:
    """sqrt(K/(K+1)) los + sqrt(1/(K+1)) nlos."""
    return (np.sqrt(k_factor / (k_factor + 1.0)) * los_part
            + np.sqrt(1.0 / (k_factor + 1.0)) * nlos_part)


def realize_channels(config: SystemConfig, layout: TileLayout,
                     bs_array: PlanarArraySpec, bs_pos: Position3, ms_pos: Position3,
                     seed, los: LosComponents | None = None) -> ChannelRealization:
    """Draw one full channel realization.

    Identical (scene, seed) inputs give bit-identical output. ``los`` may be
    passed to reuse a precomputed deterministic part. With ``los_only`` set
    the scattered parts are exactly zero and no randomness is consumed.
    """
    if los is None:
        los = build_los(layout, bs_array, bs_pos, ms_pos, config.wavelength)
    beta_n, alpha_n = nlos_amplitudes(config, los)
    bs_tiles = []
    ms_tiles = []
    for m in range(layout.n_tiles):
        h_los = los.bs_los[m]
        g_los = los.ms_los[m]
        if config.los_only:
            h_n = np.zeros_like(h_los)
            g_n = np.zeros_like(g_los)
            bs_tiles.append(TileChannelBS(h_los, h_n, h_los.copy()))
            ms_tiles.append(TileChannelMS(g_los, g_n, g_los.copy()))
            continue
        rng_b = tile_stream(seed, m + 1, 0)
        gains, freqs = draw_bs_paths(rng_b, 1, config.nlos_paths_bs)
        h_n = assemble_bs_nlos(gains[0], freqs[0], beta_n[m], bs_array, layout.tile)
        rng_m = tile_stream(seed, m + 1, 1)
        gains, freqs = draw_ms_paths(rng_m, 1, config.nlos_paths_ms)
        g_n = assemble_ms_nlos(gains[0], freqs[0], alpha_n[m], layout.tile)
        bs_tiles.append(TileChannelBS(h_los, h_n, rician_mix(h_los, h_n, config.rician_k_bs)))
        ms_tiles.append(TileChannelMS(g_los, g_n, rician_mix(g_los, g_n, config.rician_k_ms)))
    return ChannelRealization(bs=bs_tiles, ms=ms_tiles, seed=seed)

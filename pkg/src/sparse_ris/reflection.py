"""Reflection phase profiles for the tiled surface.

Phases are stored as a real (n_tiles, elements_per_tile) array in radians,
wrapped to (-pi, pi]; the surface applies diag(exp(j * phases)) per tile.
"""

from __future__ import annotations

import numpy as np

from .channel import LosComponents, _uniform_frequencies


def wrap_phase(phi):
    """Wrap angles to (-pi, pi]; the upper boundary is closed (pi maps to pi)."""
    return np.pi - np.mod(np.pi - np.asarray(phi, dtype=float), 2.0 * np.pi)


def random_phases(rng: np.random.Generator, n_tiles: int, n_elements: int) -> np.ndarray:
    """Independent uniform phases on (-pi, pi], one per element."""
    return _uniform_frequencies(rng, (n_tiles, n_elements))


def optimal_phases(los: LosComponents, reference: tuple[int, int] = (1, 1),
                   reference_phase: float = 0.0) -> np.ndarray:
    """Phases that cohere every reflected LoS element path at the BS.

    Each element cancels its own spherical-wave delay and steering phase
    relative to the reference element (1-based tile, element), so the total
    residual phase of every element pair vanishes and the LoS contributions
    of all tiles add fully coherently under maximum-ratio combining. Only
    LoS geometry enters, so the profile is deterministic per user position.
    """
    mt, el = reference
    if not (1 <= mt <= los.n_tiles and 1 <= el <= los.n_elements):
        raise ValueError("reference element out of range")
    k = 2.0 * np.pi / los.wavelength
    r0 = los.element_r[mt - 1, el - 1]
    dep0 = los.departure_phase[mt - 1, el - 1]
    arr0 = los.arrival_phase[mt - 1]
    phi = (k * (r0 - los.element_r) + reference_phase
           + los.departure_phase - dep0
           + arr0 - los.arrival_phase[:, None])
    return wrap_phase(phi)


def reflection_coefficients(phases: np.ndarray) -> np.ndarray:
    """Unit-modulus per-element coefficients exp(j * phases)."""
    return np.exp(1j * np.asarray(phases, dtype=float))

"""Closed-form mean received power of the combined reflect-and-combine uplink.

For maximum-ratio combining at the BS the mean received signal power
E ||sum_m H_m Gamma_m h_m||^2 splits into four terms by LoS/scattered
combination on each side:

  coherent          T1  * sum_{m,n} b_m b_n V_{m,n} sum_{c,s} a_{n,c} a_{m,s} e^{j Omega}
  bs_scattered      T K_ms  N_B       sum_m b_{N,m}^2 sum_t a_{m,t}^2
  ms_scattered      T K_bs  N_B N     sum_m b_m^2 a_{N,m}^2
  double_scattered  T       N_B N     sum_m b_{N,m}^2 a_{N,m}^2

with T = 1/((K_ms+1)(K_bs+1)), T1 = T K_ms K_bs, b the BS-side and a the
user-side amplitudes, V the pairwise BS beam overlap kernel and Omega the
total residual phase of an element pair. The scattered terms are exact
because scattered spatial frequencies are uniform on (-pi, pi], making the
steering vectors uncorrelated across elements in expectation.

The module also provides an independent Monte Carlo oracle for the same four
expectations, used to validate the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .channel import (LosComponents, SystemConfig, _complex_normal, _seed_tuple,
                      _steering_upa_batch, _uniform_frequencies, build_los,
                      nlos_amplitudes)
from .geometry import PlanarArraySpec, Position3, TileLayout

#: relative bound on the imaginary residue of the Hermitian pair sum
_IMAG_TOL = 1e-9
#: distance from a multiple of 2 pi below which the kernel uses its limit value
_SINGULARITY_TOL = 1e-9


def index_row(x: int, n_h: int) -> int:
    """1-based row of 1-based flat index ``x`` in a grid with ``n_h`` columns."""
    if x < 1:
        raise ValueError("flat index is 1-based")
    return ceil(x / n_h)


def index_col(x: int, n_h: int) -> int:
    """1-based column of 1-based flat index ``x`` in a grid with ``n_h`` columns."""
    return x - (index_row(x, n_h) - 1) * n_h


def _dirichlet_1d(delta: float, n: int) -> float:
    k = round(delta / (2.0 * np.pi))
    if abs(delta - 2.0 * np.pi * k) < _SINGULARITY_TOL:
        # analytic limit; the sign alternates when n is even and k is odd
        return n * (-1.0) ** (k * (n - 1))
    return np.sin(n * delta / 2.0) / np.sin(delta / 2.0)


def dirichlet_kernel(arrival_v_m: float, arrival_v_n: float,
                     arrival_h_m: float, arrival_h_n: float,
                     n_bs_v: int, n_bs_h: int) -> float:
    """Pairwise BS beam overlap of tiles m and n.

    Equals N_B times the magnitude-and-sign part of the inner product of the
    two BS plane-wave responses; the remaining separable phase is carried by
    ``arrival_phase`` inside Omega. The value at coinciding frequencies is
    the element count (removable singularity).
    """
    return (_dirichlet_1d(arrival_v_n - arrival_v_m, n_bs_v)
            * _dirichlet_1d(arrival_h_n - arrival_h_m, n_bs_h))


def dirichlet_matrix(los: LosComponents) -> np.ndarray:
    """(M, M) overlap kernel for every tile pair."""
    m = los.n_tiles
    out = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            out[i, j] = dirichlet_kernel(los.bs_arrival_v[i], los.bs_arrival_v[j],
                                         los.bs_arrival_h[i], los.bs_arrival_h[j],
                                         los.n_bs_v, los.n_bs_h)
    return out


def upsilon(m: int, n: int, c: int, s: int, los: LosComponents) -> float:
    """Deterministic steering phase of the (m, s) x (n, c) element pair.

    All indices 1-based; s indexes an element of tile m, c an element of
    tile n. Composed of the departure steps of both elements and the
    centre-of-array arrival phases of both tiles.
    """
    return float(los.departure_phase[m - 1, s - 1] - los.departure_phase[n - 1, c - 1]
                 + los.arrival_phase[n - 1] - los.arrival_phase[m - 1])


def omega(n: int, c: int, m: int, s: int, los: LosComponents,
          phases: np.ndarray) -> float:
    """Total residual phase of an element pair under reflection ``phases`` (M, N)."""
    k = 2.0 * np.pi / los.wavelength
    return float(k * (los.element_r[n - 1, c - 1] - los.element_r[m - 1, s - 1])
                 + phases[n - 1, c - 1] - phases[m - 1, s - 1]
                 + upsilon(m, n, c, s, los))


def _aligned_element_sums(los: LosComponents, phases: np.ndarray) -> np.ndarray:
    """(M,) complex per-tile sums q_m = sum_s a_{m,s} e^{j(k r + phase - dep + arr)}.

    The pair sum over elements factorizes as sum_{c,s} a a e^{j Omega}
    = q_n conj(q_m), which is what the coherent term consumes.
    """
    k = 2.0 * np.pi / los.wavelength
    q = los.element_gain * np.exp(1j * (k * los.element_r + phases
                                        - los.departure_phase
                                        + los.arrival_phase[:, None]))
    return q.sum(axis=1)


def o11_closed_form(m: int, n: int, los: LosComponents, phases: np.ndarray) -> complex:
    """Closed-form LoS-LoS pair contribution of tiles (m, n), 1-based."""
    q = _aligned_element_sums(los, phases)
    v = dirichlet_kernel(los.bs_arrival_v[m - 1], los.bs_arrival_v[n - 1],
                         los.bs_arrival_h[m - 1], los.bs_arrival_h[n - 1],
                         los.n_bs_v, los.n_bs_h)
    return complex(los.bs_gain[m - 1] * los.bs_gain[n - 1] * v
                   * q[n - 1] * np.conj(q[m - 1]))


@dataclass(frozen=True)
class SignalPowerBreakdown:
    """The four power terms; ``total`` is their sum."""

    coherent: float
    bs_scattered: float
    ms_scattered: float
    double_scattered: float

    @property
    def total(self) -> float:
        return self.coherent + self.bs_scattered + self.ms_scattered + self.double_scattered

    def as_array(self) -> np.ndarray:
        return np.array([self.coherent, self.bs_scattered,
                         self.ms_scattered, self.double_scattered])


def _mix_coefficients(config: SystemConfig) -> np.ndarray:
    """Coefficients (T1, T K_ms, T K_bs, T) of the four terms; LoS-only is (1,0,0,0)."""
    if config.los_only:
        return np.array([1.0, 0.0, 0.0, 0.0])
    t = 1.0 / ((config.rician_k_ms + 1.0) * (config.rician_k_bs + 1.0))
    return np.array([t * config.rician_k_ms * config.rician_k_bs,
                     t * config.rician_k_ms,
                     t * config.rician_k_bs,
                     t])


def mean_signal_power(config: SystemConfig, los: LosComponents,
                      phases: np.ndarray) -> SignalPowerBreakdown:
    """Closed-form mean received signal power for one scene and phase setting."""
    coefs = _mix_coefficients(config)
    q = _aligned_element_sums(los, phases)
    bq = los.bs_gain * q
    pair = np.conj(bq)[:, None] * bq[None, :] * dirichlet_matrix(los)
    pair_sum = pair.sum()
    scale = max(abs(pair_sum.real), 1e-300)
    assert abs(pair_sum.imag) <= _IMAG_TOL * scale, "Hermitian pair sum not real"
    coherent = coefs[0] * pair_sum.real

    n_b = los.n_bs
    n_el = los.n_elements
    beta_n, alpha_n = nlos_amplitudes(config, los)
    bs_scattered = coefs[1] * n_b * float(np.sum(beta_n ** 2 * (los.element_gain ** 2).sum(axis=1)))
    ms_scattered = coefs[2] * n_b * n_el * float(np.sum(los.bs_gain ** 2 * alpha_n ** 2))
    double_scattered = coefs[3] * n_b * n_el * float(np.sum(beta_n ** 2 * alpha_n ** 2))
    return SignalPowerBreakdown(float(coherent), bs_scattered, ms_scattered, double_scattered)


def approx_se(signal_power: float, noise_power: float) -> float:
    """Spectral efficiency of the mean-power approximation, log2(1 + S / sigma^2)."""
    if noise_power <= 0.0:
        raise ValueError("noise power must be positive")
    if signal_power < 0.0:
        raise ValueError("signal power must be nonnegative")
    return float(np.log2(1.0 + signal_power / noise_power))


# ---------------------------------------------------------------------------
# Monte Carlo expectation oracle

@dataclass
class OracleEstimate:
    """Monte Carlo estimates of the four power terms with their standard errors.

    The coherent term is deterministic, so its standard error is zero and its
    value is exact up to floating point.
    """

    terms: np.ndarray
    std_errors: np.ndarray
    n_trials: int

    @property
    def total(self) -> float:
        return float(self.terms.sum())


def expectation_oracle(config: SystemConfig, layout: TileLayout,
                       bs_array: PlanarArraySpec, bs_pos: Position3, ms_pos: Position3,
                       phases: np.ndarray, n_trials: int, seed,
                       chunk: int = 20000) -> OracleEstimate:
    """Estimate the four mean-power terms by direct simulation.

    Draws fresh scattered channels every trial (gains and spatial frequencies),
    forms the four mixed effective vectors sum_m H_X Gamma_m h_Y for X, Y in
    {LoS, scattered} and averages their squared norms. Independent of the
    closed form; used to validate it.
    """
    los = build_los(layout, bs_array, bs_pos, ms_pos, config.wavelength)
    gamma = np.exp(1j * phases)
    coefs = _mix_coefficients(config)
    u_ll = gamma * los.ms_los                      # (M, N) reflected LoS vectors
    v_ll = np.einsum('mrc,mc->r', los.bs_los, u_ll)
    coherent = coefs[0] * float(np.sum(np.abs(v_ll) ** 2))
    if config.los_only:
        return OracleEstimate(np.array([coherent, 0.0, 0.0, 0.0]),
                              np.zeros(4), n_trials)

    beta_n, alpha_n = nlos_amplitudes(config, los)
    l_b = config.nlos_paths_bs
    l_m = config.nlos_paths_ms
    n_b = los.n_bs
    n_el = los.n_elements
    rng = np.random.default_rng(_seed_tuple(seed) + (4,))
    sums = np.zeros(3)
    sq_sums = np.zeros(3)
    done = 0
    scale_b = np.sqrt(n_b * n_el / l_b)
    scale_m = np.sqrt(n_el / l_m)
    while done < n_trials:
        t = min(chunk, n_trials - done)
        v_nl = np.zeros((t, n_b), complex)
        v_ln = np.zeros((t, n_b), complex)
        v_nn = np.zeros((t, n_b), complex)
        for m in range(layout.n_tiles):
            g_b = _complex_normal(rng, (t, l_b))
            f_b = _uniform_frequencies(rng, (t, l_b, 4))
            a_r = _steering_upa_batch(f_b[..., 0], f_b[..., 1], los.n_bs_v, los.n_bs_h)
            a_t = _steering_upa_batch(f_b[..., 2], f_b[..., 3], los.n_el_v, los.n_el_h)
            g_m = _complex_normal(rng, (t, l_m))
            f_m = _uniform_frequencies(rng, (t, l_m, 2))
            a_m = _steering_upa_batch(f_m[..., 0], f_m[..., 1], los.n_el_v, los.n_el_h)
            h_n = scale_m * alpha_n[m] * np.einsum('tl,tlc->tc', g_m, a_m)
            u_n = gamma[m] * h_n                   # (t, N)
            w_b = scale_b * beta_n[m] * g_b        # (t, L)
            # scattered BS channel applied to a vector x: sum_l w a_r (a_t^H x)
            proj_ll = a_t.conj() @ u_ll[m]         # (t, L)
            proj_nn = np.einsum('tlc,tc->tl', a_t.conj(), u_n)
            v_nl += np.einsum('tl,tlr->tr', w_b * proj_ll, a_r)
            v_nn += np.einsum('tl,tlr->tr', w_b * proj_nn, a_r)
            v_ln += u_n @ los.bs_los[m].T
        p = np.stack([np.sum(np.abs(v_nl) ** 2, axis=1),
                      np.sum(np.abs(v_ln) ** 2, axis=1),
                      np.sum(np.abs(v_nn) ** 2, axis=1)])
        sums += p.sum(axis=1)
        sq_sums += (p ** 2).sum(axis=1)
        done += t
    means = sums / n_trials
    var = np.maximum(sq_sums / n_trials - means ** 2, 0.0) * n_trials / max(n_trials - 1, 1)
    errs = np.sqrt(var / n_trials)
    terms = np.array([coherent,
                      coefs[1] * means[0], coefs[2] * means[1], coefs[3] * means[2]])
    std = np.array([0.0, coefs[1] * errs[0], coefs[2] * errs[1], coefs[3] * errs[2]])
    return OracleEstimate(terms, std, n_trials)

import numpy as np
import pytest

from sparse_ris.channel import SystemConfig, build_los, steering_upa
from sparse_ris.closed_form import (_dirichlet_1d, approx_se, dirichlet_kernel,
                                    dirichlet_matrix, expectation_oracle,
                                    index_col, index_row, mean_signal_power,
                                    o11_closed_form, omega, upsilon)
from sparse_ris.geometry import PlanarArraySpec, Position3, TileLayout
from sparse_ris.reflection import random_phases

LAM = 299792458.0 / 28e9


def make_scene(tiles_v=2, tiles_h=2, n_v=3, n_h=3, pitch_v=1.0, pitch_h=2.0,
               ms=Position3(4.0, 0.0, 0.0)):
    tile = PlanarArraySpec(n_v, n_h, LAM / 6, LAM / 6)
    layout = TileLayout(tiles_v, tiles_h, pitch_v, pitch_h, tile,
                        Position3(0.0, 0.0, 5.0))
    bs = PlanarArraySpec(4, 4, LAM / 2, LAM / 2)
    los = build_los(layout, bs, Position3(100.0, -100.0, 10.0), ms, LAM)
    return layout, bs, los


def dense_tile_vectors(los, phases):
    """Per-tile effective BS vectors from the dense channel products."""
    u = np.exp(1j * phases) * los.ms_los
    return np.einsum('mrc,mc->mr', los.bs_los, u)


def test_flat_index_row_col_roundtrip():
    for n_h in (1, 2, 3, 5):
        for x in range(1, 21):
            r, c = index_row(x, n_h), index_col(x, n_h)
            assert (r - 1) * n_h + c == x
            assert 1 <= c <= n_h
    assert index_row(4, 3) == 2 and index_col(4, 3) == 1
    with pytest.raises(ValueError):
        index_row(0, 3)


def test_beam_kernel_limits_and_signs():
    # coinciding frequencies hit the removable singularity: exactly n
    assert _dirichlet_1d(0.0, 4) == 4.0
    assert dirichlet_kernel(0.3, 0.3, -1.1, -1.1, 4, 4) == 16.0
    # at full-period offsets the sign alternates for even element counts
    assert _dirichlet_1d(2.0 * np.pi, 2) == -2.0
    assert _dirichlet_1d(2.0 * np.pi, 3) == 3.0
    assert _dirichlet_1d(4.0 * np.pi, 2) == 2.0
    assert _dirichlet_1d(-2.0 * np.pi, 4) == -4.0
    # continuity across the limit branch
    for n in (2, 3, 4):
        lim = _dirichlet_1d(2.0 * np.pi, n)
        assert _dirichlet_1d(2.0 * np.pi + 1e-7, n) == pytest.approx(lim, abs=1e-5)
        assert _dirichlet_1d(2.0 * np.pi - 1e-7, n) == pytest.approx(lim, abs=1e-5)


def test_beam_kernel_matches_steering_inner_product():
    rng = np.random.default_rng(17)
    for _ in range(200):
        n_v, n_h = rng.integers(1, 6, 2)
        fvm, fvn, fhm, fhn = rng.uniform(-np.pi, np.pi, 4)
        v = dirichlet_kernel(fvm, fvn, fhm, fhn, int(n_v), int(n_h))
        am = steering_upa(fvm, fhm, int(n_v), int(n_h))
        an = steering_upa(fvn, fhn, int(n_v), int(n_h))
        assert abs(v) == pytest.approx(n_v * n_h * abs(np.vdot(am, an)),
                                       rel=1e-9, abs=1e-9)


def test_pair_phase_antisymmetry_and_zero_phase_form():
    _, _, los = make_scene()
    k = 2.0 * np.pi / LAM
    zero = np.zeros((4, 9))
    rng = np.random.default_rng(3)
    for _ in range(50):
        m, n = rng.integers(1, 5, 2)
        c, s = rng.integers(1, 10, 2)
        m, n, c, s = int(m), int(n), int(c), int(s)
        assert upsilon(m, n, c, s, los) == pytest.approx(
            -upsilon(n, m, s, c, los), abs=1e-12)
        expect = (k * (los.element_r[n - 1, c - 1] - los.element_r[m - 1, s - 1])
                  + upsilon(m, n, c, s, los))
        assert omega(n, c, m, s, los, zero) == pytest.approx(expect, abs=1e-9)


def test_pair_power_matches_dense_channel_product():
    rng = np.random.default_rng(11)
    layout, _, los = make_scene(tiles_v=2, tiles_h=3, n_v=2, n_h=3)
    phases = random_phases(rng, layout.n_tiles, layout.tile.n)
    v = dense_tile_vectors(los, phases)
    for m in range(1, layout.n_tiles + 1):
        for n in range(1, layout.n_tiles + 1):
            o = o11_closed_form(m, n, los, phases)
            dense = np.vdot(v[m - 1], v[n - 1])
            assert o == pytest.approx(dense, rel=1e-9, abs=1e-30)
            assert o == pytest.approx(np.conj(o11_closed_form(n, m, los, phases)),
                                      rel=1e-9, abs=1e-30)


def test_coherent_term_equals_pair_sum_and_dense_norm():
    rng = np.random.default_rng(12)
    layout, _, los = make_scene()
    phases = random_phases(rng, layout.n_tiles, layout.tile.n)
    cfg = SystemConfig(28e9, 3.0, 2.0)
    t1 = (3.0 / 4.0) * (2.0 / 3.0)
    power = mean_signal_power(cfg, los, phases)
    pair_sum = sum(o11_closed_form(m, n, los, phases)
                   for m in range(1, 5) for n in range(1, 5))
    assert power.coherent == pytest.approx(t1 * pair_sum.real, rel=1e-9)
    v = dense_tile_vectors(los, phases)
    assert power.coherent == pytest.approx(
        t1 * np.sum(np.abs(v.sum(axis=0)) ** 2), rel=1e-9)


def test_los_only_removes_scattered_terms():
    rng = np.random.default_rng(13)
    layout, _, los = make_scene()
    phases = random_phases(rng, layout.n_tiles, layout.tile.n)
    cfg = SystemConfig(28e9, 3.0, 2.0, los_only=True)
    power = mean_signal_power(cfg, los, phases)
    assert power.bs_scattered == 0.0
    assert power.ms_scattered == 0.0
    assert power.double_scattered == 0.0
    full = mean_signal_power(SystemConfig(28e9, 3.0, 2.0), los, phases)
    assert power.coherent == pytest.approx(full.coherent / ((3 / 4) * (2 / 3)),
                                           rel=1e-12)
    assert power.total == power.coherent


def test_all_terms_nonnegative_and_kernel_diagonal():
    rng = np.random.default_rng(14)
    layout, bs, los = make_scene(tiles_v=3, tiles_h=2)
    phases = random_phases(rng, layout.n_tiles, layout.tile.n)
    power = mean_signal_power(SystemConfig(28e9, 5.0, 1.5), los, phases)
    assert min(power.as_array()) >= 0.0
    assert power.total > 0.0
    vmat = dirichlet_matrix(los)
    assert np.all(np.diag(vmat) == bs.n)
    assert np.allclose(vmat, vmat.T)


def test_stacked_tile_replication_scaling():
    # pitch 0 stacks identical tiles: the coherent term grows with the square
    # of the copy count, the scattered terms linearly
    tile = PlanarArraySpec(3, 3, LAM / 6, LAM / 6)
    bs = PlanarArraySpec(4, 4, LAM / 2, LAM / 2)
    bs_pos = Position3(100.0, -100.0, 10.0)
    ms = Position3(4.0, 0.0, 0.0)
    lay1 = TileLayout(1, 1, 1.0, 1.0, tile, Position3(0, 0, 5))
    lay3 = TileLayout(3, 1, 0.0, 0.0, tile, Position3(0, 0, 5))
    los1 = build_los(lay1, bs, bs_pos, ms, LAM)
    los3 = build_los(lay3, bs, bs_pos, ms, LAM)
    rng = np.random.default_rng(15)
    phases1 = random_phases(rng, 1, 9)
    phases3 = np.repeat(phases1, 3, axis=0)
    cfg = SystemConfig(28e9, 3.0, 2.0)
    p1 = mean_signal_power(cfg, los1, phases1).as_array()
    p3 = mean_signal_power(cfg, los3, phases3).as_array()
    assert p3[0] == pytest.approx(9.0 * p1[0], rel=1e-12)
    assert np.allclose(p3[1:], 3.0 * p1[1:], rtol=1e-12)


def test_simulation_oracle_confirms_every_term():
    layout, bs, los = make_scene()
    bs_pos = Position3(100.0, -100.0, 10.0)
    ms = Position3(4.0, 0.0, 0.0)
    cfg = SystemConfig(28e9, 3.0, 2.0)  # asymmetric factors catch term swaps
    phases = random_phases(np.random.default_rng(16), layout.n_tiles, layout.tile.n)
    power = mean_signal_power(cfg, los, phases)
    est = expectation_oracle(cfg, layout, bs, bs_pos, ms, phases, 4000, 99)
    assert est.std_errors[0] == 0.0
    assert est.terms[0] == pytest.approx(power.coherent, rel=1e-9)
    for k in range(1, 4):
        z = (est.terms[k] - power.as_array()[k]) / est.std_errors[k]
        assert abs(z) < 4.0
    again = expectation_oracle(cfg, layout, bs, bs_pos, ms, phases, 4000, 99)
    assert np.array_equal(est.terms, again.terms)


def test_oracle_los_only_is_exact():
    layout, bs, los = make_scene()
    cfg = SystemConfig(28e9, 3.0, 2.0, los_only=True)
    phases = random_phases(np.random.default_rng(18), layout.n_tiles, layout.tile.n)
    est = expectation_oracle(cfg, layout, bs, Position3(100.0, -100.0, 10.0),
                             Position3(4.0, 0.0, 0.0), phases, 10, 0)
    power = mean_signal_power(cfg, los, phases)
    assert np.array_equal(est.std_errors, np.zeros(4))
    assert est.terms[0] == pytest.approx(power.coherent, rel=1e-9)
    assert np.all(est.terms[1:] == 0.0)


def test_se_from_power_values_and_validation():
    assert approx_se(3.0, 1.0) == pytest.approx(2.0)
    assert approx_se(0.0, 5.0) == 0.0
    assert approx_se(1.0, 1e-3) == pytest.approx(np.log2(1001.0))
    with pytest.raises(ValueError):
        approx_se(1.0, 0.0)
    with pytest.raises(ValueError):
        approx_se(-1.0, 1.0)

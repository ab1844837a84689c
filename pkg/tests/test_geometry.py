import numpy as np
import pytest

from sparse_ris.geometry import (DegenerateGeometryError, PlanarArraySpec,
                                 Position3, TileLayout, direction_angles, distance,
                                 element_positions, in_visible_region,
                                 spatial_frequencies, vr_for_tile)


def small_tile(n_v=3, n_h=3, spacing=0.1):
    return PlanarArraySpec(n_v, n_h, spacing, spacing)


def test_distance_and_direction_basics():
    o = Position3(0.0, 0.0, 0.0)
    assert distance(o, Position3(3.0, 4.0, 0.0)) == pytest.approx(5.0)
    a = direction_angles(o, Position3(1.0, 0.0, 0.0))
    assert a.elevation == pytest.approx(np.pi / 2)
    assert a.azimuth == pytest.approx(0.0)
    a = direction_angles(o, Position3(0.0, 1.0, 0.0))
    assert a.azimuth == pytest.approx(np.pi / 2)
    a = direction_angles(o, Position3(0.0, 0.0, 2.0))
    assert a.elevation == pytest.approx(0.0)
    with pytest.raises(DegenerateGeometryError):
        direction_angles(o, o)


def test_spatial_frequency_projections():
    lam = 0.0107
    # horizontal propagation: no vertical phase step
    a = direction_angles(Position3(0, 0, 0), Position3(5.0, 0.0, 0.0))
    fv, fh = spatial_frequencies(a, lam / 2, lam / 2, lam)
    assert fv == pytest.approx(0.0, abs=1e-12)
    assert fh == pytest.approx(0.0, abs=1e-12)
    # along +y at half-wavelength pitch the horizontal step is pi
    a = direction_angles(Position3(0, 0, 0), Position3(0.0, 5.0, 0.0))
    fv, fh = spatial_frequencies(a, lam / 2, lam / 2, lam)
    assert fh == pytest.approx(np.pi)


def test_array_spec_offsets_are_centred_grid():
    spec = PlanarArraySpec(2, 3, 0.5, 0.25)
    off = spec.element_offsets()
    assert off.shape == (6, 3)
    assert np.allclose(off.mean(axis=0), 0.0)
    assert np.allclose(off[:, 0], 0.0)  # default axes span the yoz plane
    # index 1..n_h walks the bottom row along +y, next row is +z above it
    assert np.allclose(off[1] - off[0], [0.0, 0.25, 0.0])
    assert np.allclose(off[3] - off[0], [0.0, 0.0, 0.5])
    assert spec.n == 6
    assert np.allclose(spec.normal, [1.0, 0.0, 0.0])


def test_array_spec_validation():
    with pytest.raises(ValueError):
        PlanarArraySpec(0, 3, 0.1, 0.1)
    with pytest.raises(ValueError):
        PlanarArraySpec(2, 2, 0.0, 0.1)
    with pytest.raises(ValueError):
        PlanarArraySpec(2, 2, 0.1, 0.1, vertical_axis=np.array([0, 0, 1.0]),
                        horizontal_axis=np.array([0, 0.5, 0.5]))


def test_tile_centres_form_pitched_grid():
    layout = TileLayout(2, 3, 1.0, 2.0, small_tile(), Position3(0.0, 0.0, 5.0))
    c = layout.tile_centers()
    assert c.shape == (6, 3)
    assert np.allclose(c.mean(axis=0), [0.0, 0.0, 5.0])
    # pitch is centre-to-centre distance of adjacent tiles
    assert np.allclose(c[1] - c[0], [0.0, 2.0, 0.0])
    assert np.allclose(c[3] - c[0], [0.0, 0.0, 1.0])
    assert layout.n_tiles == 6
    with pytest.raises(IndexError):
        layout.tile_center(0)
    with pytest.raises(IndexError):
        layout.tile_center(7)


def test_zero_pitch_stacks_tiles():
    layout = TileLayout(3, 1, 0.0, 0.0, small_tile(), Position3(0, 0, 0))
    c = layout.tile_centers()
    assert np.allclose(c, 0.0)


def test_element_positions_offset_from_tile_centre():
    layout = TileLayout(2, 2, 1.0, 1.0, small_tile(2, 2, 0.3), Position3(0, 0, 5))
    for t in range(1, 5):
        p = element_positions(layout, t)
        assert p.shape == (4, 3)
        assert np.allclose(p.mean(axis=0), layout.tile_center(t).array)


def test_visible_region_sector_examples():
    layout = TileLayout(1, 1, 1.0, 1.0, small_tile(), Position3(0.0, 0.0, 5.0))
    vr = vr_for_tile(layout, 1)
    assert in_visible_region(vr, Position3(3.0, 0.0, 0.0))
    assert not in_visible_region(vr, Position3(3.0, 4.0, 0.0))  # azimuth ~53 deg
    assert in_visible_region(vr, Position3(3.0, 3.0, 2.0))      # boundary inside
    # omnidirectional along z, including straight above the apex
    assert in_visible_region(vr, Position3(3.0, 0.0, 100.0))
    assert in_visible_region(vr, Position3(0.0, 0.0, 50.0))
    assert not in_visible_region(vr, Position3(-3.0, 0.0, 0.0))


def test_visible_region_coverage_arithmetic():
    # one tile covers 6 m of the y axis at x = 3 with the 90 degree sector
    layout = TileLayout(1, 1, 1.0, 1.0, small_tile(), Position3(0.0, 0.0, 5.0))
    vr = vr_for_tile(layout, 1)
    assert in_visible_region(vr, Position3(3.0, 2.999, 0.0))
    assert in_visible_region(vr, Position3(3.0, -2.999, 0.0))
    assert not in_visible_region(vr, Position3(3.0, 3.001, 0.0))
    assert not in_visible_region(vr, Position3(3.0, -3.001, 0.0))
    # seven tiles at 2 m pitch cover 18 m end to end
    layout = TileLayout(1, 7, 1.0, 2.0, small_tile(), Position3(0.0, 0.0, 5.0))
    covered = lambda y: any(in_visible_region(vr_for_tile(layout, t),
                                              Position3(3.0, y, 0.0))
                            for t in range(1, 8))
    assert covered(-8.999) and covered(8.999)
    assert not covered(-9.001) and not covered(9.001)
    assert all(covered(y) for y in np.linspace(-8.9, 8.9, 61))

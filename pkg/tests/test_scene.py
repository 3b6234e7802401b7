import math

import numpy as np
import pytest

from nearsar.scene import (
    PointScatterer,
    Scene,
    from_raster,
    letters_scene,
    load_csv,
    random_points,
    save_csv,
)


def test_raster_single_pixel():
    sc = from_raster(np.array([[1.0]]), origin=(0.0, 0.0, 0.0), pixel_pitch=0.01)
    assert len(sc) == 1
    assert sc.scatterers[0].position == (0.0, 0.0, 0.0)
    assert sc.scatterers[0].reflectivity == 1.0 + 0.0j


def test_raster_identity_diagonal():
    sc = from_raster(np.eye(2), origin=(0.0, 0.0, 0.0), pixel_pitch=0.01)
    assert len(sc) == 2
    a, b = (np.array(s.position) for s in sc.scatterers)
    assert np.linalg.norm(a - b) == pytest.approx(0.01 * math.sqrt(2), rel=1e-12)


def test_raster_downsample_stride():
    sc = from_raster(np.ones((4, 4)), origin=(0, 0, 0), pixel_pitch=0.01, downsample=2)
    assert len(sc) == 4


def test_raster_count_matches_nonzero():
    g = np.zeros((5, 7))
    g[1, 2] = 0.5
    g[4, 6] = 2.0
    g[0, 0] = -1.0
    sc = from_raster(g, origin=(0, 0, 0), pixel_pitch=0.002, reflect_scale=3.0)
    assert len(sc) == 3
    refl = sorted(s.reflectivity.real for s in sc.scatterers)
    assert refl == pytest.approx([-3.0, 1.5, 6.0])


def test_raster_all_zero_rejected():
    with pytest.raises(ValueError, match="empty"):
        from_raster(np.zeros((3, 3)), origin=(0, 0, 0), pixel_pitch=0.01)


def test_random_points_degenerate_bounds():
    sc = random_points(3, bounds=((0.1, 0.1), (0.2, 0.2), (0.3, 0.3)), seed=1)
    for s in sc.scatterers:
        assert s.position == (0.1, 0.2, 0.3)


def test_random_points_reproducible():
    a = random_points(200, bounds=((-1, 1), (-1, 1), (0, 2)), seed=42)
    b = random_points(200, bounds=((-1, 1), (-1, 1), (0, 2)), seed=42)
    assert np.array_equal(a.positions(), b.positions())
    p = a.positions()
    assert p[:, 0].min() >= -1 and p[:, 0].max() <= 1
    assert p[:, 2].min() >= 0 and p[:, 2].max() <= 2


def test_random_points_uniform_moments():
    # mean of U(lo, hi) is (lo+hi)/2 with sd (hi-lo)/sqrt(12n); 3-sigma gate
    n = 100_000
    sc = random_points(n, bounds=((-1, 3), (0, 1), (0, 1)), seed=9)
    x = sc.positions()[:, 0]
    tol = 3 * 4 / math.sqrt(12 * n)
    assert abs(x.mean() - 1.0) < tol
    var_tol = 3 * (4**2 / math.sqrt(n))  # loose gate on Var = (hi-lo)^2/12
    assert abs(x.var() - 16 / 12) < var_tol


def test_random_points_complex_normal():
    sc = random_points(50_000, bounds=((0, 1), (0, 1), (0, 1)),
                       amp="complex-normal", seed=5)
    r = sc.reflectivities()
    assert abs(r.mean()) < 0.02
    assert np.mean(np.abs(r) ** 2) == pytest.approx(1.0, abs=0.02)


def test_random_points_empty_bounds():
    with pytest.raises(ValueError, match="empty bounds"):
        random_points(5, bounds=((1.0, 0.0), (0, 1), (0, 1)))


def test_csv_round_trip(tmp_path):
    sc = random_points(20, bounds=((-0.31, 0.17), (-1, 1), (0.1, 0.9)),
                       amp="complex-normal", seed=3)
    path = tmp_path / "scene.csv"
    save_csv(sc, path)
    back = load_csv(path)
    assert len(back) == 20
    assert np.array_equal(back.positions(), sc.positions())
    assert np.array_equal(back.reflectivities(), sc.reflectivities())


def test_csv_malformed_row_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x_m,y_m,z_m,refl_re,refl_im\n0,0,0,1,0\n0,zap,0,1,0\n")
    with pytest.raises(ValueError, match="line 3"):
        load_csv(path)


def test_csv_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError, match="header"):
        load_csv(path)


def test_letters_scene_ships_21_points():
    sc = letters_scene()
    assert len(sc) == 21
    p = sc.positions()
    assert np.all(p[:, 0] == 0.0)                    # scene lives in the y-z plane
    assert p[:, 1].min() == pytest.approx(-0.12)
    assert p[:, 1].max() == pytest.approx(0.12)
    assert np.all(np.abs(p[:, 2]) <= 0.05 + 1e-12)
    assert np.all(sc.reflectivities() == 1.0 + 0.0j)


def test_scatterer_validation():
    with pytest.raises(ValueError, match="position"):
        PointScatterer(position=(0.0, float("nan"), 0.0))


def test_translated():
    sc = Scene((PointScatterer((1.0, 2.0, 3.0)),))
    t = sc.translated((0.5, -1.0, 0.0))
    assert t.scatterers[0].position == (1.5, 1.0, 3.0)

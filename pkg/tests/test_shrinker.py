import math

import numpy as np
import pytest

from genusflow.exceptions import BracketError, ConfigurationError
from genusflow.profile import ProfileCurve
from genusflow.shrinker import (cylinder_entry, find_torus_shrinker, gaussian_area, integrate, mismatch,
                                profile_rhs, read_profile_csv, shoot, sphere_entry,
                                write_catalogue_csv, write_profile_csv)

SPHERE_F = 4 / math.e
CYLINDER_F = math.sqrt(2 * math.pi / math.e)


def test_cylinder_and_sphere_are_stationary_points_of_the_rhs():
    # r = sqrt(2) vertical line, and the radius-2 circle through (2, 0)
    assert profile_rhs((math.sqrt(2.0), 0.3, math.pi / 2))[2] == pytest.approx(0.0, abs=1e-14)
    assert profile_rhs((2.0, 0.0, math.pi / 2))[2] == pytest.approx(0.5)


def test_gaussian_area_of_exact_curves():
    phi = np.linspace(-math.pi / 2, math.pi / 2, 20001)
    sphere = ProfileCurve.from_points(2 * np.cos(phi), 2 * np.sin(phi), closed=True,
                                      axis_ends=True)
    assert gaussian_area(sphere) == pytest.approx(SPHERE_F, abs=1e-6)


def test_sphere_entry():
    e = sphere_entry()
    assert e.closure_residual < 1e-5
    assert e.gaussian_area == pytest.approx(SPHERE_F, abs=1e-3)
    np.testing.assert_allclose(np.hypot(e.profile.r, e.profile.z), 2.0, atol=1e-6)


def test_cylinder_entry():
    e = cylinder_entry()
    assert e.closure_residual < 1e-6
    assert e.gaussian_area == pytest.approx(CYLINDER_F, abs=1e-3)


def test_torus_shrinker(torus_shrinker):
    e = torus_shrinker
    assert e.profile.closed and e.profile.is_loop
    assert e.closure_residual < 1e-7
    assert 1.82 <= e.gaussian_area <= 1.88
    assert e.profile.r.min() > 0
    # symmetric across z = 0
    top = e.profile.z.max()
    assert e.profile.z.min() == pytest.approx(-top, abs=1e-9)


def test_mismatch_changes_sign_across_the_bracket(torus_shrinker):
    r0 = torus_shrinker.r_start
    assert mismatch(0.1) > 0
    assert mismatch(r0 - 0.05) * mismatch(r0 + 0.05) < 0
    with pytest.raises(ConfigurationError):
        shoot(0.0)


def test_bracket_without_sign_change():
    with pytest.raises(BracketError):
        find_torus_shrinker(bracket=(1.2, 1.3), scan=3)
    with pytest.raises(ConfigurationError):
        find_torus_shrinker(bracket=(1.0, 0.5))


def test_profile_csv_round_trip(tmp_path, torus_shrinker):
    p = torus_shrinker.profile
    path = tmp_path / "torus.csv"
    write_profile_csv(p, path)
    back = read_profile_csv(path, closed=True)
    np.testing.assert_allclose(back.r, p.r, rtol=1e-12)
    np.testing.assert_allclose(back.z, p.z, atol=1e-12)
    assert gaussian_area(back) == pytest.approx(torus_shrinker.gaussian_area, rel=1e-9)


def test_catalogue_csv(tmp_path):
    path = tmp_path / "cat.csv"
    write_catalogue_csv([sphere_entry(), cylinder_entry()], path)
    lines = open(path).read().splitlines()
    assert len(lines) == 3 and "closure_residual" in lines[0]


def test_shoot_returns_profile_with_cause():
    prof = shoot(1.0, max_arclength=0.5)
    assert prof.meta["cause"]
    assert prof.sigma[-1] <= 0.5 + 1e-9


def test_shooting_is_reversible(torus_shrinker):
    half_len = torus_shrinker.profile.meta["length"] / 2
    start = (torus_shrinker.r_start, 0.0, math.pi / 2)
    end = integrate(start, half_len)
    back = integrate(end, -half_len)
    assert np.allclose(back, start, atol=1e-6)


def test_closed_torus_profile_is_mirror_symmetric(torus_shrinker):
    p = torus_shrinker.profile
    m = p.mirrored_z()
    from scipy.spatial import cKDTree
    d, _ = cKDTree(p.vertices()).query(m.vertices())
    assert d.max() < 1e-4


def test_gaussian_area_ordering(torus_shrinker):
    f = [sphere_entry().gaussian_area, cylinder_entry().gaussian_area,
         torus_shrinker.gaussian_area]
    assert 1.0 < f[0] < f[1] < f[2] < 2.0

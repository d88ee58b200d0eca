import math

import numpy as np
import pytest
from scipy import special

from genusflow.bessel import SERIES_LIMIT, i0, i0_quadrature, i0e
from genusflow.contour import extract_contour
from genusflow.entropy import (DensityQuery, density, density_on_axis, entropy, entropy_of_field,
                               profiles_of_contour, surface_samples)
from genusflow.exceptions import ConfigurationError
from genusflow.grid import Sphere, Torus, build_grid, init_signed_distance, torus_profile
from genusflow.profile import ProfileCurve


def sphere_profile(radius, z0=0.0, n=4001):
    phi = np.linspace(-math.pi / 2, math.pi / 2, n)
    return ProfileCurve.from_points(radius * np.cos(phi), z0 + radius * np.sin(phi),
                                    closed=True, axis_ends=True)


@pytest.mark.parametrize("x", [0.0, 1e-8, 0.5, 3.0, 7.9, 8.0, 15.99, 16.0, 30.0, 700.0, 1e5])
def test_i0e_against_reference(x):
    assert i0e(x) == pytest.approx(special.i0e(x), rel=1e-10, abs=0)


def test_i0e_is_even_and_vectorized():
    x = np.linspace(-40, 40, 801)
    np.testing.assert_allclose(i0e(x), special.i0e(x), rtol=1e-10)
    np.testing.assert_array_equal(i0e(x), i0e(-x))


def test_i0_matches_quadrature_on_both_branches():
    for x in (2.0, SERIES_LIMIT - 1, SERIES_LIMIT + 1, 40.0):
        assert i0e(x) == pytest.approx(i0_quadrature(x)[0], rel=1e-10)
        assert i0(x) == pytest.approx(special.i0(x), rel=1e-10)


def test_density_query_validation():
    with pytest.raises(ConfigurationError):
        DensityQuery(0.0, 0.0, 0.0)
    with pytest.raises(ConfigurationError):
        DensityQuery(-1.0, 0.0, 1.0)


def test_gaussian_area_of_radius_two_sphere():
    assert density(sphere_profile(2.0), (0.0, 0.0, 1.0)) == pytest.approx(4 / math.e, abs=1e-6)


def test_density_on_axis_agrees_with_bessel_form():
    prof = torus_profile(Torus(1.5, 0.5), ds=2e-3)
    for z0, t0 in [(0.0, 0.5), (0.3, 1.2)]:
        assert density(prof, (0.0, z0, t0)) == pytest.approx(density_on_axis(prof, z0, t0),
                                                            rel=1e-12)


def test_off_axis_density_against_direct_revolution():
    prof = torus_profile(Torus(1.5, 0.5), ds=2e-3)
    s = surface_samples(prof)
    a, z0, t0 = 0.8, 0.2, 0.7
    phi = np.linspace(0, 2 * np.pi, 2048, endpoint=False)
    # brute-force azimuthal average of the 3D kernel
    d2 = (s.r[:, None] ** 2 + a * a - 2 * a * s.r[:, None] * np.cos(phi)[None, :]
          + (s.z[:, None] - z0) ** 2)
    k = np.exp(-d2 / (4 * t0)).mean(axis=1)
    direct = (s.w * s.r * k).sum() * 2 * np.pi / (4 * np.pi * t0)
    assert density(s, (a, z0, t0)) == pytest.approx(direct, rel=1e-12)


def test_open_profile_rejected():
    line = ProfileCurve.from_points([1.0, 1.0], [-1.0, 1.0])
    with pytest.raises(ConfigurationError):
        surface_samples(line)
    with pytest.raises(ConfigurationError):
        surface_samples([])


def test_entropy_of_sphere():
    res = entropy(sphere_profile(2.0))
    assert res.value == pytest.approx(4 / math.e, abs=1e-3)
    assert np.allclose(res.argmax.as_tuple(), (0.0, 0.0, 1.0), atol=0.05)
    d = res.to_dict()
    assert set(d) == {"value", "argmax", "evaluations", "trace"}
    assert d["trace"]["small_scale_probe"] == pytest.approx(1.0, abs=1e-2)


def test_entropy_is_at_least_one_for_a_thin_torus():
    res = entropy(torus_profile(Torus(2.0, 0.1), ds=1e-3))
    assert res.value >= 1.0 - 1e-3


def test_entropy_of_field_and_contour_profiles():
    g = build_grid(3.0, -3.0, 3.0, 1 / 32)
    f = init_signed_distance(Sphere(2.0), g)
    assert entropy_of_field(f).value == pytest.approx(4 / math.e, abs=5e-3)
    curves = profiles_of_contour(extract_contour(f))
    assert len(curves) == 1 and curves[0].axis_ends


@pytest.mark.parametrize("s", [0.0, 0.5, 1.0])
def test_family_members_do_not_exceed_the_shrinker_entropy(s, shrinker_family, torus_shrinker):
    from genusflow.grid import family_surface, offset_profile
    value = entropy(offset_profile(family_surface(shrinker_family, s))).value
    assert value <= torus_shrinker.gaussian_area + 1e-3

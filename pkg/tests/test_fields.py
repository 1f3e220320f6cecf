import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radrecon.errors import SingularityError, ValidationError
from radrecon.fields import (
    Multipole,
    PointSource,
    PotentialGrid,
    Scene,
    eval_scene,
    eval_scene_mp,
    green_gradient,
    green_outgoing,
    hankel_coefficients,
    im_diagnostic,
    load_scene,
    multipole_field,
    r0_plus,
    save_scene,
    scene_from_dict,
    scene_to_dict,
    sommerfeld_defect,
    spherical_hankel1,
    spherical_harmonic,
    wavelength,
)

finite = st.floats(min_value=-5, max_value=5, allow_nan=False)
vec = st.tuples(finite, finite, finite).filter(lambda v: np.linalg.norm(v) > 0.1)
kappas = st.floats(min_value=0.1, max_value=10)


def test_green_value_and_sign():
    k = 1.3
    x = np.array([0.4, -1.0, 2.0])
    r = np.linalg.norm(x)
    assert green_outgoing(x, k) == pytest.approx(-np.exp(1j * k * r) / (4 * np.pi * r), rel=1e-15)
    assert r0_plus(x, np.zeros(3), k) == pytest.approx(np.exp(1j * k * r) / (4 * np.pi * r), rel=1e-15)


@given(vec, kappas)
def test_green_depends_on_radius_only(x, k):
    x = np.asarray(x)
    rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    assert green_outgoing(rot @ x, k) == pytest.approx(green_outgoing(x, k), rel=1e-12)


@given(vec, kappas)
def test_green_gradient_matches_finite_differences(x, k):
    x = np.asarray(x)
    h = 1e-6 * max(1.0, np.linalg.norm(x))
    fd = np.array([(green_outgoing(x + h * e, k) - green_outgoing(x - h * e, k)) / (2 * h) for e in np.eye(3)])
    g = green_gradient(x, k)
    assert np.allclose(g, fd, rtol=1e-5, atol=1e-9)


def test_green_singularity_guard():
    with pytest.raises(SingularityError):
        green_outgoing(np.zeros(3), 1.0)
    with pytest.raises(ValidationError):
        green_outgoing(np.ones(3), -1.0)
    with pytest.raises(ValidationError):
        green_outgoing(np.ones(2), 1.0)


def test_hankel_rayleigh_form_matches_mpmath():
    for l in range(5):
        for z in (0.7, 3.0, 11.0):
            ref = mp.sqrt(mp.pi / (2 * z)) * (mp.besselj(l + 0.5, z) + 1j * mp.bessely(l + 0.5, z))
            assert complex(spherical_hankel1(l, z)) == pytest.approx(complex(ref), rel=1e-12)
    assert hankel_coefficients(0) == [-1j]


def test_spherical_harmonic_matches_mpmath():
    d = np.array([0.3, -0.5, 0.81])
    d = d / np.linalg.norm(d)
    theta = math.acos(d[2])
    phi = math.atan2(d[1], d[0])
    for l in range(4):
        for m in range(-l, l + 1):
            assert complex(spherical_harmonic(l, m, d)) == pytest.approx(complex(mp.spherharm(l, m, theta, phi)), abs=1e-13)


def test_monopole_is_point_source_up_to_constant():
    # h_0(κr) Y_0^0 = -i sqrt(4π)/κ · e^{iκr}/(4πr)
    k = 2.0
    x = np.array([[1.0, 2.0, -0.5], [4.0, 0.0, 3.0]])
    mono = multipole_field(0, 0, (0, 0, 0), k, x)
    point = r0_plus(x, np.zeros(3), k)
    assert np.allclose(mono, -1j * math.sqrt(4 * math.pi) / k * point, rtol=1e-13)


def test_multipole_validation():
    with pytest.raises(ValidationError):
        Multipole(1, 2)
    with pytest.raises(ValidationError):
        Multipole(-1, 0)


def test_scene_validation_and_scaling(two_source_scene):
    with pytest.raises(ValidationError):
        Scene(1.0, (PointSource((2.0, 0.0, 0.0)),), None, 1.0)
    with pytest.raises(ValidationError):
        Scene(0.0, (), None, 1.0)
    x = np.array([3.0, 1.0, 2.0])
    scaled = two_source_scene.scaled(2 - 1j)
    assert eval_scene(scaled, x) == pytest.approx((2 - 1j) * eval_scene(two_source_scene, x), rel=1e-14)
    assert eval_scene(Scene(1.0, (), None, 1.0), x) == 0


def test_sommerfeld_defect_decays(two_source_scene):
    d = np.array([0.2, 0.3, 0.9])
    d /= np.linalg.norm(d)
    vals = [float(sommerfeld_defect(two_source_scene, s * d)) for s in (10.0, 100.0, 1000.0)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-3


def test_im_diagnostic_point_source():
    k = 1.0
    scene = Scene(k, (PointSource((0, 0, 0)),), None, 1.0)
    s = 7.3
    assert im_diagnostic(scene, np.array([0, 0, s])) == pytest.approx(math.sin(k * s) / (4 * math.pi), rel=1e-13)


def test_eval_scene_mp_agrees_with_doubles(two_source_scene):
    scene = two_source_scene.with_kappa(1.7)
    scene = Scene(1.7, scene.sources + (Multipole(2, -1, (0.1, 0.0, 0.0), 0.3),), None, 1.0)
    x = np.array([2.0, -3.0, 1.5])
    assert complex(eval_scene_mp(scene, x, 30)) == pytest.approx(complex(eval_scene(scene, x)), rel=1e-13)


def test_scene_json_round_trip(tmp_path, two_source_scene):
    scene = Scene(
        1.5,
        two_source_scene.sources + (Multipole(1, 1, (0.0, 0.1, 0.0), 2j),),
        PotentialGrid.ball(0.5, 3, 0.2 - 0.1j),
        1.0,
    )
    p = tmp_path / "scene.json"
    save_scene(scene, p)
    back = load_scene(p)
    assert scene_to_dict(back) == scene_to_dict(scene)
    x = np.array([3.0, 0.0, 1.0])
    assert eval_scene(back, x) == eval_scene(scene, x)
    with pytest.raises(ValidationError):
        scene_from_dict({"kappa": 1.0})
    (tmp_path / "bad.json").write_text("{", encoding="utf-8")
    with pytest.raises(ValidationError):
        load_scene(tmp_path / "bad.json")


def test_potential_grid_geometry():
    pot = PotentialGrid.ball(1.0, 8, 0.5)
    z, v = pot.active()
    assert np.all(np.linalg.norm(z, axis=1) < 1.0)
    assert np.all(v == 0.5)
    assert pot.voxel_volume == pytest.approx(0.25**3)
    assert len(z) * pot.voxel_volume == pytest.approx(4 / 3 * math.pi, rel=0.1)
    with pytest.raises(ValidationError):
        PotentialGrid((0, 0, 0), (1, 1, 1), 2, np.zeros((3, 3, 3)))
    assert wavelength(2.0) == pytest.approx(math.pi)


def _laplacian_residual(scene, x, h):
    x = np.asarray(x, dtype=float)
    lap = -6 * eval_scene(scene, x)
    for e in np.eye(3):
        lap += eval_scene(scene, x + h * e) + eval_scene(scene, x - h * e)
    lap /= h * h
    k = scene.kappa
    return abs(lap + k * k * eval_scene(scene, x)) / (k * k * abs(eval_scene(scene, x)))


def test_radiation_residual_is_second_order(two_source_scene):
    scene = Scene(1.2, two_source_scene.sources + (Multipole(2, 1, (0.1, 0.0, -0.1), 0.5j),), None, 1.0)
    x = np.array([4.0, -3.0, 6.5])
    r1, r2 = _laplacian_residual(scene, x, 0.1), _laplacian_residual(scene, x, 0.05)
    assert r1 < 1e-3
    assert r1 / r2 == pytest.approx(4.0, rel=0.1)


def test_sommerfeld_defect_halves_per_doubling():
    k = 1.0
    scene = Scene(k, (PointSource((0.2, -0.1, 0.3)),), None, 1.0)
    d = np.array([0.6, 0.0, 0.8])
    vals = [float(sommerfeld_defect(scene, s / k * d)) for s in (10.0, 20.0, 40.0)]
    assert vals[0] / vals[1] == pytest.approx(2.0, rel=0.1)
    assert vals[1] / vals[2] == pytest.approx(2.0, rel=0.1)


def test_green_examples():
    assert green_outgoing(np.array([1.0, 0, 0]), math.pi) == pytest.approx(1 / (4 * math.pi), abs=1e-17)
    x = np.array([0.0, math.pi / 2.0, 0.0])
    assert abs(green_outgoing(x, 2.0).imag) < 1e-17
    assert r0_plus([1.0, 0, 0], [0.0, 0, 0], 2 * math.pi) == pytest.approx(1 / (4 * math.pi), abs=1e-16)
    y = np.array([0.3, 0.1, -0.4])
    assert r0_plus(x, y, 1.3) == r0_plus(y, x, 1.3)


def test_hankel_l1_and_recurrence():
    assert complex(spherical_hankel1(1, 1.0)) == pytest.approx(-np.exp(1j) * (1 + 1j), rel=1e-14)
    # upward recurrence h_{l+1} = (2l+1)/z h_l - h_{l-1} as an independent check
    z = 5.0
    h = [complex(spherical_hankel1(0, z)), complex(spherical_hankel1(1, z))]
    for l in range(1, 6):
        h.append((2 * l + 1) / z * h[l] - h[l - 1])
    for l in range(7):
        assert complex(spherical_hankel1(l, z)) == pytest.approx(h[l], rel=1e-12)

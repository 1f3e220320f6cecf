
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radrecon.awseries import (
    AWExpansion,
    RaySampler,
    coeffs_point_on_axis,
    eval_partial,
    expansion_from_dict,
    expansion_to_dict,
    load_expansion,
    multipole_expansion,
    oracle_coeffs_point_source,
    ray_exit_radius,
    shift_coefficients,
)
from radrecon.errors import IntervalDataError, ValidationError
from radrecon.fields import (
    Multipole,
    PointSource,
    Scene,
    eval_scene,
    multipole_field,
    r0_plus,
)

THETA = np.array([0.0, 0.6, 0.8])


@pytest.mark.parametrize("l,m", [(0, 0), (1, -1), (2, 1), (3, 3)])
def test_multipole_expansion_is_exact(l, m):
    k = 1.4
    src = Multipole(l, m, (0.1, -0.2, 0.0), 0.7 + 0.2j)
    aw = multipole_expansion(src, THETA, k)
    assert aw.depth == l + 1
    for s in (0.5, 3.0, 40.0):
        x = np.asarray(src.center) + s * THETA
        assert complex(aw(s)) == pytest.approx(complex(src.amplitude * multipole_field(l, m, src.center, k, x)), rel=1e-13)


def test_point_on_axis_closed_form_matches_oracle():
    k = 1.0
    a = 0.4
    closed = coeffs_point_on_axis(a, k, 5)
    oracle = oracle_coeffs_point_source(a * THETA, (0, 0, 0), THETA, k, 5)
    assert np.allclose(closed, oracle, rtol=1e-12, atol=1e-16)


def test_oracle_reproduces_field():
    k = 2.0
    y0 = np.array([0.3, -0.1, 0.2])
    f = oracle_coeffs_point_source(y0, (0, 0, 0), THETA, k, 8)
    aw = AWExpansion(k, (0, 0, 0), THETA, f)
    s = 30.0
    assert complex(aw(s)) == pytest.approx(complex(r0_plus(s * THETA, y0, k)), rel=1e-10)


def test_partial_sums_converge():
    k = 1.0
    y0 = np.array([0.3, 0.4, -0.2])
    aw = AWExpansion(k, (0, 0, 0), THETA, oracle_coeffs_point_source(y0, (0, 0, 0), THETA, k, 6))
    s = 5.0
    truth = complex(r0_plus(s * THETA, y0, k))
    errs = [abs(complex(eval_partial(aw, s, n)) - truth) for n in range(1, 7)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    with pytest.raises(IndexError):
        eval_partial(aw, s, 7)
    with pytest.raises(ValidationError):
        eval_partial(aw, -1.0)


@given(st.floats(min_value=-0.3, max_value=0.3))
def test_shift_of_on_axis_source(c):
    k = 1.3
    a = 0.2
    aw = AWExpansion(k, (0, 0, 0), THETA, coeffs_point_on_axis(a, k, 8))
    shifted = shift_coefficients(aw, c)
    # the same source seen from the shifted frame sits at distance a - c
    expected = coeffs_point_on_axis(a - c, k, 8)
    assert np.allclose(shifted.coeffs, expected, rtol=1e-12, atol=1e-15)
    assert np.allclose(shifted.origin, c * THETA)


def test_shift_round_trip():
    k = 1.0
    aw = multipole_expansion(Multipole(2, 0), THETA, k)
    back = shift_coefficients(shift_coefficients(aw, 0.4), -0.4)
    assert np.allclose(back.coeffs, aw.coeffs, atol=1e-14)


def test_expansion_validation_and_json(tmp_path):
    with pytest.raises(ValidationError):
        AWExpansion(1.0, (0, 0, 0), (1.0, 1.0, 0.0), [1.0])
    with pytest.raises(ValidationError):
        AWExpansion(1.0, (0, 0, 0), THETA, [])
    aw = AWExpansion(1.0, (0.1, 0, 0), THETA, [1 + 2j, 3.0])
    p = tmp_path / "aw.json"
    import json

    p.write_text(json.dumps(expansion_to_dict(aw)))
    back = load_expansion(p)
    assert np.array_equal(back.coeffs, aw.coeffs)
    with pytest.raises(ValidationError):
        expansion_from_dict({"kappa": 1.0})


def test_ray_exit_radius():
    assert ray_exit_radius((0, 0, 0), THETA, 1.0) == pytest.approx(1.0)
    assert ray_exit_radius((0, 0, -3.0), (0, 0, 1.0), 1.0) == pytest.approx(4.0)
    assert ray_exit_radius((5.0, 0, 0), (0, 0, 1.0), 1.0) == 0.0


def test_sampler_modes_agree():
    scene = Scene(1.0, (PointSource((0.2, 0.0, 0.1), 1 - 1j),), None, 1.0)
    lo = RaySampler.from_scene(scene, (0, 0, 0), THETA)
    hi = RaySampler.from_scene(scene, (0, 0, 0), THETA, digits=30)
    for s in (2.0, 50.0):
        assert float(hi(s)) == pytest.approx(lo(s), rel=1e-12, abs=1e-16)
        assert lo(s) == pytest.approx(float(np.imag(eval_scene(scene, s * THETA))))
    with pytest.raises(IntervalDataError):
        lo(0.5)


def test_sampler_interval_and_table():
    s = RaySampler((0, 0, 0), THETA, lambda s: 0.0, coverage=(10.0, 20.0))
    with pytest.raises(IntervalDataError):
        s.require_full_ray()
    tab = RaySampler.from_table({1.0: 0.5, 2.0: 0.25}, (0, 0, 0), THETA, kappa=1.0)
    assert tab(2.0) == 0.25
    with pytest.raises(IntervalDataError):
        tab(1.5)
    assert RaySampler.zero()(3.0) == 0.0


def test_exact_multipole_coefficients_examples():
    from radrecon.awseries import exact_coeffs_multipole

    assert exact_coeffs_multipole(0, 2.0, 1.0) == pytest.approx([-0.5j])
    assert exact_coeffs_multipole(1, 1.0, 1.0) == pytest.approx([-1.0, -1j])
    aw = AWExpansion(1.0, (0, 0, 0), THETA, [1 / (4 * np.pi)])
    assert complex(eval_partial(aw, 2.0, 1)) == pytest.approx(np.exp(2j) / (8 * np.pi), rel=1e-15)
    assert complex(eval_partial(AWExpansion(1.0, (0, 0, 0), THETA, [0.0]), 2.0, 1)) == 0


def test_oracle_examples():
    k = 1.0
    theta = np.array([0.0, 0.0, 1.0])
    q = np.array([0.5, -0.5, 0.0])
    f = oracle_coeffs_point_source(q, q, theta, k, 4)
    assert np.allclose(f, [1 / (4 * np.pi), 0, 0, 0], atol=1e-14)
    y0 = q + np.array([0.3, 0.0, 0.0])
    f = oracle_coeffs_point_source(y0, q, theta, k, 5)
    assert f[0] == pytest.approx(1 / (4 * np.pi), rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_truncation_slope(n):
    k = 1.0
    y0 = np.array([0.3, 0.4, -0.2])
    aw = AWExpansion(k, (0, 0, 0), THETA, oracle_coeffs_point_source(y0, (0, 0, 0), THETA, k, 10)[:n])
    radii = np.array([10.0, 20.0, 40.0, 80.0])
    err = [abs(complex(eval_partial(aw, s)) - complex(r0_plus(s * THETA, y0, k))) * s for s in radii]
    slope = np.polyfit(np.log(radii), np.log(err), 1)[0]
    assert slope == pytest.approx(-n, abs=0.2)


def test_generic_frame_shift_consistency():
    # off-axis source: re-expanding the frame-q series must agree with a direct fit in frame q + cθ
    k = 1.0
    y0 = np.array([0.2, -0.3, 0.1])
    c = 0.5
    aw = AWExpansion(k, (0, 0, 0), THETA, oracle_coeffs_point_source(y0, (0, 0, 0), THETA, k, 12))
    shifted = shift_coefficients(aw, c)
    direct = oracle_coeffs_point_source(y0, c * THETA, THETA, k, 12)
    assert np.allclose(shifted.coeffs[:4], direct[:4], rtol=1e-7, atol=1e-12)

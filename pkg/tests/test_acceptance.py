"""One test per acceptance criterion, at the stated tolerance."""

import math
import warnings

import mpmath as mp
import numpy as np
import pytest

from radrecon import cli
from radrecon.awseries import (
    RaySampler,
    multipole_expansion,
    oracle_coeffs_point_source,
)
from radrecon.fields import (
    Multipole,
    PointSource,
    PotentialGrid,
    Scene,
    eval_scene,
    save_scene,
)
from radrecon.planeops import (
    PlaneFrame,
    PlaneGrid,
    fibonacci_directions,
    halfspace_continue,
    recover_plane,
    scene_plane_sampler,
    sphere_null_probe,
)
from radrecon.rayrecover import (
    RecoverParams,
    reconstruct_on_ray,
    recover_coeffs,
    two_point_estimate,
)
from radrecon.scattering import (
    LSGreenData,
    LSOperator,
    PipelineConfig,
    band_limited,
    born_pipeline,
    farfield_from_green,
    farfield_series,
    potential_fourier,
    reciprocity_report,
)

THETA = np.array([0.3, 0.4, math.sqrt(0.75)])


def _slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# 1 ---------------------------------------------------------------------------


@pytest.mark.parametrize("kappa", [0.7, 1.0, 3.0])
def test_c1_two_point_exactness(kappa):
    scene = Scene(kappa, (PointSource((0.0, 0.0, 0.0)),), None, 1.0)
    params = RecoverParams(depth=1, digits=30)
    rp = params.resolve(kappa)
    sampler = RaySampler.from_scene(scene, (0, 0, 0), THETA, digits=30)
    with mp.workprec(rp.prec):
        tau = mp.mpf(rp.tau)
        target = 1 / (4 * mp.pi)
        for s in rp.ladder:
            I = [x * sampler(x) for x in (s, s + tau)]
            est = two_point_estimate(I[0], I[1], s, tau, mp.mpf(kappa))
            assert abs(est - target) / target <= 1e-12
    rec = recover_coeffs(sampler, params)
    assert abs(rec.expansion.coeffs[0] - 1 / (4 * math.pi)) * 4 * math.pi <= 1e-12


@pytest.mark.parametrize("kappa", [1.0, 3.0])
def test_c1_two_point_exactness_doubles(kappa):
    scene = Scene(kappa, (PointSource((0.0, 0.0, 0.0)),), None, 1.0)
    rp = RecoverParams(depth=1).resolve(kappa)
    for s in map(float, rp.ladder):
        I = [x * float(np.imag(eval_scene(scene, x * THETA))) for x in (s, s + rp.tau)]
        assert abs(two_point_estimate(I[0], I[1], s, rp.tau, kappa) * 4 * math.pi - 1) <= 1e-12


# 2 ---------------------------------------------------------------------------


@pytest.mark.parametrize("l", [1, 2, 3])
def test_c2_tower_high_precision(l):
    src = Multipole(l, 1, (0.0, 0.0, 0.0), 1.0)
    scene = Scene(1.0, (src,), None, 1.0)
    exact = multipole_expansion(src, THETA, 1.0).coeffs
    rec = recover_coeffs(RaySampler.from_scene(scene, (0, 0, 0), THETA, digits=30), RecoverParams(depth=l + 1, digits=30))
    rel = np.abs(rec.expansion.coeffs - exact[: l + 1]) / np.abs(exact[: l + 1])
    assert np.all(rel <= 1e-6)


@pytest.mark.parametrize("l", [1, 2, 3])
def test_c2_tower_doubles(l):
    src = Multipole(l, 1, (0.0, 0.0, 0.0), 1.0)
    scene = Scene(1.0, (src,), None, 1.0)
    exact = multipole_expansion(src, THETA, 1.0).coeffs
    depth = min(2, l + 1)
    rec = recover_coeffs(RaySampler.from_scene(scene, (0, 0, 0), THETA, digits=15), RecoverParams(depth=depth, digits=15))
    rel = np.abs(rec.expansion.coeffs - exact[:depth]) / np.abs(exact[:depth])
    assert np.all(rel <= 1e-3)


# 3 ---------------------------------------------------------------------------


def test_c3_two_point_remainder_slope():
    k = 1.0
    y0 = (0.3, -0.2, 0.25)
    scene = Scene(k, (PointSource(y0),), None, 1.0)
    exact = oracle_coeffs_point_source(y0, (0, 0, 0), THETA, k, 1, tol=1e-14)[0]
    tau = math.pi / (2 * k)
    radii = [10.0 * 10 ** (i / 4) for i in range(9)]  # two decades
    errs = []
    for s in radii:
        I = [x * float(np.imag(eval_scene(scene, x * THETA))) for x in (s, s + tau)]
        errs.append(abs(two_point_estimate(I[0], I[1], s, tau, k) - exact))
    assert abs(_slope(radii, errs) + 1) <= 0.2


def test_c3_farfield_remainder_slope(weak_ball_operator):
    op = weak_ball_operator
    y = np.array([0.3, 0.0, -3.0])
    d = np.array([0.0, 0.6, 0.8])
    radii = [10.0 * 10 ** (i / 6) for i in range(13)]  # two decades
    limit = farfield_from_green(op.scattered, y, d, op.kappa, radii=[2000.0 * 2**i for i in range(6)])
    errs = [abs(v - limit) / abs(limit) for _, v in farfield_series(op.scattered, y, d, op.kappa, radii)]
    assert abs(_slope(radii, errs) + 1) <= 0.2


# 4 ---------------------------------------------------------------------------


def test_c4_ray_reconstruction_end_to_end():
    k = 1.0
    scene = Scene(k, (PointSource((0.3, 0.1, -0.2), 1.0), PointSource((-0.25, 0.2, 0.1), 0.4j)), None, 1.0)
    rec = recover_coeffs(RaySampler.from_scene(scene, (0, 0, 0), THETA, digits=30), RecoverParams(depth=4, digits=30))
    s = 50 / k
    truth = eval_scene(scene, s * THETA)
    assert abs(reconstruct_on_ray(rec, s).value - truth) / abs(truth) <= 1e-3


# 5 ---------------------------------------------------------------------------


def test_c5_sphere_null_control():
    dirs = fibonacci_directions(200)
    for kappa in (1.0, 2.0):
        for n in range(1, 6):
            assert sphere_null_probe(kappa, n, dirs) <= 1e-14
    r = 2.5 * math.pi
    off = sphere_null_probe(1.0, 2, dirs, radius=r)
    assert abs(off - 1 / (4 * math.pi * r)) <= 1e-12


# 6 ---------------------------------------------------------------------------


def test_c6_plane_reconstruction(two_source_scene):
    scene = two_source_scene
    grid = PlaneGrid(PlaneFrame((15.0, 0.0, 2.0), (0.0, 0.0, 1.0)), 2.5, 0.5)
    assert grid.count == 11
    out = recover_plane(
        scene_plane_sampler(scene, 30), grid, RecoverParams(depth=6, digits=30), kappa=scene.kappa, source_radius=1.0
    )
    truth = eval_scene(scene, grid.points())
    assert not out.flags.any()
    assert np.max(np.abs(out.values - truth) / np.abs(truth)) <= 1e-3


# 7 ---------------------------------------------------------------------------


def test_c7_halfspace_continuation_ladder():
    k = 1.0
    lam = 2 * math.pi / k
    y0 = np.array([0.3, -0.2, 1.0])
    scene = Scene(k, (PointSource(y0),), None, 1.5)
    frame = PlaneFrame((0.0, 0.0, 0.0), (0.0, 0.0, 1.0))
    probes = np.array([[0.5, 0.3, -2 * lam], [2.0, -1.0, -2.5 * lam], [-3.0, 1.0, -3 * lam]])
    truth = eval_scene(scene, probes)
    errors = []
    for R in (10, 20, 40):
        grid = PlaneGrid(frame, R * lam, lam / 6).sample(lambda p: eval_scene(scene, p))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            vals = halfspace_continue(grid, probes, kappa=k)
        errors.append(np.max(np.abs(vals - truth) / np.abs(truth)))
    assert errors[-1] <= 1e-2
    assert errors[0] > errors[1] > errors[2]


# 8 ---------------------------------------------------------------------------


class _AsymmetricOperator(LSOperator):
    """Negative control: the upper triangle of the kernel is scaled, breaking symmetry."""

    def _kernel_matrix(self):
        K = super()._kernel_matrix()
        return K + 0.2 * np.triu(K, 1)


def _complex_potential(rng):
    n = 6
    vals = (rng.normal(size=(n, n, n)) + 1j * rng.normal(size=(n, n, n))) * 0.3
    return PotentialGrid((-1.0, -1.0, -1.0), (2.0, 2.0, 2.0), n, vals)


def test_c8_reciprocity(rng):
    pot = _complex_potential(rng)
    pairs = [(rng.normal(size=3) + [0, 0, 5], rng.normal(size=3) + [5, 0, 0]) for _ in range(10)]
    op = LSOperator(pot, 2.0)
    assert reciprocity_report(op.scattered, pairs) <= 1e-8
    assert reciprocity_report(op.total, pairs) <= 1e-8
    bad = _AsymmetricOperator(pot, 2.0)
    assert reciprocity_report(bad.scattered, pairs) > 1e-3


# 9 ---------------------------------------------------------------------------


def test_c9_born_consistency():
    X = np.array([[0.0, 0.0, 4.0], [3.0, 1.0, -2.0], [-2.0, 3.0, 1.0]])
    y = np.array([1.0, -4.0, 0.5])
    mismatch = []
    for eps in (0.1, 0.05, 0.025):
        op = LSOperator(PotentialGrid.ball(1.0, 8, eps), 2.0)
        mismatch.append(np.linalg.norm(op.scattered(X, y) - op.born_scattered(X, y)))
    for a, b in zip(mismatch, mismatch[1:]):
        assert 3.0 <= a / b <= 5.0


# 10 --------------------------------------------------------------------------


def _eval_points():
    g = np.linspace(-1.5, 1.5, 13)
    return np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)


def test_c10_pipeline_weak_ball(weak_ball, weak_ball_operator):
    cfg = PipelineConfig(frame=PlaneFrame((0.0, 0.0, -3.0), (0.0, 0.0, 1.0)))
    res = born_pipeline(LSGreenData(weak_ball_operator), cfg)
    assert res.report["born_correction_norm"] <= 0.1
    assert res.report["cone_check"]
    X = _eval_points()
    truth = band_limited(res.quadrature, potential_fourier(weak_ball, res.quadrature.xi), X)
    err = np.linalg.norm(res.evaluate(X) - truth) / np.linalg.norm(truth)
    assert err <= 0.15


def test_c10_pipeline_zero_potential():
    op = LSOperator(PotentialGrid.ball(1.0, 8, 0.0), 2.0)
    res = born_pipeline(LSGreenData(op), PipelineConfig(frame=PlaneFrame((0.0, 0.0, -3.0), (0.0, 0.0, 1.0))))
    assert np.max(np.abs(res.evaluate(_eval_points()))) <= 1e-8


# 11 --------------------------------------------------------------------------


def test_c11_cli_determinism(tmp_path):
    scene = Scene(2.0, (), PotentialGrid.ball(1.0, 6, 0.1), 2.0)
    save_scene(scene, tmp_path / "ball.json")
    save_scene(Scene(1.0, (PointSource((0.2, 0.1, 0.0)),), None, 1.0), tmp_path / "pt.json")
    runs = [
        ["verify", "--suite", "born-order", "--kappa", "2", "--seed", "7"],
        ["verify", "--suite", "reciprocity", "--kappa", "2", "--seed", "7"],
        ["farfield", "--scene", str(tmp_path / "ball.json"), "--seed", "7", "--count", "3"],
        ["sample", "--scene", str(tmp_path / "pt.json"), "--depth", "3", "--ray-dir", "0,0.6,0.8"],
    ]
    for i, argv in enumerate(runs):
        outputs = []
        for rep in range(2):
            d = tmp_path / f"run{i}_{rep}"
            d.mkdir()
            assert cli.run([*argv, "--out", str(d / "out.csv")]) == 0
            outputs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        assert outputs[0] == outputs[1]
        assert outputs[0]

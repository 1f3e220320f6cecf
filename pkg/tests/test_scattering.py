import math
import threading

import numpy as np
import pytest
from scipy.integrate import quad

from radrecon.errors import (
    BornValidityWarning,
    GridSizeError,
    PipelineStageError,
    SingularSystemError,
    ValidationError,
)
from radrecon.fields import PotentialGrid, green_outgoing, r0_plus
from radrecon.planeops import PlaneFrame
from radrecon.scattering import (
    ConeSet,
    FarField,
    GreenMatrixProblem,
    LSGreenData,
    LSOperator,
    PipelineConfig,
    ball_fourier,
    band_limited,
    born_pipeline,
    farfield_from_green,
    fourier_quadrature,
    ls_solve,
    potential_fourier,
    r_v_sc,
    reciprocity_report,
    scattering_amplitude,
    self_cell_integral,
)

X_OUT = np.array([[3.0, 0.5, -1.0], [0.0, -4.0, 2.0]])
Y_OUT = np.array([2.5, 2.0, 0.3])


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def test_self_cell_integral_matches_quadrature():
    vol = 0.05
    a = (3 * vol / (4 * math.pi)) ** (1 / 3)
    for k in (0.5, 2.0, 7.0):
        # ∫_ball G⁺ = -∫_0^a r e^{iκr} dr
        re = quad(lambda r, k=k: r * math.cos(k * r), 0, a)[0]
        im = quad(lambda r, k=k: r * math.sin(k * r), 0, a)[0]
        assert self_cell_integral(vol, k) == pytest.approx(-(re + 1j * im), rel=1e-10)
    assert self_cell_integral(vol, 1e-4) == pytest.approx(-(a**2) / 2, rel=1e-4)


def test_zero_potential_gives_free_green_function():
    k = 1.5
    pot = PotentialGrid.ball(1.0, 4, 0.0)
    op = LSOperator(pot, k)
    assert op.size == 0
    sol = ls_solve(GreenMatrixProblem(pot, k, tuple(Y_OUT)))
    assert np.allclose(sol(X_OUT), r0_plus(X_OUT, Y_OUT, k), rtol=1e-15)
    assert np.all(r_v_sc(X_OUT, Y_OUT, op) == 0)
    assert np.all(op.amplitude([[0, 0, 1.0]], [[1.0, 0, 0]]) == 0)
    assert op.correction_norm() == 0


def test_grid_limits_and_singular_system():
    with pytest.raises(GridSizeError):
        LSOperator(PotentialGrid.ball(1.0, 25, 0.1), 1.0)

    class Degenerate(LSOperator):
        def _kernel_matrix(self):
            return np.eye(len(self.centers), dtype=complex)

    with pytest.raises(SingularSystemError):
        Degenerate(PotentialGrid.ball(1.0, 4, 1.0), 1.0)


def test_absorbing_potential_solves():
    op = LSOperator(PotentialGrid.ball(1.0, 6, 0.5 - 0.3j), 1.0)
    assert op.rcond > 1e-6
    # the solution satisfies the discrete equation
    y = Y_OUT
    u = op.source_field(y)[:, 0]
    rhs = -green_outgoing(op.centers - y, op.kappa)
    assert np.allclose(op.system @ u, rhs, rtol=1e-12, atol=1e-14)


def test_farfield_of_green_matches_plane_wave_solve(weak_ball_operator):
    op = weak_ball_operator
    for d in (_unit([0.2, 0.3, 0.9]), _unit([-1.0, 0.4, 0.1])):
        got = farfield_from_green(op.scattered, Y_OUT, d, op.kappa)
        direct = complex(op.plane_wave_scattered(Y_OUT, -d))
        assert abs(got - direct) / abs(direct) <= 1e-6


def test_amplitude_extrapolation_matches_closed_sum(weak_ball_operator):
    op = weak_ball_operator
    th, thp = _unit([0.0, 0.0, 1.0]), _unit([0.6, 0.0, -0.8])
    ext = scattering_amplitude(op.plane_wave_scattered, th, thp, op.kappa)
    assert ext == pytest.approx(complex(op.amplitude(th, thp)[0]), rel=1e-6)
    ff = FarField(op.kappa, np.array([th]), np.array([thp]), op.amplitude(th, thp))
    assert len(next(ff.rows())) == 8


def test_born_amplitude_error_is_quadratic_and_shape_is_a_ball():
    k = 2.0
    th = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    thp = np.array([[0.0, 0.0, 1.0], [0.0, 0.6, -0.8]])
    errs = []
    for eps in (0.1, 0.05):
        op = LSOperator(PotentialGrid.ball(1.0, 8, eps), k)
        errs.append(np.max(np.abs(op.amplitude(th, thp) - op.born_amplitude(th, thp))))
        shape = op.born_amplitude(th, thp) / eps
        q = k * np.linalg.norm(thp - th, axis=1)
        # the voxel ball differs from the true ball by a few percent
        assert np.allclose(shape, -ball_fourier(q, 1.0) / (4 * np.pi), rtol=0.15)
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_born_scattered_is_linear_in_strength():
    k = 1.0
    a = LSOperator(PotentialGrid.ball(1.0, 4, 0.2), k)
    b = LSOperator(PotentialGrid.ball(1.0, 4, 0.4), k)
    assert np.allclose(b.born_scattered(X_OUT, Y_OUT), 2 * a.born_scattered(X_OUT, Y_OUT), rtol=1e-14)


def test_transforms():
    pot = PotentialGrid.ball(1.0, 6, 0.3)
    z, v = pot.active()
    assert potential_fourier(pot, [[0.0, 0.0, 0.0]])[0] == pytest.approx(v.sum() * pot.voxel_volume)
    assert ball_fourier(1e-6, 1.0) == pytest.approx(4 / 3 * math.pi)
    assert ball_fourier(1e-2 * (1 - 1e-12), 1.0) == pytest.approx(ball_fourier(1e-2 * (1 + 1e-12), 1.0), rel=1e-11)


def test_reciprocity_report_and_cones(weak_ball_operator):
    pairs = [(X_OUT[0], Y_OUT), (X_OUT[1], Y_OUT)]
    assert reciprocity_report(weak_ball_operator.scattered, pairs) < 1e-10
    assert reciprocity_report(lambda x, y: x[0] - y[1], [(np.ones(3), np.zeros(3))]) == 2.0
    cone = ConeSet((0.0, 0.0, 1.0))
    assert cone.contains([[0, 0, 1.0], [1.0, 0, 0], [0, 0, -1.0]]).tolist() == [True, True, False]
    assert ConeSet((0.0, 0.0, 1.0), -1).contains([0, 0, -1.0]).tolist() == [True]
    with pytest.raises(ValidationError):
        ConeSet((0.0, 0.0, 1.0), 0)


def test_fourier_quadrature_geometry():
    k = 2.0
    nu = np.array([0.0, 0.0, 1.0])
    q = fourier_quadrature(k, nu, n_q=4, n_mu=3, n_phi=6)
    assert np.allclose(k * (q.thetap - q.theta), q.xi, atol=1e-13)
    assert np.allclose(np.linalg.norm(q.theta, axis=1), 1.0)
    assert np.allclose(np.linalg.norm(q.thetap, axis=1), 1.0)
    assert np.all(ConeSet(tuple(nu)).contains(q.theta))
    assert np.all(ConeSet(tuple(nu), -1).contains(q.thetap))
    assert q.weights.sum() == pytest.approx(2 / 3 * math.pi * q.q_max**3, rel=1e-12)
    # v̂ ≡ 1 is a delta: at the origin the band-limited value is |ball| / (2π)³
    val = band_limited(q, np.ones(len(q.xi)), [[0.0, 0.0, 0.0]])[0]
    assert val == pytest.approx(4 / 3 * math.pi * q.q_max**3 / (2 * math.pi) ** 3, rel=1e-12)
    with pytest.raises(ValidationError):
        fourier_quadrature(k, nu, fraction=1.0)


def test_band_limited_reproduces_smooth_potential():
    # a Gaussian whose spectrum fits inside the quadrature ball
    k = 4.0
    qd = fourier_quadrature(k, (0.0, 0.0, 1.0), n_q=24, n_mu=16, n_phi=24)
    s = 1.0
    vhat = (2 * math.pi * s**2) ** 1.5 * np.exp(-0.5 * s**2 * np.sum(qd.xi**2, axis=1))
    pts = np.array([[0.0, 0.0, 0.0], [0.5, -0.3, 0.2]])
    truth = np.exp(-0.5 * np.sum(pts**2, axis=1) / s**2)
    assert np.allclose(band_limited(qd, vhat, pts), truth, rtol=1e-3)


class _BrokenData:
    kappa = 2.0

    def correction_norm(self):
        return 0.5

    def weights(self, columns):
        raise ValueError("no data")

    def features(self, points):
        return np.zeros((len(points), 0))

    def features_mp(self, points_mp):
        raise AssertionError("not reached")


def test_pipeline_warns_and_tags_stage():
    cfg = PipelineConfig(frame=PlaneFrame((0.0, 0.0, -3.0), (0.0, 0.0, 1.0)))
    with pytest.warns(BornValidityWarning), pytest.raises(PipelineStageError) as info:
        born_pipeline(_BrokenData(), cfg)
    assert info.value.stage == "data"


def test_operator_shared_across_threads(weak_ball_operator):
    op = weak_ball_operator
    ys = [Y_OUT + 0.1 * i for i in range(6)]
    serial = [op.scattered(X_OUT, y) for y in ys]
    out = [None] * len(ys)

    def work(i):
        out[i] = op.scattered(X_OUT, ys[i])

    threads = [threading.Thread(target=work, args=(i,)) for i in range(len(ys))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for a, b in zip(serial, out):
        assert np.array_equal(a, b)


def test_farfield_of_green_is_born_to_second_order():
    k = 2.0
    d = _unit([0.3, -0.2, 0.9])
    mism = []
    for eps in (0.1, 0.05):
        op = LSOperator(PotentialGrid.ball(1.0, 6, eps), k)
        got = farfield_from_green(op.scattered, Y_OUT, d, k)
        # Born plane-wave scattered field for incidence -d
        born = green_outgoing(Y_OUT - op.centers, k) @ (op.values * op.volume * np.exp(-1j * k * op.centers @ d))
        mism.append(abs(got - born))
    assert mism[0] / mism[1] == pytest.approx(4.0, rel=0.15)


def test_pipeline_born_bias_is_quadratic():
    # the pipeline is linear in its data, so est(ε) - 2 est(ε/2) isolates the quadratic Born bias
    frame = PlaneFrame((0.0, 0.0, -3.0), (0.0, 0.0, 1.0))
    cfg = PipelineConfig(frame=frame)
    X = np.array([[0.0, 0.0, 0.0], [0.5, 0.2, -0.3], [-0.6, 0.1, 0.4]])
    est = {}
    for eps in (0.1, 0.05, 0.025):
        op = LSOperator(PotentialGrid.ball(1.0, 8, eps), 2.0)
        est[eps] = born_pipeline(LSGreenData(op), cfg).evaluate(X)
    r1 = np.linalg.norm(est[0.1] - 2 * est[0.05])
    r2 = np.linalg.norm(est[0.05] - 2 * est[0.025])
    assert r1 / r2 == pytest.approx(4.0, rel=0.25)
